"""Gaussian-puff dispersion model with noisy log-concentration sensing.

Released mass travels as circular puffs advected by a uniform wind. A
puff's concentration footprint is an isotropic 2D Gaussian whose
standard deviation (the puff radius) grows with travelled distance as
r = p_y * s**q_y. Sensors report ln(concentration) with additive
Gaussian noise; concentrations are clamped to a small positive floor
before the logarithm so readings stay finite ahead of plume arrival.

Everything here is in meters, seconds and radians. Wind angle 0 points
east (+x), pi/2 north (+y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

ReleaseSchedule = list[tuple[float, float]]  # (release time s, mass)


@dataclass(frozen=True)
class PuffState:
    """One puff: center (x, y), travelled distance s, radius r, mass.

    r is tied to s through r = p_y * s**q_y once the puff has moved;
    a freshly released puff has s = r = 0 and must receive a transport
    step before it can contribute concentration. Mass never changes.
    """

    x: float
    y: float
    s: float
    r: float
    mass: float

    def __post_init__(self):
        if self.s < 0 or self.r < 0:
            raise ValueError("puff distance and radius must be >= 0")
        if self.mass < 0:
            raise ValueError("puff mass must be >= 0")


@dataclass(frozen=True)
class MeteoConfig:
    """Wind and diffusion constants, uniform in space and time."""

    wind_speed: float  # m/s
    wind_dir: float  # rad, 0 = toward +x
    p_y: float  # diffusion coefficient
    q_y: float  # diffusion exponent
    dt: float  # transport step, s

    def __post_init__(self):
        if self.wind_speed <= 0:
            raise ValueError("wind_speed must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.p_y <= 0:
            raise ValueError("p_y must be > 0")
        if not 0 < self.q_y <= 1:
            raise ValueError("q_y must be in (0, 1]")


@dataclass(frozen=True)
class ScenarioParams:
    """One draw of the unknowns: release position along the pipeline
    (x fixed at 0) and wind direction."""

    release_y: float  # m
    wind_dir: float  # rad


@dataclass(frozen=True)
class ObservationModel:
    """Log-space measurement noise and the positive concentration clamp."""

    noise_mean: float = -0.005
    noise_std: float = 0.1
    conc_floor: float = 1e-12

    def __post_init__(self):
        if self.noise_std <= 0:
            raise ValueError("noise_std must be > 0")
        if self.conc_floor <= 0:
            raise ValueError("conc_floor must be > 0")


def step_puff(p: PuffState, m: MeteoConfig) -> PuffState:
    """Advance one puff by one transport step of m.dt seconds."""
    s = p.s + m.wind_speed * m.dt
    return PuffState(
        x=p.x + m.wind_speed * math.cos(m.wind_dir) * m.dt,
        y=p.y + m.wind_speed * math.sin(m.wind_dir) * m.dt,
        s=s,
        r=m.p_y * s**m.q_y,
        mass=p.mass,
    )


def concentration(puffs: list[PuffState], at) -> float:
    """Total concentration at a point: sum of all puff Gaussians.

    Rejects puffs with r = 0, which signals a puff queried before its
    first transport step; callers filter those out instead.
    """
    x, y = float(at[0]), float(at[1])
    total = 0.0
    for p in puffs:
        if p.r <= 0:
            raise ValueError("puff with r=0 queried before its first step")
        d2 = (p.x - x) ** 2 + (p.y - y) ** 2
        total += p.mass / (2 * math.pi * p.r**2) * math.exp(-d2 / (2 * p.r**2))
    return total


def simulate_observations(
    params: ScenarioParams,
    meteo: MeteoConfig,
    sensors,
    times,
    release_schedule: ReleaseSchedule,
    obs: ObservationModel,
    rng_seed: int,
) -> np.ndarray:
    """Noisy log-concentration trajectories, one row per sensor.

    At each observation instant all active puffs take one transport
    step, puffs scheduled up to that instant spawn at (0, release_y)
    with s = 0, and every sensor reads ln(max(c, conc_floor)) plus a
    Gaussian noise draw from the seeded stream. The scenario's wind
    direction overrides the meteo default.
    """
    times = np.asarray(times, dtype=float)
    if len(sensors) == 0:
        raise ValueError("need at least one sensor")
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    met = replace(meteo, wind_dir=params.wind_dir)
    pending = sorted(release_schedule)
    puffs: list[PuffState] = []

    def spawn_through(t: float):
        while pending and pending[0][0] <= t:
            _, mass = pending.pop(0)
            puffs.append(PuffState(x=0.0, y=params.release_y, s=0.0, r=0.0, mass=mass))

    spawn_through(times[0] - met.dt)
    log_c = np.empty((len(sensors), len(times)))
    for j, t in enumerate(times):
        puffs = [step_puff(p, met) for p in puffs]
        spawn_through(t)
        live = [p for p in puffs if p.r > 0]
        for i, sensor in enumerate(sensors):
            c = concentration(live, sensor)
            log_c[i, j] = math.log(max(c, obs.conc_floor))
    rng = np.random.default_rng(rng_seed)
    return log_c + rng.normal(obs.noise_mean, obs.noise_std, log_c.shape)


def log_concentrations_at(
    release_y: np.ndarray,
    wind_dir: np.ndarray,
    sensors: np.ndarray,
    t: float,
    meteo: MeteoConfig,
    release_schedule: ReleaseSchedule,
    obs: ObservationModel,
) -> np.ndarray:
    """Clamped log-concentrations for a whole parameter ensemble at time t.

    Vectorized over members, shape (n_members, n_sensors). With a
    uniform constant wind the stepped puff position reduces to the
    closed form spawn + speed * age * (cos w, sin w), which this uses.
    Noise-free: this is the model prediction, not a measurement.
    """
    release_y = np.asarray(release_y, dtype=float)
    wind_dir = np.asarray(wind_dir, dtype=float)
    sensors = np.atleast_2d(np.asarray(sensors, dtype=float))
    ages = np.array([t - rt for rt, _ in release_schedule if rt < t])
    masses = np.array([m for rt, m in release_schedule if rt < t])
    out = np.full((len(release_y), len(sensors)), np.log(obs.conc_floor))
    if ages.size == 0:
        return out
    s = meteo.wind_speed * ages
    r2 = (meteo.p_y * s**meteo.q_y) ** 2
    px = np.outer(np.cos(wind_dir), s)  # (n, K)
    py = release_y[:, None] + np.outer(np.sin(wind_dir), s)
    for j, (sx, sy) in enumerate(sensors):
        c = np.sum(
            masses / (2 * np.pi * r2) * np.exp(-((px - sx) ** 2 + (py - sy) ** 2) / (2 * r2)),
            axis=1,
        )
        out[:, j] = np.log(np.maximum(c, obs.conc_floor))
    return out


def simulate_ensemble(
    params: np.ndarray,
    meteo: MeteoConfig,
    sensor,
    times,
    release_schedule: ReleaseSchedule,
    obs: ObservationModel,
    rng_seed,
) -> np.ndarray:
    """Noisy log-observation trajectories for an ensemble at one sensor.

    params is an (n_members, 2) array of (release_y, wind_dir); the
    result is (n_members, n_times). Results match per-member
    simulate_observations up to floating-point associativity. The noise
    matrix comes from a single stream keyed by rng_seed, so rebuilding
    the same location reproduces the observations bit for bit.
    """
    params = np.asarray(params, dtype=float)
    times = np.asarray(times, dtype=float)
    out = np.empty((params.shape[0], len(times)))
    for j, t in enumerate(times):
        out[:, j] = log_concentrations_at(
            params[:, 0], params[:, 1], [sensor], t, meteo, release_schedule, obs
        )[:, 0]
    rng = np.random.default_rng(rng_seed)
    return out + rng.normal(obs.noise_mean, obs.noise_std, out.shape)
