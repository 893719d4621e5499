"""Bayesian optimization with expected improvement over a GP surrogate.

The loop evaluates a Latin-hypercube initial design, then alternates
refitting the surrogate, maximizing expected improvement, and evaluating
the objective at the proposal. Acquisition maximization scores a
low-discrepancy candidate set and polishes the best candidate with a
local coordinate search. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from . import gp

_SQRT_2PI = np.sqrt(2.0 * np.pi)


class ObjectiveError(RuntimeError):
    """Objective evaluation failed; carries the offending point."""

    def __init__(self, point, cause):
        super().__init__(f"objective failed at {np.asarray(point)!r}: {cause}")
        self.point = np.asarray(point, dtype=float)


@dataclass(frozen=True)
class BoConfig:
    """Search box and loop sizes for the optimization."""

    domain: np.ndarray  # (dim, 2) box bounds
    init_count: int = 10
    iter_count: int = 30
    acq_candidates: int = 2048
    seed: int = 0

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.domain, dtype=float))
        if box.ndim != 2 or box.shape[1] != 2:
            raise ValueError("domain must be a (dim, 2) array of bounds")
        if np.any(box[:, 1] <= box[:, 0]):
            raise ValueError("domain box is degenerate")
        object.__setattr__(self, "domain", box)
        if self.init_count < 2:
            raise ValueError("init_count must be >= 2")
        if self.iter_count < 0:
            raise ValueError("iter_count must be >= 0")
        if self.acq_candidates < 1:
            raise ValueError("acq_candidates must be >= 1")


@dataclass
class BoTrace:
    """Evaluated points and values in evaluation order."""

    points: np.ndarray
    values: np.ndarray
    incumbent_index: int = field(init=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        self.incumbent_index = int(np.argmax(self.values))

    @property
    def incumbent_point(self) -> np.ndarray:
        return self.points[self.incumbent_index]

    @property
    def incumbent_value(self) -> float:
        return float(self.values[self.incumbent_index])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            dim = self.points.shape[1]
            writer.writerow(
                ["iteration"] + [f"x{j}" for j in range(dim)] + ["objective", "incumbent"]
            )
            best = -np.inf
            for i, (p, v) in enumerate(zip(self.points, self.values)):
                best = max(best, v)
                writer.writerow([i] + [repr(float(c)) for c in p] + [repr(float(v)), repr(best)])


def expected_improvement(mu, sigma, f_best: float):
    """Closed-form EI of a Gaussian belief over the incumbent f_best.

    Zero wherever sigma is zero; otherwise sigma*(z*Phi(z) + phi(z))
    with z = (mu - f_best) / sigma. Never negative.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be >= 0")
    out = np.zeros(np.broadcast(mu, sigma).shape)
    mu_b, sigma_b = np.broadcast_arrays(mu, sigma)
    pos = sigma_b > 0
    diff = mu_b[pos] - f_best
    # (mu - f_best)*Phi(z) + sigma*phi(z): same closed form, but stays
    # finite when z overflows at extreme mu/sigma ratios
    with np.errstate(over="ignore"):
        z = diff / sigma_b[pos]
        out[pos] = diff * ndtr(z) + sigma_b[pos] * np.exp(-0.5 * z * z) / _SQRT_2PI
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _ei_at(surrogate, pts, f_best):
    mean, var = gp.predict(surrogate, pts)
    return expected_improvement(mean, np.sqrt(var), f_best)


def propose_next(surrogate: gp.GpSurrogate, cfg: BoConfig, f_best: float) -> np.ndarray:
    """EI argmax over a seeded Halton candidate set plus local polish.

    Ties (e.g. a flat zero-EI posterior) resolve to the first candidate
    in index order; the polish only moves on strict improvement.
    """
    box = cfg.domain
    dim = box.shape[0]
    cand = qmc.scale(qmc.Halton(dim, seed=cfg.seed).random(cfg.acq_candidates), box[:, 0], box[:, 1])
    scores = _ei_at(surrogate, cand, f_best)
    best = int(np.argmax(scores))
    x, val = cand[best].copy(), scores[best]
    step = 0.05 * (box[:, 1] - box[:, 0])
    for _ in range(10):
        improved = False
        for j in range(dim):
            for sign in (step[j], -step[j]):
                y = x.copy()
                y[j] = min(max(y[j] + sign, box[j, 0]), box[j, 1])
                v = _ei_at(surrogate, y[None, :], f_best)[0]
                if v > val + 1e-15:
                    x, val = y, v
                    improved = True
                    break
        if not improved:
            step = step * 0.5
    return x


def maximize(objective, cfg: BoConfig) -> BoTrace:
    """Run the full loop: initial design, then iter_count EI proposals.

    The incumbent is the best of all init_count + iter_count
    evaluations. Objective exceptions surface as ObjectiveError with the
    failing point attached.
    """
    box = cfg.domain
    dim = box.shape[0]
    root = np.random.SeedSequence(cfg.seed)
    ss_init, ss_fit, ss_acq = root.spawn(3)

    lhs = qmc.LatinHypercube(dim, seed=np.random.default_rng(ss_init))
    points = list(qmc.scale(lhs.random(cfg.init_count), box[:, 0], box[:, 1]))
    values = []
    for p in points:
        values.append(_evaluate(objective, p))

    fit_seeds = ss_fit.generate_state(max(cfg.iter_count, 1))
    acq_seeds = ss_acq.generate_state(max(cfg.iter_count, 1))
    warm = None
    for it in range(cfg.iter_count):
        surrogate = gp.fit(
            np.asarray(points), np.asarray(values), seed=int(fit_seeds[it]), warm_start=warm
        )
        warm = surrogate.log_params
        step_cfg = BoConfig(
            domain=box,
            init_count=cfg.init_count,
            iter_count=cfg.iter_count,
            acq_candidates=cfg.acq_candidates,
            seed=int(acq_seeds[it]),
        )
        x = propose_next(surrogate, step_cfg, max(values))
        points.append(x)
        values.append(_evaluate(objective, x))
    return BoTrace(points=np.asarray(points), values=np.asarray(values))


def _evaluate(objective, point) -> float:
    try:
        return float(objective(point))
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise ObjectiveError(point, exc) from exc
