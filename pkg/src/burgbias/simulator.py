"""Exact stationary Gaussian AR simulation and Monte Carlo bias estimation.

Replication ``r`` under master seed ``s`` draws its standard normals from
``PCG64(SeedSequence(s, spawn_key=(r,)))``, the same stream as
``SeedSequence(s).spawn(r + 1)[r]``. The first ``order`` draws build the
stationary initial values and the rest drive the recursion, so a
replication's series depends only on ``(model, n, s, r)``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from burgbias.errors import DomainError
from burgbias.estimators import ESTIMATORS, FITTERS, estimator_def
from burgbias.model import ArModel, MomentContext, acvf_recursion, admissible
from burgbias.statdsl import MeanMode

WORKERS_ENV = "BURGBIAS_WORKERS"
CHUNK = 4096
FAILURE_WARN = 0.01


def _normals(seed: int, first: int, count: int, n: int) -> np.ndarray:
    out = np.empty((count, n))
    for j in range(count):
        ss = np.random.SeedSequence(seed, spawn_key=(first + j,))
        out[j] = np.random.Generator(np.random.PCG64(ss)).standard_normal(n)
    return out


def _filter(model: ArModel, u: np.ndarray) -> np.ndarray:
    """Map standard normals (rows) to stationary AR realizations."""
    p = model.order
    g = acvf_recursion(model, 1)
    z = np.empty_like(u)
    z[:, 0] = math.sqrt(g[0]) * u[:, 0]
    if p == 2:
        rho1 = g[1] / g[0] if g[0] > 0 else 0.0
        z[:, 1] = rho1 * z[:, 0] + math.sqrt(g[0] * (1.0 - rho1**2)) * u[:, 1]
    if u.shape[1] > p:
        a = np.concatenate([[1.0], -np.asarray(model.phi)])
        if p == 1:
            zi = model.phi1 * z[:, :1]
        else:
            # direct form II transposed state from the two previous outputs
            zi = np.stack([model.phi1 * z[:, 1] + model.phi2 * z[:, 0], model.phi2 * z[:, 1]], axis=1)
        z[:, p:], _ = lfilter([1.0], a, math.sqrt(model.sigma2) * u[:, p:], axis=1, zi=zi)
    return z


def simulate_batch(model: ArModel, n: int, reps: int, seed: int, first: int = 0) -> np.ndarray:
    """Replications ``first .. first + reps - 1`` as rows of a ``(reps, n)`` array."""
    if not admissible(model):
        raise DomainError(f"model {model.phi} is outside the stationary region")
    if n < model.order:
        raise ValueError(f"series length {n} is shorter than the model order")
    return _filter(model, _normals(int(seed), first, reps, n))


def simulate(model: ArModel, n: int, seed: int) -> np.ndarray:
    """One stationary realization of length n (replication 0 of ``seed``)."""
    return simulate_batch(model, n, 1, seed)[0]


@dataclass(frozen=True)
class McConfig:
    model: ArModel
    n: int
    reps: int
    estimator: str = "burg"
    mode: MeanMode = MeanMode.KNOWN
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", MeanMode.parse(self.mode))
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.n <= self.model.order + 2:
            raise ValueError(f"n must exceed order + 2, got n={self.n}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class CoefficientReport:
    name: str
    true_value: float
    mean_estimate: float
    bias: float
    variance: float
    se: float
    predicted_bias: float
    predicted_variance: float
    z: float


@dataclass(frozen=True)
class McReport:
    config: McConfig
    coefficients: tuple[CoefficientReport, ...]
    failures: int
    status: str
    estimates: np.ndarray = field(repr=False, compare=False)

    def rows(self) -> list[dict]:
        cfg = self.config
        base = {
            "estimator": cfg.estimator,
            "mean": cfg.mode.value,
            "phi": ",".join(repr(c) for c in cfg.model.phi),
            "sigma2": cfg.model.sigma2,
            "n": cfg.n,
            "reps": cfg.reps,
            "seed": cfg.seed,
            "failures": self.failures,
            "status": self.status,
        }
        return [dict(base, coefficient=c.name, **{k: getattr(c, k) for k in _COEF_FIELDS}) for c in self.coefficients]


_COEF_FIELDS = (
    "true_value",
    "mean_estimate",
    "bias",
    "se",
    "predicted_bias",
    "z",
    "variance",
    "predicted_variance",
)


def _worker_count(config: McConfig) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_estimates(config: McConfig) -> np.ndarray:
    """Estimates for every replication, shape ``(reps, order)``; failed fits are NaN."""
    fit = FITTERS[config.estimator]
    starts = range(0, config.reps, CHUNK)

    def chunk(first):
        count = min(CHUNK, config.reps - first)
        z = simulate_batch(config.model, config.n, count, config.seed, first)
        return fit(z, config.model.order, config.mode)

    workers = _worker_count(config)
    if workers == 1:
        parts = [chunk(s) for s in starts]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(chunk, starts))
    return np.concatenate(parts, axis=0)


def mc_bias(config: McConfig) -> McReport:
    """Empirical bias and variance of an estimator next to its order-1/n prediction."""
    model = config.model
    est = run_estimates(config)
    ok = np.all(np.isfinite(est), axis=1)
    failures = int((~ok).sum())
    good = est[ok]
    used = good.shape[0]
    status = "ok"
    if failures > FAILURE_WARN * config.reps:
        status = "warning"
        warnings.warn(f"{failures} of {config.reps} fits failed", RuntimeWarning, stacklevel=2)
    if used < 2:
        status = "se_undefined" if status == "ok" else status + ";se_undefined"

    definition = estimator_def(config.estimator, model.order, config.mode)
    predicted = definition.expand(MomentContext(model))

    coefs = []
    for j, name in enumerate(definition.coefficient_names):
        x = good[:, j]
        mean = float(x.mean()) if used else math.nan
        var = float(x.var(ddof=1)) if used >= 2 else math.nan
        se = math.sqrt(var / used) if used >= 2 else math.nan
        bias = mean - model.phi[j]
        pb = predicted[j].bias_coefficient / config.n
        z = (bias - pb) / se if se and se > 0 else math.nan
        coefs.append(
            CoefficientReport(
                name,
                model.phi[j],
                mean,
                bias,
                var,
                se,
                pb,
                predicted[j].variance_coefficient / config.n,
                z,
            )
        )
    return McReport(config, tuple(coefs), failures, status, est)
