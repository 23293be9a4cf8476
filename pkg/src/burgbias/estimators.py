"""Burg, least-squares and Yule-Walker AR estimators.

Each estimator exists twice: as expression trees over statistic atoms (for
the expansion engine) and as a numeric fitting routine on data (for
simulation). For order 2 the Burg trees use

    C = S[0,0,3] + S[2,2,3]    D = S[0,0,2] + S[1,1,2]    E = S[0,2,3]
    F = S[0,1,2]               G = S[1,1,3]               H = S[0,1,3] + S[2,1,3]

    phi2 = 1 - (C D^2 - 2 E D^2) / (C D^2 + 8 F^2 G - 4 F H D)
    phi1 = (2 F / D) (1 - phi2)

E is the lag-2 product sum; a fourth-moment E would not reproduce the Burg
recursion (see ``tests/test_estimators.py``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from burgbias.errors import DegenerateInputError
from burgbias.expansion import ExpansionResult, Node, S, evaluate_at_mean, expand
from burgbias.model import MomentContext
from burgbias.statdsl import DIVISORS, MeanMode

ESTIMATORS = ("burg", "ls", "yw")


@dataclass(frozen=True)
class EstimatorDef:
    name: str
    order: int
    mode: MeanMode
    exprs: tuple[Node, ...]
    divisor: str = "unbiased"

    def __post_init__(self):
        if len(self.exprs) != self.order:
            raise ValueError(f"{self.name}: need {self.order} expressions, got {len(self.exprs)}")
        if self.divisor not in DIVISORS:
            raise ValueError(f"divisor must be one of {DIVISORS}")
        object.__setattr__(self, "mode", MeanMode.parse(self.mode))

    @property
    def coefficient_names(self) -> tuple[str, ...]:
        return tuple(f"phi{j + 1}" for j in range(self.order))

    def expand(self, ctx: MomentContext) -> list[ExpansionResult]:
        return [expand(e, ctx, self.mode, self.divisor) for e in self.exprs]

    def values_at_mean(self, ctx: MomentContext) -> np.ndarray:
        return np.array([evaluate_at_mean(e, ctx) for e in self.exprs])

    def fit(self, series) -> np.ndarray:
        return FITTERS[self.name](series, self.order, self.mode)


def _check_order(order):
    if order not in (1, 2):
        raise ValueError(f"derivation trees exist for orders 1 and 2, got {order}")


def burg_ar1_def(mode: MeanMode | str = MeanMode.KNOWN) -> EstimatorDef:
    rho = 2 * S(0, 1, 2) / (S(0, 0, 2) + S(1, 1, 2))
    return EstimatorDef("burg", 1, mode, (rho,))


def burg_ar2_def(mode: MeanMode | str = MeanMode.KNOWN) -> EstimatorDef:
    C = S(0, 0, 3) + S(2, 2, 3)
    D = S(0, 0, 2) + S(1, 1, 2)
    E = S(0, 2, 3)
    F = S(0, 1, 2)
    G = S(1, 1, 3)
    H = S(0, 1, 3) + S(2, 1, 3)
    phi2 = 1 - (C * D**2 - 2 * E * D**2) / (C * D**2 + 8 * F**2 * G - 4 * F * H * D)
    phi1 = (2 * F / D) * (1 - phi2)
    return EstimatorDef("burg", 2, mode, (phi1, phi2))


def ls_ar_def(order: int, mode: MeanMode | str = MeanMode.KNOWN) -> EstimatorDef:
    """Conditional least squares: regress z_t on its lags over t = order+1..n."""
    _check_order(order)
    if order == 1:
        return EstimatorDef("ls", 1, mode, (S(0, 1, 2) / S(1, 1, 2),))
    a11, a12, a22 = S(1, 1, 3), S(1, 2, 3), S(2, 2, 3)
    b1, b2 = S(0, 1, 3), S(0, 2, 3)
    det = a11 * a22 - a12**2
    return EstimatorDef("ls", 2, mode, ((b1 * a22 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det))


def yw_ar_def(order: int, mode: MeanMode | str = MeanMode.KNOWN) -> EstimatorDef:
    """Yule-Walker on the 1/n sample autocovariance ``c(h) = S[0,h,h+1]``."""
    _check_order(order)
    c0, c1 = S(0, 0, 1), S(0, 1, 2)
    if order == 1:
        return EstimatorDef("yw", 1, mode, (c1 / c0,), divisor="n")
    c2 = S(0, 2, 3)
    det = c0**2 - c1**2
    return EstimatorDef("yw", 2, mode, (c1 * (c0 - c2) / det, (c0 * c2 - c1**2) / det), divisor="n")


def estimator_def(name: str, order: int, mode: MeanMode | str = MeanMode.KNOWN) -> EstimatorDef:
    if name == "burg":
        _check_order(order)
        return burg_ar1_def(mode) if order == 1 else burg_ar2_def(mode)
    if name == "ls":
        return ls_ar_def(order, mode)
    if name == "yw":
        return yw_ar_def(order, mode)
    raise ValueError(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")


def closed_form_bias(name: str, mode: MeanMode | str, phi) -> tuple[float, ...] | None:
    """Known order-1/n bias coefficients, or None where none is tabulated."""
    mode = MeanMode.parse(mode)
    phi = tuple(float(c) for c in phi)
    if name in ("burg", "ls"):
        if len(phi) == 1:
            (r,) = phi
            return (-2 * r,) if mode is MeanMode.KNOWN else (-(1 + 3 * r),)
        p1, p2 = phi
        if mode is MeanMode.KNOWN:
            return (-p1, -(1 + 3 * p2))
        return (-(1 + p1 + p2), -(2 + 4 * p2))
    if name == "yw" and len(phi) == 1:
        (r,) = phi
        return (-3 * r,) if mode is MeanMode.KNOWN else (-(1 + 4 * r),)
    return None


# ---------------------------------------------------------------------------
# numeric fitting; 1-D input raises on failure, 2-D input returns NaN rows


def _prepare(series, order, mode):
    z = np.asarray(series, dtype=float)
    if z.ndim not in (1, 2):
        raise ValueError("series must be 1-D or a 2-D batch of rows")
    if not isinstance(order, (int, np.integer)) or order < 1:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    if z.shape[-1] <= order + 2:
        raise ValueError(f"series length {z.shape[-1]} must exceed order + 2 = {order + 2}")
    if MeanMode.parse(mode) is MeanMode.UNKNOWN:
        z = z - z.mean(axis=-1, keepdims=True)
    return np.atleast_2d(z), z.ndim == 1


def _finish(coefs, ok, single, what):
    coefs = np.where(ok[:, None], coefs, np.nan)
    if single:
        if not ok[0]:
            raise DegenerateInputError(what)
        return coefs[0]
    return coefs


def _burg_batch(z: np.ndarray, order: int):
    reps = z.shape[0]
    a = np.zeros((reps, 0))
    ok = np.ones(reps, dtype=bool)
    f, b = z[:, 1:], z[:, :-1]
    for _ in range(order):
        num = 2.0 * np.einsum("rt,rt->r", f, b)
        den = np.einsum("rt,rt->r", f, f) + np.einsum("rt,rt->r", b, b)
        good = den > 0
        ok &= good
        kappa = np.where(good, num / np.where(good, den, 1.0), 0.0)
        # |kappa| = 1 leaves zero prediction-error energy: a perfectly predictable series
        ok &= np.abs(kappa) < 1.0
        k = kappa[:, None]
        a = np.concatenate([a - k * a[:, ::-1], k], axis=1)
        f, b = (f - k * b)[:, 1:], (b - k * f)[:, :-1]
    return a, ok


def burg_fit(series, order: int, mode: MeanMode | str = MeanMode.KNOWN) -> np.ndarray:
    """Burg estimates via the reflection-coefficient recursion.

    Parameters
    ----------
    series : array_like
        A series, or a 2-D batch with one series per row.
    order : int
        AR order (any positive order is accepted).
    mode : MeanMode or str
        ``"unknown"`` subtracts the sample mean first.

    Returns
    -------
    numpy.ndarray
        Coefficients ``(phi1, ..., phi_p)``; one row per series for batch input.
    """
    z, single = _prepare(series, order, mode)
    coefs, ok = _burg_batch(z, order)
    return _finish(coefs, ok, single, "series has zero prediction-error energy")


def ls_fit(series, order: int, mode: MeanMode | str = MeanMode.KNOWN) -> np.ndarray:
    """Conditional least squares without intercept over t = order+1..n."""
    z, single = _prepare(series, order, mode)
    n = z.shape[1]
    y = z[:, order:]
    X = np.stack([z[:, order - j : n - j] for j in range(1, order + 1)], axis=2)
    XtX = np.einsum("rtj,rtl->rjl", X, X)
    Xty = np.einsum("rtj,rt->rj", X, y)
    scale = np.einsum("rjj->r", XtX)
    det = np.linalg.det(XtX)
    ok = (scale > 0) & (np.abs(det) > 1e-13 * np.maximum(scale, 1e-300) ** order)
    safe = np.where(ok[:, None, None], XtX, np.eye(order))
    coefs = np.linalg.solve(safe, Xty[..., None])[..., 0]
    return _finish(coefs, ok, single, "singular least-squares design matrix")


def _levinson_batch(c: np.ndarray):
    """Solve Toeplitz Yule-Walker systems row-wise from ``c[:, 0..p]``."""
    reps, p = c.shape[0], c.shape[1] - 1
    a = np.zeros((reps, 0))
    err = c[:, 0].copy()
    ok = err > 0
    for k in range(1, p + 1):
        acc = c[:, k] - np.einsum("rj,rj->r", a, c[:, k - 1 : 0 : -1]) if k > 1 else c[:, 1].copy()
        good = err > 0
        kappa = np.where(good, acc / np.where(good, err, 1.0), 0.0)
        ok &= good & (np.abs(kappa) < 1.0)
        kk = kappa[:, None]
        a = np.concatenate([a - kk * a[:, ::-1], kk], axis=1)
        err = err * (1.0 - kappa**2)
    return a, ok


def yw_fit(series, order: int, mode: MeanMode | str = MeanMode.KNOWN) -> np.ndarray:
    """Yule-Walker estimates from the 1/n sample autocovariance (Durbin-Levinson solve)."""
    z, single = _prepare(series, order, mode)
    n = z.shape[1]
    c = np.stack([np.einsum("rt,rt->r", z[:, h:], z[:, : n - h]) / n for h in range(order + 1)], axis=1)
    coefs, ok = _levinson_batch(c)
    return _finish(coefs, ok, single, "singular sample autocovariance matrix")


FITTERS = {"burg": burg_fit, "ls": ls_fit, "yw": yw_fit}
