"""Stationary AR(1)/AR(2) models and their autocovariance function.

The autocovariance is produced by the Yule-Walker recursion

    gamma(h) = phi1 * gamma(h - 1) + phi2 * gamma(h - 2),    h >= 2,

started from ``gamma(0)`` and ``gamma(1)``. Infinite sums over lags are
truncated where a geometric envelope of the tail falls below a tolerance.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Hashable

import numpy as np

from burgbias.errors import ConvergenceError, DomainError

EQUAL_ROOT_TOL = 1e-10
NEAR_BOUNDARY = 1e-6
DEFAULT_TOL = 1e-12
MAX_LAG = 2_000_000


@dataclass(frozen=True)
class ArModel:
    """AR(p) model ``z_t = phi1 z_{t-1} [+ phi2 z_{t-2}] + a_t``, p in {1, 2}.

    Construction only checks shape; use :func:`admissible` for stationarity.
    """

    phi: tuple[float, ...]
    sigma2: float = 1.0

    def __post_init__(self):
        phi = tuple(float(c) for c in np.atleast_1d(self.phi))
        if len(phi) not in (1, 2):
            raise DomainError(f"unsupported AR order {len(phi)}; expected 1 or 2")
        if not all(math.isfinite(c) for c in phi):
            raise DomainError("AR coefficients must be finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0.0):
            raise DomainError(f"innovation variance must be >= 0, got {self.sigma2}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def order(self) -> int:
        return len(self.phi)

    @property
    def phi1(self) -> float:
        return self.phi[0]

    @property
    def phi2(self) -> float:
        return self.phi[1] if self.order == 2 else 0.0


@dataclass(frozen=True)
class CharRoots:
    zeta1: complex
    zeta2: complex
    kind: str  # "distinct" | "equal" | "complex"

    @property
    def modulus(self) -> float:
        return max(abs(self.zeta1), abs(self.zeta2))


def boundary_distance(model: ArModel) -> float:
    """Smallest slack in the strict stationarity inequalities (negative if outside)."""
    if model.order == 1:
        return 1.0 - abs(model.phi1)
    p1, p2 = model.phi
    return min(1.0 - abs(p2), 1.0 - p1 - p2, 1.0 - p2 + p1)


def admissible(model: ArModel) -> bool:
    return boundary_distance(model) > 0.0


def char_roots(model: ArModel) -> CharRoots:
    """Roots of ``zeta**2 - phi1*zeta - phi2``."""
    if model.order != 2:
        raise DomainError("characteristic roots are defined for order-2 models only")
    p1, p2 = model.phi
    disc = p1 * p1 + 4.0 * p2
    # the tolerance only relabels near-double roots; the roots themselves stay exact
    near_equal = abs(disc) <= EQUAL_ROOT_TOL
    if disc >= 0:
        s = math.sqrt(disc)
        # Larger-magnitude root first; the other from the product keeps zeta1*zeta2 = -phi2 exact.
        big = (p1 + math.copysign(s, p1)) / 2.0
        small = -p2 / big if big != 0 else 0.0
        return CharRoots(complex(big), complex(small), "equal" if near_equal else "distinct")
    s = cmath.sqrt(disc)
    return CharRoots((p1 + s) / 2.0, (p1 - s) / 2.0, "equal" if near_equal else "complex")


def spectral_radius(model: ArModel) -> float:
    if model.order == 1:
        return abs(model.phi1)
    return char_roots(model).modulus


def acvf_recursion(model: ArModel, maxlag: int) -> np.ndarray:
    """Return ``gamma(0..maxlag)`` for an admissible model."""
    if not admissible(model):
        raise DomainError(f"model {model.phi} is outside the stationary region")
    g = np.empty(maxlag + 1)
    s2 = model.sigma2
    if model.order == 1:
        phi = model.phi1
        g[0] = s2 / (1.0 - phi * phi)
        if maxlag >= 1:
            g[1:] = g[0] * phi ** np.arange(1, maxlag + 1)
        return g
    p1, p2 = model.phi
    rho1 = p1 / (1.0 - p2)
    rho2 = p1 * rho1 + p2
    g[0] = s2 / (1.0 - p1 * rho1 - p2 * rho2)
    if maxlag >= 1:
        g[1] = g[0] * rho1
    for h in range(2, maxlag + 1):
        g[h] = p1 * g[h - 1] + p2 * g[h - 2]
    return g


def acvf_root_formula(zeta1: complex, zeta2: complex, h: int) -> complex:
    """Closed form of gamma(h) (unit innovation variance) for distinct roots, h >= 0."""
    num = zeta2 ** (1 + h) - zeta1**2 * zeta2 ** (1 + h) + zeta1 ** (1 + h) * (zeta2**2 - 1)
    den = (zeta1**2 - 1) * (zeta1 - zeta2) * (zeta1 * zeta2 - 1) * (zeta2**2 - 1)
    return num / den


def _poly_geom_tail(start: int, rate: float, degree: int) -> float:
    """``sum_{j > start} (1 + j)**degree * rate**j``, summed until terms vanish."""
    if rate <= 0.0:
        return 0.0
    total = 0.0
    j = start + 1
    block = 4096
    while True:
        js = np.arange(j, j + block, dtype=float)
        terms = np.exp(degree * np.log1p(js) + js * math.log(rate))
        total += float(terms.sum())
        if terms[-1] <= 1e-300 or terms[-1] < 1e-18 * total:
            return total
        j += block
        if j > 50 * MAX_LAG:
            return math.inf


@dataclass
class MomentContext:
    """Per-model cache of autocovariances and lag sums.

    Values behave as if computed eagerly: the cache only grows and is
    guarded by a lock, so concurrent readers see consistent numbers.
    """

    model: ArModel
    tol: float = DEFAULT_TOL
    _gamma: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)
    _lock: threading.RLock = field(init=False, repr=False, default_factory=threading.RLock)

    def __post_init__(self):
        if not admissible(self.model):
            raise DomainError(f"model {self.model.phi} is outside the stationary region")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        self.radius = spectral_radius(self.model)
        self.near_boundary = boundary_distance(self.model) < NEAR_BOUNDARY
        self._gamma = acvf_recursion(self.model, 64)
        g = np.abs(self._gamma)
        lags = np.arange(g.size)
        if self.radius > 0:
            # envelope |gamma(h)| <= K (1 + h) r**h; K fitted on the leading lags
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                ratios = g / ((1.0 + lags) * self.radius**lags)
            self.envelope = 2.0 * float(np.nanmax(ratios[np.isfinite(ratios)]))
        else:
            self.envelope = float(g[0])

    def gamma_upto(self, maxlag: int) -> np.ndarray:
        """``gamma(0..maxlag)`` as a read-only view."""
        if maxlag > MAX_LAG:
            raise ConvergenceError(f"lag {maxlag} exceeds the cap {MAX_LAG}")
        with self._lock:
            if self._gamma.size <= maxlag:
                self._gamma = acvf_recursion(self.model, max(maxlag, 2 * self._gamma.size))
            out = self._gamma[: maxlag + 1].view()
        out.flags.writeable = False
        return out

    def gamma(self, h) -> float | np.ndarray:
        """gamma(h) for an integer or integer array of lags (negative lags allowed)."""
        lags = np.abs(np.asarray(h, dtype=int))
        g = self.gamma_upto(int(lags.max()) if lags.size else 0)
        vals = g[lags]
        return float(vals) if vals.ndim == 0 else vals

    def cached(self, key: Hashable, compute: Callable[[], float]) -> float:
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = compute()
        with self._lock:
            return self._cache.setdefault(key, value)

    def truncation_lag(self, products: bool = False, shift: int = 0) -> int:
        """Smallest H whose envelope tail beyond H is below ``tol``.

        With ``products`` the tail is that of ``sum |gamma(h) gamma(h + shift)|``
        taken over both signs of h.
        """
        return self.cached(("H", products, shift), lambda: self._find_lag(products, shift))

    def _tail(self, H: int, products: bool, shift: int) -> float:
        r, K = self.radius, self.envelope
        if r == 0.0:
            return 0.0
        if not products:
            return 2.0 * K * _poly_geom_tail(H, r, 1)
        # |g(j) g(j - s)| <= K^2 (1 + j)^2 r^(2j - s) for j >= s
        return 4.0 * K * K * r ** (-shift) * _poly_geom_tail(H, r * r, 2)

    def _find_lag(self, products: bool, shift: int) -> int:
        if self.radius == 0.0:
            return shift
        lo, hi = shift, max(shift, 8)
        while self._tail(hi, products, shift) >= self.tol:
            lo, hi = hi, 2 * hi
            if hi > MAX_LAG:
                raise ConvergenceError(
                    f"tail bound above {self.tol} at lag cap {MAX_LAG} (radius {self.radius})"
                )
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._tail(mid, products, shift) < self.tol:
                hi = mid
            else:
                lo = mid
        return hi

    def gamma_sum(self) -> float:
        """Sum of gamma(h) over all integer h."""

        def compute():
            H = self.truncation_lag()
            g = self.gamma_upto(H)
            return float(g[0] + 2.0 * g[1:].sum())

        return self.cached("gamma_sum", compute)


def acvf(ctx: MomentContext, h: int) -> float:
    return ctx.gamma(int(h))


def acvf_sum(ctx: MomentContext) -> float:
    return ctx.gamma_sum()
