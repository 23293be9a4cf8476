"""Lagged-product statistics and their limiting moments.

An atom ``S[m,k,i]`` stands for

    S_{m,k,i} = 1/(n+1-i) * sum_{t=i}^{n} z_{t-m} z_{t-k}            (known mean)
    S̄_{m,k,i} = 1/n       * sum_{t=i}^{n} (z_{t-m}-zbar)(z_{t-k}-zbar) (unknown mean)

with time indexed from 1. Both estimate ``gamma(m-k)``. For a Gaussian
linear process,

    lim n Cov(S_{m,k,i}, S_{f,g,j}) = sum_h gamma(h) gamma(h-p+q) + gamma(h+q) gamma(h-p)

with ``p = m-k`` and ``q = f-g`` in both mean modes, and

    lim n E(S̄_{m,k,i} - gamma(m-k)) = -|i-1| gamma(m-k) - sum_h gamma(h).
"""

from __future__ import annotations

import enum
import numbers
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from burgbias.errors import InvalidAtomError
from burgbias.model import MomentContext


class MeanMode(enum.Enum):
    KNOWN = "known"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value: "MeanMode | str") -> "MeanMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown mean mode {value!r}; expected 'known' or 'unknown'") from None


# Divisor conventions for known-mean atoms: "unbiased" is 1/(n+1-i); "n" is 1/n,
# as used by the sample autocovariance. Unknown-mean atoms always divide by n.
DIVISORS = ("unbiased", "n")


@dataclass(frozen=True, order=True)
class StatAtom:
    m: int
    k: int
    i: int

    def __post_init__(self):
        for name in ("m", "k", "i"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, numbers.Integral) or v < 0:
                raise InvalidAtomError(f"atom index {name}={v!r} must be a non-negative integer")
            object.__setattr__(self, name, int(v))
        if max(self.m, self.k) >= self.i:
            raise InvalidAtomError(
                f"invalid atom S[{self.m},{self.k},{self.i}]: need max(m, k) < i"
            )

    @property
    def lag(self) -> int:
        return self.m - self.k

    def __str__(self):
        return f"S[{self.m},{self.k},{self.i}]"

    def statistic(self, z, mode: MeanMode | str = MeanMode.KNOWN, divisor: str = "unbiased"):
        """Value of the statistic on data ``z`` (last axis is time).

        Returns a scalar for 1-D input and one value per row for 2-D input.
        """
        mode = MeanMode.parse(mode)
        z = np.asarray(z, dtype=float)
        n = z.shape[-1]
        if self.i > n:
            raise InvalidAtomError(f"{self} needs at least {self.i} observations, got {n}")
        if mode is MeanMode.UNKNOWN:
            z = z - z.mean(axis=-1, keepdims=True)
        # t runs over i..n (1-based), so z_{t-m} is the 0-based slice [i-1-m, n-m)
        a = z[..., self.i - 1 - self.m : n - self.m]
        b = z[..., self.i - 1 - self.k : n - self.k]
        total = np.einsum("...t,...t->...", a, b)
        if mode is MeanMode.UNKNOWN or divisor == "n":
            return total / n
        return total / (n + 1 - self.i)


class LinearStat:
    """Finite linear combination of atoms, kept merged and free of zero terms."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[float, StatAtom]] = ()):
        merged: dict[StatAtom, float] = {}
        for coef, atom in terms:
            if not isinstance(atom, StatAtom):
                raise TypeError(f"expected StatAtom, got {type(atom).__name__}")
            merged[atom] = merged.get(atom, 0.0) + float(coef)
        self.terms = tuple((c, a) for a, c in sorted(merged.items()) if c != 0.0)

    @classmethod
    def of(cls, value: "StatLike") -> "LinearStat":
        if isinstance(value, LinearStat):
            return value
        if isinstance(value, StatAtom):
            return cls([(1.0, value)])
        raise TypeError(f"cannot interpret {type(value).__name__} as a linear statistic")

    @property
    def atoms(self) -> tuple[StatAtom, ...]:
        return tuple(a for _, a in self.terms)

    def __add__(self, other):
        other = LinearStat.of(other)
        return LinearStat(self.terms + other.terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * LinearStat.of(other)

    def __rsub__(self, other):
        return LinearStat.of(other) - self

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Real):
            return NotImplemented
        return LinearStat((scalar * c, a) for c, a in self.terms)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __eq__(self, other):
        return isinstance(other, LinearStat) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        if not self.terms:
            return "LinearStat(0)"
        return "LinearStat(" + " + ".join(f"{c:g}*{a}" for c, a in self.terms) + ")"


StatLike = Union[StatAtom, LinearStat]


def atom_mean(atom: StatAtom, ctx: MomentContext) -> float:
    """Expansion point for an atom: gamma(m - k), in either mean mode."""
    return ctx.gamma(atom.lag)


def _acvf_autocov(ctx: MomentContext, d: int) -> float:
    """``sum_h gamma(h) gamma(h + d)``."""
    d = abs(d)

    def compute():
        H = ctx.truncation_lag(products=True, shift=d)
        g = ctx.gamma_upto(H + d)
        # full two-sided gamma on lags -(H+d)..(H+d)
        two_sided = np.concatenate([g[:0:-1], g])
        centre = H + d
        left = two_sided[centre - H : centre + H + 1]
        right = two_sided[centre - H + d : centre + H + d + 1]
        return float(np.dot(left, right))

    return ctx.cached(("acvf_autocov", d), compute)


def lcov_pq(ctx: MomentContext, p: int, q: int) -> float:
    """Limit of n Cov for atoms of lags ``p = m-k`` and ``q = f-g``."""
    return ctx.cached(("lcov", p, q), lambda: _acvf_autocov(ctx, q - p) + _acvf_autocov(ctx, -p - q))


def lcov(a: StatLike, b: StatLike, ctx: MomentContext, mode: MeanMode | str = MeanMode.KNOWN) -> float:
    """Limiting ``n Cov(a, b)``, expanded bilinearly over the terms.

    The limit is the same for known- and unknown-mean statistics.
    """
    MeanMode.parse(mode)
    a, b = LinearStat.of(a), LinearStat.of(b)
    return float(
        sum(ca * cb * lcov_pq(ctx, x.lag, y.lag) for ca, x in a.terms for cb, y in b.terms)
    )


def lbias(
    a: StatLike,
    ctx: MomentContext,
    mode: MeanMode | str = MeanMode.KNOWN,
    divisor: str = "unbiased",
) -> float:
    """Limiting ``n E(a - E_inf a)`` where ``E_inf`` replaces each atom by gamma(m-k).

    Known-mean atoms with the unbiased divisor contribute nothing. With the
    1/n divisor a known-mean atom has bias ``-(i-1) gamma(m-k)``; unknown-mean
    atoms additionally lose ``sum_h gamma(h)`` to mean estimation.
    """
    mode = MeanMode.parse(mode)
    if divisor not in DIVISORS:
        raise ValueError(f"divisor must be one of {DIVISORS}, got {divisor!r}")
    a = LinearStat.of(a)
    if mode is MeanMode.KNOWN and divisor == "unbiased":
        return 0.0
    total = 0.0
    for c, atom in a.terms:
        term = -abs(atom.i - 1) * ctx.gamma(atom.lag)
        if mode is MeanMode.UNKNOWN:
            term -= ctx.gamma_sum()
        total += c * term
    return float(total)
