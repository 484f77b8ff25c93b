"""Scalar statistical primitives shared by every test design.

Standard normal CDF/quantile, exact Poisson sampling through a seedable
deterministic stream, monotone root finding, and the one-sided normal-mean
reference test used to calibrate conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from . import kernels
from .backend import as_u64, next_unit, stream_child, stream_init
from .errors import BracketError, DomainError


def std_normal_cdf(z: float) -> float:
    """Lower-tail probability of the standard normal at z."""
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"std_normal_cdf requires a finite argument, got {z}")
    return kernels.norm_cdf(z)


def std_normal_quantile(alpha: float) -> float:
    """z such that std_normal_cdf(z) = alpha, for alpha strictly inside (0, 1)."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(
            f"std_normal_quantile requires 0 < alpha < 1, got {alpha}"
        )
    return kernels.norm_ppf(alpha)


class RandomStream:
    """Deterministic splitmix64 stream with counter-based splitting.

    A stream is identified by a 64-bit seed plus any number of integer
    subkeys; ``spawn`` derives an independent child stream, so parallel
    consumers can be keyed by (seed, trial, vector) without coordination.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int, *subkeys: int):
        state = stream_init(as_u64(seed))
        for key in subkeys:
            state = stream_child(state, as_u64(key))
        self._state = state

    @classmethod
    def _from_state(cls, state) -> "RandomStream":
        obj = cls.__new__(cls)
        obj._state = state
        return obj

    def spawn(self, *subkeys: int) -> "RandomStream":
        """Independent child stream; does not advance this stream."""
        state = self._state
        for key in subkeys:
            state = stream_child(state, as_u64(key))
        return RandomStream._from_state(state)

    def uniform(self) -> float:
        """Uniform double in the open interval (0, 1)."""
        u, self._state = next_unit(self._state)
        return u

    def poisson(self, mean: float) -> int:
        mean = float(mean)
        if mean < 0.0 or not math.isfinite(mean):
            raise DomainError(f"Poisson mean must be finite and >= 0, got {mean}")
        k, self._state = kernels.poisson_draw(mean, self._state)
        return int(k)

    def gauss(self) -> float:
        """Standard normal via Box-Muller (no spare caching)."""
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def poisson_sample(mean: float, rng: RandomStream) -> int:
    """One exact draw from Poi(mean); mean 0 returns 0."""
    return rng.poisson(mean)


def solve_monotone(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> float:
    """Root of a continuous strictly monotone f on [lo, hi] by Brent's method.

    Stops when |f(x)| <= tol or the bracket width falls below tol. The
    bracket must show a sign change (f(lo) * f(hi) <= 0).
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise DomainError(f"invalid bracket [{lo}, {hi}]")
    a, b = lo, hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={fa:g}, f(hi)={fb:g}"
        )
    c, fc = a, fa
    d = e = b - a
    eps = 2.220446049250313e-16
    while True:
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * eps * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0 or abs(fb) <= tol:
            return b
        if abs(e) < tol1 or abs(fa) <= abs(fb):
            d = e = xm
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = e = xm
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += tol1 if xm > 0.0 else -tol1
        fb = f(b)
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a


@dataclass(frozen=True)
class NormalTestInput:
    """Sample summary for the one-sided normal-mean test (known variance)."""

    sample_mean: float
    n: int
    mu0: float
    sigma0: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not self.sigma0 > 0.0:
            raise DomainError(f"sigma0 must be > 0, got {self.sigma0}")


class NormalTestResult(NamedTuple):
    reject: bool
    pvalue: float
    statistic: float


def normal_mean_test(inp: NormalTestInput, alpha: float) -> NormalTestResult:
    """Test H0: mu <= mu0 against H1: mu > mu0 at risk probability alpha.

    The statistic is sqrt(n) * (mean - mu0) / sigma0; H0 is rejected when it
    exceeds the upper 1-alpha quantile. The reported probability is the
    lower-tail mass of the signed statistic (0.5 at the boundary, rising
    toward 1 as the data favor H1), mirroring the convention the count-based
    tests use with their inverted evidence direction.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    statistic = math.sqrt(inp.n) * (inp.sample_mean - inp.mu0) / inp.sigma0
    reject = statistic > std_normal_quantile(1.0 - alpha)
    return NormalTestResult(reject, std_normal_cdf(statistic), statistic)
