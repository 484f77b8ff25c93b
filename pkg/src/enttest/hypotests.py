"""Fidelity estimators, p-values, and rejection-region machinery.

All tests are one-sided tests of H0: F <= F0 against H1: F > F0 under the
Poisson count model; each reports its p-value as the lower-tail normal mass
of a signed statistic, so small values certify entanglement above threshold.

The two-stage design's p-value is the hard part: it requires, for each
anti-coincidence vector, the boundary mean mu_i(R) defined implicitly by a
transcendental equation, an outer root solve for the level R' reached by the
data, and a minimum over pairwise statistics. Those solvers live in
:mod:`enttest.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kernels
from .countmodel import AggregateCounts, CountRecord, aggregate
from .errors import (
    DomainError,
    InsufficientDataError,
    NumericalError,
    ValidationError,
)
from .planner import Design, design2_regime
from .quantum import ANTI_COINCIDENCE_VECTORS, COINCIDENCE_VECTORS, VectorClass
from .statmath import std_normal_cdf, std_normal_quantile


@dataclass
class TestOutcome:
    """Result of one hypothesis test: estimate, p-value, diagnostics."""

    design: Design
    threshold: float
    estimate: float
    pvalue: float
    statistic: float
    details: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "design": self.design.value,
            "threshold": self.threshold,
            "estimate": self.estimate,
            "pvalue": self.pvalue,
            "statistic": self.statistic,
            "details": self.details,
        }


def _check_threshold(f0: float) -> float:
    f0 = float(f0)
    if not 0.0 <= f0 <= 1.0:
        raise DomainError(f"threshold must be in [0, 1], got {f0}")
    return f0


def _clamp_unit(x: float) -> float:
    return min(1.0, max(0.0, x))


# ---------------------------------------------------------------------------
# ratio tests (rate unknown)
# ---------------------------------------------------------------------------


def estimate_mv(agg: AggregateCounts) -> float:
    """Fidelity estimate 1 - (3/2) n2/(n1+n2) for equal class times."""
    if agg.n1 + agg.n2 == 0:
        raise InsufficientDataError("no counts in either class")
    if abs(agg.t1 - agg.t2) > 1e-9 * max(agg.t1, agg.t2):
        raise ValidationError(
            f"equal-time estimator needs t1 = t2, got {agg.t1} and {agg.t2}"
        )
    return _clamp_unit(1.0 - 1.5 * agg.n2 / (agg.n1 + agg.n2))


def ratio_estimate(agg: AggregateCounts) -> float:
    """Moment estimate of F from the class ratio at arbitrary (t1, t2);
    reduces to the equal-time estimator when t1 = t2. Unclamped."""
    n = agg.n1 + agg.n2
    if n == 0:
        raise InsufficientDataError("no counts in either class")
    rho = agg.n2 / n
    num = 2.0 * (1.0 - rho) * agg.t2 - rho * agg.t1
    den = 2.0 * (rho * agg.t1 + (1.0 - rho) * agg.t2)
    return num / den


def pvalue_ratio(agg: AggregateCounts, f0: float,
                 design: Design | None = None) -> TestOutcome:
    """Conditional-on-total binomial test of the anti-coincidence share.

    Under H0 at the boundary, given n = n1 + n2 the anti-coincidence count is
    binomial with success probability
    p0 = (2-2F0) t2 / ((2F0+1) t1 + (2-2F0) t2), and the normal-approximation
    p-value is Phi((n2 - p0 n)/sqrt(n p0 (1-p0))). With t1 = t2 this is the
    equal-time formula exactly; at the optimal rate-unknown split it matches
    that design's closed form.
    """
    f0 = _check_threshold(f0)
    if agg.t1 <= 0.0 or agg.t2 <= 0.0:
        raise ValidationError("ratio test needs positive time in both classes")
    n = agg.n1 + agg.n2
    if n == 0:
        raise InsufficientDataError("no counts in either class")
    p0 = ((2.0 - 2.0 * f0) * agg.t2
          / ((2.0 * f0 + 1.0) * agg.t1 + (2.0 - 2.0 * f0) * agg.t2))
    if p0 <= 0.0 or p0 >= 1.0:
        raise DomainError(f"degenerate threshold: boundary share p0 = {p0}")
    statistic = (agg.n2 - p0 * n) / math.sqrt(n * p0 * (1.0 - p0))
    raw_estimate = ratio_estimate(agg)
    if design is None:
        design = (Design.MODIFIED_VISIBILITY if abs(agg.t1 - agg.t2) <= 1e-9
                  else Design.DESIGN1)
    return TestOutcome(
        design=design,
        threshold=f0,
        estimate=_clamp_unit(raw_estimate),
        pvalue=std_normal_cdf(statistic),
        statistic=statistic,
        details={"n1": agg.n1, "n2": agg.n2, "t1": agg.t1, "t2": agg.t2,
                 "p0": p0, "raw_estimate": raw_estimate},
    )


def pvalue_design1_flux(n2: int, n3: int, f0: float) -> TestOutcome:
    """High-threshold one-stage test from anti-coincidence vs total flux."""
    f0 = _check_threshold(f0)
    if f0 >= 1.0:
        raise DomainError("threshold 1 is degenerate for the flux test")
    if n2 < 0 or n3 < 0:
        raise ValidationError("counts must be nonnegative")
    if n2 + n3 == 0:
        raise InsufficientDataError("no counts observed")
    s3 = math.sqrt(3.0)
    sf = math.sqrt(1.0 - f0)
    statistic = (n2 * s3 - n3 * sf) / math.sqrt((n2 + n3) * sf * s3)
    # no estimate at this entry point: the counts alone do not fix the times
    return TestOutcome(
        design=Design.DESIGN1,
        threshold=f0,
        estimate=math.nan,
        pvalue=std_normal_cdf(statistic),
        statistic=statistic,
        details={"n2": n2, "n3": n3, "regime": "flux",
                 "untested_against_reference_data": True},
    )


# ---------------------------------------------------------------------------
# rate-known one-stage test
# ---------------------------------------------------------------------------


def pvalue_design2(record: CountRecord, rate: float, f0: float) -> TestOutcome:
    """Poisson test of the class total against its boundary mean.

    Thresholds >= 1/4 use the anti-coincidence class (mean lambda(1-F0)t/3,
    small counts favor H1); below 1/4 the coincidence class (mean
    lambda(1+2F0)t/6, large counts favor H1).
    """
    f0 = _check_threshold(f0)
    if not rate > 0.0:
        raise DomainError(f"rate must be > 0, got {rate}")
    regime = design2_regime(f0)
    want = (VectorClass.ANTI_COINCIDENCE if regime == "anti"
            else VectorClass.COINCIDENCE)
    wrong = [v for v in record.counts if v.vector_class is not want]
    if wrong:
        raise ValidationError(
            f"{regime} regime expects only {want.value} vectors, got {wrong}"
        )
    expected = (ANTI_COINCIDENCE_VECTORS if regime == "anti"
                else COINCIDENCE_VECTORS)
    missing = [v for v in expected if v not in record.counts]
    if missing:
        if not record.counts:
            raise InsufficientDataError("record contains no counts")
        raise ValidationError(f"record must cover the full class, missing {missing}")
    times = [record.allocation.seconds_for(v) for v in expected]
    if max(times) - min(times) > 1e-9 * max(times):
        raise ValidationError("rate-known one-stage test needs equal per-vector times")
    t = sum(times)
    n = sum(record.counts.values())
    if regime == "anti":
        mean0 = rate * (1.0 - f0) * t / 3.0
        if mean0 <= 0.0:
            raise DomainError("threshold 1 is degenerate for the anti regime")
        statistic = (n - mean0) / math.sqrt(mean0)
        estimate = 1.0 - 3.0 * n / (rate * t)
        details = {"n2": n, "t": t, "mean0": mean0, "regime": regime}
    else:
        mean0 = rate * (1.0 + 2.0 * f0) * t / 6.0
        statistic = (-n + mean0) / math.sqrt(mean0)
        estimate = 3.0 * n / (rate * t) - 0.5
        details = {"n1": n, "t": t, "mean0": mean0, "regime": regime,
                   "untested_against_reference_data": True}
    details["raw_estimate"] = estimate
    return TestOutcome(
        design=Design.DESIGN2,
        threshold=f0,
        estimate=_clamp_unit(estimate),
        pvalue=std_normal_cdf(statistic),
        statistic=statistic,
        details=details,
    )


# ---------------------------------------------------------------------------
# two-stage rejection-region machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignThreeContext:
    """Fixed quantities of the two-stage test: c0 = 1 - F0, the per-vector
    weights w_i = 1/(2 lambda t_i) in HV, VH, DX, XD, RR, LL order, their
    maximum, and the branch-switch points r0_i."""

    c0: float
    w: np.ndarray
    w_max: float
    r0: np.ndarray

    @classmethod
    def from_times(cls, rate: float, times: np.ndarray, f0: float,
                   ) -> "DesignThreeContext":
        f0 = _check_threshold(f0)
        if f0 >= 1.0:
            raise DomainError("threshold 1 leaves no boundary to test against")
        if not rate > 0.0:
            raise DomainError(f"rate must be > 0, got {rate}")
        times = np.asarray(times, dtype=float)
        if times.shape != (6,) or np.any(times <= 0.0):
            raise ValidationError("need six positive anti-coincidence times")
        c0 = 1.0 - f0
        w = 1.0 / (2.0 * rate * times)
        w.setflags(write=False)
        w_max = float(w.max())
        r0 = kernels.boundary_r0(c0, w, w_max)
        r0.setflags(write=False)
        return cls(c0=c0, w=w, w_max=w_max, r0=r0)

    @property
    def r_limit(self) -> float:
        """Largest admissible level; all boundary means vanish there."""
        return self.c0 / self.w_max


def mu_tilde(ctx: DesignThreeContext, i: int, r: float) -> float:
    """Boundary mean of vector i at level r (counts scale).

    Decreases continuously from c0/w_i at r = 0 to 0 at r = c0/w_max, using
    the lower implicit root below r0_i and the closed-form branch above it.
    """
    if not 0 <= i < 6:
        raise DomainError(f"vector index must be in 0..5, got {i}")
    if r < 0.0:
        raise DomainError(f"level must be >= 0, got {r}")
    value = kernels.mu_tilde_one(ctx.c0, float(ctx.w[i]), ctx.w_max,
                                 float(ctx.r0[i]), r)
    if value <= 0.0:
        raise DomainError(
            f"level {r} at or beyond the admissible limit {ctx.r_limit}"
        )
    return value


def z_pair(ctx: DesignThreeContext, i: int, j: int, r: float) -> float:
    """Pairwise statistic z_{i,j} at level r > 0."""
    if i == j:
        raise DomainError("pairwise statistic needs distinct vectors")
    if not r > 0.0:
        raise DomainError(f"level must be > 0, got {r}")
    mu_i = mu_tilde(ctx, i, r)
    mu_j = mu_tilde(ctx, j, r)
    x_i = ctx.c0 / (ctx.w[i] * mu_i) - 1.0
    y_i = ctx.c0 / (ctx.w[i] * mu_i * mu_i)
    x_j = ctx.c0 / (ctx.w[j] * mu_j) - 1.0
    y_j = ctx.c0 / (ctx.w[j] * mu_j * mu_j)
    z = kernels.z_pair_xy(x_i, y_i, x_j, y_j)
    if math.isnan(z):
        raise NumericalError(
            f"invalid radicand in pairwise statistic: i={i}, j={j}, r={r}, "
            f"x=({x_i:g}, {x_j:g}), y=({y_i:g}, {y_j:g})"
        )
    return z


def _design3_arrays(record: CountRecord) -> tuple[np.ndarray, np.ndarray]:
    counts = np.zeros(6, dtype=float)
    times = np.zeros(6, dtype=float)
    extra = [v for v in record.counts
             if v.vector_class is not VectorClass.ANTI_COINCIDENCE]
    if extra:
        raise ValidationError(f"two-stage record must be anti-coincidence only, got {extra}")
    for k, vec in enumerate(ANTI_COINCIDENCE_VECTORS):
        secs = record.allocation.seconds_for(vec)
        if secs <= 0.0:
            raise ValidationError(f"two-stage record missing time on {vec}")
        if abs(secs - round(secs)) > 1e-9:
            raise ValidationError(f"two-stage times must be integer seconds, got {secs} on {vec}")
        counts[k] = record.counts.get(vec, 0)
        times[k] = secs
    return counts, times


def pvalue_design3(record: CountRecord, rate: float, f0: float) -> TestOutcome:
    """Two-stage test: solve the data's level R' and report the minimum
    pairwise statistic there.

    R' solves sum_i n_i / mu_i(R') = 1; the sum is strictly increasing in R
    because every boundary mean decreases. When the estimate is at or below
    the threshold the sum already starts at or above 1, there is no positive
    level, and the p-value clamps to 0.5 with a flag.
    """
    counts, times = _design3_arrays(record)
    ctx = DesignThreeContext.from_times(rate, times, f0)
    mu_hat = counts / (rate * times)
    estimate = 1.0 - 0.5 * float(mu_hat.sum())
    details: dict[str, Any] = {
        "mu_hat": mu_hat.tolist(),
        "raw_estimate": estimate,
        "w": ctx.w.tolist(),
        "c0": ctx.c0,
    }
    r_prime = kernels.solve_r_prime(counts, ctx.c0, ctx.w, ctx.w_max, ctx.r0)
    if r_prime == -1.0:
        details["clamped"] = True
        details["r_prime"] = 0.0
        return TestOutcome(Design.DESIGN3, f0, _clamp_unit(estimate), 0.5, 0.0,
                           details)
    if r_prime == -2.0:
        # no counts at all: the data sit arbitrarily deep in every region
        details["all_zero_counts"] = True
        r_prime = ctx.r_limit * (1.0 - 1e-9)
    mu = np.empty(6)
    kernels.mu_tilde_vec(ctx.c0, ctx.w, ctx.w_max, ctx.r0, r_prime, mu)
    residual = float(kernels.count_ratio_sum(counts, mu) - 1.0)
    z_min, i_min, j_min = kernels.z_min_over_pairs(ctx.c0, ctx.w, mu)
    if math.isnan(z_min):
        raise NumericalError(
            f"invalid radicand at level {r_prime:g} for pair ({i_min}, {j_min})"
        )
    details.update({
        "r_prime": float(r_prime),
        "r_residual": residual if "all_zero_counts" not in details else None,
        "mu_tilde": mu.tolist(),
        "z_min": float(z_min),
        "z_argmin": [int(i_min), int(j_min)],
        "z_pairs": _z_matrix(ctx, mu),
    })
    return TestOutcome(
        design=Design.DESIGN3,
        threshold=f0,
        estimate=_clamp_unit(estimate),
        pvalue=std_normal_cdf(-z_min),
        statistic=-z_min,
        details=details,
    )


def _z_matrix(ctx: DesignThreeContext, mu: np.ndarray) -> list[list[float | None]]:
    x = ctx.c0 / (ctx.w * mu) - 1.0
    y = ctx.c0 / (ctx.w * mu * mu)
    out: list[list[float | None]] = [[None] * 6 for _ in range(6)]
    for i in range(6):
        for j in range(6):
            if i != j:
                out[i][j] = float(kernels.z_pair_xy(x[i], y[i], x[j], y[j]))
    return out


def design3_min_z(ctx: DesignThreeContext, r: float) -> float:
    """min over pairs of z_{i,j}(r); increases from 0 with r."""
    if not r > 0.0:
        raise DomainError(f"level must be > 0, got {r}")
    mu = np.empty(6)
    kernels.mu_tilde_vec(ctx.c0, ctx.w, ctx.w_max, ctx.r0, r, mu)
    z_min, i_min, j_min = kernels.z_min_over_pairs(ctx.c0, ctx.w, mu)
    if math.isnan(z_min):
        raise NumericalError(
            f"invalid radicand at level {r:g} for pair ({i_min}, {j_min})"
        )
    return float(z_min)


def design3_r_alpha(ctx: DesignThreeContext, alpha: float) -> float:
    """Level whose minimum pairwise statistic equals the upper alpha point.

    Only one-sided risks below one half are meaningful here.
    """
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha must be in (0, 0.5), got {alpha}")
    target = std_normal_quantile(1.0 - alpha)
    lo = 0.0
    hi = ctx.r_limit * (1.0 - 1e-12)
    if design3_min_z(ctx, hi) <= target:
        raise NumericalError("pairwise statistic never reaches the target level")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if design3_min_z(ctx, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
