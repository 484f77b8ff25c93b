"""Measurement-time planning for the four designs.

Closed-form optimal splits for the one-stage designs, the square-root
(Neyman) allocation and its two-stage estimated version, largest-remainder
integer rounding, and the asymptotic variance of each design's estimator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .countmodel import CountRecord, TimeAllocation, aggregate
from .errors import DomainError, ValidationError
from .quantum import (
    ANTI_COINCIDENCE_VECTORS,
    COINCIDENCE_VECTORS,
    MeasurementVector,
)

# Crossover fidelity between the two one-stage (rate-unknown) regimes.
F1_CROSSOVER = 0.899519

# Replacement for a zero first-stage count before the square root, so every
# vector keeps positive second-stage time and its rate stays estimable.
ZERO_COUNT_PSEUDO = 0.5


class Design(str, enum.Enum):
    MODIFIED_VISIBILITY = "modified_visibility"
    DESIGN1 = "design1"
    DESIGN2 = "design2"
    DESIGN3 = "design3"

    @classmethod
    def parse(cls, name: str) -> "Design":
        key = name.strip().lower()
        if key in ("mv", "modified_visibility", "visibility"):
            return cls.MODIFIED_VISIBILITY
        try:
            return cls(key)
        except ValueError as exc:
            raise ValidationError(f"unknown design {name!r}") from exc


@dataclass(frozen=True)
class DesignSpec:
    """Parameters a design needs before any counts exist."""

    design: Design
    total_time: float
    threshold: float
    rate: float | None = None
    first_stage_time: float = 6.0

    def __post_init__(self):
        if not self.total_time > 0.0:
            raise DomainError(f"total_time must be > 0, got {self.total_time}")
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.design in (Design.DESIGN2, Design.DESIGN3) and self.rate is None:
            raise ValidationError(f"{self.design.value} requires a known rate")
        if self.design is Design.DESIGN3:
            tf = self.first_stage_time
            if not 0.0 < tf < self.total_time:
                raise DomainError(
                    f"first_stage_time must lie in (0, total_time), got {tf}"
                )
            if abs(tf / 6.0 - round(tf / 6.0)) > 1e-9:
                raise DomainError(
                    f"first_stage_time must be divisible by 6 seconds, got {tf}"
                )


@dataclass(frozen=True)
class VarianceReport:
    design: Design
    asymptotic_variance: float


def design1_regime(threshold: float) -> str:
    """'ratio' below the crossover (coincidence vs anti-coincidence),
    'flux' above it (anti-coincidence vs total flux)."""
    return "flux" if threshold > F1_CROSSOVER else "ratio"


def design2_regime(threshold: float) -> str:
    """'anti' for thresholds >= 1/4, 'coincidence' below."""
    return "anti" if threshold >= 0.25 else "coincidence"


def allocate(spec: DesignSpec) -> TimeAllocation:
    """Raw (unrounded) allocation for the one-stage designs.

    The two-stage design is adaptive; use ``first_stage_allocation`` and
    ``two_stage_second_allocation`` instead.
    """
    t = spec.total_time
    f0 = spec.threshold
    if spec.design is Design.MODIFIED_VISIBILITY:
        per = {v: t / 12.0 for v in COINCIDENCE_VECTORS + ANTI_COINCIDENCE_VECTORS}
        return TimeAllocation(per)
    if spec.design is Design.DESIGN1:
        if design1_regime(f0) == "ratio":
            s1 = math.sqrt(2.0 - 2.0 * f0)
            s2 = math.sqrt(2.0 * f0 + 1.0)
            t1 = t * s1 / (s1 + s2)
            t2 = t * s2 / (s1 + s2)
            per = {v: t1 / 6.0 for v in COINCIDENCE_VECTORS}
            per.update({v: t2 / 6.0 for v in ANTI_COINCIDENCE_VECTORS})
            return TimeAllocation(per)
        # high-threshold regime: anti-coincidence plus total flux
        s1 = math.sqrt(3.0)
        s3 = math.sqrt(1.0 - f0)
        t2 = t * s1 / (s1 + s3)
        t3 = t * s3 / (s1 + s3)
        per = {v: t2 / 6.0 for v in ANTI_COINCIDENCE_VECTORS}
        return TimeAllocation(per, total_flux_time=t3)
    if spec.design is Design.DESIGN2:
        vectors = (ANTI_COINCIDENCE_VECTORS if design2_regime(f0) == "anti"
                   else COINCIDENCE_VECTORS)
        return TimeAllocation({v: t / 6.0 for v in vectors})
    if spec.design is Design.DESIGN3:
        raise ValidationError(
            "design3 is two-stage: use first_stage_allocation and "
            "two_stage_second_allocation"
        )
    raise ValidationError(f"unknown design {spec.design!r}")


def first_stage_allocation(first_stage_time: float) -> TimeAllocation:
    """Equal split of the first-stage budget over the anti-coincidence set."""
    if not first_stage_time > 0.0:
        raise DomainError(f"first_stage_time must be > 0, got {first_stage_time}")
    per = first_stage_time / 6.0
    return TimeAllocation({v: per for v in ANTI_COINCIDENCE_VECTORS})


def neyman_allocation(mu: dict[MeasurementVector, float],
                      seconds: float) -> TimeAllocation:
    """Time proportional to sqrt(mu) per vector, normalized to ``seconds``."""
    if not seconds > 0.0:
        raise DomainError(f"seconds must be > 0, got {seconds}")
    roots = {}
    for vec, value in mu.items():
        value = float(value)
        if value < 0.0:
            raise DomainError(f"mu[{vec}] must be >= 0, got {value}")
        roots[vec] = math.sqrt(value)
    total_root = sum(roots.values())
    if total_root == 0.0:
        raise DomainError("all mu are zero; square-root allocation is degenerate")
    return TimeAllocation({v: seconds * r / total_root for v, r in roots.items()})


def _check_first_stage(first_stage: CountRecord) -> None:
    agg = aggregate(first_stage)
    if agg.n1 > 0 or agg.t1 > 0.0:
        raise ValidationError("first stage must cover only anti-coincidence vectors")
    missing = [v for v in ANTI_COINCIDENCE_VECTORS
               if first_stage.allocation.seconds_for(v) <= 0.0]
    if missing:
        raise ValidationError(
            f"first stage must cover all six anti-coincidence vectors, missing {missing}"
        )


def two_stage_raw_allocation(first_stage: CountRecord,
                             remaining_seconds: float) -> TimeAllocation:
    """Unrounded second-stage times: sqrt(m) weights with zeros replaced by
    ZERO_COUNT_PSEUDO, normalized to the remaining budget."""
    if not remaining_seconds > 0.0:
        raise DomainError(f"remaining_seconds must be > 0, got {remaining_seconds}")
    _check_first_stage(first_stage)
    weights = {}
    for vec in ANTI_COINCIDENCE_VECTORS:
        m = first_stage.counts.get(vec, 0)
        weights[vec] = float(m) if m > 0 else ZERO_COUNT_PSEUDO
    return neyman_allocation(weights, remaining_seconds)


def two_stage_second_allocation(first_stage: CountRecord,
                                remaining_seconds: float) -> TimeAllocation:
    """Integer second-stage allocation from first-stage counts."""
    if not remaining_seconds > 0.0:
        raise DomainError(f"remaining_seconds must be > 0, got {remaining_seconds}")
    _check_first_stage(first_stage)
    counts = [first_stage.counts.get(v, 0) for v in ANTI_COINCIDENCE_VECTORS]
    rounded = second_stage_seconds(counts, int(round(remaining_seconds)))
    return TimeAllocation({v: float(s) for v, s
                           in zip(ANTI_COINCIDENCE_VECTORS, rounded)})


def largest_remainder_round(values: list[float], total: int) -> list[int]:
    """Round nonnegative values to integers summing exactly to total.

    Floors everything, then hands the shortfall to the largest fractional
    remainders; remainder ties break by position.
    """
    if abs(sum(values) - total) > 1e-6:
        raise ValidationError(
            f"raw allocation sums to {sum(values):.9g}, expected {total}"
        )
    floors = [math.floor(v + 1e-12) for v in values]
    remainders = [v - f for v, f in zip(values, floors)]
    shortfall = total - sum(floors)
    # stable sort: ties keep earlier positions first
    order = sorted(range(len(values)), key=lambda i: -remainders[i])
    rounded = list(floors)
    for i in order[:shortfall]:
        rounded[i] += 1
    return rounded


def round_allocation(raw: TimeAllocation, total: int) -> TimeAllocation:
    """Largest-remainder rounding to integer seconds summing exactly to total.

    Remainder ties break in the allocation's vector order (anti-coincidence
    allocations are built in HV, VH, DX, XD, RR, LL order). The total-flux
    slot, when present, participates like a vector, ordered last.
    """
    entries = list(raw.per_vector.items())
    values = [secs for _, secs in entries]
    has_flux = raw.total_flux_time > 0.0
    if has_flux:
        values.append(raw.total_flux_time)
    rounded = largest_remainder_round(values, total)
    per = {vec: float(rounded[i]) for i, (vec, _) in enumerate(entries)}
    flux = float(rounded[-1]) if has_flux else 0.0
    return TimeAllocation(per, total_flux_time=flux)


def second_stage_seconds(first_counts: list[int], remaining_seconds: int) -> list[int]:
    """Integer second-stage times from the six first-stage counts.

    Weights are sqrt(count) with zeros replaced by ZERO_COUNT_PSEUDO, rounded
    by largest remainder; any vector rounded to zero is then topped up to one
    second from the largest entries so every rate stays estimable.
    """
    if len(first_counts) != 6:
        raise ValidationError(f"expected six first-stage counts, got {len(first_counts)}")
    if remaining_seconds < 6:
        raise DomainError(
            f"need at least 6 remaining seconds for six vectors, got {remaining_seconds}"
        )
    roots = [math.sqrt(m if m > 0 else ZERO_COUNT_PSEUDO) for m in first_counts]
    if any(m < 0 for m in first_counts):
        raise DomainError("first-stage counts must be nonnegative")
    total_root = sum(roots)
    raw = [remaining_seconds * r / total_root for r in roots]
    rounded = largest_remainder_round(raw, remaining_seconds)
    while min(rounded) == 0:
        rounded[rounded.index(max(rounded))] -= 1
        rounded[rounded.index(0)] += 1
    return rounded


def asymptotic_variance(design: Design, fidelity: float, rate: float,
                        total_time: float,
                        mu: dict[MeasurementVector, float] | None = None,
                        ) -> VarianceReport:
    """Asymptotic variance of the design's fidelity estimator at its optimal
    allocation for the given true fidelity."""
    if not 0.0 < fidelity < 1.0:
        raise DomainError(f"fidelity must be in (0, 1), got {fidelity}")
    if not rate > 0.0 or not total_time > 0.0:
        raise DomainError("rate and total_time must be > 0")
    lt = rate * total_time
    f = fidelity
    if design is Design.MODIFIED_VISIBILITY:
        value = (2.0 * f + 1.0) * (2.0 - 2.0 * f) / lt
    elif design is Design.DESIGN1:
        if design1_regime(f) == "ratio":
            value = ((2.0 * f + 1.0) * (1.0 - f)
                     * (math.sqrt(2.0 * f + 1.0) + math.sqrt(2.0 - 2.0 * f)) ** 2
                     / (3.0 * lt))
        else:
            value = (1.0 - f) * (math.sqrt(3.0) + math.sqrt(1.0 - f)) ** 2 / lt
    elif design is Design.DESIGN2:
        if design2_regime(f) == "anti":
            value = 3.0 * (1.0 - f) / lt
        else:
            value = 3.0 * (1.0 + 2.0 * f) / (2.0 * lt)
    elif design is Design.DESIGN3:
        if mu is None:
            raise DomainError("design3 variance requires the per-vector mu map")
        root_sum = 0.0
        for vec in ANTI_COINCIDENCE_VECTORS:
            m = float(mu.get(vec, 0.0))
            if m < 0.0:
                raise DomainError(f"mu[{vec}] must be >= 0, got {m}")
            root_sum += math.sqrt(m)
        value = root_sum ** 2 / (4.0 * lt)
    else:
        raise ValidationError(f"unknown design {design!r}")
    return VarianceReport(design, value)
