"""Count records, time allocations, and class aggregates.

The measurement model: the count observed on vector |xy> over t seconds is
Poisson with mean lambda * mu_xy * t, where mu_xy is the state's outcome
probability and lambda the detected pair rate per second at unit probability.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .errors import DomainError, ValidationError
from .quantum import (
    MeasurementVector,
    TwoQubitState,
    VectorClass,
    outcome_prob,
)


def _check_rate(rate: float) -> float:
    rate = float(rate)
    if not (math.isfinite(rate) and rate > 0.0):
        raise DomainError(f"rate must be finite and > 0, got {rate}")
    return rate


@dataclass
class TimeAllocation:
    """Per-vector measurement durations in seconds, plus total-flux time."""

    per_vector: dict[MeasurementVector, float]
    total_flux_time: float = 0.0

    def __post_init__(self):
        cleaned = {}
        for vec, secs in self.per_vector.items():
            secs = float(secs)
            if secs < 0.0 or not math.isfinite(secs):
                raise ValidationError(f"negative or non-finite time {secs} on {vec}")
            cleaned[vec] = secs
        self.per_vector = cleaned
        self.total_flux_time = float(self.total_flux_time)
        if self.total_flux_time < 0.0:
            raise ValidationError(f"negative total-flux time {self.total_flux_time}")

    @property
    def total(self) -> float:
        return sum(self.per_vector.values()) + self.total_flux_time

    def seconds_for(self, vector: MeasurementVector) -> float:
        return self.per_vector.get(vector, 0.0)

    def to_json(self) -> dict:
        obj: dict = {"times": {v.label: s for v, s in self.per_vector.items()}}
        if self.total_flux_time > 0.0:
            obj["total_flux_time"] = self.total_flux_time
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "TimeAllocation":
        times = obj.get("times")
        if not isinstance(times, dict):
            raise ValidationError("allocation object must contain a 'times' map")
        per_vector = {MeasurementVector.from_label(k): float(v)
                      for k, v in times.items()}
        return cls(per_vector, float(obj.get("total_flux_time", 0.0)))


@dataclass
class CountRecord:
    """Observed counts per vector, with the allocation that produced them."""

    counts: dict[MeasurementVector, int]
    allocation: TimeAllocation
    total_flux_count: int | None = None
    rate: float | None = None

    def __post_init__(self):
        cleaned = {}
        for vec, n in self.counts.items():
            if n != int(n) or n < 0:
                raise ValidationError(f"count on {vec} must be a nonnegative integer, got {n}")
            if self.allocation.seconds_for(vec) <= 0.0:
                raise ValidationError(f"count recorded on {vec} with no measurement time")
            cleaned[vec] = int(n)
        self.counts = cleaned
        if self.total_flux_count is not None:
            if self.total_flux_count < 0 or self.allocation.total_flux_time <= 0.0:
                raise ValidationError("total_flux_count requires positive total-flux time")
            self.total_flux_count = int(self.total_flux_count)
        if self.rate is not None:
            self.rate = _check_rate(self.rate)

    def vectors(self) -> tuple[MeasurementVector, ...]:
        return tuple(self.counts.keys())

    def to_json(self) -> dict:
        total_flux = None
        if self.total_flux_count is not None:
            total_flux = {"count": self.total_flux_count,
                          "time": self.allocation.total_flux_time}
        return {
            "counts": {v.label: n for v, n in self.counts.items()},
            "times": {v.label: s for v, s in self.allocation.per_vector.items()},
            "total_flux": total_flux,
            "lambda": self.rate,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CountRecord":
        for key in ("counts", "times"):
            if key not in obj or not isinstance(obj[key], dict):
                raise ValidationError(f"count record must contain a '{key}' map")
        counts = {MeasurementVector.from_label(k): int(v)
                  for k, v in obj["counts"].items()}
        times = {MeasurementVector.from_label(k): float(v)
                 for k, v in obj["times"].items()}
        flux = obj.get("total_flux")
        flux_count = None
        flux_time = 0.0
        if flux is not None:
            try:
                flux_count = int(flux["count"])
                flux_time = float(flux["time"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad total_flux object: {exc}") from exc
        allocation = TimeAllocation(times, flux_time)
        return cls(counts, allocation, flux_count, obj.get("lambda"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["vector", "seconds", "count"])
        for vec, n in self.counts.items():
            writer.writerow([vec.label, self.allocation.seconds_for(vec), n])
        return buf.getvalue()


@dataclass(frozen=True)
class AggregateCounts:
    """Class totals: coincidence (n1, t1) and anti-coincidence (n2, t2)."""

    n1: int
    n2: int
    t1: float
    t2: float

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0 or self.t1 < 0.0 or self.t2 < 0.0:
            raise ValidationError("aggregate counts and times must be nonnegative")


def expected_mean(state: TwoQubitState, rate: float,
                  vector: MeasurementVector, seconds: float) -> float:
    """Poisson mean lambda * mu_xy * t for one vector."""
    rate = _check_rate(rate)
    seconds = float(seconds)
    if seconds < 0.0:
        raise DomainError(f"seconds must be >= 0, got {seconds}")
    return rate * outcome_prob(state, vector) * seconds


def aggregate(record: CountRecord) -> AggregateCounts:
    """Sum counts and times over the coincidence and anti-coincidence classes."""
    n1 = n2 = 0
    t1 = t2 = 0.0
    for vec, n in record.counts.items():
        cls = vec.vector_class
        if cls is VectorClass.COINCIDENCE:
            n1 += n
            t1 += record.allocation.seconds_for(vec)
        elif cls is VectorClass.ANTI_COINCIDENCE:
            n2 += n
            t2 += record.allocation.seconds_for(vec)
        else:
            raise ValidationError(
                f"vector {vec} is neither coincidence nor anti-coincidence"
            )
    return AggregateCounts(n1, n2, t1, t2)
