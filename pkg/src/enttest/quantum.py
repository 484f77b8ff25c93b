"""Two-qubit polarization states, the twelve product measurement vectors,
outcome probabilities, and fidelity against the maximally entangled target.

Basis order everywhere is HH, HV, VH, VV.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10


class Polarization(enum.Enum):
    """Single-photon analyzer settings, as amplitudes over (H, V)."""

    H = "H"
    V = "V"
    D = "D"
    X = "X"
    R = "R"
    L = "L"

    @property
    def amplitudes(self) -> np.ndarray:
        return _AMPLITUDES[self]


_AMPLITUDES = {
    Polarization.H: np.array([1.0, 0.0], dtype=complex),
    Polarization.V: np.array([0.0, 1.0], dtype=complex),
    Polarization.D: np.array([_INV_SQRT2, _INV_SQRT2], dtype=complex),
    Polarization.X: np.array([_INV_SQRT2, -_INV_SQRT2], dtype=complex),
    Polarization.R: np.array([_INV_SQRT2, 1j * _INV_SQRT2], dtype=complex),
    Polarization.L: np.array([_INV_SQRT2, -1j * _INV_SQRT2], dtype=complex),
}


class VectorClass(enum.Enum):
    COINCIDENCE = "coincidence"
    ANTI_COINCIDENCE = "anti_coincidence"
    OTHER = "other"


@dataclass(frozen=True)
class MeasurementVector:
    """Product polarization setting |first, second>."""

    first: Polarization
    second: Polarization

    @property
    def label(self) -> str:
        return self.first.value + self.second.value

    @classmethod
    def from_label(cls, label: str) -> "MeasurementVector":
        if len(label) != 2:
            raise ValidationError(f"bad measurement vector label {label!r}")
        try:
            return cls(Polarization(label[0]), Polarization(label[1]))
        except ValueError as exc:
            raise ValidationError(f"bad measurement vector label {label!r}") from exc

    @property
    def vector_class(self) -> VectorClass:
        pair = (self.first.value, self.second.value)
        if pair in _COINCIDENCE_PAIRS:
            return VectorClass.COINCIDENCE
        if pair in _ANTI_COINCIDENCE_PAIRS:
            return VectorClass.ANTI_COINCIDENCE
        return VectorClass.OTHER

    @property
    def slot(self) -> int:
        """Stable index in 0..35 used to key random substreams."""
        return 6 * _POL_INDEX[self.first] + _POL_INDEX[self.second]

    def ket(self) -> np.ndarray:
        return np.kron(self.first.amplitudes, self.second.amplitudes)

    def projector(self) -> np.ndarray:
        k = self.ket()
        return np.outer(k, k.conj())

    def __str__(self) -> str:
        return self.label


_COINCIDENCE_PAIRS = {("H", "H"), ("V", "V"), ("D", "D"),
                      ("X", "X"), ("R", "L"), ("L", "R")}
_ANTI_COINCIDENCE_PAIRS = {("H", "V"), ("V", "H"), ("D", "X"),
                           ("X", "D"), ("R", "R"), ("L", "L")}
_POL_INDEX = {p: i for i, p in enumerate(Polarization)}


def _vectors(labels: str) -> tuple[MeasurementVector, ...]:
    return tuple(MeasurementVector.from_label(lbl)
                 for lbl in labels.split())


COINCIDENCE_VECTORS = _vectors("HH VV DD XX RL LR")
ANTI_COINCIDENCE_VECTORS = _vectors("HV VH DX XD RR LL")
ALL_VECTORS = COINCIDENCE_VECTORS + ANTI_COINCIDENCE_VECTORS


class TwoQubitState:
    """Validated 4x4 density matrix (Hermitian, unit trace, PSD)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        m = np.array(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError(f"density matrix must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValidationError(f"density matrix trace must be 1, got {np.trace(m)}")
        eigvals = np.linalg.eigvalsh(m)
        if eigvals.min() < PSD_TOL:
            raise ValidationError(
                f"density matrix is not positive semidefinite (min eigenvalue {eigvals.min():g})"
            )
        object.__setattr__(self, "matrix", m)
        self.matrix.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("TwoQubitState is immutable")

    def to_json(self) -> dict:
        return {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "TwoQubitState":
        try:
            re = np.array(obj["re"], dtype=float)
            im = np.array(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad state object: {exc}") from exc
        return cls(re + 1j * im)


def bell_state(sign: str) -> TwoQubitState:
    """Pure |Phi(+/-)> = (|HH> +/- |VV>)/sqrt(2) as a density matrix."""
    if sign not in ("+", "-"):
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    amp = np.zeros(4, dtype=complex)
    amp[0] = _INV_SQRT2
    amp[3] = _INV_SQRT2 if sign == "+" else -_INV_SQRT2
    return TwoQubitState(np.outer(amp, amp.conj()))


def phi_mixture(p_plus: float) -> TwoQubitState:
    """Classical mixture p|Phi+><Phi+| + (1-p)|Phi-><Phi-|; fidelity = p."""
    p_plus = float(p_plus)
    if not 0.0 <= p_plus <= 1.0:
        raise DomainError(f"mixture weight must be in [0, 1], got {p_plus}")
    plus = bell_state("+").matrix
    minus = bell_state("-").matrix
    return TwoQubitState(p_plus * plus + (1.0 - p_plus) * minus)


_PHI_PLUS_KET = np.array([_INV_SQRT2, 0.0, 0.0, _INV_SQRT2], dtype=complex)


def outcome_prob(state: TwoQubitState, vector: MeasurementVector) -> float:
    """<xy| sigma |xy>, clamped to [0, 1]."""
    k = vector.ket()
    value = (k.conj() @ state.matrix @ k).real
    return min(1.0, max(0.0, float(value)))


def fidelity(state: TwoQubitState) -> float:
    """Overlap <Phi+| sigma |Phi+> with the maximally entangled target."""
    value = (_PHI_PLUS_KET.conj() @ state.matrix @ _PHI_PLUS_KET).real
    return min(1.0, max(0.0, float(value)))


def random_state(rng: np.random.Generator) -> TwoQubitState:
    """Random valid density matrix G G^dagger / tr(G G^dagger)."""
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = g @ g.conj().T
    return TwoQubitState(m / np.trace(m).real)
