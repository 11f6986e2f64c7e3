"""Bell bases, Bell-coefficient expansion and nonlocal spin-product operators.

The four Bell states are

    |Phi+-> = (|++> +- |-->)/sqrt(2)      |Psi+-> = (|+-> +- |-+>)/sqrt(2)

with |+> = |0>, |-> = |1>. A spin product S_ij = sigma_i (x) sigma_j acts
jointly on Alice's and Bob's qubits; its eigenvalues +1 and -1 are each
doubly degenerate. The Bell states are the common eigenbasis of S_zz and
S_xx, which commute, and the outcome pair (m, n) of those two observables
identifies a Bell state uniquely (see :func:`classify`).

Eigenspaces are exposed through the rank-2 projectors (I +- S_ij)/2 rather
than any particular eigenvector pair, since the choice of basis inside each
degenerate eigenspace is free.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qstate import ATOL, PAULIS, StateVector, inner

_SQRT2_INV = 1.0 / np.sqrt(2.0)


class BellLabel(Enum):
    """The four Bell states, in coefficient order c1..c4."""

    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    @property
    def index(self) -> int:
        """Position in the coefficient expansion: 0 for c1 ... 3 for c4."""
        return _LABEL_ORDER.index(self)


_LABEL_ORDER = (
    BellLabel.PHI_PLUS,
    BellLabel.PHI_MINUS,
    BellLabel.PSI_PLUS,
    BellLabel.PSI_MINUS,
)

_BELL_AMPLITUDES = {
    BellLabel.PHI_PLUS: np.array([1, 0, 0, 1], dtype=complex) * _SQRT2_INV,
    BellLabel.PHI_MINUS: np.array([1, 0, 0, -1], dtype=complex) * _SQRT2_INV,
    BellLabel.PSI_PLUS: np.array([0, 1, 1, 0], dtype=complex) * _SQRT2_INV,
    BellLabel.PSI_MINUS: np.array([0, 1, -1, 0], dtype=complex) * _SQRT2_INV,
}
for _amps in _BELL_AMPLITUDES.values():
    _amps.setflags(write=False)

# (m, n) = (S_zz outcome, S_xx outcome) <-> Bell label, a bijection.
_CLASSIFY = {
    (+1, +1): BellLabel.PHI_PLUS,
    (+1, -1): BellLabel.PHI_MINUS,
    (-1, +1): BellLabel.PSI_PLUS,
    (-1, -1): BellLabel.PSI_MINUS,
}
_OUTCOME_PAIR = {label: pair for pair, label in _CLASSIFY.items()}


def bell_state(label: BellLabel) -> StateVector:
    """The Bell state for ``label``, first nonzero amplitude real positive."""
    return StateVector(2, _BELL_AMPLITUDES[label])


@dataclass(frozen=True)
class BellCoefficients:
    """Amplitudes (c1..c4) of a two-qubit state in the Bell basis."""

    c1: complex
    c2: complex
    c3: complex
    c4: complex

    def __post_init__(self) -> None:
        if abs(sum(abs(c) ** 2 for c in self.as_tuple()) - 1.0) > ATOL:
            raise ValueError("non-normalized input")

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (self.c1, self.c2, self.c3, self.c4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=complex)

    def probabilities(self) -> np.ndarray:
        """Born probabilities (|c1|^2, ..., |c4|^2) of the four Bell outcomes."""
        return np.abs(self.as_array()) ** 2

    def coefficient(self, label: BellLabel) -> complex:
        return self.as_tuple()[label.index]


def to_bell(s: StateVector) -> BellCoefficients:
    """Expand a 2-qubit state in the Bell basis."""
    if s.n_qubits != 2:
        raise ValueError("expected a 2-qubit state")
    return BellCoefficients(*(inner(bell_state(label), s) for label in _LABEL_ORDER))


def from_bell(c: BellCoefficients) -> StateVector:
    """Reassemble the state c1|Phi+> + c2|Phi-> + c3|Psi+> + c4|Psi->."""
    amps = sum(
        coeff * _BELL_AMPLITUDES[label]
        for coeff, label in zip(c.as_tuple(), _LABEL_ORDER)
    )
    return StateVector(2, amps)


@dataclass(frozen=True, eq=False)
class SpinProduct:
    """A nonlocal spin product sigma_i (x) sigma_j with its eigenprojectors.

    ``projector_plus``/``projector_minus`` are the rank-2 projectors onto the
    +1 / -1 eigenspaces, computed as (I +- matrix)/2 and cached read-only.
    """

    i: str
    j: str
    matrix: np.ndarray
    projector_plus: np.ndarray
    projector_minus: np.ndarray

    @property
    def name(self) -> str:
        return f"S_{self.i}{self.j}"

    def projector(self, outcome: int) -> np.ndarray:
        if outcome == +1:
            return self.projector_plus
        if outcome == -1:
            return self.projector_minus
        raise ValueError("outcome must be +1 or -1")


_SPIN_PRODUCTS: dict[tuple[str, str], SpinProduct] = {}


def spin_product(i: str, j: str) -> SpinProduct:
    """The spin product S_ij for axes i, j in {'x', 'y', 'z'} (cached)."""
    key = (i, j)
    cached = _SPIN_PRODUCTS.get(key)
    if cached is not None:
        return cached
    if i not in PAULIS or j not in PAULIS:
        raise ValueError(f"unknown axis pair ({i!r}, {j!r})")
    matrix = np.kron(PAULIS[i], PAULIS[j])
    eye = np.eye(4, dtype=complex)
    plus = (eye + matrix) / 2
    minus = (eye - matrix) / 2
    for arr in (matrix, plus, minus):
        arr.setflags(write=False)
    sp = SpinProduct(i, j, matrix, plus, minus)
    _SPIN_PRODUCTS[key] = sp
    return sp


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """ab - ba for equal-dimension square matrices."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("dimension mismatch")
    return a @ b - b @ a


def classify(m: int, n: int) -> BellLabel:
    """Map the (S_zz, S_xx) outcome pair to the Bell state it identifies."""
    try:
        return _CLASSIFY[(m, n)]
    except KeyError:
        raise ValueError("outcomes must be +1 or -1") from None


def outcome_pair(label: BellLabel) -> tuple[int, int]:
    """Inverse of :func:`classify`."""
    return _OUTCOME_PAIR[label]
