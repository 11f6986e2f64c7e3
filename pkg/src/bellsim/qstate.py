"""Dense complex state-vector core: registers, gates, projectors, overlaps.

Qubit ordering convention used across the package: qubit 0 is the leftmost
tensor factor, i.e. the most significant bit of the amplitude index. At equal
register depth Alice's wire precedes Bob's. The computational labels follow
the spin shorthand |+> = |0> (sigma_z eigenvalue +1) and |-> = |1>
(eigenvalue -1).

All values are immutable after construction and every operation is a pure
function, so states are safe to share between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Tolerance for norm / unitarity / hermiticity checks. Circuits here are a
# handful of gates on <= 12 qubits; double precision leaves huge headroom.
ATOL = 1e-12

_SQRT2_INV = 1.0 / np.sqrt(2.0)

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=complex)
# Control is the first wire, target the second.
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

# Single-qubit basis change u with u^dag sigma_z u = sigma_axis. Measuring
# sigma_axis is: apply u, read out sigma_z, apply u^dag.
BASIS_CHANGE = {
    "z": ID2,
    "x": HADAMARD,
    "y": HADAMARD @ PHASE_S.conj().T,
}

for _const in (ID2, PAULI_X, PAULI_Y, PAULI_Z, HADAMARD, PHASE_S, CNOT, *BASIS_CHANGE.values()):
    _const.setflags(write=False)


def pauli(axis: str) -> np.ndarray:
    """Return the Pauli matrix for axis 'x', 'y' or 'z'."""
    try:
        return PAULIS[axis]
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}, expected 'x', 'y' or 'z'") from None


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol)


def is_hermitian(a: np.ndarray, atol: float = ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.allclose(a, a.conj().T, atol=atol)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over ``n_qubits`` qubits.

    ``amplitudes`` has length ``2**n_qubits`` and unit norm (within 1e-12);
    constructors other than :func:`make_state` reject non-normalized input.
    ``renormalized`` records whether :func:`make_state` had to rescale.
    """

    n_qubits: int
    amplitudes: np.ndarray
    renormalized: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size != 1 << self.n_qubits:
            raise ValueError("bad dimension")
        if abs(np.vdot(amps, amps).real - 1.0) > ATOL:
            raise ValueError("state not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probability(self, basis_index: int) -> float:
        return float(abs(self.amplitudes[basis_index]) ** 2)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


def _wrap(n_qubits: int, amplitudes: np.ndarray) -> StateVector:
    """Trusted constructor for kernel outputs that are normalized by design.

    Skips the validation pass; only for internal use on freshly allocated
    arrays coming out of the measurement/gate kernels.
    """
    amplitudes.setflags(write=False)
    sv = object.__new__(StateVector)
    object.__setattr__(sv, "n_qubits", n_qubits)
    object.__setattr__(sv, "amplitudes", amplitudes)
    object.__setattr__(sv, "renormalized", False)
    return sv


def make_state(amplitudes) -> StateVector:
    """Build a state from raw amplitudes, normalizing if necessary.

    The one constructor that accepts non-normalized input (convenient at the
    CLI boundary); the result records whether renormalization occurred.
    Raises ``ValueError("null state")`` for a zero vector and
    ``ValueError("bad dimension")`` when the length is not a power of two.
    """
    amps = np.asarray(amplitudes, dtype=complex).ravel().copy()
    n = amps.size
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError("bad dimension")
    norm = float(np.linalg.norm(amps))
    if norm < ATOL:
        raise ValueError("null state")
    renormalized = abs(norm - 1.0) > ATOL
    if renormalized:
        amps = amps / norm
    return StateVector(n.bit_length() - 1, amps, renormalized=renormalized)


def computational_state(bits) -> StateVector:
    """Basis state for a bit pattern, e.g. '01' or (0, 1) -> |+->."""
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    index = 0
    for b in bits:
        index = (index << 1) | b
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[index] = 1.0
    return StateVector(len(bits), amps)


def bit_of(basis_index: int, qubit: int, n_qubits: int) -> int:
    """Extract the bit of ``qubit`` from an amplitude index (qubit 0 = MSB)."""
    return (basis_index >> (n_qubits - 1 - qubit)) & 1


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product; ``a``'s qubits precede ``b``'s in the ordering."""
    amps = np.multiply.outer(a.amplitudes, b.amplitudes).ravel()
    return StateVector(a.n_qubits + b.n_qubits, amps)


_AXIS_ORDER_CACHE: dict[tuple[int, tuple[int, ...]], tuple[tuple[int, ...], tuple[int, ...]]] = {}


def _axis_orders(n: int, targets: tuple[int, ...]):
    """Permutations moving ``targets`` to the front and back again (cached)."""
    key = (n, targets)
    hit = _AXIS_ORDER_CACHE.get(key)
    if hit is None:
        perm = list(targets) + [i for i in range(n) if i not in targets]
        inv = [0] * n
        for position, axis in enumerate(perm):
            inv[axis] = position
        hit = (tuple(perm), tuple(inv))
        _AXIS_ORDER_CACHE[key] = hit
    return hit


def _apply_matrix(amps: np.ndarray, n: int, u: np.ndarray, targets) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the given target qubits of a flat array.

    No unitarity check: also used for projectors. Returns a fresh array.
    """
    targets = tuple(targets)
    k = len(targets)
    if k == n and targets == tuple(range(n)):
        return u @ amps
    perm, inv = _axis_orders(n, targets)
    psi = amps.reshape((2,) * n).transpose(perm)
    psi = u @ psi.reshape(1 << k, -1)
    return psi.reshape((2,) * n).transpose(inv).reshape(-1)


def apply_unitary(s: StateVector, u: np.ndarray, targets) -> StateVector:
    """Apply a unitary to the listed qubits (order of ``targets`` = wire order).

    Raises ``ValueError`` on a dimension mismatch, a repeated target index or
    a non-unitary matrix.
    """
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ValueError("repeated target index")
    if any(t < 0 or t >= s.n_qubits for t in targets):
        raise ValueError("target index out of range")
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << len(targets), 1 << len(targets)):
        raise ValueError("dimension mismatch")
    if not is_unitary(u):
        raise ValueError("non-unitary operator")
    return StateVector(s.n_qubits, _apply_matrix(s.amplitudes, s.n_qubits, u, targets))


def inner(a: StateVector, b: StateVector) -> complex:
    """Inner product <a|b>."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clamped to [0, 1]. Symmetric in its arguments."""
    overlap = inner(a, b)
    return min(1.0, max(0.0, abs(overlap) ** 2))


def phase_canonical(s: StateVector) -> StateVector:
    """Fix the global phase so the first nonzero amplitude is real positive."""
    amps = s.amplitudes
    idx = np.flatnonzero(np.abs(amps) > 1e-9)
    if idx.size == 0:  # cannot happen for a normalized state
        return s
    pivot = amps[idx[0]]
    return StateVector(s.n_qubits, amps * (abs(pivot) / pivot))


def states_equal(a: StateVector, b: StateVector, atol: float = ATOL, up_to_phase: bool = True) -> bool:
    """Amplitude-wise equality, by default after global-phase canonicalization."""
    if a.n_qubits != b.n_qubits:
        return False
    if up_to_phase:
        a, b = phase_canonical(a), phase_canonical(b)
    return bool(np.allclose(a.amplitudes, b.amplitudes, atol=atol))


def drop_qubit(s: StateVector, qubit: int, bit: int) -> StateVector:
    """Remove a qubit that has collapsed to ``bit``, shrinking the register.

    The discarded branch must carry negligible weight (< 1e-12), i.e. the
    qubit was measured; otherwise this raises.
    """
    if qubit < 0 or qubit >= s.n_qubits:
        raise ValueError("target index out of range")
    psi = np.moveaxis(s.amplitudes.reshape((2,) * s.n_qubits), qubit, 0)
    kept = psi[bit].reshape(-1)
    residual = float(np.vdot(psi[1 - bit], psi[1 - bit]).real)
    if residual > ATOL:
        raise ValueError("qubit not collapsed")
    norm = float(np.linalg.norm(kept))
    return StateVector(s.n_qubits - 1, kept / norm)


def haar_random_state(n_qubits: int, gen: np.random.Generator) -> StateVector:
    """Haar-uniform pure state via normalized complex Gaussian amplitudes."""
    dim = 1 << n_qubits
    amps = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return StateVector(n_qubits, amps / np.linalg.norm(amps))
