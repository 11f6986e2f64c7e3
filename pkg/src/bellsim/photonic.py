"""Qubit-level model of the linear-optics Bell measurement proposal.

Each photon carries three logical qubits: its polarization (the system),
a path qubit entangled with the partner photon's path qubit in |Phi+> (the
shared meter), and a second, locally prepared path qubit. The optical
elements act as ideal logic: a polarizing beamsplitter routes by
polarization, i.e. a CNOT from the polarization onto a path qubit, and a
half-wave plate acts as a Hadamard on the polarization.

Per photon the optical block is PBS(Z), HWP, PBS(X):

    CNOT(pol -> path_z), H(pol), CNOT(pol -> path_x)

so the first path qubit records the sigma_z outcome and the second the
sigma_x outcome. Detecting the photon at one of four output ports reads
both path bits at once; the port products across the two photons give the
(m, n) outcome pair, exactly the nonlocal-S_zz + local-S_xx scheme realized
optically. Photon loss, mode mismatch and multi-pair emission are out of
scope: the model is the ideal logical circuit.

Register layout (qubit 0 = leftmost factor):

    0 polarization A   1 polarization B
    2 path_z A         3 path_z B      (shared |Phi+> meter)
    4 path_x A         5 path_x B      (local, start in |+> = |0>)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bellcore import BellLabel, bell_state, classify
from .measure import RngStream
from .qstate import CNOT, HADAMARD, StateVector, apply_unitary, bit_of, computational_state, tensor

N_QUBITS = 6


@dataclass(frozen=True)
class PhotonRegister:
    """Qubit indices carried by one photon."""

    photon: str
    polarization: int
    path_z: int
    path_x: int


REGISTER_A = PhotonRegister("A", polarization=0, path_z=2, path_x=4)
REGISTER_B = PhotonRegister("B", polarization=1, path_z=3, path_x=5)


@dataclass(frozen=True)
class DetectorIndex:
    """Which of a photon's four output ports fired.

    The port encodes the (z, x) readout bit pair: port = 2*bit(z) + bit(x),
    a bijection between ports and outcome pairs.
    """

    photon: str
    port: int

    def __post_init__(self) -> None:
        if self.photon not in ("A", "B"):
            raise ValueError("photon must be 'A' or 'B'")
        if self.port not in (0, 1, 2, 3):
            raise ValueError("port must be in 0..3")

    @property
    def z_outcome(self) -> int:
        return 1 - 2 * (self.port >> 1)

    @property
    def x_outcome(self) -> int:
        return 1 - 2 * (self.port & 1)


def _optical_block(state: StateVector, reg: PhotonRegister) -> StateVector:
    state = apply_unitary(state, CNOT, [reg.polarization, reg.path_z])
    state = apply_unitary(state, HADAMARD, [reg.polarization])
    return apply_unitary(state, CNOT, [reg.polarization, reg.path_x])


def build_photonic_run(s: StateVector, block_order=(REGISTER_A, REGISTER_B)) -> StateVector:
    """Assemble the 6-qubit register and push it through both optical blocks.

    ``s`` is the 2-qubit polarization state. The two per-photon blocks act
    on disjoint qubits, so ``block_order`` has no physical effect; it exists
    to let tests demonstrate exactly that.
    """
    if s.n_qubits != 2:
        raise ValueError("expected a 2-qubit polarization state")
    full = tensor(tensor(s, bell_state(BellLabel.PHI_PLUS)), computational_state("00"))
    for reg in block_order:
        full = _optical_block(full, reg)
    return full


def detect(final: StateVector, rng: RngStream) -> tuple[DetectorIndex, DetectorIndex]:
    """Sample the detection event: one output port per photon.

    All six readouts are commuting sigma_z measurements, so a single joint
    Born draw over the 64 basis outcomes is exact. The polarization readout
    is absorbed into the detection event (the photon is destroyed) and does
    not appear in the port index.
    """
    if final.n_qubits != N_QUBITS:
        raise ValueError("expected the 6-qubit photonic register")
    index = rng.choose(np.abs(final.amplitudes) ** 2)
    ports = []
    for reg in (REGISTER_A, REGISTER_B):
        z_bit = bit_of(index, reg.path_z, N_QUBITS)
        x_bit = bit_of(index, reg.path_x, N_QUBITS)
        ports.append(DetectorIndex(reg.photon, (z_bit << 1) | x_bit))
    return ports[0], ports[1]


def photonic_label(ports: tuple[DetectorIndex, DetectorIndex]) -> BellLabel:
    """Combine the two detection ports into the measured Bell label."""
    a, b = ports
    m = a.z_outcome * b.z_outcome
    n = a.x_outcome * b.x_outcome
    return classify(m, n)


def port_probabilities(final: StateVector, photon: str) -> np.ndarray:
    """Marginal probability of each of one photon's four output ports."""
    reg = REGISTER_A if photon == "A" else REGISTER_B
    probs = np.abs(final.amplitudes) ** 2
    out = np.zeros(4)
    for index, p in enumerate(probs):
        z_bit = bit_of(index, reg.path_z, N_QUBITS)
        x_bit = bit_of(index, reg.path_x, N_QUBITS)
        out[(z_bit << 1) | x_bit] += p
    return out


def label_distribution(s: StateVector) -> np.ndarray:
    """Analytic label probabilities (order Phi+, Phi-, Psi+, Psi-).

    Computed from the joint path-readout marginals of the assembled optical
    state, independently of the abstract protocol route.
    """
    final = build_photonic_run(s)
    probs = np.abs(final.amplitudes) ** 2
    out = np.zeros(4)
    for index, p in enumerate(probs):
        if p == 0.0:
            continue
        signs = [1 - 2 * bit_of(index, q, N_QUBITS) for q in range(2, 6)]
        m = signs[0] * signs[1]  # path_z A * path_z B
        n = signs[2] * signs[3]  # path_x A * path_x B
        out[classify(m, n).index] += p
    return out
