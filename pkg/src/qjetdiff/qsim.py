"""Statevector simulator.

Conventions:

* a state on ``n`` qubits is a complex128 array of length ``2**n``;
* qubit 0 is the most significant bit of the basis index;
* ``Rx(t) = exp(-i t X / 2)`` and likewise for ``Ry`` and ``Rz``.

Random draws go through :func:`rng_stream`, a ``numpy`` Generator on the
PCG64 bit generator seeded from a single 64-bit integer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .qlinalg import is_unitary, qr_decompose


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Rx:
    angle: float
    target: int


@dataclass(frozen=True)
class Ry:
    angle: float
    target: int


@dataclass(frozen=True)
class Rz:
    angle: float
    target: int


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int


@dataclass(frozen=True, eq=False)
class FullUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if not is_unitary(m, 1e-10):
            raise SimulationError("FullUnitary matrix is not unitary within 1e-10")
        object.__setattr__(self, "matrix", m)


Gate = Rx | Ry | Rz | CNOT | FullUnitary

_ROTATION_KIND = {Rx: kernels.RX, Ry: kernels.RY, Rz: kernels.RZ}


def inverse(g):
    if isinstance(g, (Rx, Ry, Rz)):
        return type(g)(-g.angle, g.target)
    if isinstance(g, CNOT):
        return g
    return FullUnitary(g.matrix.conj().T)


def _gate_qubits(g):
    if isinstance(g, CNOT):
        return (g.control, g.target)
    if isinstance(g, FullUnitary):
        return ()
    return (g.target,)


def validate_gate(g, num_qubits):
    qubits = _gate_qubits(g)
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise SimulationError(f"qubit index {q} out of range for {num_qubits} qubits")
    if isinstance(g, CNOT) and g.control == g.target:
        raise SimulationError("CNOT control and target must differ")
    if isinstance(g, FullUnitary) and g.matrix.shape != (1 << num_qubits, 1 << num_qubits):
        raise SimulationError(f"FullUnitary of shape {g.matrix.shape} does not act on {num_qubits} qubits")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            validate_gate(g, self.num_qubits)

    def inverse(self):
        return Circuit(self.num_qubits, tuple(inverse(g) for g in reversed(self.gates)))

    def __len__(self):
        return len(self.gates)


def gate_matrix(g):
    """2x2 matrix of a rotation, 4x4 of a CNOT (control as the high bit)."""
    if isinstance(g, (Rx, Ry, Rz)):
        return kernels.rotation_matrix(_ROTATION_KIND[type(g)], g.angle)
    if isinstance(g, CNOT):
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
    if isinstance(g, FullUnitary):
        return g.matrix
    raise TypeError(f"not a gate: {g!r}")


def zero_state(num_qubits):
    psi = np.zeros(1 << num_qubits, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def basis_state(bits):
    """|b0 b1 ...> from a string like ``"10"`` or a sequence of 0/1."""
    bits = [int(b) for b in bits]
    index = 0
    for b in bits:
        index = (index << 1) | b
    psi = np.zeros(1 << len(bits), dtype=np.complex128)
    psi[index] = 1.0
    return psi


def num_qubits_of(state):
    n = int(np.asarray(state).shape[-1]).bit_length() - 1
    if n < 0 or (1 << n) != np.asarray(state).shape[-1]:
        raise SimulationError(f"state length {np.asarray(state).shape[-1]} is not a power of two")
    return n


def random_state(num_qubits, rng):
    v = rng.standard_normal(1 << num_qubits) + 1j * rng.standard_normal(1 << num_qubits)
    return v / np.linalg.norm(v)


def apply_gate_batch(states, g, num_qubits):
    """Apply ``g`` to every row of a (batch, 2**n) state array."""
    validate_gate(g, num_qubits)
    if isinstance(g, FullUnitary):
        return states @ g.matrix.T
    if isinstance(g, CNOT):
        return kernels.apply_cnot(states, g.control, g.target, num_qubits)
    return kernels.apply_1q(states, gate_matrix(g), g.target, num_qubits)


def apply_gate(state, g):
    state = np.asarray(state, dtype=np.complex128)
    n = num_qubits_of(state)
    return apply_gate_batch(state[None, :], g, n)[0]


def apply_circuit(state, circuit):
    state = np.asarray(state, dtype=np.complex128)
    if num_qubits_of(state) != circuit.num_qubits:
        raise SimulationError(
            f"circuit on {circuit.num_qubits} qubits applied to a {num_qubits_of(state)}-qubit state")
    out = state[None, :]
    for g in circuit.gates:
        out = apply_gate_batch(out, g, circuit.num_qubits)
    return out[0]


def expectation_z_all(states):
    """<Z_q> for every qubit; works on a single state or a batch of states."""
    states = np.asarray(states)
    n = num_qubits_of(states)
    return (np.abs(states) ** 2) @ kernels.z_signs(n)


def expectation_z(state, qubit):
    n = num_qubits_of(state)
    if not 0 <= qubit < n:
        raise SimulationError(f"qubit index {qubit} out of range for {n} qubits")
    return float(np.clip(expectation_z_all(state)[qubit], -1.0, 1.0))


def rng_stream(seed):
    return np.random.Generator(np.random.PCG64(seed))


def complex_gaussian(rng, shape):
    """i.i.d. standard complex normals, E|z|^2 = 1."""
    g = rng.standard_normal(tuple(shape) + (2,))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)


def haar_unitary(dim, rng):
    """Haar-distributed ``dim x dim`` unitary (QR of a Ginibre matrix with
    the diagonal phases of R folded back into Q)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    q, r = qr_decompose(complex_gaussian(rng, (dim, dim)))
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


def haar_first_columns(dim, count, rng):
    """First columns of ``count`` independent Haar unitaries.

    Consumes the generator exactly like ``count`` calls to
    :func:`haar_unitary`. After the phase correction the first column of the
    unitary equals the normalised first column of the Gaussian matrix, so
    no QR is needed.
    """
    g = complex_gaussian(rng, (count, dim, dim))
    col = g[:, :, 0]
    return col / np.linalg.norm(col, axis=1, keepdims=True)
