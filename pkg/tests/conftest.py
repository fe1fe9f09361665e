"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own kernels: gates are
lifted to full matrices with ``numpy.kron``, expectations go through
explicit density matrices.
"""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def rot_oracle(axis, theta):
    """exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P."""
    p = {"x": X, "y": Y, "z": Z}[axis]
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * p


def lift_1q(m, q, n):
    """Full 2^n matrix of a one-qubit gate on qubit q (qubit 0 = MSB)."""
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, m if k == q else I2)
    return out


def lift_cnot(c, t, n):
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    a = np.array([[1.0 + 0j]])
    b = np.array([[1.0 + 0j]])
    for k in range(n):
        a = np.kron(a, p0 if k == c else I2)
        b = np.kron(b, p1 if k == c else (X if k == t else I2))
    return a + b


def z_oracle(state, q):
    """Tr(rho Z_q) with rho = |psi><psi|."""
    n = int(np.log2(len(state)))
    rho = np.outer(state, state.conj())
    return float(np.trace(rho @ lift_1q(Z, q, n)).real)


def random_unit(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
