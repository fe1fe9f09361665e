"""Forward noising: the Gaussian DDPM schedule and Haar-unitary scrambling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .encoding import GROUP
from .qlinalg import herm_eig, is_unitary

DIM = 1 << GROUP


class DiffusionError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def T(self):
        return len(self.betas)


def make_schedule(T, beta_start=1e-4, beta_end=0.02):
    """Linearly spaced betas and their cumulative products of (1 - beta)."""
    if T < 1:
        raise DiffusionError("T must be >= 1")
    if not 0 < beta_start <= beta_end < 1:
        raise DiffusionError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    betas = np.linspace(beta_start, beta_end, T)
    return NoiseSchedule(betas, np.cumprod(1.0 - betas))


def classical_forward(x0, t, noise, sched):
    """Sample x_t given x_0 in closed form; ``t`` counts from 1."""
    if not 1 <= t <= sched.T:
        raise DiffusionError(f"t={t} outside 1..{sched.T}")
    x0 = np.asarray(x0, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != x0.shape:
        raise DiffusionError(f"noise shape {noise.shape} != image shape {x0.shape}")
    ab = sched.alpha_bars[t - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise


@dataclass(frozen=True)
class ChannelScrambler:
    """One Haar unitary per channel, drawn from a seeded stream."""
    unitaries: np.ndarray  # (4, 16, 16)
    seed: int | None = None

    @classmethod
    def sample(cls, rng, n_channels=4, seed=None):
        return cls(np.stack([qsim.haar_unitary(DIM, rng) for _ in range(n_channels)]), seed)

    def scramble(self, encoded):
        """encoded: (..., 4, G, 16) channel group states."""
        return np.einsum("cij,...cgj->...cgi", self.unitaries, encoded)

    def fractional(self, encoded, s):
        powers = np.stack([unitary_power(u, s) for u in self.unitaries])
        return np.einsum("cij,...cgj->...cgi", powers, encoded)


def _check_unitary(u):
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (DIM, DIM) or not is_unitary(u, 1e-10):
        raise DiffusionError("scrambling matrix must be a 16x16 unitary (tol 1e-10)")
    return u


def scramble_channel(encoded, u):
    """Apply ``u`` to every 4-qubit group state of a (G, 16) channel."""
    u = _check_unitary(u)
    return np.asarray(encoded) @ u.T


# golden-ratio mixing keeps the eigenvalues of the Hermitian combination apart
# for unitaries whose eigenphases come in +/- pairs
_MIX = 0.6180339887498949


def unitary_eig(u):
    """Eigenphases in (-pi, pi] and eigenvectors of a unitary.

    The eigenvectors come from the Hermitian matrix ``(u + u^H)/2 + c (u -
    u^H)/(2i)``, which shares them with ``u`` and has eigenvalues
    ``cos(phi) + c sin(phi)``; the phases are read back as Rayleigh quotients.
    """
    u = np.asarray(u, dtype=np.complex128)
    herm = 0.5 * (u + u.conj().T) + _MIX * (u - u.conj().T) / 2j
    herm = 0.5 * (herm + herm.conj().T)
    _, v = herm_eig(herm)
    phases = np.angle(np.einsum("ik,ij,jk->k", v.conj(), u, v))
    recon = (v * np.exp(1j * phases)[None, :]) @ v.conj().T
    if np.max(np.abs(recon - u)) > 1e-9:
        raise DiffusionError("unitary eigendecomposition failed (nearly degenerate generator)")
    return phases, v


def generator(u):
    """Hermitian H with u = exp(-iH) on the principal branch, i.e. H = i log(u)."""
    phases, v = unitary_eig(u)
    return (v * (-phases)[None, :]) @ v.conj().T


def unitary_power(u, s):
    phases, v = unitary_eig(u)
    return (v * np.exp(1j * s * phases)[None, :]) @ v.conj().T


def fractional_scramble(encoded, u, s):
    if not 0.0 <= s <= 1.0:
        raise DiffusionError(f"s must lie in [0, 1], got {s}")
    u = _check_unitary(u)
    return np.asarray(encoded) @ unitary_power(u, s).T


def noise_prior_channel(rng, n_groups=16):
    """A channel of independent Haar-random 4-qubit states, U|0000>."""
    return qsim.haar_first_columns(DIM, n_groups, rng)
