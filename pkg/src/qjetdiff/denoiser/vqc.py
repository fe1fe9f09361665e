"""Strongly entangling 4-qubit variational circuit acting on pixel quadruples.

Angles have shape (L, 4, 3). Layer ``l`` applies ``Rz Ry Rz`` with angles
``theta[l, q, 0..2]`` to every qubit ``q`` and then the CNOT ring
``q -> (q + 1) % 4`` for ``q = 0..3``.
"""
from functools import lru_cache

import numpy as np

from .. import kernels
from ..encoding import GROUP
from ..qsim import CNOT, Circuit, Ry, Rz

NQ = GROUP
ROT_PER_QUBIT = 3
# |<Z>| is kept this far from 1 before differentiating arccos
Z_CLAMP = 1.0 - 1e-7


def check_angles(angles):
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 3 or angles.shape[1:] != (NQ, ROT_PER_QUBIT) or angles.shape[0] < 1:
        raise ValueError(f"VQC angles must have shape (L, 4, 3) with L >= 1, got {angles.shape}")
    if not np.all(np.isfinite(angles)):
        raise ValueError("VQC angles must be finite")
    return angles


def init_angles(layers, rng):
    return rng.uniform(0.0, 2.0 * np.pi, size=(layers, NQ, ROT_PER_QUBIT))


@lru_cache(maxsize=None)
def compiled_ops(layers):
    """Op-code arrays (kinds, qa, qb, pidx) for the kernels module."""
    kinds, qa, qb, pidx = [], [], [], []
    for layer in range(layers):
        for q in range(NQ):
            for j, kind in enumerate((kernels.RZ, kernels.RY, kernels.RZ)):
                kinds.append(kind)
                qa.append(q)
                qb.append(-1)
                pidx.append((layer * NQ + q) * ROT_PER_QUBIT + j)
        for q in range(NQ):
            kinds.append(kernels.CNOT)
            qa.append(q)
            qb.append((q + 1) % NQ)
            pidx.append(-1)
    ops = tuple(np.array(a, dtype=np.int64) for a in (kinds, qa, qb, pidx))
    for a in ops:
        a.setflags(write=False)
    return ops


def strongly_entangling_circuit(angles):
    angles = check_angles(angles)
    gates = []
    for layer in angles:
        for q in range(NQ):
            gates += [Rz(layer[q, 0], q), Ry(layer[q, 1], q), Rz(layer[q, 2], q)]
        gates += [CNOT(q, (q + 1) % NQ) for q in range(NQ)]
    return Circuit(NQ, gates)


def _flat(in_pixels):
    x = np.asarray(in_pixels, dtype=np.float64)
    if x.shape[-1] != NQ:
        raise ValueError(f"expected trailing axis of 4 pixels, got shape {x.shape}")
    return x.reshape(-1, NQ)


def vqc_expectations(in_pixels, angles):
    angles = check_angles(angles)
    x = np.clip(_flat(in_pixels), 0.0, 1.0)
    z = kernels.vqc_expval(x, *compiled_ops(angles.shape[0]), angles.ravel())
    return z.reshape(np.shape(in_pixels))


def vqc_forward(in_pixels, angles):
    """Encode, run the circuit, decode. Output has the input's shape."""
    z = vqc_expectations(in_pixels, angles)
    return np.arccos(np.clip(z, -1.0, 1.0)) / np.pi


def vqc_param_shift_grad(in_pixels, angles, upstream, input_grad=True):
    """Gradients of ``sum(upstream * vqc_forward(in_pixels, angles))``.

    Returns ``(out, d_angles, d_pixels)``. Expectation derivatives come from
    the two-term parameter-shift rule; the decode step contributes
    ``-1 / (pi sqrt(1 - z^2))`` with ``|z|`` clamped to ``1 - 1e-7``.
    Inputs outside [0, 1] are clamped and receive zero gradient.
    """
    angles = check_angles(angles)
    shape = np.shape(in_pixels)
    raw = _flat(in_pixels)
    x = np.clip(raw, 0.0, 1.0)
    up = np.asarray(upstream, dtype=np.float64).reshape(-1, NQ)
    ops = compiled_ops(angles.shape[0])
    z = kernels.vqc_expval(x, *ops, angles.ravel())
    zc = np.clip(z, -Z_CLAMP, Z_CLAMP)
    weights = up * (-1.0 / (np.pi * np.sqrt(1.0 - zc * zc)))
    _, dtheta, dx = kernels.vqc_grad(x, *ops, angles.ravel(), weights, input_grad)
    dx = np.where((raw >= 0.0) & (raw <= 1.0), dx, 0.0)
    out = np.arccos(np.clip(z, -1.0, 1.0)) / np.pi
    return out.reshape(shape), dtheta.reshape(angles.shape), dx.reshape(shape)
