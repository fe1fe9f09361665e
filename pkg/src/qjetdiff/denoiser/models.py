"""The three denoisers: classical conv stack, hybrid conv-VQC-conv, pure VQC.

All models map a (batch, 4, h, w) tensor of channel pixels in [0, 1] to a
tensor of the same shape. Parameters are exposed as a flat list of arrays
(``model.params()``) that optimisers update in place; gradients come back as
a list of the same shapes in the same order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoding import from_groups, to_groups
from .conv import conv_backward, conv_forward, init_conv
from .vqc import check_angles, init_angles, vqc_forward, vqc_param_shift_grad

N_CHANNELS = 4
CLASSICAL_HIDDEN = 4


def _check_input(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] != N_CHANNELS:
        raise ValueError(f"expected (batch, 4, h, w) input, got shape {x.shape}")
    if (x.shape[2] * x.shape[3]) % 4:
        raise ValueError(f"channel of {x.shape[2]}x{x.shape[3]} pixels cannot be split into groups of four")
    return x


def _vqc_apply(angles, x):
    groups = to_groups(x)  # (B, 4, G, 4)
    if angles.ndim == 3:
        out = vqc_forward(groups, angles)
    else:
        out = np.stack([vqc_forward(groups[:, c], angles[c]) for c in range(N_CHANNELS)], axis=1)
    return from_groups(out, x.shape[2:])


def _vqc_backward(angles, x, upstream, input_grad):
    groups = to_groups(x)
    up = to_groups(upstream)
    if angles.ndim == 3:
        _, dtheta, dx = vqc_param_shift_grad(groups, angles, up, input_grad)
    else:
        parts = [vqc_param_shift_grad(groups[:, c], angles[c], up[:, c], input_grad) for c in range(N_CHANNELS)]
        dtheta = np.stack([p[1] for p in parts])
        dx = np.stack([p[2] for p in parts], axis=1)
    return dtheta, from_groups(dx, x.shape[2:])


def _check_vqc(angles):
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim == 4:
        if angles.shape[0] != N_CHANNELS:
            raise ValueError(f"per-channel VQC angles need a leading axis of 4, got {angles.shape}")
        for a in angles:
            check_angles(a)
        return angles
    return check_angles(angles)


@dataclass
class ClassicalModel:
    layers: list

    kind = "classical"

    @classmethod
    def init(cls, rng, hidden=CLASSICAL_HIDDEN):
        return cls(init_conv([N_CHANNELS, hidden, hidden, N_CHANNELS], rng))

    def params(self):
        return [a for layer in self.layers for a in layer]

    def param_names(self):
        return [f"conv{i}.{p}" for i in range(len(self.layers)) for p in ("weight", "bias")]


@dataclass
class HybridModel:
    front: list
    vqc: np.ndarray
    back: list

    kind = "hybrid"

    def __post_init__(self):
        self.vqc = _check_vqc(self.vqc)

    @classmethod
    def init(cls, rng, layers=2):
        front = init_conv([N_CHANNELS, N_CHANNELS], rng)
        vqc = init_angles(layers, rng)
        back = init_conv([N_CHANNELS, N_CHANNELS], rng)
        return cls(front, vqc, back)

    def params(self):
        return [a for layer in self.front for a in layer] + [self.vqc] + [a for layer in self.back for a in layer]

    def param_names(self):
        names = [f"front{i}.{p}" for i in range(len(self.front)) for p in ("weight", "bias")]
        names.append("vqc.angles")
        names += [f"back{i}.{p}" for i in range(len(self.back)) for p in ("weight", "bias")]
        return names


@dataclass
class QuantumModel:
    vqc: np.ndarray

    kind = "quantum"

    def __post_init__(self):
        self.vqc = _check_vqc(self.vqc)

    @classmethod
    def init(cls, rng, layers=2, per_channel=False):
        if per_channel:
            return cls(np.stack([init_angles(layers, rng) for _ in range(N_CHANNELS)]))
        return cls(init_angles(layers, rng))

    def params(self):
        return [self.vqc]

    def param_names(self):
        return ["vqc.angles"]


MODEL_KINDS = {"classical": ClassicalModel, "hybrid": HybridModel, "quantum": QuantumModel}


def init_model(kind, rng, layers=2):
    if kind == "classical":
        return ClassicalModel.init(rng)
    if kind == "hybrid":
        return HybridModel.init(rng, layers)
    if kind == "quantum":
        return QuantumModel.init(rng, layers)
    raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(MODEL_KINDS)}")


def param_count(model):
    return int(sum(p.size for p in model.params()))


def hybrid_stages(model, x):
    """The three hybrid stages evaluated separately: (front, quantum, back)."""
    front, _ = conv_forward(x, model.front)
    mid = _vqc_apply(model.vqc, front)
    back, _ = conv_forward(mid, model.back)
    return front, mid, back


def model_forward(model, x):
    x = _check_input(x)
    if isinstance(model, ClassicalModel):
        return conv_forward(x, model.layers)[0]
    if isinstance(model, QuantumModel):
        return _vqc_apply(model.vqc, x)
    if isinstance(model, HybridModel):
        return hybrid_stages(model, x)[2]
    raise TypeError(f"not a denoiser model: {type(model).__name__}")


def model_backward(model, x, upstream):
    """Gradient of ``sum(upstream * model_forward(model, x))`` w.r.t. every
    parameter, ordered like ``model.params()``."""
    x = _check_input(x)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != x.shape:
        raise ValueError(f"upstream shape {upstream.shape} != input shape {x.shape}")
    if isinstance(model, ClassicalModel):
        _, cache = conv_forward(x, model.layers)
        _, grads = conv_backward(cache, model.layers, upstream)
        return [g for pair in grads for g in pair]
    if isinstance(model, QuantumModel):
        dtheta, _ = _vqc_backward(model.vqc, x, upstream, input_grad=False)
        return [dtheta]
    if isinstance(model, HybridModel):
        front, front_cache = conv_forward(x, model.front)
        mid = _vqc_apply(model.vqc, front)
        _, back_cache = conv_forward(mid, model.back)
        g_mid, back_grads = conv_backward(back_cache, model.back, upstream)
        dtheta, g_front = _vqc_backward(model.vqc, front, g_mid, input_grad=True)
        _, front_grads = conv_backward(front_cache, model.front, g_front)
        return [g for pair in front_grads for g in pair] + [dtheta] + [g for pair in back_grads for g in pair]
    raise TypeError(f"not a denoiser model: {type(model).__name__}")
