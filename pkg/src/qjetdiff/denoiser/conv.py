"""Stacks of 3x3 same-padding convolutions with sigmoid activations."""
import numpy as np

from .. import kernels


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_conv(channels, rng, kernel=3):
    """[(w, b), ...] for consecutive channel counts, e.g. ``[4, 4, 4]``."""
    layers = []
    for cin, cout in zip(channels[:-1], channels[1:]):
        std = 1.0 / np.sqrt(cin * kernel * kernel)
        layers.append((rng.normal(0.0, std, size=(cout, cin, kernel, kernel)), np.zeros(cout)))
    return layers


def check_layers(layers, in_channels):
    c = in_channels
    for i, (w, b) in enumerate(layers):
        if w.ndim != 4 or w.shape[2] != w.shape[3] or w.shape[2] % 2 == 0:
            raise ValueError(f"layer {i}: kernel must be (out, in, k, k) with odd k, got {w.shape}")
        if w.shape[1] != c:
            raise ValueError(f"layer {i}: expects {w.shape[1]} input channels, got {c}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"layer {i}: bias shape {b.shape} does not match {w.shape[0]} outputs")
        c = w.shape[0]
    return c


def conv_forward(x, layers, linear=False):
    """Returns ``(out, cache)``; ``linear=True`` drops the sigmoids."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"expected (batch, channels, h, w) input, got shape {x.shape}")
    check_layers(layers, x.shape[1])
    inputs, outs = [], []
    h = x
    for w, b in layers:
        inputs.append(h)
        h = kernels.conv2d_forward(h, w, b)
        if not linear:
            h = sigmoid(h)
        outs.append(h)
    return h, (inputs, outs, linear)


def conv_backward(cache, layers, gout):
    """Returns ``(d_input, [(dw, db), ...])``."""
    inputs, outs, linear = cache
    g = np.asarray(gout, dtype=np.float64)
    grads = [None] * len(layers)
    for i in reversed(range(len(layers))):
        if not linear:
            y = outs[i]
            g = g * y * (1.0 - y)
        g, dw, db = kernels.conv2d_backward(inputs[i], layers[i][0], g)
        grads[i] = (dw, db)
    return g, grads
