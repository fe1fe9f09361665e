"""Pixel <-> qubit encoding.

An image of shape (H, W) is split into four (H/2, W/2) channels by 2x2
space-to-depth: channel ``2*dy + dx`` holds pixel ``(2i+dy, 2j+dx)`` at
``(i, j)``. Each channel is cut into consecutive raster-order quadruples and
every quadruple is angle encoded onto four qubits, ``Rx(pi * x_q)`` on qubit
``q``. Decoding inverts the angle map through ``arccos(<Z_q>) / pi``.

Functions accept extra leading batch axes wherever that is natural.
"""
import numpy as np

from . import kernels

GROUP = 4


class EncodingError(ValueError):
    pass


def normalize(img, max_value):
    if not max_value > 0:
        raise EncodingError(f"max_value must be positive, got {max_value}")
    return np.clip(np.asarray(img, dtype=np.float64) / max_value, 0.0, 1.0)


def space_to_depth(img):
    img = np.asarray(img)
    h, w = img.shape[-2:]
    if h % 2 or w % 2:
        raise EncodingError(f"image dimensions must be even, got {h}x{w}")
    lead = img.shape[:-2]
    blocks = img.reshape(lead + (h // 2, 2, w // 2, 2))
    nd = len(lead)
    # (..., i, dy, j, dx) -> (..., dy, dx, i, j)
    axes = tuple(range(nd)) + (nd + 1, nd + 3, nd, nd + 2)
    return blocks.transpose(axes).reshape(lead + (4, h // 2, w // 2))


def depth_to_space(channels):
    channels = np.asarray(channels)
    if channels.ndim < 3 or channels.shape[-3] != 4:
        raise EncodingError(f"expected (..., 4, h, w) channels, got shape {channels.shape}")
    h, w = channels.shape[-2:]
    lead = channels.shape[:-3]
    nd = len(lead)
    blocks = channels.reshape(lead + (2, 2, h, w))
    axes = tuple(range(nd)) + (nd + 2, nd, nd + 3, nd + 1)
    return blocks.transpose(axes).reshape(lead + (2 * h, 2 * w))


def _check_unit_interval(x):
    if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
        raise EncodingError("pixel values must lie in [0, 1]")


def encode_groups(pixels):
    """Encode (..., 4) pixel quadruples into (..., 16) statevectors."""
    x = np.asarray(pixels, dtype=np.float64)
    _check_unit_interval(x)
    return kernels.product_states_rx(np.pi * np.clip(x, 0.0, 1.0))


def decode_groups(states):
    """arccos(<Z_q>) / pi for every qubit of (..., 16) states.

    Evaluated as ``2/pi * atan2(sqrt(P1), sqrt(P0))`` with ``P0``, ``P1`` the
    qubit's outcome probabilities: the same function for normalised states,
    but without the cancellation arccos suffers next to <Z> = +-1.
    """
    probs = np.abs(np.asarray(states)) ** 2
    ones = 0.5 * (1.0 - kernels.z_signs(GROUP))
    p1 = probs @ ones
    p0 = probs @ (1.0 - ones)
    return (2.0 / np.pi) * np.arctan2(np.sqrt(p1), np.sqrt(p0))


def encode_group(pixels):
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape != (GROUP,):
        raise EncodingError(f"expected 4 pixels, got shape {pixels.shape}")
    return encode_groups(pixels)


def decode_group(state):
    return decode_groups(np.asarray(state))


def to_groups(channel):
    """(..., h, w) -> (..., h*w/4, 4) raster-order quadruples."""
    channel = np.asarray(channel)
    h, w = channel.shape[-2:]
    if (h * w) % GROUP:
        raise EncodingError(f"channel of {h}x{w} pixels is not divisible into groups of four")
    return channel.reshape(channel.shape[:-2] + ((h * w) // GROUP, GROUP))


def from_groups(groups, shape):
    groups = np.asarray(groups)
    return groups.reshape(groups.shape[:-2] + tuple(shape))


def encode_channel(channel):
    return encode_groups(to_groups(channel))


def decode_channel(encoded, shape=None):
    """Decode (..., G, 16) group states back to a (h, w) channel.

    ``shape`` defaults to the square channel holding ``4 * G`` pixels.
    """
    encoded = np.asarray(encoded)
    if shape is None:
        side = int(round(np.sqrt(encoded.shape[-2] * GROUP)))
        if side * side != encoded.shape[-2] * GROUP:
            raise EncodingError("channel shape is ambiguous, pass shape=")
        shape = (side, side)
    return from_groups(decode_groups(encoded), shape)
