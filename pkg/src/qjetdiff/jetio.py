"""Jet image datasets: the QJET binary container, cropping, PGM dumps and a
synthetic sparse-jet generator.

QJET layout (little-endian)::

    b"QJET" | u16 version | u32 count | u16 height | u16 width
    count * height * width float32 pixels (sample-major, row-major)
    u32 CRC32 of the pixel payload
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

MAGIC = b"QJET"
VERSION = 1
_HEADER = struct.Struct("<4sHIHH")


class DatasetError(ValueError):
    """Base class for unreadable or invalid dataset files."""


class BadMagicError(DatasetError):
    pass


class VersionError(DatasetError):
    pass


class TruncatedError(DatasetError):
    pass


class ChecksumError(DatasetError):
    pass


class InvalidPixelError(DatasetError):
    pass


def encode_dataset(images):
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3:
        raise DatasetError(f"expected (count, height, width) images, got shape {images.shape}")
    if not np.all(np.isfinite(images)) or np.any(images < 0):
        raise InvalidPixelError("pixels must be finite and non-negative")
    count, h, w = images.shape
    payload = np.ascontiguousarray(images, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, count, h, w) + payload + struct.pack("<I", zlib.crc32(payload))


def decode_dataset(blob):
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagicError("not a QJET dataset (bad magic)")
    if len(blob) < _HEADER.size:
        raise TruncatedError("dataset header truncated")
    _, version, count, h, w = _HEADER.unpack_from(blob)
    if version != VERSION:
        raise VersionError(f"unsupported dataset version {version}")
    n = count * h * w
    end = _HEADER.size + 4 * n
    if len(blob) < end + 4:
        raise TruncatedError(f"dataset truncated: expected {end + 4} bytes, got {len(blob)}")
    if len(blob) > end + 4:
        raise DatasetError("trailing bytes after dataset checksum")
    payload = blob[_HEADER.size:end]
    (crc,) = struct.unpack_from("<I", blob, end)
    if zlib.crc32(payload) != crc:
        raise ChecksumError("dataset CRC mismatch")
    images = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(count, h, w)
    if not np.all(np.isfinite(images)) or np.any(images < 0):
        raise InvalidPixelError("dataset contains negative or non-finite pixels")
    return images


def write_dataset(path, images):
    with open(path, "wb") as fh:
        fh.write(encode_dataset(images))


def read_dataset(path):
    with open(path, "rb") as fh:
        return decode_dataset(fh.read())


def center_crop(img, out_h, out_w):
    img = np.asarray(img)
    h, w = img.shape[-2:]
    if out_h > h or out_w > w:
        raise ValueError(f"cannot crop {h}x{w} to {out_h}x{out_w}")
    top = (h - out_h) // 2
    left = (w - out_w) // 2
    return img[..., top:top + out_h, left:left + out_w]


def to_pgm(img):
    """8-bit binary PGM bytes, pixels in [0, 1] mapped linearly to 0..255."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    data = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def write_pgm(path, img):
    with open(path, "wb") as fh:
        fh.write(to_pgm(img))


@dataclass(frozen=True)
class SyntheticJetConfig:
    """Gaussian-blob stand-in for ECAL jet images.

    Each image gets ``blobs_min..blobs_max`` isotropic blobs of width
    ``sigma`` pixels at uniform integer centres with exponential peak
    heights (rate ``rate``); the image is then scaled so its brightest pixel
    is 1 and clipped to [0, 1].
    """
    count: int = 512
    size: int = 16
    blobs_min: int = 1
    blobs_max: int = 3
    sigma: float = 0.6
    rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.size < 2 or self.size % 2:
            raise ValueError("size must be even and >= 2")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not 0 <= self.blobs_min <= self.blobs_max:
            raise ValueError("need 0 <= blobs_min <= blobs_max")


def synth_jets(cfg):
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    yy, xx = np.mgrid[0:cfg.size, 0:cfg.size].astype(np.float64)
    images = np.zeros((cfg.count, cfg.size, cfg.size))
    for n in range(cfg.count):
        blobs = int(rng.integers(cfg.blobs_min, cfg.blobs_max + 1))
        img = images[n]
        for _ in range(blobs):
            cy, cx = rng.integers(0, cfg.size, size=2)
            peak = rng.exponential(1.0 / cfg.rate)
            img += peak * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * cfg.sigma ** 2))
        top = img.max()
        if top > 0:
            img /= top
    return np.clip(images, 0.0, 1.0)


def sparsity(images, threshold=0.01):
    """Fraction of pixels below ``threshold``."""
    return float(np.mean(np.asarray(images) < threshold))
