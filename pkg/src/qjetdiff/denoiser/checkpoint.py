"""Binary parameter checkpoints.

Layout (little-endian)::

    b"QDMW" | u16 version | u8 kind | u16 n_blocks
    n_blocks x (u8 ndim | ndim x u32 dims)
    float64 payload, blocks concatenated in ``model.params()`` order
    u32 CRC32 of every preceding byte

Kind tags: 0 classical, 1 hybrid, 2 quantum. Conv layers are stored as
(weight, bias) block pairs. In a hybrid checkpoint the pairs before the
single VQC block form the front stack and those after it the back stack.
"""
import struct
import zlib

import numpy as np

from .models import ClassicalModel, HybridModel, QuantumModel

MAGIC = b"QDMW"
VERSION = 1
KIND_TAGS = {"classical": 0, "hybrid": 1, "quantum": 2}


class CheckpointError(ValueError):
    pass


def encode_checkpoint(model):
    params = model.params()
    header = bytearray(MAGIC)
    header += struct.pack("<HBH", VERSION, KIND_TAGS[model.kind], len(params))
    for p in params:
        header += struct.pack("<B", p.ndim)
        header += struct.pack(f"<{p.ndim}I", *p.shape)
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in params)
    blob = bytes(header) + body
    return blob + struct.pack("<I", zlib.crc32(blob))


def save_checkpoint(path, model):
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(model))


def _pairs(blocks):
    if len(blocks) % 2:
        raise CheckpointError("conv blocks must come in (weight, bias) pairs")
    return [(blocks[i], blocks[i + 1]) for i in range(0, len(blocks), 2)]


def decode_checkpoint(blob):
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise CheckpointError("not a QDMW checkpoint (bad magic)")
    if len(blob) < 13:
        raise CheckpointError("checkpoint truncated")
    (crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) != crc:
        raise CheckpointError("checkpoint CRC mismatch")
    version, tag, n_blocks = struct.unpack_from("<HBH", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = 9
    shapes = []
    try:
        for _ in range(n_blocks):
            (ndim,) = struct.unpack_from("<B", blob, off)
            off += 1
            shapes.append(struct.unpack_from(f"<{ndim}I", blob, off))
            off += 4 * ndim
    except struct.error as exc:
        raise CheckpointError("checkpoint header truncated") from exc
    blocks = []
    for shape in shapes:
        size = int(np.prod(shape, dtype=np.int64))
        if off + 8 * size > len(blob) - 4:
            raise CheckpointError("checkpoint payload truncated")
        blocks.append(np.frombuffer(blob, dtype="<f8", count=size, offset=off).astype(np.float64).reshape(shape))
        off += 8 * size
    if off != len(blob) - 4:
        raise CheckpointError("trailing bytes after checkpoint payload")
    try:
        if tag == KIND_TAGS["classical"]:
            return ClassicalModel(_pairs(blocks))
        if tag == KIND_TAGS["quantum"]:
            if len(blocks) != 1:
                raise CheckpointError("quantum checkpoint must hold exactly one block")
            return QuantumModel(blocks[0])
        if tag == KIND_TAGS["hybrid"]:
            vqc_at = [i for i, b in enumerate(blocks) if b.ndim in (3, 4) and b.shape[-2:] == (4, 3)]
            if len(vqc_at) != 1:
                raise CheckpointError("hybrid checkpoint must hold exactly one VQC block")
            i = vqc_at[0]
            return HybridModel(_pairs(blocks[:i]), blocks[i], _pairs(blocks[i + 1:]))
    except ValueError as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(str(exc)) from exc
    raise CheckpointError(f"unknown model kind tag {tag}")


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
