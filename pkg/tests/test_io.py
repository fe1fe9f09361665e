"""QJET datasets, PGM output, synthetic jets and QDMW checkpoints."""
import struct
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qjetdiff import jetio
from qjetdiff.denoiser import (
    ClassicalModel, CheckpointError, HybridModel, QuantumModel, init_conv, init_model, load_checkpoint,
    model_forward, save_checkpoint,
)
from qjetdiff.denoiser.checkpoint import decode_checkpoint, encode_checkpoint
from qjetdiff.jetio import (
    BadMagicError, ChecksumError, DatasetError, InvalidPixelError, SyntheticJetConfig, TruncatedError,
    VersionError, center_crop, decode_dataset, encode_dataset, read_dataset, synth_jets, to_pgm,
    write_dataset,
)


# --- QJET -------------------------------------------------------------------

def test_dataset_roundtrip_bit_exact(tmp_path, rng):
    imgs = rng.random((10, 16, 16)).astype(np.float32)
    path = tmp_path / "d.qjet"
    write_dataset(path, imgs)
    back = read_dataset(path)
    assert back.dtype == np.float32 and back.tobytes() == imgs.tobytes()
    write_dataset(tmp_path / "e.qjet", back)
    assert (tmp_path / "e.qjet").read_bytes() == path.read_bytes()


def test_dataset_layout():
    imgs = np.arange(6, dtype=np.float32).reshape(1, 2, 3)
    blob = encode_dataset(imgs)
    assert blob[:4] == b"QJET"
    assert struct.unpack("<HIHH", blob[4:14]) == (1, 1, 2, 3)
    payload = blob[14:-4]
    assert payload == struct.pack("<6f", *range(6))
    assert struct.unpack("<I", blob[-4:])[0] == zlib.crc32(payload)


def test_every_payload_byte_corruption_detected(rng):
    blob = bytearray(encode_dataset(rng.random((2, 4, 4))))
    for i in range(14, len(blob) - 4):
        bad = bytearray(blob)
        bad[i] ^= 0x5A
        with pytest.raises(ChecksumError):
            decode_dataset(bytes(bad))


@given(st.integers(0, 2**32 - 1), st.integers(1, 255))
def test_any_single_byte_corruption_detected(pos_seed, flip):
    blob = encode_dataset(np.random.default_rng(0).random((3, 4, 4)))
    bad = bytearray(blob)
    i = pos_seed % len(blob)
    bad[i] ^= flip
    with pytest.raises(DatasetError):
        decode_dataset(bytes(bad))


def test_dataset_errors(tmp_path, rng):
    empty = tmp_path / "empty.qjet"
    empty.write_bytes(b"")
    with pytest.raises(BadMagicError):
        read_dataset(empty)
    blob = encode_dataset(rng.random((2, 4, 4)))
    with pytest.raises(BadMagicError):
        decode_dataset(b"QJEX" + blob[4:])
    with pytest.raises(VersionError):
        decode_dataset(blob[:4] + struct.pack("<H", 2) + blob[6:])
    with pytest.raises(TruncatedError):
        decode_dataset(blob[:-1])
    with pytest.raises(TruncatedError):
        decode_dataset(blob[:10])
    with pytest.raises(DatasetError):
        decode_dataset(blob + b"\0")
    with pytest.raises(InvalidPixelError):
        encode_dataset(-np.ones((1, 2, 2)))
    with pytest.raises(InvalidPixelError):
        encode_dataset(np.full((1, 2, 2), np.nan))
    with pytest.raises(DatasetError):
        encode_dataset(np.ones((2, 2)))


def test_decode_rejects_negative_payload():
    payload = struct.pack("<4f", 0.0, -1.0, 0.0, 0.0)
    blob = b"QJET" + struct.pack("<HIHH", 1, 1, 2, 2) + payload + struct.pack("<I", zlib.crc32(payload))
    with pytest.raises(InvalidPixelError):
        decode_dataset(blob)


def test_empty_dataset_roundtrip():
    assert decode_dataset(encode_dataset(np.zeros((0, 16, 16)))).shape == (0, 16, 16)


# --- crop / PGM -------------------------------------------------------------

def test_center_crop():
    img = np.arange(16).reshape(4, 4)
    assert np.array_equal(center_crop(img, 4, 4), img)
    assert np.array_equal(center_crop(img, 2, 2), img[1:3, 1:3])
    big = np.arange(125 * 125).reshape(125, 125)
    out = center_crop(big, 16, 16)
    assert out[0, 0] == big[54, 54] and out[-1, -1] == big[69, 69]
    with pytest.raises(ValueError):
        center_crop(img, 5, 2)


def test_pgm():
    img = np.array([[0.0, 1.0, 0.5], [0.2, 2.0, -1.0]])
    data = to_pgm(img)
    assert data.startswith(b"P5\n3 2\n255\n")
    assert list(data[len(b"P5\n3 2\n255\n"):]) == [0, 255, 128, 51, 255, 0]


# --- synthetic jets ---------------------------------------------------------

def test_synth_zero_blobs():
    assert not np.any(synth_jets(SyntheticJetConfig(count=5, blobs_min=0, blobs_max=0)))


def test_synth_deterministic_and_seeded():
    a = synth_jets(SyntheticJetConfig(count=20, seed=3))
    assert np.array_equal(a, synth_jets(SyntheticJetConfig(count=20, seed=3)))
    assert not np.array_equal(a, synth_jets(SyntheticJetConfig(count=20, seed=4)))


def test_synth_sparse_and_normalised():
    imgs = synth_jets(SyntheticJetConfig(count=100))
    assert imgs.shape == (100, 16, 16)
    assert jetio.sparsity(imgs) >= 0.90
    assert np.all((imgs >= 0) & (imgs <= 1))
    assert np.allclose(imgs.reshape(100, -1).max(axis=1), 1.0)


@pytest.mark.parametrize("kw", [dict(count=0), dict(size=15), dict(sigma=0.0), dict(rate=-1.0),
                                dict(blobs_min=3, blobs_max=1)])
def test_synth_config_validation(kw):
    with pytest.raises(ValueError):
        SyntheticJetConfig(**kw)


# --- checkpoints ------------------------------------------------------------

@pytest.mark.parametrize("kind", ["classical", "hybrid", "quantum"])
def test_checkpoint_roundtrip(kind, tmp_path, rng):
    m = init_model(kind, rng)
    path = tmp_path / "m.qdmw"
    save_checkpoint(path, m)
    back = load_checkpoint(path)
    assert back.kind == kind
    assert all(np.array_equal(a, b) for a, b in zip(m.params(), back.params()))
    x = rng.random((1, 4, 4, 4))
    assert np.array_equal(model_forward(m, x), model_forward(back, x))
    assert encode_checkpoint(back) == path.read_bytes()


def test_checkpoint_variants(rng):
    for m in (QuantumModel.init(rng, 3, per_channel=True),
              HybridModel(init_conv([4, 6, 4], rng), rng.random((1, 4, 3)), init_conv([4, 4], rng)),
              ClassicalModel(init_conv([4, 4], rng))):
        back = decode_checkpoint(encode_checkpoint(m))
        assert type(back) is type(m)
        assert [p.shape for p in back.params()] == [p.shape for p in m.params()]


def test_checkpoint_header_layout(rng):
    blob = encode_checkpoint(QuantumModel(np.zeros((2, 4, 3))))
    assert blob[:4] == b"QDMW"
    assert struct.unpack("<HBH", blob[4:9]) == (1, 2, 1)
    assert blob[9] == 3 and struct.unpack("<3I", blob[10:22]) == (2, 4, 3)
    assert len(blob) == 22 + 24 * 8 + 4


def test_checkpoint_corruption(rng):
    blob = encode_checkpoint(init_model("hybrid", rng))
    for i in range(0, len(blob), 7):
        bad = bytearray(blob)
        bad[i] ^= 0xFF
        with pytest.raises(CheckpointError):
            decode_checkpoint(bytes(bad))
    with pytest.raises(CheckpointError):
        decode_checkpoint(b"")
    with pytest.raises(CheckpointError):
        decode_checkpoint(blob[:-3])


def _with_crc(body):
    return body + struct.pack("<I", zlib.crc32(body))


def test_checkpoint_semantic_errors():
    payload = np.zeros(2).astype("<f8").tobytes()
    # unknown kind tag
    body = b"QDMW" + struct.pack("<HBH", 1, 9, 1) + struct.pack("<BI", 1, 2) + payload
    with pytest.raises(CheckpointError, match="kind"):
        decode_checkpoint(_with_crc(body))
    # version
    body = b"QDMW" + struct.pack("<HBH", 7, 2, 1) + struct.pack("<BI", 1, 2) + payload
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(_with_crc(body))
    # quantum block of the wrong shape
    body = b"QDMW" + struct.pack("<HBH", 1, 2, 1) + struct.pack("<BI", 1, 2) + payload
    with pytest.raises(CheckpointError):
        decode_checkpoint(_with_crc(body))
    # payload shorter than the header promises
    body = b"QDMW" + struct.pack("<HBH", 1, 2, 1) + struct.pack("<BI", 1, 3) + payload
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(_with_crc(body))
