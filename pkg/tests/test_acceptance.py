"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``. Criteria 7 and 8
share one set of 15 full training runs (3 model kinds x 5 seeds x 50 epochs
on the default 512-image synthetic set), which takes roughly ten minutes on
one laptop core.
"""
import time
from contextlib import contextmanager

import numpy as np
import pytest
import scipy.linalg

from conftest import lift_1q, lift_cnot, random_unit, rot_oracle
from qjetdiff import jetio, training
from qjetdiff.cli import main as cli_main
from qjetdiff.denoiser import init_model, model_backward, model_forward, vqc_forward, vqc_param_shift_grad
from qjetdiff.diffusion import scramble_channel
from qjetdiff.encoding import (
    decode_channel, decode_groups, depth_to_space, encode_channel, encode_groups, space_to_depth,
)
from qjetdiff.qsim import CNOT, Circuit, Rx, Ry, Rz, apply_circuit, apply_gate, haar_unitary, rng_stream
from qjetdiff.training import TrainConfig, fid, prominence_filter

SEEDS = range(5)
KINDS = ("classical", "hybrid", "quantum")


@contextmanager
def criterion(capsys, number, title):
    notes = {}
    try:
        yield notes
    except BaseException:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2}: FAIL  {title}  {_fmt(notes)}")
        raise
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2}: PASS  {title}  {_fmt(notes)}")


def _fmt(notes):
    return "; ".join(f"{k}={v}" for k, v in notes.items())


def _lift(g, n):
    if isinstance(g, CNOT):
        return lift_cnot(g.control, g.target, n)
    axis = {Rx: "x", Ry: "y", Rz: "z"}[type(g)]
    return lift_1q(rot_oracle(axis, g.angle), g.target, n)


def _random_gate(rng, n):
    kind = int(rng.integers(0, 4))
    if kind == 3:
        c, t = rng.choice(n, size=2, replace=False)
        return CNOT(int(c), int(t))
    return (Rx, Ry, Rz)[kind](float(rng.uniform(-2 * np.pi, 2 * np.pi)), int(rng.integers(0, n)))


def _fd(f, arr, h=1e-5):
    g = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + h
        fp = f()
        arr[idx] = old - h
        fm = f()
        arr[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def test_criterion_01_unitarity(capsys):
    with criterion(capsys, 1, "norm preserved over 1e4 gates; Haar U^H U = I") as notes:
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        worst = 0.0
        for n in (3, 4, 5):
            psi = random_unit(rng, 2 ** n)
            for _ in range(10_000 // 3 + 1):
                psi = apply_gate(psi, _random_gate(rng, n))
                worst = max(worst, abs(np.vdot(psi, psi).real - 1.0))
        haar_worst = 0.0
        stream = rng_stream(102)
        for dim in (1, 2, 3, 4, 8, 16, 32):
            for _ in range(200):
                u = haar_unitary(dim, stream)
                haar_worst = max(haar_worst, float(np.max(np.abs(u.conj().T @ u - np.eye(dim)))))
        elapsed = time.perf_counter() - t0
        notes.update(norm_dev=f"{worst:.1e}", haar_dev=f"{haar_worst:.1e}", seconds=f"{elapsed:.1f}")
        assert worst < 1e-9
        assert haar_worst < 1e-12
        assert elapsed < 10


def test_criterion_02_oracle_equivalence(capsys):
    with criterion(capsys, 2, "apply_gate/apply_circuit == kron-lifted oracle on 200 cases") as notes:
        t0 = time.perf_counter()
        rng = np.random.default_rng(201)
        worst = 0.0
        for case in range(200):
            n = 3 + case % 3
            psi = random_unit(rng, 2 ** n)
            g = _random_gate(rng, n)
            worst = max(worst, float(np.max(np.abs(apply_gate(psi, g) - _lift(g, n) @ psi))))
            gates = tuple(_random_gate(rng, n) for _ in range(int(rng.integers(1, 30))))
            full = np.eye(2 ** n, dtype=complex)
            for gg in gates:
                full = _lift(gg, n) @ full
            worst = max(worst, float(np.max(np.abs(apply_circuit(psi, Circuit(n, gates)) - full @ psi))))
        elapsed = time.perf_counter() - t0
        notes.update(max_err=f"{worst:.1e}", seconds=f"{elapsed:.1f}")
        assert worst < 1e-10
        assert elapsed < 30


def test_criterion_03_haar_statistics(capsys):
    with criterion(capsys, 3, "Haar mean |U00|^2 = 1/16; scramble decorrelates") as notes:
        stream = rng_stream(301)
        vals = np.array([abs(haar_unitary(16, stream)[0, 0]) ** 2 for _ in range(10_000)])
        ch = np.random.default_rng(302).random((8, 8))
        ec = encode_channel(ch)
        corr = []
        for _ in range(1000):
            dec = decode_channel(scramble_channel(ec, haar_unitary(16, stream)))
            corr.append(np.corrcoef(ch.ravel(), dec.ravel())[0, 1])
        notes.update(mean_u00=f"{vals.mean():.5f}", mean_corr=f"{np.mean(corr):+.4f}")
        assert abs(vals.mean() - 1 / 16) < 0.005
        assert abs(np.mean(corr)) < 0.05


def test_criterion_04_encoding_roundtrip(capsys):
    with criterion(capsys, 4, "decode(encode(x)) = x on 1e4 groups; space_to_depth bit-exact") as notes:
        rng = np.random.default_rng(401)
        x = rng.random((10_000, 4))
        x[:50] = 0.0  # the endpoints are where arccos decoding is least forgiving
        x[50:100] = 1.0
        err = float(np.max(np.abs(decode_groups(encode_groups(x)) - x)))
        imgs = rng.random((100, 16, 16))
        exact = np.array_equal(depth_to_space(space_to_depth(imgs)), imgs)
        notes.update(max_err=f"{err:.1e}", s2d_exact=exact)
        assert err < 1e-9
        assert exact


def test_criterion_05_gradients(capsys):
    with criterion(capsys, 5, "parameter-shift / full hybrid gradients vs central FD") as notes:
        t0 = time.perf_counter()
        rng = np.random.default_rng(501)
        vqc_worst = 0.0
        for _ in range(100):
            x = rng.uniform(0.02, 0.98, 4)
            a = rng.uniform(0, 2 * np.pi, (2, 4, 3))
            up = rng.normal(size=4)
            _, da, dx = vqc_param_shift_grad(x, a, up)
            f = lambda: float(np.sum(up * vqc_forward(x, a)))  # noqa: E731
            vqc_worst = max(vqc_worst, float(np.max(np.abs(da - _fd(f, a)))), float(np.max(np.abs(dx - _fd(f, x)))))
        hyb_worst = 0.0
        for _ in range(100):
            m = init_model("hybrid", rng)
            x = rng.random((1, 4, 4, 4))
            up = rng.normal(size=x.shape)
            grads = model_backward(m, x, up)
            f = lambda: float(np.sum(up * model_forward(m, x)))  # noqa: E731
            fds = [_fd(f, p) for p in m.params()]
            diff = max(float(np.max(np.abs(g - d))) for g, d in zip(grads, fds))
            scale = max(float(np.max(np.abs(d))) for d in fds)
            hyb_worst = max(hyb_worst, diff / scale)
        elapsed = time.perf_counter() - t0
        notes.update(vqc_abs=f"{vqc_worst:.1e}", hybrid_rel=f"{hyb_worst:.1e}", seconds=f"{elapsed:.1f}")
        assert vqc_worst < 1e-5
        assert hyb_worst < 1e-4
        assert elapsed < 120


def test_criterion_06_fid(capsys):
    with criterion(capsys, 6, "FID identity, closed form, dual-implementation oracle") as notes:
        rng = np.random.default_rng(601)
        a = rng.random((40, 4, 4))
        ident = abs(fid(a, a))
        r = 1 / np.sqrt(2)
        closed = abs(fid(np.array([-r, r]).reshape(2, 1, 1), np.array([1 - r, 1 + r]).reshape(2, 1, 1)) - 1.0)
        worst = 0.0
        for _ in range(20):
            x = rng.normal(size=(50, 4))
            g = rng.normal(0.5, 1.3, size=(50, 4)) @ rng.normal(size=(4, 4))
            s1 = np.cov(x, rowvar=False) + 1e-6 * np.eye(4)
            s2 = np.cov(g, rowvar=False) + 1e-6 * np.eye(4)
            ref = (np.sum((x.mean(0) - g.mean(0)) ** 2) + np.trace(s1) + np.trace(s2)
                   - 2 * np.trace(scipy.linalg.sqrtm(s1 @ s2).real))
            worst = max(worst, abs(fid(x, g) - ref))
        notes.update(identity=f"{ident:.1e}", closed_form=f"{closed:.1e}", oracle=f"{worst:.1e}")
        assert ident < 1e-8
        assert closed < 1e-9
        assert worst < 1e-6


@pytest.fixture(scope="session")
def trend_runs():
    images = jetio.synth_jets(jetio.SyntheticJetConfig())  # 512 images, 16x16
    t0 = time.perf_counter()
    runs = {}
    for kind in KINDS:
        for seed in SEEDS:
            res = training.train(TrainConfig(model=kind, seed=seed), images)
            runs[kind, seed] = dict(first_loss=res.metrics[0].loss, final_loss=res.metrics[-1].loss,
                                    initial_fid=res.initial_fid, final_fid=res.metrics[-1].fid)
    return runs, time.perf_counter() - t0


def test_criterion_07_trend(capsys, trend_runs):
    runs, elapsed = trend_runs
    with criterion(capsys, 7, "50-epoch training: loss halves and FID improves in >= 4/5 seeds") as notes:
        with capsys.disabled():
            print("\n  kind       seed  loss1     loss50    ratio  fid0      fid50")
            for (kind, seed), r in runs.items():
                print(f"  {kind:10s} {seed:4d}  {r['first_loss']:.5f}  {r['final_loss']:.5f}  "
                      f"{r['final_loss'] / r['first_loss']:.3f}  {r['initial_fid']:8.4f}  {r['final_fid']:8.4f}")
        ok = True
        for kind in KINDS:
            loss_wins = sum(runs[kind, s]["final_loss"] < 0.5 * runs[kind, s]["first_loss"] for s in SEEDS)
            fid_wins = sum(runs[kind, s]["final_fid"] < runs[kind, s]["initial_fid"] for s in SEEDS)
            notes[kind] = f"loss {loss_wins}/5 fid {fid_wins}/5"
            ok &= loss_wins >= 4 and fid_wins >= 4
        notes["minutes"] = f"{elapsed / 60:.1f}"
        assert ok
        assert elapsed < 30 * 60


def test_criterion_08_comparability(capsys, trend_runs):
    runs, _ = trend_runs
    with criterion(capsys, 8, "median final FID of hybrid and quantum within 2x of classical") as notes:
        med = {k: float(np.median([runs[k, s]["final_fid"] for s in SEEDS])) for k in KINDS}
        ratios = {k: med[k] / med["classical"] for k in ("hybrid", "quantum")}
        notes.update({f"median_{k}": f"{v:.4f}" for k, v in med.items()})
        notes.update({f"ratio_{k}": f"{v:.3f}" for k, v in ratios.items()})
        assert all(0.5 <= r <= 2.0 for r in ratios.values())


def test_criterion_09_determinism(capsys, tmp_path):
    with criterion(capsys, 9, "train --seed S twice: identical CSV and checkpoint; dataset round trip") as notes:
        for kind in KINDS:
            for run in ("a", "b"):
                code = cli_main(["train", "--model", kind, "--seed", "3", "--epochs", "2",
                                 "--out", str(tmp_path / kind / run)])
                assert code == 0
            for f in ("metrics.csv", "model.qdmw"):
                assert (tmp_path / kind / "a" / f).read_bytes() == (tmp_path / kind / "b" / f).read_bytes()
        imgs = np.random.default_rng(901).random((10, 16, 16)).astype(np.float32)
        jetio.write_dataset(tmp_path / "d.qjet", imgs)
        back = jetio.read_dataset(tmp_path / "d.qjet")
        notes["kinds"] = ",".join(KINDS)
        assert back.tobytes() == imgs.tobytes()


def test_criterion_10_prominence(capsys):
    with criterion(capsys, 10, "prominence filter keeps exactly k pixels and is idempotent") as notes:
        rng = np.random.default_rng(1001)
        exact = idem = 0
        for _ in range(1000):
            img = rng.random((16, 16)) * (rng.random((16, 16)) < rng.uniform(0.05, 1.0))
            k = int(rng.integers(0, 40))
            out = prominence_filter(img, k)
            if len(np.unique(img[img > 0])) >= k:
                assert np.count_nonzero(out) == k
                exact += 1
            assert np.array_equal(prominence_filter(out, k), out)
            idem += 1
        notes.update(exact_k_cases=exact, idempotent_cases=idem)
        assert exact > 500
