"""Compare the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--groups 4096]

Both variants are imported side by side from ``qjetdiff.kernels`` so one
process times them; the environment flag only decides which one the rest of
the package binds to. Each kernel is run once before timing so JIT
compilation is excluded. Outputs of the two paths are also cross-checked.
"""
import argparse
import time

import numpy as np

from qjetdiff import kernels
from qjetdiff.denoiser.vqc import compiled_ops


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(groups, rng):
    ops = compiled_ops(2)
    angles = rng.uniform(0, 2 * np.pi, 24)
    x = rng.uniform(0, 1, (groups, 4))
    w = rng.normal(size=(groups, 4))
    yield ("vqc_expval", (groups, "groups"),
           lambda k: (lambda: k["vqc_expval"](x, *ops, angles)))
    yield ("vqc_grad (+input grad)", (groups, "groups"),
           lambda k: (lambda: k["vqc_grad"](x, *ops, angles, w, True)))

    batch = max(1, groups // 64)
    img = rng.uniform(0, 1, (batch, 4, 8, 8))
    cw = rng.normal(size=(4, 4, 3, 3))
    cb = rng.normal(size=4)
    gout = rng.normal(size=img.shape)
    yield ("conv2d_forward", (batch, "images"),
           lambda k: (lambda: k["conv2d_forward"](img, cw, cb)))
    yield ("conv2d_backward", (batch, "images"),
           lambda k: (lambda: k["conv2d_backward"](img, cw, gout)))

    n = 256
    a = rng.normal(size=(n, n))
    a = a + a.T
    d0, e0 = np.diag(a).copy(), np.zeros(n)
    e0[:-1] = np.diag(a, -1)

    def ql(k):
        def run():
            d, e, zt = d0.copy(), e0.copy(), np.eye(n)
            if not k["tridiag_ql"](d, e, zt):
                raise RuntimeError("QL did not converge")
            return d
        return run
    yield ("tridiag_ql", (n, "dim"), ql)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--groups", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    impls = {
        "numpy": {n: getattr(kernels, n + "_numpy") for n in
                  ("vqc_expval", "vqc_grad", "conv2d_forward", "conv2d_backward", "tridiag_ql")},
        "numba": {n: getattr(kernels, n + "_numba") for n in
                  ("vqc_expval", "vqc_grad", "conv2d_forward", "conv2d_backward", "tridiag_ql")},
    }
    print(f"{'kernel':24s} {'size':>14s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, (size, unit), make in cases(args.groups, rng):
        ref = make(impls["numpy"])
        fast = make(impls["numba"])
        diff = _max_diff(ref(), fast())
        t_np = best_of(ref, args.repeat)
        t_nb = best_of(fast, args.repeat)
        print(f"{name:24s} {f'{size} {unit}':>14s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} "
              f"{t_np / t_nb:7.1f}x {diff:11.2e}")


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


if __name__ == "__main__":
    main()
