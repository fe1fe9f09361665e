"""Hot numeric kernels, each with a numba path and a pure-numpy path.

Every public kernel name (``apply_1q``, ``apply_cnot``, ``vqc_expval``,
``vqc_grad``, ``conv2d_forward``, ``conv2d_backward``, ``tridiag_ql``) is
bound to the numba implementation when :data:`qjetdiff._accel.USE_NUMBA` is
true and to the numpy one otherwise. Both variants stay importable under
``*_numpy`` / ``*_numba`` names so tests and the benchmark can compare them.

Qubit 0 is the most significant bit of a basis index. Gate op codes used by
the compiled circuit arrays are ``RX=0, RY=1, RZ=2, CNOT=3``.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

RX, RY, RZ, CNOT = 0, 1, 2, 3

HALF_PI = 0.5 * math.pi


def rotation_matrix(kind, angle):
    c = math.cos(0.5 * angle)
    s = math.sin(0.5 * angle)
    if kind == RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == RZ:
        return np.array([[complex(c, -s), 0.0], [0.0, complex(c, s)]], dtype=np.complex128)
    raise ValueError(f"not a rotation op code: {kind}")


def z_signs(nq):
    """(2**nq, nq) table of +1/-1 Pauli-Z eigenvalues per basis index."""
    idx = np.arange(1 << nq)
    bits = (idx[:, None] >> (nq - 1 - np.arange(nq))[None, :]) & 1
    return 1.0 - 2.0 * bits


def product_states_rx(theta):
    """Rx(theta_q) on every qubit of |0...0>, batched over leading axes."""
    theta = np.asarray(theta, dtype=np.float64)
    nq = theta.shape[-1]
    c = np.cos(0.5 * theta)
    s = -1j * np.sin(0.5 * theta)
    out = np.ones(theta.shape[:-1] + (1,), dtype=np.complex128)
    for q in range(nq):
        pair = np.stack([c[..., q], s[..., q]], axis=-1).astype(np.complex128)
        out = (out[..., :, None] * pair[..., None, :]).reshape(theta.shape[:-1] + (-1,))
    return out


# ---------------------------------------------------------------------------
# statevector gates, batched over the first axis

def apply_1q_numpy(states, mat, q, nq):
    n = states.shape[0]
    view = states.reshape(n, 1 << q, 2, 1 << (nq - q - 1))
    out = np.einsum("ab,nlbr->nlar", mat, view)
    return out.reshape(n, -1)


def apply_cnot_numpy(states, control, target, nq):
    idx = np.arange(1 << nq)
    cbit = 1 << (nq - 1 - control)
    tbit = 1 << (nq - 1 - target)
    perm = np.where(idx & cbit, idx ^ tbit, idx)
    return states[:, perm]


@njit
def _apply_1q_state(src, dst, m00, m01, m10, m11, q, nq):
    stride = 1 << (nq - 1 - q)
    dim = 1 << nq
    for base in range(dim):
        if base & stride:
            continue
        a0 = src[base]
        a1 = src[base | stride]
        dst[base] = m00 * a0 + m01 * a1
        dst[base | stride] = m10 * a0 + m11 * a1


@njit
def _apply_cnot_state(src, dst, control, target, nq):
    cbit = 1 << (nq - 1 - control)
    tbit = 1 << (nq - 1 - target)
    dim = 1 << nq
    for i in range(dim):
        if i & cbit:
            dst[i] = src[i ^ tbit]
        else:
            dst[i] = src[i]


@njit
def _apply_1q_loops(states, mat, q, nq):
    out = np.empty_like(states)
    for i in range(states.shape[0]):
        _apply_1q_state(states[i], out[i], mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1], q, nq)
    return out


@njit
def _apply_cnot_loops(states, control, target, nq):
    out = np.empty_like(states)
    for i in range(states.shape[0]):
        _apply_cnot_state(states[i], out[i], control, target, nq)
    return out


def apply_1q_numba(states, mat, q, nq):
    return _apply_1q_loops(np.ascontiguousarray(states, dtype=np.complex128),
                           np.ascontiguousarray(mat, dtype=np.complex128), q, nq)


def apply_cnot_numba(states, control, target, nq):
    return _apply_cnot_loops(np.ascontiguousarray(states, dtype=np.complex128), control, target, nq)


# ---------------------------------------------------------------------------
# compiled parameterised circuits on angle-encoded inputs
#
# ops: kinds/qa/qb/pidx int64 arrays of equal length G. pidx[k] indexes the
# angle vector for rotation gates and is -1 for CNOTs. Inputs x (N, nq) are
# angle-encoded as Rx(pi * x_q) on |0...0> before the ops run.

def _apply_op_numpy(states, kind, qa, qb, angle, nq):
    if kind == CNOT:
        return apply_cnot_numpy(states, qa, qb, nq)
    return apply_1q_numpy(states, rotation_matrix(kind, angle), qa, nq)


def _run_ops_numpy(states, kinds, qa, qb, pidx, angles, start, nq, first_shift=0.0):
    for k in range(start, len(kinds)):
        ang = angles[pidx[k]] if pidx[k] >= 0 else 0.0
        if k == start:
            ang += first_shift
        states = _apply_op_numpy(states, kinds[k], qa[k], qb[k], ang, nq)
    return states


def vqc_expval_numpy(x, kinds, qa, qb, pidx, angles):
    nq = x.shape[1]
    states = product_states_rx(np.pi * x)
    states = _run_ops_numpy(states, kinds, qa, qb, pidx, angles, 0, nq)
    return (np.abs(states) ** 2) @ z_signs(nq)


def vqc_grad_numpy(x, kinds, qa, qb, pidx, angles, weights, input_grad):
    """Expectations plus parameter-shift gradients of sum(weights * <Z>).

    Returns ``(z, dtheta, dx)``: z is (N, nq), dtheta has the shape of
    ``angles`` (summed over the batch), dx is (N, nq) and holds the
    derivatives with respect to the pixel inputs (zeros unless input_grad).
    """
    n, nq = x.shape
    signs = z_signs(nq)
    obs = weights @ signs.T  # (N, D) diagonal observable per row
    prefix = [product_states_rx(np.pi * x)]
    for k in range(len(kinds)):
        ang = angles[pidx[k]] if pidx[k] >= 0 else 0.0
        prefix.append(_apply_op_numpy(prefix[-1], kinds[k], qa[k], qb[k], ang, nq))
    z = (np.abs(prefix[-1]) ** 2) @ signs
    dtheta = np.zeros_like(angles)
    for k in range(len(kinds)):
        if pidx[k] < 0:
            continue
        plus = _run_ops_numpy(prefix[k], kinds, qa, qb, pidx, angles, k, nq, HALF_PI)
        minus = _run_ops_numpy(prefix[k], kinds, qa, qb, pidx, angles, k, nq, -HALF_PI)
        vp = np.sum(np.abs(plus) ** 2 * obs, axis=1)
        vm = np.sum(np.abs(minus) ** 2 * obs, axis=1)
        dtheta[pidx[k]] += 0.5 * np.sum(vp - vm)
    dx = np.zeros((n, nq))
    if input_grad:
        theta = np.pi * x
        for q in range(nq):
            for sgn in (1.0, -1.0):
                shifted = theta.copy()
                shifted[:, q] += sgn * HALF_PI
                st = _run_ops_numpy(product_states_rx(shifted), kinds, qa, qb, pidx, angles, 0, nq)
                dx[:, q] += sgn * 0.5 * np.pi * np.sum(np.abs(st) ** 2 * obs, axis=1)
    return z, dtheta, dx


def _gate_table(kinds, pidx, angles):
    """(G, 3, 8) re/im entries of every gate matrix at shifts 0, +pi/2, -pi/2."""
    table = np.zeros((len(kinds), 3, 8))
    for k in range(len(kinds)):
        if kinds[k] == CNOT:
            continue
        for j, shift in enumerate((0.0, HALF_PI, -HALF_PI)):
            m = rotation_matrix(kinds[k], angles[pidx[k]] + shift).ravel()
            table[k, j, 0::2] = m.real
            table[k, j, 1::2] = m.imag
    return table


# The numba circuit kernels work on blocks of _BLOCK groups stored as separate
# real/imaginary planes of shape (2**nq, _BLOCK); the innermost loop runs over
# the groups so it vectorises.
_BLOCK = 256


@njit
def _blk_encode(theta, start, count, re, im, nq):
    dim = 1 << nq
    c = np.empty(nq)
    s = np.empty(nq)
    for b in range(count):
        for q in range(nq):
            c[q] = math.cos(0.5 * theta[start + b, q])
            s[q] = -math.sin(0.5 * theta[start + b, q])
        for i in range(dim):
            ar = 1.0
            ai = 0.0
            for q in range(nq):
                if (i >> (nq - 1 - q)) & 1:
                    # times i*s[q]
                    tmp = -ai * s[q]
                    ai = ar * s[q]
                    ar = tmp
                else:
                    ar *= c[q]
                    ai *= c[q]
            re[i, b] = ar
            im[i, b] = ai


@njit
def _blk_apply(kind, qa, qb, m, sr, si, dr, di, nq, count):
    dim = 1 << nq
    if kind == 3:
        cbit = 1 << (nq - 1 - qa)
        tbit = 1 << (nq - 1 - qb)
        for i in range(dim):
            src = i ^ tbit if i & cbit else i
            for b in range(count):
                dr[i, b] = sr[src, b]
                di[i, b] = si[src, b]
        return
    stride = 1 << (nq - 1 - qa)
    m00r, m00i, m01r, m01i = m[0], m[1], m[2], m[3]
    m10r, m10i, m11r, m11i = m[4], m[5], m[6], m[7]
    for i0 in range(dim):
        if i0 & stride:
            continue
        i1 = i0 | stride
        for b in range(count):
            a0r = sr[i0, b]
            a0i = si[i0, b]
            a1r = sr[i1, b]
            a1i = si[i1, b]
            dr[i0, b] = m00r * a0r - m00i * a0i + m01r * a1r - m01i * a1i
            di[i0, b] = m00r * a0i + m00i * a0r + m01r * a1i + m01i * a1r
            dr[i1, b] = m10r * a0r - m10i * a0i + m11r * a1r - m11i * a1i
            di[i1, b] = m10r * a0i + m10i * a0r + m11r * a1i + m11i * a1r


@njit
def _blk_run(kinds, qa, qb, table, start, shift, sr, si, ar, ai, br, bi, nq, count):
    # ops[start:] from (sr, si), the first one at the given shift column;
    # returns the planes holding the result
    _blk_apply(kinds[start], qa[start], qb[start], table[start, shift], sr, si, ar, ai, nq, count)
    src_r, src_i, dst_r, dst_i = ar, ai, br, bi
    for k in range(start + 1, kinds.shape[0]):
        _blk_apply(kinds[k], qa[k], qb[k], table[k, 0], src_r, src_i, dst_r, dst_i, nq, count)
        src_r, src_i, dst_r, dst_i = dst_r, dst_i, src_r, src_i
    return src_r, src_i


@njit
def _blk_observe(re, im, obs, out, count):
    for b in range(count):
        out[b] = 0.0
    for i in range(re.shape[0]):
        for b in range(count):
            out[b] += (re[i, b] * re[i, b] + im[i, b] * im[i, b]) * obs[i, b]


@njit
def _vqc_blocks(theta, kinds, qa, qb, pidx, table, weights, signs, want_grad, input_grad, n_params):
    n, nq = theta.shape
    dim = 1 << nq
    g = kinds.shape[0]
    blk = _BLOCK
    z = np.zeros((n, nq))
    dtheta = np.zeros(n_params)
    dx = np.zeros((n, nq))
    pre_r = np.empty((g + 1, dim, blk))
    pre_i = np.empty((g + 1, dim, blk))
    ar = np.empty((dim, blk))
    ai = np.empty((dim, blk))
    br = np.empty((dim, blk))
    bi = np.empty((dim, blk))
    cr = np.empty((dim, blk))
    ci = np.empty((dim, blk))
    obs = np.empty((dim, blk))
    vp = np.empty(blk)
    vm = np.empty(blk)
    tb = np.empty((blk, nq))
    half_pi = 0.5 * math.pi
    for start in range(0, n, blk):
        count = min(blk, n - start)
        _blk_encode(theta, start, count, pre_r[0], pre_i[0], nq)
        for k in range(g):
            _blk_apply(kinds[k], qa[k], qb[k], table[k, 0], pre_r[k], pre_i[k], pre_r[k + 1], pre_i[k + 1], nq, count)
        for i in range(dim):
            for b in range(count):
                p = pre_r[g, i, b] * pre_r[g, i, b] + pre_i[g, i, b] * pre_i[g, i, b]
                for q in range(nq):
                    z[start + b, q] += p * signs[i, q]
        if not want_grad:
            continue
        for i in range(dim):
            for b in range(count):
                o = 0.0
                for q in range(nq):
                    o += weights[start + b, q] * signs[i, q]
                obs[i, b] = o
        for k in range(g):
            if pidx[k] < 0:
                continue
            rr, ri = _blk_run(kinds, qa, qb, table, k, 1, pre_r[k], pre_i[k], ar, ai, br, bi, nq, count)
            _blk_observe(rr, ri, obs, vp, count)
            rr, ri = _blk_run(kinds, qa, qb, table, k, 2, pre_r[k], pre_i[k], ar, ai, br, bi, nq, count)
            _blk_observe(rr, ri, obs, vm, count)
            acc = 0.0
            for b in range(count):
                acc += vp[b] - vm[b]
            dtheta[pidx[k]] += 0.5 * acc
        if input_grad:
            for q in range(nq):
                for sgn in range(2):
                    for b in range(count):
                        for j in range(nq):
                            tb[b, j] = theta[start + b, j]
                        tb[b, q] += half_pi if sgn == 0 else -half_pi
                    _blk_encode(tb, 0, count, cr, ci, nq)
                    rr, ri = _blk_run(kinds, qa, qb, table, 0, 0, cr, ci, ar, ai, br, bi, nq, count)
                    if sgn == 0:
                        _blk_observe(rr, ri, obs, vp, count)
                    else:
                        _blk_observe(rr, ri, obs, vm, count)
                for b in range(count):
                    dx[start + b, q] = 0.5 * math.pi * (vp[b] - vm[b])
    return z, dtheta, dx


def _as_ops(kinds, qa, qb, pidx):
    return (np.ascontiguousarray(kinds, dtype=np.int64), np.ascontiguousarray(qa, dtype=np.int64),
            np.ascontiguousarray(qb, dtype=np.int64), np.ascontiguousarray(pidx, dtype=np.int64))


def _vqc_numba(x, kinds, qa, qb, pidx, angles, weights, want_grad, input_grad):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if len(kinds) == 0:
        ops = _as_ops(kinds, qa, qb, pidx)
        return vqc_grad_numpy(x, *ops, np.asarray(angles, dtype=np.float64),
                              np.asarray(weights, dtype=np.float64), input_grad)
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    kinds, qa, qb, pidx = _as_ops(kinds, qa, qb, pidx)
    table = _gate_table(kinds, pidx, angles)
    return _vqc_blocks(np.pi * x, kinds, qa, qb, pidx, table,
                       np.ascontiguousarray(weights, dtype=np.float64), z_signs(x.shape[1]),
                       bool(want_grad), bool(input_grad), angles.shape[0])


def vqc_expval_numba(x, kinds, qa, qb, pidx, angles):
    x = np.asarray(x, dtype=np.float64)
    return _vqc_numba(x, kinds, qa, qb, pidx, angles, np.zeros_like(x), False, False)[0]


def vqc_grad_numba(x, kinds, qa, qb, pidx, angles, weights, input_grad):
    return _vqc_numba(x, kinds, qa, qb, pidx, angles, weights, True, input_grad)


# ---------------------------------------------------------------------------
# 2-D "same" convolution (cross-correlation), NCHW layout, odd square kernels

def conv2d_forward_numpy(x, w, b):
    k = w.shape[2]
    pad = k // 2
    n, _, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.broadcast_to(b[None, :, None, None], (n, w.shape[0], h, wd)).copy()
    for dy in range(k):
        for dx in range(k):
            out += np.einsum("oi,nihw->nohw", w[:, :, dy, dx], xp[:, :, dy:dy + h, dx:dx + wd])
    return out


def conv2d_backward_numpy(x, w, gout):
    k = w.shape[2]
    pad = k // 2
    n, _, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(w)
    for dy in range(k):
        for dx in range(k):
            gw[:, :, dy, dx] = np.einsum("nohw,nihw->oi", gout, xp[:, :, dy:dy + h, dx:dx + wd])
            gxp[:, :, dy:dy + h, dx:dx + wd] += np.einsum("oi,nohw->nihw", w[:, :, dy, dx], gout)
    gb = gout.sum(axis=(0, 2, 3))
    return gxp[:, :, pad:pad + h, pad:pad + wd], gw, gb


@njit
def _conv2d_forward_loops(x, w, b):
    n, ci, h, wd = x.shape
    co, _, k, _ = w.shape
    pad = k // 2
    out = np.empty((n, co, h, wd))
    for s in range(n):
        for o in range(co):
            for y in range(h):
                for xx in range(wd):
                    acc = b[o]
                    for i in range(ci):
                        for dy in range(k):
                            yy = y + dy - pad
                            if yy < 0 or yy >= h:
                                continue
                            for dx in range(k):
                                xs = xx + dx - pad
                                if xs < 0 or xs >= wd:
                                    continue
                                acc += w[o, i, dy, dx] * x[s, i, yy, xs]
                    out[s, o, y, xx] = acc
    return out


@njit
def _conv2d_backward_loops(x, w, gout):
    n, ci, h, wd = x.shape
    co, _, k, _ = w.shape
    pad = k // 2
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = np.zeros(co)
    for s in range(n):
        for o in range(co):
            for y in range(h):
                for xx in range(wd):
                    g = gout[s, o, y, xx]
                    if g == 0.0:
                        continue
                    gb[o] += g
                    for i in range(ci):
                        for dy in range(k):
                            yy = y + dy - pad
                            if yy < 0 or yy >= h:
                                continue
                            for dx in range(k):
                                xs = xx + dx - pad
                                if xs < 0 or xs >= wd:
                                    continue
                                gw[o, i, dy, dx] += g * x[s, i, yy, xs]
                                gx[s, i, yy, xs] += g * w[o, i, dy, dx]
    return gx, gw, gb


def conv2d_forward_numba(x, w, b):
    return _conv2d_forward_loops(np.ascontiguousarray(x, dtype=np.float64),
                                 np.ascontiguousarray(w, dtype=np.float64),
                                 np.ascontiguousarray(b, dtype=np.float64))


def conv2d_backward_numba(x, w, gout):
    return _conv2d_backward_loops(np.ascontiguousarray(x, dtype=np.float64),
                                  np.ascontiguousarray(w, dtype=np.float64),
                                  np.ascontiguousarray(gout, dtype=np.float64))


# ---------------------------------------------------------------------------
# implicit-shift QL on a real symmetric tridiagonal matrix
#
# d: diagonal (n,), e: sub-diagonal with e[i] coupling i and i+1, e[n-1] == 0.
# zt rows are rotated alongside, so starting from zt = B.T the result rows are
# the eigenvectors of B @ T @ B.T. Off-diagonals deflate once they drop below
# eps times the local diagonal or eps times the matrix norm. Returns False if
# an eigenvalue fails to converge within max_iter sweeps.

def tridiag_ql_numpy(d, e, zt, max_iter=60):
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    anorm = float(np.max(np.abs(d) + np.abs(e), initial=0.0))
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= eps * anorm:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                return False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                upper = zt[i + 1].copy()
                zt[i + 1] = s * zt[i] + c * upper
                zt[i] = c * zt[i] - s * upper
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


@njit
def _tridiag_ql_loops(d, e, zt, max_iter):
    n = d.shape[0]
    cols = zt.shape[1]
    eps = 2.220446049250313e-16
    anorm = 0.0
    for i in range(n):
        anorm = max(anorm, abs(d[i]) + abs(e[i]))
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= eps * anorm:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                return False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for j in range(cols):
                    upper = zt[i + 1, j]
                    zt[i + 1, j] = s * zt[i, j] + c * upper
                    zt[i, j] = c * zt[i, j] - s * upper
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


def tridiag_ql_numba(d, e, zt, max_iter=60):
    return _tridiag_ql_loops(d, e, zt, max_iter)


if USE_NUMBA:
    apply_1q = apply_1q_numba
    apply_cnot = apply_cnot_numba
    vqc_expval = vqc_expval_numba
    vqc_grad = vqc_grad_numba
    conv2d_forward = conv2d_forward_numba
    conv2d_backward = conv2d_backward_numba
    tridiag_ql = tridiag_ql_numba
else:
    apply_1q = apply_1q_numpy
    apply_cnot = apply_cnot_numpy
    vqc_expval = vqc_expval_numpy
    vqc_grad = vqc_grad_numpy
    conv2d_forward = conv2d_forward_numpy
    conv2d_backward = conv2d_backward_numpy
    tridiag_ql = tridiag_ql_numpy

__all__ = [
    "HAVE_NUMBA", "USE_NUMBA", "RX", "RY", "RZ", "CNOT",
    "apply_1q", "apply_cnot", "vqc_expval", "vqc_grad",
    "conv2d_forward", "conv2d_backward", "tridiag_ql",
    "rotation_matrix", "z_signs", "product_states_rx",
]
