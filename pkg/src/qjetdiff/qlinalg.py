"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays (complex128 unless noted). Products and
Kronecker products defer to numpy; the Householder QR, the Hermitian
eigensolver (Householder tridiagonalisation followed by implicit-shift QL)
and the PSD square root are written out here.
"""
import numpy as np

from . import kernels


class LinAlgError(ValueError):
    """Raised for invalid shapes, non-Hermitian or rank-deficient inputs."""


def _as_matrix(a, name="matrix"):
    a = np.asarray(a)
    if a.ndim != 2:
        raise LinAlgError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinAlgError(f"{name} has non-finite entries")
    return a


def _as_square(a, name="matrix"):
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise LinAlgError(f"{name} must be square, got shape {a.shape}")
    return a


def matmul(a, b):
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise LinAlgError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def kron(a, b):
    return np.kron(_as_matrix(a, "a"), _as_matrix(b, "b"))


def dagger(a):
    return np.conj(_as_matrix(a)).T


def is_hermitian(m, tol=1e-10):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * scale)


def is_unitary(u, tol=1e-10):
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def qr_decompose(m):
    """Householder QR of a square full-rank matrix.

    ``r`` is returned with a real, positive diagonal so the factorisation is
    unique; rank deficiency (``|r_ii| < 1e-12``) raises :class:`LinAlgError`.
    """
    m = _as_square(m)
    n = m.shape[0]
    r = m.astype(np.complex128, copy=True)
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 1):
        x = r[k:, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * normx
        v /= np.linalg.norm(v)
        r[k:, k:] -= 2.0 * np.outer(v, v.conj() @ r[k:, k:])
        q[:, k:] -= 2.0 * np.outer(q[:, k:] @ v, v.conj())
        r[k + 1:, k] = 0.0
    diag = np.diag(r).copy()
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.any(np.abs(diag) < 1e-12 * scale):
        raise LinAlgError("matrix is rank deficient")
    phases = diag / np.abs(diag)
    q *= phases[None, :]
    r *= phases.conj()[:, None]
    return q, np.triu(r)


def _tridiagonalize(a):
    # A = Q T Q^H with T Hermitian tridiagonal
    n = a.shape[0]
    dtype = np.result_type(a.dtype, np.float64)
    a = a.astype(dtype, copy=True)
    q = np.eye(n, dtype=dtype)
    for k in range(n - 2):
        x = a[k + 1:, k]
        normx = np.linalg.norm(x)
        if normx == 0.0 or np.linalg.norm(x[1:]) == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * normx
        v /= np.linalg.norm(v)
        sub = a[k:, k:]
        w = np.zeros(n - k, dtype=dtype)
        w[1:] = v
        p = sub @ w
        kk = np.vdot(w, p).real
        sub -= 2.0 * np.outer(w, p.conj()) + 2.0 * np.outer(p, w.conj()) - 4.0 * kk * np.outer(w, w.conj())
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v.conj())
    return a, q


def herm_eig(m, tol=1e-10, max_iter=60):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with ascending real eigenvalues ``w`` and orthonormal
    eigenvector columns ``v``. Real symmetric input stays in real arithmetic.
    """
    m = _as_square(m)
    if not is_hermitian(m, tol):
        raise LinAlgError("matrix is not Hermitian")
    n = m.shape[0]
    real = not np.iscomplexobj(m) or not np.any(m.imag)
    if real:
        m = np.real(m).astype(np.float64)
    t, q = _tridiagonalize(m)
    d = np.real(np.diag(t)).copy()
    sub = np.diag(t, -1)
    e = np.zeros(n)
    e[: n - 1] = np.abs(sub)
    # diagonal phases turning the complex off-diagonal into a real one
    phases = np.ones(n, dtype=np.complex128)
    for k in range(n - 1):
        phases[k + 1] = phases[k] * (sub[k] / abs(sub[k]) if sub[k] != 0 else 1.0)
    basis = q * phases[None, :]
    if real:
        basis = basis.real.copy()
    zt = np.ascontiguousarray(basis.T)
    if not kernels.tridiag_ql(d, e, zt, max_iter):
        raise LinAlgError("eigenvalue iteration did not converge")
    order = np.argsort(d, kind="stable")
    return d[order], np.ascontiguousarray(zt[order].T)


def sqrtm_psd(m):
    """Principal square root of a Hermitian positive semi-definite matrix.

    Eigenvalues in ``[-1e-6, 0)`` are treated as rounding noise and clamped
    to zero; anything more negative raises :class:`LinAlgError`.
    """
    w, v = herm_eig(m)
    if w.size and w[0] < -1e-6:
        raise LinAlgError(f"matrix is not positive semi-definite (min eigenvalue {w[0]:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    s = (v * root[None, :]) @ v.conj().T
    return 0.5 * (s + s.conj().T)
