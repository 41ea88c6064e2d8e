"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import from ``WG_PLATE_NUMBA`` ("1" forces numba,
"0" forces numpy; unset means numba when importable) and can be switched at
runtime with :func:`set_backend`, which the benchmark and the tests use to run
both paths on identical inputs.

Every public function here takes and returns plain ndarrays so the two paths
are interchangeable.
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False


def _env_backend():
    flag = os.environ.get("WG_PLATE_NUMBA", "").strip().lower()
    if flag in ("0", "false", "no", "off", "numpy"):
        return "numpy"
    if flag in ("1", "true", "yes", "on", "numba"):
        if not HAVE_NUMBA:
            raise ImportError("WG_PLATE_NUMBA=1 but numba is not importable")
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


_BACKEND = _env_backend()


def backend():
    return _BACKEND


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise ImportError("numba is not importable")
    previous, _BACKEND = _BACKEND, name
    return previous


def monomial_exponents(r):
    """Graded exponent table ``(dim, 2)``: degree 0, then (1,0),(0,1), then (2,0),(1,1),(0,2), ..."""
    out = [(d - b, b) for d in range(r + 1) for b in range(d + 1)]
    return np.array(out, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------- numpy path


def _monomials_np(xh, yh, r, grad):
    exps = monomial_exponents(r)
    a, b = exps[:, 0], exps[:, 1]
    px = np.ones((xh.size, r + 1))
    py = np.ones((yh.size, r + 1))
    for i in range(1, r + 1):
        px[:, i] = px[:, i - 1] * xh
        py[:, i] = py[:, i - 1] * yh
    vals = px[:, a] * py[:, b]
    if not grad:
        return vals, None
    am = np.maximum(a - 1, 0)
    bm = np.maximum(b - 1, 0)
    g = np.empty((xh.size, a.size, 2))
    g[:, :, 0] = a * px[:, am] * py[:, b]
    g[:, :, 1] = b * px[:, a] * py[:, bm]
    return vals, g


def _legendre_np(s, p):
    x = 2.0 * s - 1.0
    out = np.empty((s.size, p + 1))
    out[:, 0] = 1.0
    if p >= 1:
        out[:, 1] = x
    for n in range(1, p):
        out[:, n + 1] = ((2 * n + 1) * x * out[:, n] - n * out[:, n - 1]) / (n + 1)
    return out


def _gram_np(A, B, w):
    return np.matmul(np.swapaxes(A * w[:, :, None], 1, 2), B)


def _scatter_np(K, dofs):
    nc, n = dofs.shape
    rows = np.broadcast_to(dofs[:, :, None], (nc, n, n)).reshape(-1)
    cols = np.broadcast_to(dofs[:, None, :], (nc, n, n)).reshape(-1)
    return rows.copy(), cols.copy(), K.reshape(-1).copy()


def _solve_np(M, R):
    return np.linalg.solve(M, R)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _monomials_nb(xh, yh, exps, r, grad):
        m = xh.size
        dim = exps.shape[0]
        vals = np.empty((m, dim))
        g = np.zeros((m, dim, 2)) if grad else np.zeros((0, dim, 2))
        px = np.empty(r + 1)
        py = np.empty(r + 1)
        for q in range(m):
            px[0] = 1.0
            py[0] = 1.0
            for i in range(1, r + 1):
                px[i] = px[i - 1] * xh[q]
                py[i] = py[i - 1] * yh[q]
            for i in range(dim):
                a = exps[i, 0]
                b = exps[i, 1]
                vals[q, i] = px[a] * py[b]
                if grad:
                    if a > 0:
                        g[q, i, 0] = a * px[a - 1] * py[b]
                    if b > 0:
                        g[q, i, 1] = b * px[a] * py[b - 1]
        return vals, g

    @njit(cache=True, nogil=True)
    def _legendre_nb(s, p):
        m = s.size
        out = np.empty((m, p + 1))
        for q in range(m):
            x = 2.0 * s[q] - 1.0
            out[q, 0] = 1.0
            if p >= 1:
                out[q, 1] = x
            for n in range(1, p):
                out[q, n + 1] = ((2 * n + 1) * x * out[q, n] - n * out[q, n - 1]) / (n + 1)
        return out

    @njit(cache=True, nogil=True)
    def _gram_nb(A, B, w):
        nc, P, ni = A.shape
        nj = B.shape[2]
        out = np.zeros((nc, ni, nj))
        for c in range(nc):
            for q in range(P):
                wq = w[c, q]
                if wq == 0.0:
                    continue
                for i in range(ni):
                    ai = A[c, q, i] * wq
                    for j in range(nj):
                        out[c, i, j] += ai * B[c, q, j]
        return out

    @njit(cache=True, nogil=True)
    def _scatter_nb(K, dofs):
        nc, n = dofs.shape
        total = nc * n * n
        rows = np.empty(total, dtype=dofs.dtype)
        cols = np.empty(total, dtype=dofs.dtype)
        vals = np.empty(total)
        pos = 0
        for c in range(nc):
            for i in range(n):
                for j in range(n):
                    rows[pos] = dofs[c, i]
                    cols[pos] = dofs[c, j]
                    vals[pos] = K[c, i, j]
                    pos += 1
        return rows, cols, vals

    @njit(cache=True, nogil=True)
    def _solve_nb(M, R):
        out = np.empty_like(R)
        for c in range(M.shape[0]):
            out[c] = np.linalg.solve(M[c], R[c])
        return out


# ---------------------------------------------------------------- dispatch


def monomials(xh, yh, r, grad=False):
    """Scaled monomials ``xh**a * yh**b`` (graded order) at flat point arrays.

    Returns ``(vals, grads)`` with shapes ``(M, dim)`` and ``(M, dim, 2)``;
    ``grads`` is with respect to the scaled coordinates and is ``None`` when
    ``grad`` is false.
    """
    xh = np.ascontiguousarray(xh, dtype=float).reshape(-1)
    yh = np.ascontiguousarray(yh, dtype=float).reshape(-1)
    if _BACKEND == "numba":
        vals, g = _monomials_nb(xh, yh, monomial_exponents(r), r, grad)
        return vals, (g if grad else None)
    return _monomials_np(xh, yh, r, grad)


def legendre01(s, p):
    """Shifted Legendre polynomials ``P_n(2s-1)``, ``n = 0..p``, shape ``(M, p+1)``."""
    s = np.ascontiguousarray(s, dtype=float).reshape(-1)
    if _BACKEND == "numba":
        return _legendre_nb(s, p)
    return _legendre_np(s, p)


def weighted_gram(A, B, w):
    """Batched ``out[c] = A[c].T @ diag(w[c]) @ B[c]``."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if _BACKEND == "numba":
        return _gram_nb(A, B, w)
    return _gram_np(A, B, w)


def scatter_coo(K, dofs):
    """Flatten batched dense blocks into COO triplets ``(rows, cols, vals)``."""
    K = np.ascontiguousarray(K, dtype=float)
    dofs = np.ascontiguousarray(dofs)
    if _BACKEND == "numba":
        return _scatter_nb(K, dofs)
    return _scatter_np(K, dofs)


def batched_solve(M, R):
    """Solve ``M[c] X[c] = R[c]`` for a stack of small dense systems."""
    M = np.ascontiguousarray(M, dtype=float)
    R = np.ascontiguousarray(R, dtype=float)
    if _BACKEND == "numba":
        return _solve_nb(M, R)
    return _solve_np(M, R)
