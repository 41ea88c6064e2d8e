"""Solvers for the reduced symmetric positive definite system.

``direct`` factors with SuperLU in symmetric mode (diagonal pivots only, one
symmetric fill-reducing ordering).  With diagonal pivoting on a symmetric
matrix the factorisation is ``P A P^T = L U`` with ``U = D L^T``, so it is a
Cholesky factorisation in disguise; a non-positive pivot or a row/column
permutation mismatch is reported as :class:`NotSPDError`.
"""
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigvalsh_tridiagonal

from .errors import InvalidArgumentError, NotSPDError, SolverError

RESIDUAL_LIMIT = 1e-10
METHODS = ("direct", "cg")


@dataclass(frozen=True)
class SolveReport:
    method: str
    iterations: int
    residual: float  # ||A x - F|| / ||F||
    wall_time: float


def residual_vector(A, x, F):
    """``A x - F`` accumulated in extended precision and rounded once.

    For thin plates ``|A| |x|`` exceeds ``|F|`` by several orders, so a plain
    double matvec would add rounding noise above the residual being measured.
    """
    A = sp.csr_matrix(A)
    ld = np.longdouble
    prod = A.data.astype(ld) * np.asarray(x, dtype=ld)[A.indices]
    r = np.zeros(A.shape[0], dtype=ld)
    nz = np.diff(A.indptr) > 0
    if prod.size:
        r[nz] = np.add.reduceat(prod, A.indptr[:-1][nz])
    return (r - np.asarray(F, dtype=ld)).astype(float)


def relative_residual(A, x, F):
    nf = np.linalg.norm(F)
    r = np.linalg.norm(residual_vector(A, x, F))
    return r / nf if nf > 0 else r


class CholeskyFactor:
    """Symmetric sparse LU with diagonal pivoting; ``solve`` applies it."""

    def __init__(self, lu):
        self.lu = lu

    def solve(self, b):
        return self.lu.solve(b)

    @property
    def pivots(self):
        return self.lu.U.diagonal()


def cholesky_factor(A):
    """Factor SPD ``A``; raises :class:`NotSPDError` if a pivot is non-positive."""
    A = sp.csc_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise InvalidArgumentError(f"matrix must be square, got {A.shape}")
    if n == 0:
        raise InvalidArgumentError("empty system")
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise NotSPDError(f"factorization failed: {exc}") from None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise NotSPDError("off-diagonal pivoting occurred; matrix is not SPD")
    piv = lu.U.diagonal()
    bad = np.flatnonzero(~(piv > 0))
    if bad.size:
        j = int(bad[0])
        raise NotSPDError(f"non-positive pivot {piv[j]:.3e} at step {j} of {n}")
    return CholeskyFactor(lu)


def _refine(A, F, x, correct, tol, steps=6):
    """Iterative refinement with the iterate and residual kept in extended precision.

    ``correct(r)`` returns an approximate double-precision solve of ``A d = r``.
    A double iterate cannot get below ``eps |A| |x| / |F|``, which for thin
    plates on fine meshes is above the residual bar, hence the wider iterate.
    """
    ld = np.longdouble
    x = np.asarray(x, dtype=ld)
    nf = np.linalg.norm(F)
    its = 0
    for _ in range(steps):
        r = residual_vector(A, x, F)
        res = np.linalg.norm(r) / nf if nf > 0 else np.linalg.norm(r)
        if res <= tol:
            break
        d, k = correct(r)
        its += k
        x = x - d.astype(ld)
    return x, its


def _direct(A, F, tol):
    fac = cholesky_factor(A)
    return _refine(A, F, fac.solve(F), lambda r: (fac.solve(r), 0), tol)


def _cg_once(A, b, tol, Minv, maxiter):
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=maxiter, M=Minv, callback=cb)
    if info > 0:
        raise SolverError(f"cg hit the iteration cap {maxiter} with residual "
                          f"{relative_residual(A, x, b):.3e}")
    if info < 0:
        raise SolverError(f"cg breakdown (info={info})")
    return x, count[0]


def _cg(A, F, tol):
    n = A.shape[0]
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotSPDError("non-positive diagonal entry; Jacobi preconditioner undefined")
    Minv = spla.LinearOperator((n, n), matvec=lambda v: v / d, dtype=float)
    maxiter = 20 * n
    budget = [maxiter]

    def correct(r):
        x, k = _cg_once(A, r, max(tol, 1e-9), Minv, budget[0])
        budget[0] -= k
        return x, k

    x0, k0 = _cg_once(A, F, tol, Minv, maxiter)
    budget[0] -= k0
    x, k = _refine(A, F, x0, correct, tol)
    return x, k0 + k


def solve_spd(A, F, method="direct", tol=1e-12):
    """Solve ``A x = F`` for sparse SPD ``A``.

    Parameters
    ----------
    method : {"direct", "cg"}
        Sparse Cholesky-type factorisation or Jacobi-preconditioned CG
        (at most ``20 n`` iterations).
    tol : float
        Target relative residual.

    Returns
    -------
    x : ndarray of ``np.longdouble``
        Extended-precision solution; the reported residual is that of this
        vector.  Cast to ``float`` for downstream use.
    report : SolveReport
    """
    if method not in METHODS:
        raise InvalidArgumentError(f"unknown solver {method!r}; expected one of {METHODS}")
    A = sp.csr_matrix(A)
    F = np.asarray(F, dtype=float)
    if F.shape != (A.shape[0],):
        raise InvalidArgumentError(f"right-hand side shape {F.shape} does not match {A.shape}")
    t0 = time.perf_counter()
    x, its = (_direct if method == "direct" else _cg)(A, F, tol)
    wall = time.perf_counter() - t0
    res = relative_residual(A, x, F)
    if not res <= RESIDUAL_LIMIT:
        raise SolverError(f"{method} solve residual {res:.3e} exceeds {RESIDUAL_LIMIT:g}")
    return x, SolveReport(method, its, float(res), wall)


def smallest_ritz_value(A, iterations=50, seed=0):
    """Smallest Ritz value of symmetric ``A`` after Lanczos with full reorthogonalisation."""
    A = sp.csr_matrix(A)
    n = A.shape[0]
    m = min(iterations, n)
    rng = np.random.default_rng(seed)
    Q = np.zeros((m, n))
    alpha = np.zeros(m)
    beta = np.zeros(max(m - 1, 0))
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    for j in range(m):
        Q[j] = q
        v = A @ q
        alpha[j] = q @ v
        v -= Q[:j + 1].T @ (Q[:j + 1] @ v)
        v -= Q[:j + 1].T @ (Q[:j + 1] @ v)
        if j == m - 1:
            break
        b = np.linalg.norm(v)
        if b < 1e-14 * abs(alpha[j]):
            m = j + 1
            break
        beta[j] = b
        q = v / b
    ev = eigvalsh_tridiagonal(alpha[:m], beta[:m - 1], select="i", select_range=(0, 0))
    return float(ev[0])
