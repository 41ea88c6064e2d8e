from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp

from wg_plate.assembly import apply_essential_bc, assemble_system
from wg_plate.errors import InvalidArgumentError, NotSPDError, SolverError
from wg_plate.mesh import generate_mesh
from wg_plate.rm_model import PlateParams, problem1
from wg_plate.solver import (RESIDUAL_LIMIT, cholesky_factor, relative_residual, smallest_ritz_value,
                             solve_spd)
from wg_plate.weakops import preset_degrees


def _reduced(family="tri", n=2, preset="P1", t=1.0):
    mesh = generate_mesh(family, n)
    pr = problem1(PlateParams(t=t))
    return apply_essential_bc(assemble_system(mesh, preset_degrees(preset, family), pr), pr)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_identity(method):
    x, rep = solve_spd(sp.identity(4, format="csr"), np.eye(4)[0], method)
    np.testing.assert_array_equal(np.asarray(x, dtype=float), np.eye(4)[0])
    assert rep.method == method and rep.residual == 0.0


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_two_by_two(method):
    x, rep = solve_spd(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.ones(2), method)
    np.testing.assert_allclose(np.asarray(x, dtype=float), [1 / 3, 1 / 3], rtol=1e-15)
    assert rep.residual <= RESIDUAL_LIMIT
    if method == "direct":
        assert rep.iterations == 0


@pytest.mark.parametrize("t", [1.0, 0.01])
def test_direct_and_cg_agree(t):
    red = _reduced(t=t)
    xd, _ = solve_spd(red.A, red.F, "direct")
    xc, rc = solve_spd(red.A, red.F, "cg")
    assert rc.iterations > 0
    assert np.abs(xd - xc).max() <= 1e-9 * np.abs(xd).max()


def _exact_residual(A, x, F):
    A = A.tocoo()
    xs = [Fraction(*v.as_integer_ratio()) for v in np.asarray(x, dtype=np.longdouble)]
    r = [-Fraction(float(f)) for f in F]
    for i, j, a in zip(A.row, A.col, A.data):
        r[i] += Fraction(float(a)) * xs[j]
    num = sum(v * v for v in r)
    den = sum(Fraction(float(f)) ** 2 for f in F)
    return float(num / den) ** 0.5


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_reported_residual_matches_exact_recomputation(method):
    red = _reduced("tri", 1)
    x, rep = solve_spd(red.A, red.F, method)
    assert abs(rep.residual - _exact_residual(red.A, x, red.F)) <= 1e-15
    assert rep.residual == relative_residual(red.A, x, red.F)


def test_indefinite_matrix_rejected():
    A = sp.csr_matrix([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotSPDError):
        cholesky_factor(A)
    with pytest.raises(NotSPDError):
        solve_spd(A, np.ones(2))


def test_negative_diagonal_rejected_by_cg():
    with pytest.raises(NotSPDError):
        solve_spd(sp.csr_matrix([[-1.0, 0.0], [0.0, 1.0]]), np.ones(2), "cg")


def test_cg_iteration_cap(monkeypatch):
    import wg_plate.solver as solver
    red = _reduced("tri", 2, t=0.01)
    real = solver._cg_once
    monkeypatch.setattr(solver, "_cg_once", lambda A, b, tol, M, maxiter: real(A, b, tol, M, 3))
    with pytest.raises(SolverError, match="iteration cap"):
        solve_spd(red.A, red.F, "cg")


def test_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        solve_spd(sp.identity(2), np.ones(2), "lu")
    with pytest.raises(InvalidArgumentError):
        solve_spd(sp.identity(2), np.ones(3))


def test_ritz_value_bounds_smallest_eigenvalue():
    red = _reduced("polyA", 2)
    lam = np.linalg.eigvalsh(red.A.toarray())
    ritz = smallest_ritz_value(red.A, 50)
    assert ritz >= lam[0] * (1 - 1e-10)
    full = smallest_ritz_value(red.A, red.A.shape[0])
    assert full == pytest.approx(lam[0], rel=1e-8)


def test_ritz_value_of_diagonal():
    A = sp.diags(np.arange(1.0, 11.0)).tocsr()
    assert smallest_ritz_value(A, 10) == pytest.approx(1.0, rel=1e-12)


ACCEPTANCE_COARSE = {
    ("tri", "P1"): (4, 5), ("tri", "P2"): (4, 5), ("tri", "P3"): (3, 4),
    ("polyA", "P1"): (3, 4), ("polyA", "P2"): (3, 4), ("polyA", "P3"): (3, 4),
    ("polyB", "P1"): (3, 4), ("polyB", "P2"): (3, 4), ("polyB", "P3"): (3, 4),
    ("disk", "P1"): (3, 4), ("disk", "P2"): (3, 4), ("disk", "P3"): (2, 3),
}


@pytest.mark.slow
@pytest.mark.parametrize("family,preset", list(ACCEPTANCE_COARSE))
def test_direct_and_cg_agree_on_acceptance_meshes(family, preset):
    from wg_plate.assembly import build_operators
    from wg_plate.rm_model import get_problem
    cfg = preset_degrees(preset, family)
    for level in ACCEPTANCE_COARSE[family, preset]:
        mesh = generate_mesh(family, 2 ** level)
        ops = build_operators(mesh, cfg)
        for t in (1.0, 0.01):
            pr = get_problem(2 if family == "disk" else 1, PlateParams(t=t))
            red = apply_essential_bc(assemble_system(mesh, cfg, pr, operators=ops), pr, check_spd=False)
            xd, _ = solve_spd(red.A, red.F, "direct")
            xc, _ = solve_spd(red.A, red.F, "cg")
            gap = float(np.abs(xd - xc).max() / np.abs(xd).max())
            assert gap <= 1e-8, f"level {level} t={t:g}: {gap:.2e}"
