"""Projected exact solutions, discrete error norms and convergence orders."""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .poly import basis_batch, l2_project_edges
from .quadrature import cell_rule_batch

VOIGT = np.array([1.0, 1.0, 2.0])


def _project_cells(opset, f, r, ncomp):
    """Interior L2 projections of ``f`` onto ``P_r`` for every cell, as ``{cell: (dim, ncomp)}`` batches."""
    out = []
    deg = min(20, 2 * r + 10)
    for grp, sl in opset.chunk_groups:
        pts, wts = cell_rule_batch(grp.coords[sl], grp.triangles[sl], deg)
        phi = basis_batch(pts, grp.centroids[sl], grp.diameters[sl], r)
        M = np.einsum("cq,cqi,cqj->cij", wts, phi, phi)
        vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float).reshape(*wts.shape, ncomp)
        b = np.einsum("cq,cqi,cqn->cin", wts, phi, vals)
        out.append(np.linalg.solve(M, b))
    return out


def project_exact(opset, problem):
    """DOF vector of ``(Q_h w, Q_h theta)`` in the global layout of ``opset``.

    Interiors are L2 projections onto ``P_k`` / ``[P_q]^2``; edges are L2
    projections onto ``P_p`` / ``[P_m]^2`` in the global edge orientation.
    """
    dm = opset.dofmap
    mesh = opset.mesh
    cfg = opset.config
    x = np.zeros(dm.total)
    cw = _project_cells(opset, problem.w, cfg.k, 1)
    ct = _project_cells(opset, problem.theta, cfg.q, 2)
    for (grp, sl), a, b in zip(opset.chunk_groups, cw, ct):
        cells = grp.cells[sl]
        x[cells[:, None] * dm.dk + np.arange(dm.dk)] = a[..., 0]
        base = dm.n_w + cells[:, None] * 2 * dm.dq
        x[base + np.arange(dm.dq)] = b[..., 0]
        x[base + dm.dq + np.arange(dm.dq)] = b[..., 1]
    ev = mesh.edge_vertices
    a, b = mesh.vertices[ev[:, 0]], mesh.vertices[ev[:, 1]]
    e = np.arange(mesh.n_edges)
    x[dm.n_cells * dm.dk + e[:, None] * dm.nbw + np.arange(dm.nbw)] = l2_project_edges(a, b, problem.w, cfg.p)
    th = l2_project_edges(a, b, problem.theta, cfg.m)  # (ne, m+1, 2)
    base = dm.n_w + dm.n_cells * 2 * dm.dq + e[:, None] * 2 * dm.nbt
    x[base + np.arange(dm.nbt)] = th[..., 0]
    x[base + dm.nbt + np.arange(dm.nbt)] = th[..., 1]
    return x


def _local(opset, x):
    for ops, dofs, _ in opset:
        yield ops, x[dofs], ops.layout.n_w


def _quad(v, M):
    # sum over cells of v^T M v for stacked v (nc, d)
    return float(np.sum(np.einsum("ci,cij,cj->c", v, M, v)))


def energy_norm_w(x, opset):
    """``(sum_T |grad_w v|^2_T)^1/2`` of the ``w`` part of ``x``."""
    tot = 0.0
    for ops, c, nw in _local(opset, x):
        g = np.einsum("cij,cj->ci", ops.G, c[:, :nw])
        d1 = ops.M1.shape[1]
        tot += _quad(g[:, :d1], ops.M1) + _quad(g[:, d1:], ops.M1)
    return math.sqrt(max(tot, 0.0))


def energy_norm_theta(x, opset):
    """``(sum_T |eps_w eta|^2_T)^1/2`` with the Voigt weight on the 12 entry."""
    tot = 0.0
    for ops, c, nw in _local(opset, x):
        e = np.einsum("cij,cj->ci", ops.E, c[:, nw:])
        d2 = ops.M2.shape[1]
        tot += sum(VOIGT[i] * _quad(e[:, i * d2:(i + 1) * d2], ops.M2) for i in range(3))
    return math.sqrt(max(tot, 0.0))


def l2_norm_w(x, opset, with_edges=False):
    """L2 norm of the interior part ``v0``; ``with_edges`` adds ``sum_T h_T ||vb||^2_dT``."""
    tot = 0.0
    for ops, c, nw in _local(opset, x):
        dk = ops.Mk.shape[1]
        tot += _quad(c[:, :dk], ops.Mk)
        if with_edges:
            tot += _edge_part(ops, c[:, dk:nw], ops.config.p)
    return math.sqrt(max(tot, 0.0))


def l2_norm_theta(x, opset, with_edges=False):
    tot = 0.0
    for ops, c, nw in _local(opset, x):
        dq = ops.Mq.shape[1]
        t = c[:, nw:]
        tot += _quad(t[:, :dq], ops.Mq) + _quad(t[:, dq:2 * dq], ops.Mq)
        if with_edges:
            m = ops.config.m
            eb = t[:, 2 * dq:].reshape(len(ops), -1, 2, m + 1)
            tot += _edge_part(ops, eb[:, :, 0].reshape(len(ops), -1), m)
            tot += _edge_part(ops, eb[:, :, 1].reshape(len(ops), -1), m)
    return math.sqrt(max(tot, 0.0))


def _edge_part(ops, cb, deg):
    # h_T * sum_e ||vb||^2_e with the diagonal Legendre Gram matrix L/(2a+1)
    nc = len(ops)
    L = ops.extra.get("edge_lengths")
    if L is None:
        raise ValueError("edge lengths not recorded on LocalOperators")
    cb = cb.reshape(nc, -1, deg + 1)
    g = 1.0 / (2.0 * np.arange(deg + 1) + 1.0)
    return float(np.sum(ops.diameters[:, None] * L * np.sum(g * cb ** 2, axis=2)))


def shear_error(xh, opset, problem, params=None):
    """``lam^-1/2 t ||gamma - gamma_h||`` with ``gamma_h = lam t^-2 (grad_w w_h - Q_r1 theta_0)``."""
    params = problem.params if params is None else params
    s = params.shear_weight
    tot = 0.0
    for (ops, dofs, (grp, sl)) in opset:
        c = xh[dofs]
        B = np.concatenate([ops.G, -ops.Pint], axis=2)
        gh = s * np.einsum("cij,cj->ci", B, c)
        r1 = ops.config.r1
        deg = min(20, 2 * r1 + 12)
        pts, wts = cell_rule_batch(grp.coords[sl], grp.triangles[sl], deg)
        psi = basis_batch(pts, grp.centroids[sl], grp.diameters[sl], r1)
        d1 = psi.shape[-1]
        gam = problem.gamma(pts[..., 0], pts[..., 1])
        diff = gam - np.stack([np.einsum("cqi,ci->cq", psi, gh[:, :d1]),
                               np.einsum("cqi,ci->cq", psi, gh[:, d1:])], axis=-1)
        tot += float(np.sum(wts[..., None] * diff ** 2))
    return params.t * math.sqrt(tot) / math.sqrt(params.lam)


ERROR_FIELDS = ("errL2_w", "errE_w", "errL2_th", "errE_th", "shear")


@dataclass
class ErrorRow:
    level: int
    h: float
    errL2_w: float
    errE_w: float
    errL2_th: float
    errE_th: float
    shear: float = float("nan")
    orders: dict = field(default_factory=dict)

    def __post_init__(self):
        for f in ERROR_FIELDS:
            v = getattr(self, f)
            if v < 0:
                raise ValueError(f"{f} must be non-negative, got {v}")

    def order(self, name):
        return self.orders.get(name)


def compute_errors(level, xh, opset, problem, params=None, with_shear=True, with_edges=False):
    """All error columns of one refinement level."""
    xq = project_exact(opset, problem)
    d = xq - xh
    return ErrorRow(
        level=level, h=opset.mesh.h_max,
        errL2_w=l2_norm_w(d, opset, with_edges), errE_w=energy_norm_w(d, opset),
        errL2_th=l2_norm_theta(d, opset, with_edges), errE_th=energy_norm_theta(d, opset),
        shear=shear_error(xh, opset, problem, params) if with_shear else float("nan"))


def _order(e0, e1, h0, h1):
    if not (e0 > 0 and e1 > 0 and h0 > 0 and h1 > 0) or h0 == h1:
        return None
    if math.isnan(e0) or math.isnan(e1):
        return None
    return math.log(e0 / e1) / math.log(h0 / h1)


def convergence_orders(rows):
    """Annotate each row with ``log(e_prev / e) / log(h_prev / h)``; first row and non-positive errors get ``None``."""
    out = []
    prev = None
    for r in rows:
        orders = {f: None for f in ERROR_FIELDS}
        if prev is not None:
            for f in ERROR_FIELDS:
                orders[f] = _order(getattr(prev, f), getattr(r, f), prev.h, r.h)
        out.append(replace(r, orders=orders))
        prev = r
    return out


__all__ = ["ErrorRow", "compute_errors", "convergence_orders", "energy_norm_theta",
           "energy_norm_w", "l2_norm_theta", "l2_norm_w", "project_exact", "shear_error"]
