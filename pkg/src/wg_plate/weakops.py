"""Local weak-Galerkin operators on polygonal cells.

For each cell the discrete weak gradient, the discrete weak symmetric gradient,
the interior projection of the rotation and the displacement stabiliser are
realised as dense matrices acting on local degrees of freedom.  All of them
are built batched over a :class:`~wg_plate.mesh.CellGroup` (cells sharing a
vertex count) so the per-cell work runs through the kernels in
:mod:`wg_plate._kernels`.

Local layouts
-------------
``w``: interior block ``dim P_k`` then, per edge in cell order, ``p + 1`` edge
coefficients.

``theta``: interior block ``2 dim P_q`` (x component then y component) then,
per edge, ``2 (m + 1)`` edge coefficients (x block then y block).

Weak gradients are computed from the integrated-by-parts form
``(grad_w v, q) = (grad v0, q) + <vb - v0, q.n>``, and likewise for the
symmetric gradient with Voigt-weighted tensor test functions.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError, UnsupportedDegreeError
from .mesh import CellGroup
from .poly import basis_batch, check_conditioning, poly_dim, solve_checked
from .quadrature import MAX_TRIANGLE_DEGREE, cell_rule_batch, line_rule, triangulate_polygon


@dataclass(frozen=True)
class WeakSpaceConfig:
    """Degree tuple ``(k, p, r1; q, m, r2)`` of ``W_h`` and ``Theta_h``.

    ``k``/``p`` are the interior/edge degrees of the displacement, ``r1`` the
    weak-gradient degree; ``q``/``m``/``r2`` the same for the rotation.
    """

    k: int
    p: int
    r1: int
    q: int
    m: int
    r2: int

    def __post_init__(self):
        for name in ("k", "p", "r1", "q", "m", "r2"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidArgumentError(f"degree {name}={v!r} must be a non-negative integer")

    @property
    def label(self):
        return f"P{self.k}-P{self.p}-P{self.r1}/P{self.q}-P{self.m}-P{self.r2}"

    def volume_degree(self):
        """Polynomial degree of the richest volume integrand formed locally."""
        k, q, r1, r2 = self.k, self.q, self.r1, self.r2
        return max(2 * r1, 2 * r2, r1 + q, k + r1, q + r2, 2 * k, 2 * q, 1)

    def edge_degree(self):
        k, p, q, m, r1, r2 = self.k, self.p, self.q, self.m, self.r1, self.r2
        return max(2 * max(k, p), k + r1, p + r1, q + r2, m + r2, 1)


# r2 offset above k for each mesh family
_R2_OFFSET = {"tri": 1, "disk": 1, "polyA": 2, "polyB": 3}


def preset_degrees(preset, family="tri"):
    """Expand ``P1``/``P2``/``P3`` into the degree tuple used for ``family``.

    Triangles use ``Pk-Pk-Pk/Pk-Pk-P(k+1)``; the non-convex families raise the
    weak symmetric-gradient degree to ``k+2`` (``polyA``) and ``k+3`` (``polyB``).
    """
    name = str(preset).upper()
    if len(name) != 2 or name[0] != "P" or not name[1].isdigit() or name[1] == "0":
        raise InvalidArgumentError(f"unknown preset {preset!r}; expected P1, P2, P3, ...")
    if family not in _R2_OFFSET:
        raise InvalidArgumentError(f"unknown mesh family {family!r}")
    k = int(name[1])
    return WeakSpaceConfig(k, k, k, k, k, k + _R2_OFFSET[family])


def enriched_degrees(k, n_edges, convex):
    """Alternative rule ``r1 = r2 = N + k - 1`` (convex) or ``2N + k - 1`` (non-convex)."""
    r = (n_edges if convex else 2 * n_edges) + k - 1
    return WeakSpaceConfig(k, k, r, k, k, r)


@dataclass(frozen=True)
class LocalDofLayout:
    n_edges: int
    k: int
    p: int
    q: int
    m: int

    @property
    def w_interior(self):
        return poly_dim(self.k)

    @property
    def n_w(self):
        return self.w_interior + self.n_edges * (self.p + 1)

    @property
    def theta_interior(self):
        return 2 * poly_dim(self.q)

    @property
    def n_theta(self):
        return self.theta_interior + self.n_edges * 2 * (self.m + 1)

    def w_edge_slice(self, e):
        start = self.w_interior + e * (self.p + 1)
        return slice(start, start + self.p + 1)

    def theta_edge_slice(self, e):
        start = self.theta_interior + e * 2 * (self.m + 1)
        return slice(start, start + 2 * (self.m + 1))

    def blocks(self):
        """``(name, start, stop)`` for every block in local order."""
        out = [("w0", 0, self.w_interior)]
        out += [(f"wb{e}", s.start, s.stop) for e in range(self.n_edges)
                for s in [self.w_edge_slice(e)]]
        off = self.n_w
        out.append(("theta0", off, off + self.theta_interior))
        out += [(f"thetab{e}", off + s.start, off + s.stop) for e in range(self.n_edges)
                for s in [self.theta_edge_slice(e)]]
        return out


@dataclass
class LocalOperators:
    """Batched local operators for ``nc`` cells with the same vertex count.

    Shapes: ``G (nc, 2 d1, n_w)``, ``E (nc, 3 d2, n_theta)`` in Voigt order,
    ``Pint (nc, 2 d1, n_theta)``, ``S (nc, n_w, n_w)``, and the scalar mass
    matrices ``M1`` (``P_r1``), ``M2`` (``P_r2``), ``Mk`` (``P_k``), ``Mq`` (``P_q``).
    """

    cells: np.ndarray
    layout: LocalDofLayout
    config: WeakSpaceConfig
    G: np.ndarray
    E: np.ndarray
    Pint: np.ndarray
    S: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    Mk: np.ndarray
    Mq: np.ndarray
    diameters: np.ndarray
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cells)


def _mirror(M):
    # exact symmetry: copy the upper triangle into the lower one
    iu = np.triu_indices(M.shape[-1], 1)
    M = M.copy()
    M[..., iu[1], iu[0]] = M[..., iu[0], iu[1]]
    return M


def _edge_moments(psi_e, ell, wn):
    """``out[c, j, e, a] = sum_g wn[c,e,g] psi_e[c,e,g,j] ell[c,e,g,a]``."""
    nc, N, Gq, d = psi_e.shape
    na = ell.shape[-1]
    out = _kernels.weighted_gram(psi_e.reshape(nc * N, Gq, d), ell.reshape(nc * N, Gq, na),
                                 wn.reshape(nc * N, Gq))
    return out.reshape(nc, N, d, na).transpose(0, 2, 1, 3)


def build_local_operators(group, config, sl=slice(None), stabilizer_h=None):
    """Construct :class:`LocalOperators` for ``group`` (optionally a slice of its cells)."""
    cfg = config
    k, p, r1, q, m, r2 = cfg.k, cfg.p, cfg.r1, cfg.q, cfg.m, cfg.r2
    coords = group.coords[sl]
    cent = group.centroids[sl]
    h = group.diameters[sl]
    signs = group.signs[sl]
    tris = group.triangles[sl]
    cells = group.cells[sl]
    nc, N = coords.shape[:2]
    lay = LocalDofLayout(N, k, p, q, m)
    dk, dq, d1, d2 = poly_dim(k), poly_dim(q), poly_dim(r1), poly_dim(r2)

    dv = cfg.volume_degree()
    if dv > MAX_TRIANGLE_DEGREE:
        raise UnsupportedDegreeError(
            f"{cfg.label} needs volume quadrature degree {dv} > {MAX_TRIANGLE_DEGREE}")

    # volume quadrature and bases
    pts, wv = cell_rule_batch(coords, tris, dv)
    phik, dphik = basis_batch(pts, cent, h, k, grad=True)
    if q == k:
        phiq, dphiq = phik, dphik
    else:
        phiq, dphiq = basis_batch(pts, cent, h, q, grad=True)
    psi1 = basis_batch(pts, cent, h, r1)
    psi2 = psi1 if r2 == r1 else basis_batch(pts, cent, h, r2)

    # edge quadrature; edge i runs from local vertex i to i+1
    rule = line_rule(cfg.edge_degree())
    u, gw = rule.points, rule.weights
    Gq = u.size
    start = coords
    vec = np.roll(coords, -1, axis=1) - coords
    L = np.hypot(vec[..., 0], vec[..., 1])
    normal = np.stack([vec[..., 1], -vec[..., 0]], axis=-1) / L[..., None]
    ept = start[:, :, None, :] + u[None, None, :, None] * vec[:, :, None, :]
    we = L[:, :, None] * gw[None, None, :]
    flat = ept.reshape(nc, N * Gq, 2)
    phik_e = basis_batch(flat, cent, h, k).reshape(nc, N, Gq, dk)
    phiq_e = phik_e if q == k else basis_batch(flat, cent, h, q).reshape(nc, N, Gq, dq)
    psi1_e = basis_batch(flat, cent, h, r1).reshape(nc, N, Gq, d1)
    psi2_e = psi1_e if r2 == r1 else basis_batch(flat, cent, h, r2).reshape(nc, N, Gq, d2)

    def edge_legendre(deg):
        plus = _kernels.legendre01(u, deg)
        minus = _kernels.legendre01(1.0 - u, deg)
        return np.where((signs > 0)[:, :, None, None], plus[None, None], minus[None, None])

    ell_p = edge_legendre(p)
    ell_m = ell_p if m == p else edge_legendre(m)
    wn = [we * normal[..., c, None] for c in range(2)]

    gram = _kernels.weighted_gram
    M1 = _mirror(gram(psi1, psi1, wv))
    M2 = M1 if r2 == r1 else _mirror(gram(psi2, psi2, wv))
    Mk = _mirror(gram(phik, phik, wv))
    Mq = Mk if q == k else _mirror(gram(phiq, phiq, wv))
    for M, what in ((M1, "P_r1 mass"), (M2, "P_r2 mass"), (Mk, "P_k mass"), (Mq, "P_q mass")):
        check_conditioning(M, cells, what)

    def trace_moment(psi_e, phi_e, c):
        d_a, d_b = psi_e.shape[-1], phi_e.shape[-1]
        return gram(psi_e.reshape(nc, N * Gq, d_a), phi_e.reshape(nc, N * Gq, d_b),
                    wn[c].reshape(nc, N * Gq))

    # weak gradient: rhs for test q = psi_j e_c
    R = []
    for c in range(2):
        interior = gram(psi1, dphik[..., c], wv) - trace_moment(psi1_e, phik_e, c)
        edges = _edge_moments(psi1_e, ell_p, wn[c]).reshape(nc, d1, N * (p + 1))
        R.append(np.concatenate([interior, edges], axis=2))
    X = solve_checked(M1, np.concatenate(R, axis=2), cells=cells)
    nw = lay.n_w
    G = np.concatenate([X[:, :, :nw], X[:, :, nw:]], axis=1)

    # weak symmetric gradient: Voigt test tensors psi_j E11, psi_j E22, psi_j (E12 + E21)
    A = [gram(psi2, dphiq[..., c], wv) - trace_moment(psi2_e, phiq_e, c) for c in range(2)]
    C = [_edge_moments(psi2_e, ell_m, wn[c]) for c in range(2)]  # (nc, d2, N, m+1)
    Z_int = np.zeros((nc, d2, dq))
    Z_edge = np.zeros((nc, d2, N, m + 1))

    def theta_rhs(ix, iy, ex, ey):
        interior = np.concatenate([ix, iy], axis=2)
        edges = np.stack([ex, ey], axis=3).reshape(nc, d2, N * 2 * (m + 1))
        return np.concatenate([interior, edges], axis=2)

    R11 = theta_rhs(A[0], Z_int, C[0], Z_edge)
    R22 = theta_rhs(Z_int, A[1], Z_edge, C[1])
    R12 = theta_rhs(A[1], A[0], C[1], C[0])
    nt = lay.n_theta
    X = solve_checked(M2, np.concatenate([R11, R22, R12], axis=2), cells=cells)
    E = np.concatenate([X[:, :, :nt], X[:, :, nt:2 * nt], 0.5 * X[:, :, 2 * nt:]], axis=1)

    # interior projection of theta_0 onto [P_r1]^2
    P = solve_checked(M1, gram(psi1, phiq, wv), cells=cells)
    Pint = np.zeros((nc, 2 * d1, nt))
    Pint[:, :d1, :dq] = P
    Pint[:, d1:, dq:2 * dq] = P

    # stabiliser h^-1 <w0 - wb, v0 - vb>_{dT}
    D = np.zeros((nc, N, Gq, nw))
    D[..., :dk] = phik_e
    for e in range(N):
        D[:, e, :, lay.w_edge_slice(e)] = -ell_p[:, e]
    hs = h if stabilizer_h is None else np.broadcast_to(np.asarray(stabilizer_h, dtype=float), h.shape)
    S = gram(D.reshape(nc, N * Gq, nw), D.reshape(nc, N * Gq, nw), we.reshape(nc, N * Gq))
    S = _mirror(S / hs[:, None, None])

    return LocalOperators(cells, lay, cfg, G, E, Pint, S, M1, M2, Mk, Mq, h, {"edge_lengths": L})


# ---------------------------------------------------------------- single-cell API


def single_cell_group(cell, signs=None):
    """Wrap one cell (a :class:`~wg_plate.mesh.Cell` or a CCW coordinate array) as a one-cell group."""
    from .mesh import Cell

    if not hasattr(cell, "coords"):
        cell = Cell.from_coords(cell)
    P = np.asarray(cell.coords, dtype=float)
    N = len(P)
    signs = np.ones(N, dtype=np.int64) if signs is None else np.asarray(signs, dtype=np.int64)
    tris = np.array([[0, 1, 2]]) if N == 3 else triangulate_polygon(P)
    return CellGroup(N, np.array([0]), P[None], np.arange(N)[None], signs[None],
                     np.asarray(cell.centroid, dtype=float)[None], np.array([cell.diameter]), tris[None])


def local_operators(cell, config, signs=None, stabilizer_h=None):
    return build_local_operators(single_cell_group(cell, signs), config, stabilizer_h=stabilizer_h)


def weak_gradient_matrix(cell, k, p, r1, signs=None):
    """``(2 dim P_r1, n_w)`` matrix mapping local ``w`` DOFs to coefficients of the weak gradient."""
    return local_operators(cell, WeakSpaceConfig(k, p, r1, k, p, r1), signs).G[0]


def weak_sym_gradient_matrix(cell, q, m, r2, signs=None):
    """``(3 dim P_r2, n_theta)`` matrix mapping local ``theta`` DOFs to Voigt coefficients of the weak symmetric gradient."""
    return local_operators(cell, WeakSpaceConfig(q, m, r2, q, m, r2), signs).E[0]


def interior_projection_matrix(cell, q, r1, m=None, signs=None):
    """``(2 dim P_r1, n_theta)`` matrix projecting ``theta_0`` componentwise onto ``P_r1``; edge columns are zero."""
    m = q if m is None else m
    return local_operators(cell, WeakSpaceConfig(q, m, r1, q, m, r1), signs).Pint[0]


def stabilizer_matrix(cell, k, p, h_T=None, signs=None):
    """``(n_w, n_w)`` stabiliser ``h_T^-1 int_{dT} (w0 - wb)(v0 - vb)``."""
    return local_operators(cell, WeakSpaceConfig(k, p, k, k, p, k), signs, stabilizer_h=h_T).S[0]
