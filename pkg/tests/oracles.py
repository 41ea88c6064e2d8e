"""Independent reference computations for the test suite.

Nothing here imports the package.  Polynomials are raw 2-D coefficient arrays
``c[a, b]`` of ``x^a y^b``; cell integrals are exact through the divergence
theorem applied to composed 1-D polynomials, so no quadrature rule is involved.
"""
import itertools
from fractions import Fraction

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial import polynomial as P


# ---------------------------------------------------------------- raw polynomials


def padd(a, b):
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])))
    out[:a.shape[0], :a.shape[1]] += a
    out[:b.shape[0], :b.shape[1]] += b
    return out


def pmul(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i, j in zip(*np.nonzero(a)):
        out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def pder(c, axis):
    if c.shape[axis] == 1:
        return np.zeros((1, 1))
    return P.polyder(c, axis=axis)


def monomial(a, b):
    c = np.zeros((a + 1, b + 1))
    c[a, b] = 1.0
    return c


def peval(c, x, y):
    return P.polyval2d(x, y, c)


def random_poly(rng, deg):
    c = np.zeros((deg + 1, deg + 1))
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            c[a, b] = rng.standard_normal()
    return c


def on_segment(c, p0, p1):
    """``c`` restricted to ``p0 + s (p1 - p0)`` as a :class:`Polynomial` in ``s``."""
    X = Polynomial([p0[0], p1[0] - p0[0]])
    Y = Polynomial([p0[1], p1[1] - p0[1]])
    out = Polynomial([0.0])
    for a, b in zip(*np.nonzero(c)):
        out = out + c[a, b] * X ** int(a) * Y ** int(b)
    return out


def integral01(poly):
    return float(poly.integ()(1.0) - poly.integ()(0.0))


def edges_of(coords):
    C = np.asarray(coords, dtype=float)
    return [(C[i], C[(i + 1) % len(C)]) for i in range(len(C))]


def _fmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _fpow(a, n):
    out = [Fraction(1)]
    for _ in range(n):
        out = _fmul(out, a)
    return out


def polygon_integral(c, coords):
    """``int_T c`` via ``int x^a y^b = oint x^(a+1)/(a+1) y^b n_x ds``, in exact rational arithmetic."""
    c = np.asarray(c, dtype=float)
    tot = Fraction(0)
    for p0, p1 in edges_of(coords):
        x0, y0 = Fraction(float(p0[0])), Fraction(float(p0[1]))
        dx, dy = Fraction(float(p1[0])) - x0, Fraction(float(p1[1])) - y0
        if dy == 0:
            continue
        X, Y = [x0, dx], [y0, dy]
        for a, b in zip(*np.nonzero(c)):
            f = _fmul(_fpow(X, int(a) + 1), _fpow(Y, int(b)))
            seg = sum(v / (i + 1) for i, v in enumerate(f))
            tot += Fraction(float(c[a, b])) / (int(a) + 1) * dy * seg
    return float(tot)


def moment_table(coords, deg):
    """``m[a, b] = int_T x^a y^b`` for ``a + b <= deg``."""
    m = np.zeros((deg + 1, deg + 1))
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            m[a, b] = polygon_integral(monomial(a, b), coords)
    return m


def integrate(c, mom):
    a, b = c.shape
    if a > mom.shape[0] or b > mom.shape[1]:
        raise ValueError("moment table too small")
    return float(np.sum(c * mom[:a, :b]))


def segment_integral(c, p0, p1, weight=None):
    """``int_e c * weight(s) ds`` with ``weight`` a 1-D polynomial in the arc parameter."""
    f = on_segment(c, p0, p1)
    if weight is not None:
        f = f * weight
    return float(np.hypot(*(np.asarray(p1) - np.asarray(p0)))) * integral01(f)


# ---------------------------------------------------------------- bases


def graded_exponents(r):
    return [(d - b, b) for d in range(r + 1) for b in range(d + 1)]


def scaled_monomials(r, xc, yc, h):
    out = []
    for a, b in graded_exponents(r):
        px = P.polypow([-xc / h, 1.0 / h], a)
        py = P.polypow([-yc / h, 1.0 / h], b)
        out.append(np.outer(px, py))
    return out


def legendre01(a, reverse=False):
    poly = Legendre.basis(a, domain=[0.0, 1.0]).convert(kind=Polynomial)
    if reverse:
        poly = poly(Polynomial([1.0, -1.0]))
    return poly


def geometry(coords):
    """Area, centroid and diameter from moments and pairwise distances."""
    C = np.asarray(coords, dtype=float)
    mom = moment_table(C, 1)
    area = mom[0, 0]
    cent = np.array([mom[1, 0], mom[0, 1]]) / area
    diam = max(np.hypot(*(p - q)) for p, q in itertools.combinations(C, 2))
    return area, cent, diam


def edge_projection(f_coeffs, p0, p1, deg, reverse=False):
    """Legendre coefficients of the L2 projection of a raw polynomial onto ``P_deg(e)``."""
    f = on_segment(f_coeffs, p0, p1)
    return np.array([(2 * a + 1) * integral01(f * legendre01(a, reverse)) for a in range(deg + 1)])


# ---------------------------------------------------------------- local operators


class LocalOracle:
    """Dense reference for the local operators of one polygonal cell.

    Local DOF order: ``w0`` (scaled monomials of degree ``k``), then ``p + 1``
    Legendre coefficients per edge; ``theta0`` x block then y block, then per
    edge an x block and a y block of ``m + 1`` coefficients.  ``signs[e] < 0``
    means the edge parameter runs from local vertex ``e + 1`` to ``e``.
    """

    def __init__(self, coords, k, p, r1, q, m, r2, signs=None, h_stab=None):
        self.C = np.asarray(coords, dtype=float)
        self.N = len(self.C)
        self.k, self.p, self.r1, self.q, self.m, self.r2 = k, p, r1, q, m, r2
        self.signs = np.ones(self.N) if signs is None else np.asarray(signs)
        self.area, self.cent, self.h = geometry(self.C)
        self.h_stab = self.h if h_stab is None else h_stab
        top = 2 * max(k, p, r1, q, m, r2) + 2
        self.mom = moment_table(self.C, top)
        basis = lambda r: scaled_monomials(r, self.cent[0], self.cent[1], self.h)
        self.phik, self.phiq, self.psi1, self.psi2 = basis(k), basis(q), basis(r1), basis(r2)
        self.edges = []
        for e, (a, b) in enumerate(edges_of(self.C)):
            d = b - a
            L = np.hypot(*d)
            self.edges.append((a, b, np.array([d[1], -d[0]]) / L, self.signs[e] < 0))
        self.nw = len(self.phik) + self.N * (p + 1)
        self.nt = 2 * len(self.phiq) + self.N * 2 * (m + 1)

    def mass(self, A, B=None):
        B = A if B is None else B
        return np.array([[integrate(pmul(a, b), self.mom) for b in B] for a in A])

    def ell(self, a, e):
        return legendre01(a, self.edges[e][3])

    # -- weak gradient

    def _w_dof(self, i):
        """``(w0, {edge: weight poly})`` of local w DOF ``i``."""
        dk = len(self.phik)
        if i < dk:
            return self.phik[i], {}
        e, a = divmod(i - dk, self.p + 1)
        return np.zeros((1, 1)), {e: self.ell(a, e)}

    def weak_gradient(self):
        M = self.mass(self.psi1)
        d1 = len(self.psi1)
        R = np.zeros((2 * d1, self.nw))
        for i in range(self.nw):
            w0, wb = self._w_dof(i)
            for c in range(2):
                for j, psi in enumerate(self.psi1):
                    v = integrate(pmul(pder(w0, c), psi), self.mom)
                    for e, (a, b, n, _) in enumerate(self.edges):
                        v -= n[c] * segment_integral(pmul(w0, psi), a, b)
                        if e in wb:
                            v += n[c] * segment_integral(psi, a, b, wb[e])
                    R[c * d1 + j, i] = v
        Minv = np.linalg.inv(M)
        return np.vstack([Minv @ R[:d1], Minv @ R[d1:]])

    # -- weak symmetric gradient (full 2x2 tensor form)

    def _t_dof(self, i):
        """``(eta0 = [x, y], {edge: (component, weight poly)})`` of local theta DOF ``i``."""
        dq = len(self.phiq)
        z = np.zeros((1, 1))
        if i < dq:
            return [self.phiq[i], z], {}
        if i < 2 * dq:
            return [z, self.phiq[i - dq]], {}
        e, rest = divmod(i - 2 * dq, 2 * (self.m + 1))
        comp, a = divmod(rest, self.m + 1)
        return [z, z], {e: (comp, self.ell(a, e))}

    TENSORS = (np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [0.0, 1.0]]),
               np.array([[0.0, 1.0], [1.0, 0.0]]))

    def weak_sym_gradient(self):
        d2 = len(self.psi2)
        M = self.mass(self.psi2)
        T = self.TENSORS
        gram = np.block([[M * np.sum(T[s] * T[t]) for t in range(3)] for s in range(3)])
        R = np.zeros((3 * d2, self.nt))
        for i in range(self.nt):
            eta0, etab = self._t_dof(i)
            grad = [[pder(eta0[r], s) for s in range(2)] for r in range(2)]
            eps = [[0.5 * padd(grad[r][s], grad[s][r]) for s in range(2)] for r in range(2)]
            for t in range(3):
                B = T[t]
                for j, psi in enumerate(self.psi2):
                    v = sum(B[r, s] * integrate(pmul(eps[r][s], psi), self.mom)
                            for r in range(2) for s in range(2) if B[r, s])
                    for e, (a, b, n, _) in enumerate(self.edges):
                        Bn = B @ n
                        for r in range(2):
                            if Bn[r] == 0:
                                continue
                            v -= Bn[r] * segment_integral(pmul(eta0[r], psi), a, b)
                            if e in etab and etab[e][0] == r:
                                v += Bn[r] * segment_integral(psi, a, b, etab[e][1])
                    R[t * d2 + j, i] = v
        return np.linalg.solve(gram, R)

    # -- interior projection and stabiliser

    def interior_projection(self):
        d1, dq = len(self.psi1), len(self.phiq)
        P1 = np.linalg.solve(self.mass(self.psi1), self.mass(self.psi1, self.phiq))
        out = np.zeros((2 * d1, self.nt))
        out[:d1, :dq] = P1
        out[d1:, dq:2 * dq] = P1
        return out

    def stabilizer(self):
        S = np.zeros((self.nw, self.nw))
        dofs = [self._w_dof(i) for i in range(self.nw)]
        for e, (a, b, _, _) in enumerate(self.edges):
            traces = []
            for w0, wb in dofs:
                f = on_segment(w0, a, b)
                if e in wb:
                    f = f - wb[e]
                traces.append(f)
            L = np.hypot(*(b - a))
            for i, j in itertools.product(range(self.nw), repeat=2):
                S[i, j] += L * integral01(traces[i] * traces[j])
        return S / self.h_stab

    # -- full local stiffness

    def _fields(self, coeffs, basis):
        out = []
        for col in coeffs.T:
            f = np.zeros((1, 1))
            for c, phi in zip(col, basis):
                f = padd(f, c * phi)
            out.append(f)
        return out

    def stiffness(self, E=1.092, nu=0.3, kappa=5.0 / 6.0, t=1.0):
        """Bending ``int C eps : eps``, shear ``lam t^-2 int |grad_w w - Q theta0|^2`` and the stabiliser."""
        D = E / (12.0 * (1.0 - nu ** 2))
        lam = E * kappa / (2.0 * (1.0 + nu))
        d1, d2 = len(self.psi1), len(self.psi2)
        G, Eps, Pi = self.weak_gradient(), self.weak_sym_gradient(), self.interior_projection()
        n = self.nw + self.nt
        # shear vector field of every DOF
        gx = self._fields(G[:d1], self.psi1) + [-f for f in self._fields(Pi[:d1], self.psi1)]
        gy = self._fields(G[d1:], self.psi1) + [-f for f in self._fields(Pi[d1:], self.psi1)]
        e11 = self._fields(Eps[:d2], self.psi2)
        e22 = self._fields(Eps[d2:2 * d2], self.psi2)
        e12 = self._fields(Eps[2 * d2:], self.psi2)
        K = np.zeros((n, n))
        for i, j in itertools.product(range(n), repeat=2):
            v = lam / t ** 2 * (integrate(pmul(gx[i], gx[j]), self.mom)
                                + integrate(pmul(gy[i], gy[j]), self.mom))
            if i >= self.nw and j >= self.nw:
                a, b = i - self.nw, j - self.nw
                eps_a = [[e11[a], e12[a]], [e12[a], e22[a]]]
                eps_b = [[e11[b], e12[b]], [e12[b], e22[b]]]
                tr = padd(eps_a[0][0], eps_a[1][1])
                for r in range(2):
                    for s in range(2):
                        Ce = (1.0 - nu) * eps_a[r][s]
                        if r == s:
                            Ce = padd(Ce, nu * tr)
                        v += D * integrate(pmul(Ce, eps_b[r][s]), self.mom)
            K[i, j] = v
        K[:self.nw, :self.nw] += self.stabilizer()
        return K


# ---------------------------------------------------------------- projections of raw polynomials


def cell_projection(f, basis, mom):
    M = np.array([[integrate(pmul(a, b), mom) for b in basis] for a in basis])
    rhs = np.array([integrate(pmul(f, a), mom) for a in basis])
    return np.linalg.solve(M, rhs)


def project_weak_scalar(oracle, u):
    """Local DOFs of ``Q_h u = {Q_0 u, Q_b u}`` for a raw polynomial ``u``."""
    out = [cell_projection(u, oracle.phik, oracle.mom)]
    for a, b, _, rev in oracle.edges:
        out.append(edge_projection(u, a, b, oracle.p, rev))
    return np.concatenate(out)


def project_weak_vector(oracle, ux, uy):
    out = [cell_projection(ux, oracle.phiq, oracle.mom), cell_projection(uy, oracle.phiq, oracle.mom)]
    for a, b, _, rev in oracle.edges:
        out += [edge_projection(ux, a, b, oracle.m, rev), edge_projection(uy, a, b, oracle.m, rev)]
    return np.concatenate(out)
