"""Reissner-Mindlin plate data: material law and the two manufactured problems.

All field closures are vectorised: they accept coordinate arrays ``x, y`` of
equal shape and return arrays of that shape (scalars) or of shape
``(..., 2)`` (vectors).
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PlateParams:
    """Young's modulus ``E``, Poisson ratio ``nu``, shear correction ``kappa``, thickness ``t``."""

    E: float = 1.092
    nu: float = 0.3
    kappa: float = 5.0 / 6.0
    t: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.nu < 0.5:
            raise InvalidArgumentError(f"Poisson ratio must lie in (0, 1/2), got {self.nu}")
        if self.t <= 0 or self.E <= 0 or self.kappa <= 0:
            raise InvalidArgumentError("E, kappa and t must be positive")

    @property
    def D(self):
        """Bending stiffness ``E / (12 (1 - nu^2))``."""
        return self.E / (12.0 * (1.0 - self.nu ** 2))

    @property
    def lam(self):
        """Shear modulus times correction factor, ``E kappa / (2 (1 + nu))``."""
        return self.E * self.kappa / (2.0 * (1.0 + self.nu))

    @property
    def shear_weight(self):
        """``lam / t^2``, the coefficient of the shear term."""
        return self.lam / self.t ** 2

    def with_thickness(self, t):
        return PlateParams(self.E, self.nu, self.kappa, t)


def apply_bending_tensor(sigma, params):
    """``C sigma = D [(1 - nu) sigma + nu tr(sigma) I]`` for ``(..., 2, 2)`` tensors."""
    s = np.asarray(sigma, dtype=float)
    tr = s[..., 0, 0] + s[..., 1, 1]
    out = (1.0 - params.nu) * s
    out[..., 0, 0] += params.nu * tr
    out[..., 1, 1] += params.nu * tr
    return params.D * out


def bending_voigt_matrix(params):
    """Voigt form ``sigma_v = C_v eps_v`` for ``(11, 22, 12)`` components."""
    D, nu = params.D, params.nu
    return D * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 1.0 - nu]])


@dataclass(frozen=True)
class Problem:
    """Manufactured clamped-plate problem on ``domain`` ("unit-square" or "unit-disk")."""

    name: str
    domain: str
    params: PlateParams
    w: Callable
    theta: Callable
    grad_w: Callable
    g: Callable

    def gamma(self, x, y):
        """Shear stress ``lam t^-2 (grad w - theta)``."""
        return self.params.shear_weight * (self.grad_w(x, y) - self.theta(x, y))


def _vec(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def problem1(params=PlateParams()):
    """Polynomial solution on the unit square that vanishes with its rotation on the boundary."""
    D, nu, t = params.D, params.nu, params.t
    c2 = 2.0 * t ** 2 / (5.0 * (1.0 - nu))

    def theta(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return _vec(y**3 * (y - 1)**3 * x**2 * (x - 1)**2 * (2*x - 1),
                    x**3 * (x - 1)**3 * y**2 * (y - 1)**2 * (2*y - 1))

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x**3 * (x - 1)**3 * y**3 * (y - 1)**3 / 3.0
                - c2 * (y**3 * (y - 1)**3 * x * (x - 1) * (5*x**2 - 5*x + 1)
                        + x**3 * (x - 1)**3 * y * (y - 1) * (5*y**2 - 5*y + 1)))

    def grad_w(x, y):
        # grad of the leading term is theta; the correction term differentiates to
        # d/dx[x(x-1)(5x^2-5x+1)] = (2x-1)(10x^2-10x+1), d/dx[x^3(x-1)^3] = 3x^2(x-1)^2(2x-1)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        px = (y**3 * (y - 1)**3 * (2*x - 1) * (10*x**2 - 10*x + 1)
              + 3 * x**2 * (x - 1)**2 * (2*x - 1) * y * (y - 1) * (5*y**2 - 5*y + 1))
        py = (x**3 * (x - 1)**3 * (2*y - 1) * (10*y**2 - 10*y + 1)
              + 3 * y**2 * (y - 1)**2 * (2*y - 1) * x * (x - 1) * (5*x**2 - 5*x + 1))
        return theta(x, y) - c2 * _vec(px, py)

    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return D * (12*y*(y - 1)*(5*x**2 - 5*x + 1)*(2*y**2*(y - 1)**2 + x*(x - 1)*(5*y**2 - 5*y + 1))
                    + 12*x*(x - 1)*(5*y**2 - 5*y + 1)*(2*x**2*(x - 1)**2 + y*(y - 1)*(5*x**2 - 5*x + 1)))

    return Problem("problem1", "unit-square", params, w, theta, grad_w, g)


def problem2(params=PlateParams()):
    """Radially symmetric solution with unit load; ``w`` and ``theta`` vanish on the unit circle."""
    D, lam, t = params.D, params.lam, params.t
    c = t ** 2 / (4.0 * lam) + 1.0 / (32.0 * D)

    def theta(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = x**2 + y**2 - 1.0
        return _vec(x * r2, y * r2) / (16.0 * D)

    def w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rr = x**2 + y**2
        return rr**2 / (64.0 * D) - (rr - 1.0) * c - 1.0 / (64.0 * D)

    def grad_w(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        f = (x**2 + y**2) / (16.0 * D) - 2.0 * c
        return _vec(x * f, y * f)

    def g(x, y):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return Problem("problem2", "unit-disk", params, w, theta, grad_w, g)


def get_problem(number, params=PlateParams()):
    if number in (1, "1"):
        return problem1(params)
    if number in (2, "2"):
        return problem2(params)
    raise InvalidArgumentError(f"unknown problem {number!r}; expected 1 or 2")
