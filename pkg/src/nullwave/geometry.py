"""Double-null coordinates, grids, angular operators and flux measures.

Coordinates: u = (t - r)/2 (retarded), ubar = (t + r)/2 (advanced), so
r = ubar - u and t = u + ubar.  The computational rectangle is
u in [u0, -1], ubar in [0, delta]; since u <= -1 and ubar >= 0 the
radius satisfies r >= 1 everywhere and the coordinate axis r = 0 is
never approached.  Angular modes: "spherical" (no angle) and "axisym"
(colatitude theta in [0, pi], even reflection at both poles).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DoubleNullGrid:
    u0: float
    delta: float
    n_u: int
    n_ubar: int
    angular_mode: str = "spherical"
    n_theta: int = 1
    u1: float = -1.0

    u_nodes: np.ndarray = field(init=False, repr=False)
    ubar_nodes: np.ndarray = field(init=False, repr=False)
    theta_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.u0 < self.u1:
            raise ValueError(f"u0 = {self.u0} must lie below u1 = {self.u1}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta = {self.delta} must lie in (0, 1)")
        if self.n_u < 2 or self.n_ubar < 2:
            raise ValueError("need at least 2 cells in each null direction")
        if self.angular_mode == "spherical":
            self.n_theta = 1
            self.theta_nodes = np.zeros(1)
        elif self.angular_mode == "axisym":
            if self.n_theta < 5:
                raise ValueError("axisym mode needs n_theta >= 5")
            self.theta_nodes = np.linspace(0.0, np.pi, self.n_theta)
        else:
            raise ValueError(f"unknown angular_mode {self.angular_mode!r}")
        self.u_nodes = np.linspace(self.u0, self.u1, self.n_u + 1)
        self.ubar_nodes = np.linspace(0.0, self.delta, self.n_ubar + 1)

    @property
    def du(self):
        return (self.u1 - self.u0) / self.n_u

    @property
    def dubar(self):
        return self.delta / self.n_ubar

    @property
    def dtheta(self):
        if self.angular_mode == "spherical":
            return 0.0
        return np.pi / (self.n_theta - 1)

    def radius(self, u, ubar):
        return ubar - u

    def r_grid(self):
        """r at every (u, ubar) node, shape (n_u+1, n_ubar+1)."""
        return self.ubar_nodes[None, :] - self.u_nodes[:, None]

    def field_shape(self):
        return (self.n_u + 1, self.n_ubar + 1, self.n_theta)


def frame_vectors(r, theta, phi_az=0.0):
    """Cartesian components of (L, Lbar, e_theta) at a point with r > 0."""
    if r <= 0.0:
        raise ValueError(f"null frame undefined at r = {r} <= 0")
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi_az), np.cos(phi_az)
    omega = np.array([st * cp, st * sp, ct])
    ell = np.concatenate(([1.0], omega))
    lbar = np.concatenate(([1.0], -omega))
    e_theta = np.concatenate(([0.0], [ct * cp, ct * sp, -st]))
    return ell, lbar, e_theta


# --- theta stencils ----------------------------------------------------------
#
# Angular fields are arrays whose LAST axis runs over the theta nodes
# (length 1 in spherical mode).  Regular axisymmetric fields are even
# across both poles, which fixes the ghost values.

def _pad_even(f):
    return np.concatenate([f[..., 1:2], f, f[..., -2:-1]], axis=-1)


def theta_derivative(f, grid):
    """d f / d theta, centered second order; zero at the poles (even fields)."""
    if grid.angular_mode == "spherical":
        return np.zeros_like(f)
    g = _pad_even(f)
    out = (g[..., 2:] - g[..., :-2]) / (2.0 * grid.dtheta)
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def theta_second_derivative(f, grid):
    if grid.angular_mode == "spherical":
        return np.zeros_like(f)
    g = _pad_even(f)
    return (g[..., 2:] - 2.0 * f + g[..., :-2]) / grid.dtheta**2


def theta_third_derivative(f, grid):
    """Third theta derivative; odd across the poles, hence zero there."""
    if grid.angular_mode == "spherical":
        return np.zeros_like(f)
    d2 = theta_second_derivative(f, grid)
    return theta_derivative(d2, grid)


def angular_laplacian(f, r, grid):
    """Intrinsic sphere Laplacian (1/r^2) (1/sin) d_theta(sin d_theta f).

    At the poles the regularized limit 2 f'' / r^2 applies (L'Hopital with
    even reflection).  Spherical mode: identically zero.
    """
    if grid.angular_mode == "spherical":
        return np.zeros_like(f)
    if grid.n_theta < 5:
        raise ValueError("angular_laplacian needs n_theta >= 5")
    theta = grid.theta_nodes
    dth = grid.dtheta
    g = _pad_even(f)
    d1 = (g[..., 2:] - g[..., :-2]) / (2.0 * dth)
    d2 = (g[..., 2:] - 2.0 * f + g[..., :-2]) / dth**2
    out = np.empty_like(f)
    inner = slice(1, -1)
    out[..., inner] = d2[..., inner] + d1[..., inner] / np.tan(theta[inner])
    out[..., 0] = 2.0 * d2[..., 0]
    out[..., -1] = 2.0 * d2[..., -1]
    return out / np.asarray(r) ** 2


def angular_gradient_sq(f, r, grid):
    """|intrinsic gradient|^2 = (d_theta f)^2 / r^2; zero at the poles."""
    if grid.angular_mode == "spherical":
        return np.zeros_like(f)
    return (theta_derivative(f, grid) / np.asarray(r)) ** 2


# --- measures ----------------------------------------------------------------

def sphere_integral(f, r, grid):
    """Integral over the sphere S_{ubar,u} of radius r.

    Spherical mode: 4 pi r^2 f.  Axisym: 2 pi r^2 int f sin(theta) dtheta
    by the trapezoid rule; f may carry leading axes (theta last).
    """
    f = np.asarray(f, dtype=float)
    if grid.angular_mode == "spherical":
        return 4.0 * np.pi * r**2 * f[..., 0]
    weights = np.sin(grid.theta_nodes)
    return 2.0 * np.pi * r**2 * np.trapezoid(f * weights, dx=grid.dtheta, axis=-1)


def flux_integral_C_u(density, u, grid, ubar_stop=None):
    """Integral over the outgoing cone C_u^{[0, ubar_stop]}.

    density has shape (n_ubar+1, n_theta) (values at the ubar nodes of the
    given u slice); the measure is dubar r^2 domega with r = ubar - u.
    """
    j_stop = grid.n_ubar if ubar_stop is None else ubar_stop
    ubars = grid.ubar_nodes[: j_stop + 1]
    per_sphere = np.array(
        [sphere_integral(density[j], grid.radius(u, ubars[j]), grid) for j in range(j_stop + 1)]
    )
    return float(np.trapezoid(per_sphere, dx=grid.dubar))


def flux_integral_Cbar(density, ubar, grid, u_stop=None):
    """Integral over the incoming cone Cbar_ubar^{[u0, u_stop]}.

    density has shape (n_u+1, n_theta); measure du r^2 domega with
    r = ubar - u.
    """
    i_stop = grid.n_u if u_stop is None else u_stop
    us = grid.u_nodes[: i_stop + 1]
    per_sphere = np.array(
        [sphere_integral(density[i], grid.radius(us[i], ubar), grid) for i in range(i_stop + 1)]
    )
    return float(np.trapezoid(per_sphere, dx=grid.du))
