"""Short-pulse characteristic data on the initial outgoing cone.

The seed profile is psi0(s, theta) = amplitude * bump(s) * cap(theta/R),
compactly supported in s in (0, 1), and the data on C_{u0} reads

    phi(ubar, theta) = (sqrt(delta)/|u0|) * psi0(ubar/delta, theta),

with trivial data on the incoming cone Cbar_0.  The 1/|u0| factor is the
free-wave decay rate, so |u0| * phi is the radiation-field profile.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import DoubleNullGrid, flux_integral_C_u, theta_derivative

# exp(4 - 1/(s(1-s))) underflows long before these cutoffs matter
_SUPPORT_TOL = 1e-12


def _p_terms(s):
    p = s * (1.0 - s)
    pp = 1.0 - 2.0 * s
    return p, pp


def bump(s):
    """Canonical smooth bump on (0,1), normalized so bump(1/2) = 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > _SUPPORT_TOL) & (s < 1.0 - _SUPPORT_TOL)
    p, _ = _p_terms(s[m])
    out[m] = np.exp(4.0 - 1.0 / p)
    return out


def bump_derivative(s, order):
    """Analytic d^k bump / ds^k for k = 0..3 (chain rule on g = 1/(s(1-s)))."""
    if order == 0:
        return bump(s)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > _SUPPORT_TOL) & (s < 1.0 - _SUPPORT_TOL)
    p, pp = _p_terms(s[m])
    g1 = -pp / p**2
    g2 = 2.0 * pp**2 / p**3 + 2.0 / p**2
    g3 = -6.0 * pp**3 / p**4 - 12.0 * pp / p**3
    b = np.exp(4.0 - 1.0 / p)
    if order == 1:
        out[m] = -g1 * b
    elif order == 2:
        out[m] = (g1**2 - g2) * b
    elif order == 3:
        out[m] = (-g1**3 + 3.0 * g1 * g2 - g3) * b
    else:
        raise ValueError("bump derivatives implemented up to order 3")
    return out


def cap(y):
    """Smooth angular cap on |y| < 1, even in y, cap(0) = 1."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = np.abs(y) < 1.0 - _SUPPORT_TOL
    out[m] = np.exp(1.0 - 1.0 / (1.0 - y[m] ** 2))
    return out


def cap_derivative(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = np.abs(y) < 1.0 - _SUPPORT_TOL
    w = 1.0 - y[m] ** 2
    out[m] = -2.0 * y[m] / w**2 * np.exp(1.0 - 1.0 / w)
    return out


@dataclass
class PulseProfile:
    """Seed psi0 = amplitude * bump(s) * cap(theta / cap_radius).

    cap_radius = None means no angular localization (spherical mode, or a
    pulse covering the whole sphere).  target_energy, when set, records
    the flux the amplitude was calibrated to.
    """

    amplitude: float = 1.0
    cap_radius: float | None = None
    cap_center: float = 0.0
    target_energy: float | None = None

    def __post_init__(self):
        if self.amplitude <= 0.0:
            raise ValueError("amplitude must be positive")
        if self.cap_radius is not None and not 0.0 < self.cap_radius <= np.pi:
            raise ValueError("cap_radius must lie in (0, pi]")
        if self.cap_center != 0.0:
            raise ValueError("axisymmetric pulses are centered on the axis")

    def angular_factor(self, theta):
        if self.cap_radius is None:
            return np.ones_like(np.asarray(theta, dtype=float))
        return cap((np.asarray(theta, dtype=float) - self.cap_center) / self.cap_radius)

    def angular_factor_derivative(self, theta):
        if self.cap_radius is None:
            return np.zeros_like(np.asarray(theta, dtype=float))
        y = (np.asarray(theta, dtype=float) - self.cap_center) / self.cap_radius
        return cap_derivative(y) / self.cap_radius

    def seed(self, s, theta):
        return self.amplitude * np.outer(bump(s), self.angular_factor(theta))

    def seed_s_derivative(self, s, theta, order=1):
        return self.amplitude * np.outer(bump_derivative(s, order), self.angular_factor(theta))


@dataclass
class CharacteristicData:
    """Goursat data: phi on C_{u0} over (ubar, theta), zero on Cbar_0."""

    phi_on_Cu0: np.ndarray
    delta: float
    u0: float
    profile: PulseProfile | None = None

    def phi_on_Cbar0(self, n_u, n_theta):
        return np.zeros((n_u + 1, n_theta))


def build_data(profile, delta, u0, grid):
    """Sample the short-pulse ansatz at the grid nodes of C_{u0}."""
    if abs(grid.delta - delta) > 1e-14:
        raise ValueError(f"grid.delta = {grid.delta} does not match delta = {delta}")
    if abs(grid.u0 - u0) > 1e-14:
        raise ValueError(f"grid.u0 = {grid.u0} does not match u0 = {u0}")
    if grid.angular_mode == "axisym" and profile.cap_radius is not None:
        nodes_across = profile.cap_radius / grid.dtheta
        if nodes_across < 8:
            raise ValueError(
                f"cap of radius {profile.cap_radius:.4g} spans only "
                f"{nodes_across:.1f} theta nodes; need >= 8"
            )
    if grid.angular_mode == "spherical" and profile.cap_radius is not None:
        raise ValueError("spherical mode takes an uncapped profile (cap_radius = None)")
    s = grid.ubar_nodes / delta
    phi = (np.sqrt(delta) / abs(u0)) * profile.seed(s, grid.theta_nodes)
    return CharacteristicData(phi_on_Cu0=phi, delta=delta, u0=u0, profile=profile)


def data_l_derivative(data, grid, order=1):
    """Analytic d^k phi / d ubar^k on C_{u0} (L = d_ubar there)."""
    prof = data.profile
    if prof is None:
        raise ValueError("analytic derivatives need the generating profile")
    s = grid.ubar_nodes / data.delta
    scale = data.delta ** (0.5 - order) / abs(data.u0)
    return scale * prof.seed_s_derivative(s, grid.theta_nodes, order)


def data_flux_L(data, grid):
    """Outgoing energy flux of the data: int_{C_u0} |L phi|^2.

    Uses the analytic L phi = delta^{-1/2} |u0|^{-1} psi0'(ubar/delta, .),
    so the value is exact up to quadrature error.
    """
    lphi = data_l_derivative(data, grid, order=1)
    return flux_integral_C_u(lphi**2, data.u0, grid)


def calibrate_amplitude(profile, e0, delta, u0, grid):
    """Rescale the amplitude so that data_flux_L equals e0.

    The flux is exactly quadratic in the amplitude, so one rescale lands
    on target (up to roundoff).
    """
    if e0 <= 0.0:
        raise ValueError("target energy must be positive")
    flux = data_flux_L(build_data(profile, delta, u0, grid), grid)
    if flux <= 0.0:
        raise ValueError("profile has zero outgoing flux; cannot calibrate")
    factor = np.sqrt(e0 / flux)
    return replace(profile, amplitude=profile.amplitude * factor, target_energy=e0)


def data_scaling_table(profile, delta_list, u0, k_max=3, n_ubar=256, n_theta=129):
    """Rows (k, delta, ||d_ubar^k phi||_{L2(C_u0)}) from analytic derivatives.

    The L2 norms follow delta^{1-k} at leading order; log-log slopes of
    the columns are the characteristic analog of the k-th energy growth.
    """
    if k_max > 3:
        raise ValueError("analytic bump derivatives stop at order 3")
    rows = []
    mode = "spherical" if profile.cap_radius is None else "axisym"
    for delta in delta_list:
        grid = DoubleNullGrid(u0=u0, delta=delta, n_u=2, n_ubar=n_ubar,
                              angular_mode=mode, n_theta=n_theta)
        data = build_data(profile, delta, u0, grid)
        for k in range(1, k_max + 1):
            dk = data_l_derivative(data, grid, order=k)
            norm = np.sqrt(flux_integral_C_u(dk**2, u0, grid))
            rows.append({"k": k, "delta": delta, "norm": norm})
    return rows


def data_sup_norms(profile, delta, u0, n_ubar=512, n_theta=257):
    """Sup norms of the analytic data: max|L phi| and max|(1/r) d_theta phi|."""
    mode = "spherical" if profile.cap_radius is None else "axisym"
    grid = DoubleNullGrid(u0=u0, delta=delta, n_u=2, n_ubar=n_ubar,
                          angular_mode=mode, n_theta=n_theta)
    data = build_data(profile, delta, u0, grid)
    sup_l = float(np.max(np.abs(data_l_derivative(data, grid, 1))))
    r = (grid.ubar_nodes - u0)[:, None]
    ang = theta_derivative(data.phi_on_Cu0, grid) / r
    return {"sup_Lphi": sup_l, "sup_angular": float(np.max(np.abs(ang)))}
