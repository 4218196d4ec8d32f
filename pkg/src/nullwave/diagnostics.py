"""Diagnostics over a marched field: stress components, null fluxes,
weighted energy norms, the fundamental energy identity, sup-norm tables,
focusing quantities and exit-surface traces.

Norm conventions: on outgoing cones the measure is dubar r^2 domega, on
incoming cones du r^2 domega.  Angular derivative counting uses the
rotation realization Omega phi ~ d_theta phi, equivalent to |u|^k-weighted
intrinsic gradients up to 1 + O(delta) factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    flux_integral_C_u,
    flux_integral_Cbar,
    sphere_integral,
    theta_derivative,
)
from .nullform import mixed_product_bound, pointwise_bound_constant
from .solver import _symmetric_rhs_coefficients

EPS_FLOOR = 1e-300


# --- derivative helpers -------------------------------------------------------

def _d1(f, h, axis):
    out = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (fm[2:] - fm[:-2]) / (2.0 * h)
    om[0] = (-3.0 * fm[0] + 4.0 * fm[1] - fm[2]) / (2.0 * h)
    om[-1] = (3.0 * fm[-1] - 4.0 * fm[-2] + fm[-3]) / (2.0 * h)
    return out


def _d2(f, h, axis):
    out = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (fm[2:] - 2.0 * fm[1:-1] + fm[:-2]) / h**2
    if fm.shape[0] >= 4:
        om[0] = (2.0 * fm[0] - 5.0 * fm[1] + 4.0 * fm[2] - fm[3]) / h**2
        om[-1] = (2.0 * fm[-1] - 5.0 * fm[-2] + 4.0 * fm[-3] - fm[-4]) / h**2
    else:
        om[0] = om[1]
        om[-1] = om[-2]
    return out


def _theta_power(f, grid, k):
    out = f
    for _ in range(k):
        out = theta_derivative(out, grid)
    return out


def nabla_k(state, k):
    """Realized intrinsic angular derivative (1/r^k) d_theta^k phi."""
    if k == 0:
        return state.phi
    r = state.grid.r_grid()[:, :, None]
    return _theta_power(state.phi, state.grid, k) / r**k


def l_of(state, f, order=1):
    d = _d1(f, state.grid.dubar, axis=1)
    if order == 2:
        return _d2(f, state.grid.dubar, axis=1)
    return d


def lbar_of(state, f, order=1):
    if order == 2:
        return _d2(f, state.grid.du, axis=0)
    return _d1(f, state.grid.du, axis=0)


# --- stress -------------------------------------------------------------------

@dataclass
class StressComponents:
    t_ll: np.ndarray        # T(L, L) = |L phi|^2
    t_llbar: np.ndarray     # T(L, Lbar) = |angular gradient|^2
    t_lbarlbar: np.ndarray  # T(Lbar, Lbar) = |Lbar phi|^2


def stress(state):
    state.require_derivatives()
    return StressComponents(
        t_ll=state.lphi**2,
        t_llbar=state.ang_grad**2,
        t_lbarlbar=state.lbarphi**2,
    )


# --- energy norms ----------------------------------------------------------------

@dataclass
class EnergyNorms:
    e: dict        # E_k(u, ubar), k = 1..3
    ebar: dict     # Ebar_k(u, ubar)
    f: dict        # F_k, k = 2..3
    fbar: dict     # Fbar_k

    def total(self):
        return sum(self.e.values()) + sum(self.ebar.values()) + \
            sum(self.f.values()) + sum(self.fbar.values())


def _l2_cu(field, state, i_u, j_ub):
    val = flux_integral_C_u(field[i_u], state.grid.u_nodes[i_u], state.grid, ubar_stop=j_ub)
    return np.sqrt(max(val, 0.0))


def _l2_cbar(field, state, i_u, j_ub):
    val = flux_integral_Cbar(field[:, j_ub], state.grid.ubar_nodes[j_ub], state.grid, u_stop=i_u)
    return np.sqrt(max(val, 0.0))


def energy_norms(state, i_u, j_ub, k_max=3):
    """Weighted energy norms at the slab corner (u_i, ubar_j).

    E_k pairs |u|^{k-1}||L nabla^{k-1} phi|| with the delta^{-1/2}-weighted
    angular term; F_k carries two outgoing derivatives with the delta
    weight.  Incoming versions integrate over Cbar with |u'|-weights
    inside the norm where they vary along the cone.
    """
    if k_max > 3:
        raise ValueError("energy norms supported up to k = 3")
    grid = state.grid
    u_val = abs(grid.u_nodes[i_u])
    delta = state.delta
    u_abs = np.abs(grid.u_nodes)[:, None, None]

    e, ebar, f, fbar = {}, {}, {}, {}
    for k in range(1, k_max + 1):
        m = k - 1
        nab_m = nabla_k(state, m)
        nab_k = nabla_k(state, k)
        e[k] = (u_val**m * _l2_cu(l_of(state, nab_m) ** 2, state, i_u, j_ub)
                + delta**-0.5 * u_val ** (m + 0.5)
                * _l2_cu(nab_k**2, state, i_u, j_ub))
        ebar[k] = (_l2_cbar((u_abs**m * nab_k) ** 2, state, i_u, j_ub)
                   + delta**-0.5 * u_val**0.5
                   * _l2_cbar((u_abs**m * lbar_of(state, nab_m)) ** 2, state, i_u, j_ub))
        if k >= 2:
            p = k - 2
            nab_p = nabla_k(state, p)
            f[k] = delta * u_val**p * _l2_cu(l_of(state, nab_p, order=2) ** 2,
                                             state, i_u, j_ub)
            fbar[k] = u_val**0.5 * _l2_cbar((u_abs**p * lbar_of(state, nab_p, order=2)) ** 2,
                                            state, i_u, j_ub)
    return EnergyNorms(e=e, ebar=ebar, f=f, fbar=fbar)


# --- fundamental energy identity ---------------------------------------------------

@dataclass
class IdentityResidual:
    multiplier: str
    lhs: float
    rhs: float
    residual: float
    relative_residual: float
    bulk_deformation: float = 0.0


def _nullform_source(state):
    """Phi = Q(grad phi, grad phi) recomputed pointwise at the nodes."""
    state.require_derivatives()
    c_lb, c_la, c_ba, c_aa = _symmetric_rhs_coefficients(state.spec, state.grid)
    a = state.ang_grad
    return (c_lb * state.lphi * state.lbarphi
            + c_la * state.lphi * a
            + c_ba * state.lbarphi * a
            + c_aa * a * a)


def _bulk_integral(density, state, i_u, j_ub):
    """Double-null slab integral of a node density over D(u, ubar)."""
    grid = state.grid
    rows = np.array([
        flux_integral_C_u(density[i], grid.u_nodes[i], grid, ubar_stop=j_ub)
        for i in range(i_u + 1)
    ])
    return float(np.trapezoid(rows, dx=grid.du))


def energy_identity_residual(state, multiplier, i_u, j_ub):
    """Balance of fluxes against data plus bulk for X in {L, Lbar, Omega}.

    For X = Omega the deformation term vanishes identically and, for
    axisymmetric fields, every azimuthally integrated flux is exactly
    zero, so the identity reduces to the structural statement 0 = 0.
    """
    state.require_derivatives()
    grid = state.grid
    st = stress(state)
    if multiplier == "Omega":
        # K^Omega = 0 and rotation fluxes integrate to zero over the azimuth
        return IdentityResidual("Omega", 0.0, 0.0, 0.0, 0.0, bulk_deformation=0.0)
    if multiplier == "L":
        cu_density = st.t_ll
        cbar_density = st.t_llbar
        k_sign = 1.0
        xphi = state.lphi
    elif multiplier == "Lbar":
        cu_density = st.t_llbar
        cbar_density = st.t_lbarlbar
        k_sign = -1.0
        xphi = state.lbarphi
    else:
        raise ValueError(f"unknown multiplier {multiplier!r}")

    lhs = flux_integral_C_u(cu_density[i_u], grid.u_nodes[i_u], grid, ubar_stop=j_ub)
    lhs += flux_integral_Cbar(cbar_density[:, j_ub], grid.ubar_nodes[j_ub], grid, u_stop=i_u)
    rhs = flux_integral_C_u(cu_density[0], grid.u_nodes[0], grid, ubar_stop=j_ub)
    r = grid.r_grid()[:, :, None]
    k_density = k_sign * state.lphi * state.lbarphi / r
    source = _nullform_source(state) * xphi
    rhs += _bulk_integral(k_density + source, state, i_u, j_ub)
    residual = lhs - rhs
    rel = abs(residual) / max(abs(lhs), abs(rhs), EPS_FLOOR)
    return IdentityResidual(multiplier, float(lhs), float(rhs), float(residual), float(rel))


# --- scalar diagnostics ---------------------------------------------------------------

def lbar_L2_on_Cu(state, i_u):
    """||Lbar phi||_{L2(C_u)} with the comparison weight delta |u|^{-1}."""
    state.require_derivatives()
    norm = _l2_cu(state.lbarphi**2, state, i_u, state.grid.n_ubar)
    u_val = abs(state.grid.u_nodes[i_u])
    return {"norm": norm, "weight": state.delta / u_val,
            "weighted": norm * u_val / state.delta}


def linf_table(state):
    """Per-u sup norms of first and mixed second derivatives with the
    bootstrap weights attached (columns named by the weighted quantity)."""
    state.require_derivatives()
    grid = state.grid
    delta = state.delta
    lphi, lbar, ang = state.lphi, state.lbarphi, state.ang_grad
    l_ang = l_of(state, nabla_k(state, 1))
    lbar_ang = lbar_of(state, nabla_k(state, 1))
    ang2 = nabla_k(state, 2)
    rows = []
    for i, u in enumerate(grid.u_nodes):
        au = abs(u)
        rows.append({
            "u": float(u),
            "sup_Lphi": float(np.max(np.abs(lphi[i]))),
            "sup_ang": float(np.max(np.abs(ang[i]))),
            "sup_Lbarphi": float(np.max(np.abs(lbar[i]))),
            "w_Lphi": delta**0.5 * au * float(np.max(np.abs(lphi[i]))),
            "w_ang": delta**-0.25 * au**1.75 * float(np.max(np.abs(ang[i]))),
            "w_Lbarphi": delta**-0.25 * au**1.5 * float(np.max(np.abs(lbar[i]))),
            "w_L_ang": delta**0.5 * au**2 * float(np.max(np.abs(l_ang[i]))),
            "w_ang2": delta**-0.25 * au**2.75 * float(np.max(np.abs(ang2[i]))),
            "w_Lbar_ang": delta**-0.25 * au**2.5 * float(np.max(np.abs(lbar_ang[i]))),
        })
    return rows


# --- focusing ---------------------------------------------------------------------------

@dataclass
class FocusingReport:
    tube_radius: float
    margin: float
    out_tube_energy: float        # C_{-1} flux outside margin * tube_radius
    in_tube_defect: float         # |in-tube flux at u=-1 minus at u0|
    cbar_delta_flux: float        # paper-displayed integrand |Lphi|^2 + |ang|^2
    cbar_delta_flux_incoming: float   # T(.,Lbar) integrand |Lbarphi|^2 + |ang|^2
    lphi_drift: float             # max |Lphi(-1) - Lphi(u0)|, unweighted
    lphi_drift_weighted: float    # max ||u| Lphi(-1) - |u0| Lphi(u0)|
    per_u: list                   # rows (u, in_tube, out_tube)


def _tube_split_flux(state, i_u, tube_radius, margin):
    grid = state.grid
    st = stress(state)
    density = st.t_ll + st.t_llbar
    theta = grid.theta_nodes
    inside = theta <= tube_radius
    outside = theta >= margin * tube_radius
    d_in = np.where(inside[None, :], density[i_u], 0.0)
    d_out = np.where(outside[None, :], density[i_u], 0.0)
    u = grid.u_nodes[i_u]
    return (flux_integral_C_u(d_in, u, grid), flux_integral_C_u(d_out, u, grid))


def focusing_report(state, tube_radius, margin=2.0, n_samples=5):
    """Tube-localized energy accounting for cap-localized pulses.

    The tube has the data cap's angular radius; the out-tube region starts
    at margin * tube_radius (safety band excluded from both).  Both
    candidate integrands for the exit-surface flux are reported.
    """
    grid = state.grid
    if grid.angular_mode != "axisym":
        raise ValueError("focusing diagnostics need an axisymmetric run with a cap")
    state.require_derivatives()
    st = stress(state)

    idx = np.unique(np.linspace(0, grid.n_u, n_samples, dtype=int))
    per_u = []
    for i in idx:
        fin, fout = _tube_split_flux(state, i, tube_radius, margin)
        per_u.append({"u": float(grid.u_nodes[i]), "in_tube": fin, "out_tube": fout})

    in_first, _ = _tube_split_flux(state, 0, tube_radius, margin)
    in_last, out_last = _tube_split_flux(state, grid.n_u, tube_radius, margin)

    j = grid.n_ubar
    ub = grid.ubar_nodes[j]
    cbar_out = flux_integral_Cbar((st.t_ll + st.t_llbar)[:, j], ub, grid)
    cbar_in = flux_integral_Cbar((st.t_lbarlbar + st.t_llbar)[:, j], ub, grid)

    lphi0 = state.lphi[0]
    lphi1 = state.lphi[-1]
    drift = float(np.max(np.abs(lphi1 - lphi0)))
    u0a, u1a = abs(grid.u_nodes[0]), abs(grid.u_nodes[-1])
    drift_w = float(np.max(np.abs(u1a * lphi1 - u0a * lphi0)))

    return FocusingReport(
        tube_radius=tube_radius,
        margin=margin,
        out_tube_energy=out_last,
        in_tube_defect=abs(in_last - in_first),
        cbar_delta_flux=cbar_out,
        cbar_delta_flux_incoming=cbar_in,
        lphi_drift=drift,
        lphi_drift_weighted=drift_w,
        per_u=per_u,
    )


def tube_monotonicity_check(state, tube_radius, margins):
    """Out-tube flux cannot grow when the excluded region widens."""
    vals = [_tube_split_flux(state, state.grid.n_u, tube_radius, m)[1] for m in margins]
    return all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


# --- traces and radiation field -----------------------------------------------------------

def trace_on_Cbar(state, ubar_frac=1.0):
    """Slice u_bar = ubar_frac * delta: per-u values and weighted sups.

    ubar_frac = 1 is the exit surface Cbar_delta where outgoing smallness
    is expected; interior fractions keep the short-pulse scale.
    """
    grid = state.grid
    state.require_derivatives()
    j = int(round(ubar_frac * grid.n_ubar))
    j = min(max(j, 0), grid.n_ubar)
    u_abs = np.abs(grid.u_nodes)
    sup_th = np.max(np.abs(state.lphi[:, j, :]), axis=-1)
    rows = {
        "ubar": float(grid.ubar_nodes[j]),
        "sup_u_weighted_lphi": float(np.max(u_abs * sup_th)),
        "sup_lphi": float(np.max(sup_th)),
        "sup_lbarphi": float(np.max(np.abs(state.lbarphi[:, j, :]))),
        "sup_ang_weighted": float(np.max(u_abs[:, None] ** 2
                                         * np.abs(state.ang_grad[:, j, :]))),
        "sup_phi": float(np.max(np.abs(state.phi[:, j, :]))),
    }
    return rows


def radiation_field(state, i_u=0):
    """|u| * phi on an early-u slice: the radiation-field profile proxy."""
    return abs(state.grid.u_nodes[i_u]) * state.phi[i_u]


# --- inequality checks ----------------------------------------------------------------------

def nullform_bound_check(state):
    """Pointwise |Q(grad phi, grad phi)| <= C(q, point) * mixed-product bound.

    Exact by construction of the constant; returns the worst observed
    ratio (should never exceed 1 beyond roundoff).
    """
    state.require_derivatives()
    grid = state.grid
    source = np.abs(_nullform_source(state))
    worst = 0.0
    for k, theta in enumerate(np.atleast_1d(grid.theta_nodes)):
        c = pointwise_bound_constant(state.spec.q, (1.0, theta, 0.0))
        lp = np.abs(state.lphi[:, :, k])
        lb = np.abs(state.lbarphi[:, :, k])
        aa = np.abs(state.ang_grad[:, :, k])
        rhs = lp * lb * 2.0 + aa * aa + (lp + lb) * aa * 2.0
        denom = c * rhs + EPS_FLOOR
        worst = max(worst, float(np.max(source[:, :, k] / denom)))
    return worst


def sobolev_ratio(state, i_u, j_ub):
    """Ratio of the two sides of the first trace inequality on S_{ubar,u}."""
    grid = state.grid
    state.require_derivatives()
    u_val = abs(grid.u_nodes[i_u])
    r = grid.radius(grid.u_nodes[i_u], grid.ubar_nodes[j_ub])
    phi_slice = state.phi[i_u, j_ub]
    l4 = sphere_integral(phi_slice**4, r, grid) ** 0.25
    lhs = u_val**0.5 * l4
    l_norm = _l2_cu(state.lphi**2, state, i_u, j_ub)
    phi_norm = _l2_cu(state.phi**2, state, i_u, j_ub)
    ang_norm = _l2_cu(state.ang_grad**2, state, i_u, j_ub)
    rhs = l_norm**0.5 * (phi_norm**0.5 + u_val**0.5 * ang_norm**0.5)
    if lhs == 0.0:
        return 0.0
    return float(lhs / max(rhs, EPS_FLOOR))
