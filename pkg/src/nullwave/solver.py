"""Second-order double-null marching scheme for box phi = Q(grad phi, grad phi).

The evolved unknown is psi = r * phi, for which the wave operator reduces
exactly to

    d_u d_ubar psi = r * (lap_sphere phi - Q(grad phi, grad phi)),

absorbing the first-order terms of the null-frame equation.  The integrator
is the classic diamond scheme

    psi_NE = psi_NW + psi_SE - psi_SW + du * dubar * G(cell center),

swept row by row in u; within a row the recurrence in ubar is a prefix sum,
so each fixed-point pass evaluates G for all cells of the row from the
current iterate and rebuilds the row in one vectorized step.  The first
pass seeds the new row with the previous one (d_u psi = 0 guess); the
corrector passes restore second-order centering of the derivative-dependent
right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import DoubleNullGrid, angular_laplacian, theta_derivative
from .nullform import FrameGradient, NullFormCoeffs, evaluate_frame, frame_components


class AdmissibilityError(ValueError):
    """Null form incompatible with the angular mode of the grid."""


class BreakdownError(RuntimeError):
    """March produced values beyond the blow-up guard threshold."""

    def __init__(self, message, u=None, ubar=None):
        super().__init__(message)
        self.u = u
        self.ubar = ubar


@dataclass
class NullFormSpec:
    """A null form together with its admissibility for an angular mode.

    Spherical runs admit only multiples of the metric form; axisymmetric
    runs admit span{Q0, Q03} (the wedge aligned with the symmetry axis).
    """

    q: NullFormCoeffs

    def validate(self, angular_mode):
        c = self.q.c
        if angular_mode == "spherical":
            if np.max(np.abs(c)) != 0.0:
                raise AdmissibilityError("null form not admissible in spherical mode "
                                         "(only multiples of Q0)")
        elif angular_mode == "axisym":
            mask = np.ones((4, 4), dtype=bool)
            mask[0, 3] = mask[3, 0] = False
            if np.max(np.abs(c[mask])) != 0.0:
                raise AdmissibilityError("null form not admissible in axisym mode "
                                         "(span{Q0, Q03} only)")
        else:
            raise ValueError(f"unknown angular mode {angular_mode!r}")

    def is_zero(self):
        return self.q.is_zero()


@dataclass
class SolverConfig:
    # corrector_iterations is a guaranteed minimum; passes continue until
    # the row update drops below corrector_tol (relative) or the hard cap.
    corrector_iterations: int = 2
    corrector_tol: float = 1e-12
    blowup_threshold: float = 1e6
    max_corrector_iterations: int = 40

    def __post_init__(self):
        if self.corrector_iterations < 1:
            raise ValueError("need at least one corrector pass")
        if self.corrector_tol <= 0.0 or self.blowup_threshold <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_corrector_iterations < self.corrector_iterations + 1:
            raise ValueError("max_corrector_iterations too small")


@dataclass
class FieldState:
    """Marched field psi = r*phi over (u, ubar, theta) plus derived caches."""

    psi: np.ndarray
    grid: DoubleNullGrid
    delta: float
    u0: float
    spec: NullFormSpec
    metadata: dict = field(default_factory=dict)
    _phi: np.ndarray | None = None
    _lphi: np.ndarray | None = None
    _lbarphi: np.ndarray | None = None
    _ang: np.ndarray | None = None

    @property
    def phi(self):
        if self._phi is None:
            self._phi = self.psi / self.grid.r_grid()[:, :, None]
        return self._phi

    @property
    def lphi(self):
        self.require_derivatives()
        return self._lphi

    @property
    def lbarphi(self):
        self.require_derivatives()
        return self._lbarphi

    @property
    def ang_grad(self):
        self.require_derivatives()
        return self._ang

    def require_derivatives(self):
        if self._lphi is None:
            self._lphi, self._lbarphi, self._ang = derive_first_derivatives(self)


def _symmetric_rhs_coefficients(spec, grid):
    """Per-theta coefficients of Q(g, g) over (Lphi*Lbarphi, Lphi*a, Lbarphi*a, a^2).

    The angular gradient of an axisymmetric field points along e_theta, so
    Q(grad phi, grad phi) collapses to four scalar coefficient arrays.
    """
    n = grid.n_theta
    c_lb = np.empty(n)
    c_la = np.empty(n)
    c_ba = np.empty(n)
    c_aa = np.empty(n)
    for k, theta in enumerate(np.atleast_1d(grid.theta_nodes)):
        fc = frame_components(spec.q, (1.0, theta, 0.0))  # coefficients are r-independent
        c_lb[k] = fc.q43 + fc.q34
        c_la[k] = fc.q4a[0] + fc.qa4[0]
        c_ba[k] = fc.q3a[0] + fc.qa3[0]
        c_aa[k] = fc.qab[0, 0]
    return c_lb, c_la, c_ba, c_aa


def rhs_null_form(spec, point, gphi):
    """Q(grad phi, grad phi) at a point from frame-gradient components.

    Evaluated through the certified frame decomposition, so the expansion
    can never contain an (L phi)^2 or (Lbar phi)^2 term.
    """
    fc = frame_components(spec.q, point)
    return evaluate_frame(fc, gphi, gphi)


def march(data, spec, grid, cfg=None):
    """Fill the Goursat rectangle from data on C_{u0} and Cbar_0.

    Returns a FieldState; raises BreakdownError when the guard trips.
    Deterministic: fixed pass counts and pure array arithmetic.
    """
    cfg = cfg or SolverConfig()
    spec.validate(grid.angular_mode)
    nth = grid.n_theta
    if data.phi_on_Cu0.shape != (grid.n_ubar + 1, nth):
        raise ValueError("data shape does not match grid")
    if abs(data.delta - grid.delta) > 1e-14 or abs(data.u0 - grid.u0) > 1e-14:
        raise ValueError("data (delta, u0) do not match grid")

    du, dub = grid.du, grid.dubar
    ubars = grid.ubar_nodes
    psi = np.zeros(grid.field_shape())
    psi[0] = (ubars - grid.u0)[:, None] * data.phi_on_Cu0
    # Cbar_0 data is identically zero: psi[:, 0] stays 0.

    c_lb, c_la, c_ba, c_aa = _symmetric_rhs_coefficients(spec, grid)
    nonlinear = not spec.is_zero()

    max_ratio = 0.0
    warnings = []

    for i in range(grid.n_u):
        u_lo, u_hi = grid.u_nodes[i], grid.u_nodes[i + 1]
        r_lo = (ubars - u_lo)[:, None]
        r_hi = (ubars - u_hi)[:, None]
        u_c = 0.5 * (u_lo + u_hi)
        r_c = (0.5 * (ubars[:-1] + ubars[1:]) - u_c)[:, None]

        row_lo = psi[i]
        phi_lo = row_lo / r_lo
        base = row_lo[1:] - row_lo[:-1]

        row = row_lo.copy()          # d_u psi = 0 predictor seed
        row[0] = 0.0
        prev_change = None
        for it in range(cfg.max_corrector_iterations):
            phi_hi = row / r_hi
            phi_c = 0.25 * (phi_lo[:-1] + phi_lo[1:] + phi_hi[:-1] + phi_hi[1:])
            lap_c = angular_laplacian(phi_c, r_c, grid)
            if nonlinear:
                lphi_c = (phi_lo[1:] - phi_lo[:-1] + phi_hi[1:] - phi_hi[:-1]) / (2.0 * dub)
                lbarphi_c = (phi_hi[:-1] + phi_hi[1:] - phi_lo[:-1] - phi_lo[1:]) / (2.0 * du)
                a_c = theta_derivative(phi_c, grid) / r_c
                qval = (c_lb * lphi_c * lbarphi_c
                        + c_la * lphi_c * a_c
                        + c_ba * lbarphi_c * a_c
                        + c_aa * a_c * a_c)
            else:
                qval = 0.0
            g_c = r_c * (lap_c - qval)
            new = np.empty_like(row)
            new[0] = 0.0
            np.cumsum(base + du * dub * g_c, axis=0, out=new[1:])
            change = float(np.max(np.abs(new - row)))
            row = new
            if prev_change is not None and prev_change > 0.0 and it >= 1:
                max_ratio = max(max_ratio, change / prev_change)
            prev_change = change
            scale = max(float(np.max(np.abs(row))), 1.0)
            if it >= cfg.corrector_iterations and change <= cfg.corrector_tol * scale:
                break
        else:
            if prev_change is not None and prev_change > cfg.corrector_tol * max(
                float(np.max(np.abs(row))), 1.0
            ):
                warnings.append(
                    f"corrector not converged at u = {u_hi:.6g} (last change {prev_change:.3e})"
                )

        if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > cfg.blowup_threshold:
            bad = np.abs(row)
            bad[~np.isfinite(row)] = np.inf
            j_bad = int(np.argmax(np.max(bad, axis=-1) > cfg.blowup_threshold))
            raise BreakdownError(
                f"|psi| exceeded {cfg.blowup_threshold:g} at u = {u_hi:.6g}, "
                f"ubar = {ubars[j_bad]:.6g}",
                u=u_hi,
                ubar=float(ubars[j_bad]),
            )
        psi[i + 1] = row

    meta = {
        "corrector_max_ratio": max_ratio,
        "warnings": warnings,
        "corrector_iterations": cfg.corrector_iterations,
    }
    if max_ratio > 0.5:
        meta["warnings"] = warnings + [
            f"corrector contraction ratio {max_ratio:.3f} exceeds 0.5; refine the grid"
        ]
    return FieldState(psi=psi, grid=grid, delta=grid.delta, u0=grid.u0,
                      spec=spec, metadata=meta)


def derive_first_derivatives(state):
    """Node values of (L phi, Lbar phi, (1/r) d_theta phi).

    Centered second-order differences inside, one-sided second-order
    stencils on the edges.
    """
    grid = state.grid
    phi = state.phi

    def d_axis(f, h, axis):
        out = np.empty_like(f)
        fm = np.moveaxis(f, axis, 0)
        om = np.moveaxis(out, axis, 0)
        om[1:-1] = (fm[2:] - fm[:-2]) / (2.0 * h)
        om[0] = (-3.0 * fm[0] + 4.0 * fm[1] - fm[2]) / (2.0 * h)
        om[-1] = (3.0 * fm[-1] - 4.0 * fm[-2] + fm[-3]) / (2.0 * h)
        return out

    lphi = d_axis(phi, grid.dubar, axis=1)
    lbarphi = d_axis(phi, grid.du, axis=0)
    ang = theta_derivative(phi, grid) / grid.r_grid()[:, :, None]
    return lphi, lbarphi, ang


def blowup_guard(state, threshold=None):
    """Post-hoc guard: OK status or the first offending cell."""
    thr = threshold if threshold is not None else 1e6
    bad = ~np.isfinite(state.psi) | (np.abs(state.psi) > thr)
    if not bad.any():
        return {"status": "OK", "max_abs_psi": float(np.max(np.abs(state.psi)))}
    i, j, _ = np.unravel_index(int(np.argmax(bad)), state.psi.shape)
    return {
        "status": "breakdown",
        "u": float(state.grid.u_nodes[i]),
        "ubar": float(state.grid.ubar_nodes[j]),
    }
