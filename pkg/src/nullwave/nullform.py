"""Exact algebra of null quadratic forms on Minkowski space R^{3+1}.

A quadratic form Q on gradients is *null* if Q(xi, xi) = 0 for every null
covector xi.  The space of such forms is 7-dimensional, spanned by the
metric form Q0 and the six antisymmetric wedge forms Q_{ab} (a < b).
Everything here works in coordinates (t, x1, x2, x3) with metric
signature (-, +, +, +), so the outgoing/incoming null pair
L = dt + dr, Lbar = dt - dr satisfies g(L, Lbar) = -2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Signature (-,+,+,+): inverse metric acting on gradient covectors.
MINKOWSKI_DIAG = np.array([-1.0, 1.0, 1.0, 1.0])

TOL_NULL = 1e-10
NULLSPACE_RTOL = 1e-10

BASIS_KINDS = ("Q0", "Q01", "Q02", "Q03", "Q12", "Q13", "Q23")


def minkowski_sq(v):
    """g-squared norm of a covector/vector with signature (-,+,+,+)."""
    v = np.asarray(v, dtype=float)
    return float(-v[..., 0] ** 2 + np.sum(v[..., 1:] ** 2, axis=-1))


def is_null(v, tol=TOL_NULL, eps_floor=1e-300):
    v = np.asarray(v, dtype=float)
    euclid_sq = float(np.sum(v * v))
    return abs(minkowski_sq(v)) <= tol * (euclid_sq + eps_floor)


def sample_null_covectors(count, rng):
    """Draw null covectors (a, a*omega); covers the cone up to scaling."""
    a = rng.uniform(0.1, 10.0, size=count)
    w = rng.normal(size=(count, 3))
    w /= np.linalg.norm(w, axis=1)[:, None]
    out = np.empty((count, 4))
    out[:, 0] = a
    out[:, 1:] = a[:, None] * w
    return out


@dataclass
class NullFormCoeffs:
    """Coordinates of a null form in the 7-dim basis {Q0, Q_ab}.

    c0 multiplies Q0(xi, eta) = g(xi, eta); the antisymmetric matrix c
    holds the coefficients of Q_ab(xi, eta) = xi_a eta_b - eta_a xi_b
    for a < b (the lower triangle mirrors with opposite sign).
    """

    c0: float = 0.0
    c: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (4, 4):
            raise ValueError("c must be a 4x4 matrix")
        if not np.allclose(self.c, -self.c.T, atol=0.0):
            raise ValueError("c must be exactly antisymmetric")

    def coefficient_matrix(self):
        """Full 4x4 matrix Q^{ab} acting on gradient covectors."""
        return self.c0 * np.diag(MINKOWSKI_DIAG) + self.c

    def scaled(self, factor):
        return NullFormCoeffs(self.c0 * factor, self.c * factor)

    def plus(self, other):
        return NullFormCoeffs(self.c0 + other.c0, self.c + other.c)

    def norm(self):
        return float(np.hypot(self.c0, np.linalg.norm(self.c)))

    def is_zero(self, tol=0.0):
        return abs(self.c0) <= tol and np.max(np.abs(self.c)) <= tol

    def to_config(self):
        entries = [
            [a, b, float(self.c[a, b])]
            for a in range(4)
            for b in range(a + 1, 4)
            if self.c[a, b] != 0.0
        ]
        return {"c0": float(self.c0), "c": entries}

    @staticmethod
    def from_config(obj):
        """Load {"c0": x, "c": [[a, b, v], ...]} with a < b; antisymmetrize."""
        c0 = float(obj.get("c0", 0.0))
        c = np.zeros((4, 4))
        for entry in obj.get("c", []):
            a, b, v = int(entry[0]), int(entry[1]), float(entry[2])
            if not (0 <= a < b <= 3):
                raise ValueError(f"null-form entry needs 0 <= a < b <= 3, got ({a},{b})")
            c[a, b] += v
            c[b, a] -= v
        return NullFormCoeffs(c0, c)


def basis_form(kind):
    """Unit coordinate vector for one of the seven basis null forms."""
    if kind == "Q0":
        return NullFormCoeffs(1.0, np.zeros((4, 4)))
    if kind in BASIS_KINDS:
        a, b = int(kind[1]), int(kind[2])
        c = np.zeros((4, 4))
        c[a, b] = 1.0
        c[b, a] = -1.0
        return NullFormCoeffs(0.0, c)
    raise ValueError(f"unknown basis form {kind!r}; expected one of {BASIS_KINDS}")


def evaluate_cartesian(q, xi, eta):
    """Q(xi, eta) for gradient covectors xi, eta in (t, x1, x2, x3) components."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    val = q.c0 * float(np.dot(MINKOWSKI_DIAG * xi, eta))
    val += float(xi @ q.c @ eta)
    return val


# --- null frame at a point -------------------------------------------------

def _sphere_triad(theta, phi_az):
    """Radial, polar and azimuthal unit vectors at (theta, phi_az)."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi_az), np.cos(phi_az)
    omega = np.array([st * cp, st * sp, ct])
    e_theta = np.array([ct * cp, ct * sp, -st])
    e_phi = np.array([-sp, cp, 0.0])
    return omega, e_theta, e_phi


def frame_covector_map(theta, phi_az=0.0):
    """Matrix M mapping frame-gradient components (Lphi, Lbarphi, a1, a2)
    to the Cartesian gradient covector: dt-phi = (L + Lbar)/2,
    dr-phi = (L - Lbar)/2, tangential parts along e_theta, e_phi."""
    omega, e_theta, e_phi = _sphere_triad(theta, phi_az)
    m = np.zeros((4, 4))
    m[0, 0] = 0.5
    m[0, 1] = 0.5
    m[1:, 0] = 0.5 * omega
    m[1:, 1] = -0.5 * omega
    m[1:, 2] = e_theta
    m[1:, 3] = e_phi
    return m


@dataclass
class FrameGradient:
    """First derivatives of a scalar in the null frame: l = L phi,
    lbar = Lbar phi, ang = orthonormal sphere-frame components of the
    intrinsic gradient."""

    l: float = 0.0
    lbar: float = 0.0
    ang: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.ang = np.asarray(self.ang, dtype=float).reshape(2)

    def angular_part(self):
        return FrameGradient(0.0, 0.0, self.ang.copy())

    def as_vector(self):
        return np.array([self.l, self.lbar, self.ang[0], self.ang[1]])

    def to_cartesian(self, theta, phi_az=0.0):
        return frame_covector_map(theta, phi_az) @ self.as_vector()


@dataclass
class FrameComponents:
    """Null-frame components of a null form at a point.

    The L(x)L and Lbar(x)Lbar slots do not exist: a null form cannot
    pair two outgoing or two incoming derivatives, so the type carries
    only the mixed and angular blocks.
    """

    q43: float          # coefficient of Lphi * Lbarpsi
    q34: float          # coefficient of Lbarphi * Lpsi
    q4a: np.ndarray     # Lphi * ang_psi (2,)
    q3a: np.ndarray     # Lbarphi * ang_psi (2,)
    qa4: np.ndarray     # ang_phi * Lpsi (2,)
    qa3: np.ndarray     # ang_phi * Lbarpsi (2,)
    qab: np.ndarray     # ang_phi x ang_psi (2, 2)

    def evaluate(self, gphi, gpsi):
        """Full bilinear expansion in frame quantities (equals the
        Cartesian evaluation on the corresponding gradients)."""
        val = self.q43 * gphi.l * gpsi.lbar + self.q34 * gphi.lbar * gpsi.l
        val += gphi.l * float(self.q4a @ gpsi.ang)
        val += gphi.lbar * float(self.q3a @ gpsi.ang)
        val += gpsi.l * float(self.qa4 @ gphi.ang)
        val += gpsi.lbar * float(self.qa3 @ gphi.ang)
        val += float(gphi.ang @ self.qab @ gpsi.ang)
        return val

    def absolute_sum(self):
        return (
            abs(self.q43)
            + abs(self.q34)
            + float(np.sum(np.abs(self.q4a)))
            + float(np.sum(np.abs(self.q3a)))
            + float(np.sum(np.abs(self.qa4)))
            + float(np.sum(np.abs(self.qa3)))
            + float(np.sum(np.abs(self.qab)))
        )


def frame_components(q, point):
    """Contract q with the frame covectors at point = (r, theta, phi_az).

    The diagonal null slots vanish to machine precision by nullity of
    L and Lbar; they are checked and dropped from the result.
    """
    r = point[0]
    if r <= 0.0:
        raise ValueError(f"frame undefined at r = {r} <= 0")
    theta = point[1]
    phi_az = point[2] if len(point) > 2 else 0.0
    m = frame_covector_map(theta, phi_az)
    k = m.T @ q.coefficient_matrix() @ m
    scale = max(np.max(np.abs(k)), 1e-300)
    if abs(k[0, 0]) > 1e-13 * scale or abs(k[1, 1]) > 1e-13 * scale:
        raise AssertionError("null form produced a diagonal L/Lbar component")
    return FrameComponents(
        q43=float(k[0, 1]),
        q34=float(k[1, 0]),
        q4a=k[0, 2:].copy(),
        q3a=k[1, 2:].copy(),
        qa4=k[2:, 0].copy(),
        qa3=k[2:, 1].copy(),
        qab=k[2:, 2:].copy(),
    )


def evaluate_frame(fc, gphi, gpsi):
    return fc.evaluate(gphi, gpsi)


# --- certification of the null-form space ----------------------------------

def certify_null_dimension(sample_count, rng_seed, symmetric_only=False):
    """Numerical dimension of {bilinear B : B(xi, xi) = 0 on the null cone}.

    Builds the linear system over generic 4x4 bilinear forms (16 dof, or
    the 10 symmetric ones) from sampled null covectors and returns the
    nullspace dimension of the constraint matrix.
    """
    if sample_count < 40:
        raise ValueError("need at least 40 samples to overdetermine the system")
    rng = np.random.default_rng(rng_seed)
    xis = sample_null_covectors(sample_count, rng)
    if symmetric_only:
        pairs = [(a, b) for a in range(4) for b in range(a, 4)]
        rows = np.empty((sample_count, len(pairs)))
        for col, (a, b) in enumerate(pairs):
            rows[:, col] = xis[:, a] * xis[:, b] * (1.0 if a == b else 2.0)
    else:
        # row = flattened outer product xi xi^T; antisymmetric parts are
        # annihilated automatically, which is part of the answer.
        rows = (xis[:, :, None] * xis[:, None, :]).reshape(sample_count, 16)
    svals = np.linalg.svd(rows, compute_uv=False)
    return int(np.sum(svals <= NULLSPACE_RTOL * svals[0]))


# --- commutators ------------------------------------------------------------

def _add_wedge(c, a, b, v):
    # accumulate v * Q_ab, antisymmetrized; Q_aa = 0
    if a == b or v == 0.0:
        return
    c[a, b] += v
    c[b, a] -= v


def rotation_commutator(q, indices):
    """Defect null form Qt in
    Omega_ij Q(grad phi, grad psi) = Q(grad Omega_ij phi, grad psi)
                                   + Q(grad phi, grad Omega_ij psi)
                                   + Qt(grad phi, grad psi),
    with Omega_ij = x_i d_j - x_j d_i.  Q0 commutes cleanly (Qt = 0);
    on the wedge basis Qt = -d_ia Q_jb + d_ja Q_ib + d_ib Q_ja - d_jb Q_ia,
    extended linearly.
    """
    i, j = indices
    if not (1 <= i < j <= 3):
        raise ValueError(f"rotation indices must satisfy 1 <= i < j <= 3, got ({i},{j})")
    out = np.zeros((4, 4))
    for a in range(4):
        for b in range(a + 1, 4):
            v = q.c[a, b]
            if v == 0.0:
                continue
            if i == a:
                _add_wedge(out, j, b, -v)
            if j == a:
                _add_wedge(out, i, b, v)
            if i == b:
                _add_wedge(out, j, a, v)
            if j == b:
                _add_wedge(out, i, a, -v)
    return NullFormCoeffs(0.0, out)


def null_direction_commutator(q, direction, point, gphi, gpsi):
    """[dir, Q](grad phi, grad psi) = dir(Q) - Q(grad dir phi, .) - Q(., grad dir psi)
    at point = (r, theta, phi_az), for dir in {"L", "Lbar"}.

    Closed form: the only non-commuting part of L = dt + dr is the angular
    turning of the radial direction, d_j omega_i = (delta_ij - w_i w_j)/r,
    so [L, Q] = -(1/r)[Q(P grad phi, grad psi) + Q(grad phi, P grad psi)]
    with P the tangential projector, and [Lbar, Q] is its exact negative.
    """
    r = point[0]
    if r <= 0.0:
        raise ValueError(f"commutator undefined at r = {r} <= 0")
    if direction not in ("L", "Lbar"):
        raise ValueError(f"direction must be 'L' or 'Lbar', got {direction!r}")
    fc = frame_components(q, point)
    val = fc.evaluate(gphi.angular_part(), gpsi) + fc.evaluate(gphi, gpsi.angular_part())
    sign = -1.0 if direction == "L" else 1.0
    return sign * val / r


# --- pointwise bound --------------------------------------------------------

def pointwise_bound_constant(q, point):
    """C with |Q(grad phi, grad psi)| <= C * mixed_product_bound for every
    gradient pair: the sum of absolute frame components at the point."""
    return frame_components(q, point).absolute_sum()


def mixed_product_bound(gphi, gpsi):
    """The structural bound a null form is compared against: every product
    of frame derivatives except Lphi*Lpsi and Lbarphi*Lbarpsi."""
    aphi = float(np.linalg.norm(gphi.ang))
    apsi = float(np.linalg.norm(gpsi.ang))
    return (
        abs(gphi.l) * abs(gpsi.lbar)
        + abs(gphi.lbar) * abs(gpsi.l)
        + aphi * apsi
        + (abs(gphi.l) + abs(gphi.lbar)) * apsi
        + aphi * (abs(gpsi.l) + abs(gpsi.lbar))
    )
