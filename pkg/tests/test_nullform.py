import numpy as np
import pytest

from nullwave.nullform import (
    BASIS_KINDS,
    FrameGradient,
    NullFormCoeffs,
    basis_form,
    certify_null_dimension,
    evaluate_cartesian,
    evaluate_frame,
    frame_components,
    frame_covector_map,
    is_null,
    minkowski_sq,
    mixed_product_bound,
    null_direction_commutator,
    pointwise_bound_constant,
    rotation_commutator,
    sample_null_covectors,
)


# --- polynomial test fields with exact gradients and Hessians ---------------

class PolyField:
    def __init__(self, grad, hess):
        self.grad = grad
        self.hess = hess


def _f_tx1():
    # phi = t * x1
    return PolyField(
        grad=lambda x: np.array([x[1], x[0], 0.0, 0.0]),
        hess=lambda x: np.array(
            [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=float
        ),
    )


def _f_x2sq():
    # psi = x2^2
    return PolyField(
        grad=lambda x: np.array([0.0, 0.0, 2 * x[2], 0.0]),
        hess=lambda x: np.diag([0.0, 0.0, 2.0, 0.0]),
    )


def _f_mixed():
    # phi = x1*x3 + t^2
    h = np.zeros((4, 4))
    h[0, 0] = 2.0
    h[1, 3] = h[3, 1] = 1.0
    return PolyField(
        grad=lambda x: np.array([2 * x[0], x[3], 0.0, x[1]]),
        hess=lambda x, h=h: h,
    )


def _f_cubic():
    # psi = x2*x3*t
    def hess(x):
        h = np.zeros((4, 4))
        h[0, 2] = h[2, 0] = x[3]
        h[0, 3] = h[3, 0] = x[2]
        h[2, 3] = h[3, 2] = x[0]
        return h

    return PolyField(
        grad=lambda x: np.array([x[2] * x[3], 0.0, x[0] * x[3], x[0] * x[2]]),
        hess=hess,
    )


def _random_forms(rng, n):
    forms = []
    for _ in range(n):
        c = rng.standard_normal((4, 4))
        forms.append(NullFormCoeffs(rng.standard_normal(), c - c.T))
    return forms


# --- basis and Cartesian evaluation -----------------------------------------

def test_basis_form_q0():
    q = basis_form("Q0")
    assert q.c0 == 1.0
    assert np.all(q.c == 0.0)


def test_basis_form_wedges():
    q12 = basis_form("Q12")
    assert q12.c0 == 0.0
    assert q12.c[1, 2] == 1.0 and q12.c[2, 1] == -1.0
    q03 = basis_form("Q03")
    assert q03.c[0, 3] == 1.0 and q03.c[3, 0] == -1.0
    with pytest.raises(ValueError):
        basis_form("Q31")


def test_evaluate_cartesian_examples():
    q0 = basis_form("Q0")
    ell = np.array([1.0, 0.0, 0.0, 1.0])
    assert evaluate_cartesian(q0, ell, ell) == pytest.approx(0.0, abs=1e-15)
    q12 = basis_form("Q12")
    xi = np.array([0.0, 1.0, 0.0, 0.0])
    eta = np.array([0.0, 0.0, 1.0, 0.0])
    assert evaluate_cartesian(q12, xi, eta) == pytest.approx(1.0)
    e_t = np.array([1.0, 0.0, 0.0, 0.0])
    assert evaluate_cartesian(q0, e_t, e_t) == pytest.approx(-1.0)


def test_minkowski_and_null_predicate():
    assert minkowski_sq(np.array([1.0, 0, 0, 1.0])) == pytest.approx(0.0)
    assert is_null(np.array([2.0, 0, 2.0, 0]))
    assert not is_null(np.array([1.0, 0, 0, 0]))


def test_null_cone_vanishing_all_basis_forms():
    rng = np.random.default_rng(7)
    xis = sample_null_covectors(10_000, rng)
    for kind in BASIS_KINDS:
        q = basis_form(kind)
        qmat = q.coefficient_matrix()
        vals = np.einsum("ni,ij,nj->n", xis, qmat, xis)
        scale = q.norm() * np.sum(xis * xis, axis=1)
        assert np.max(np.abs(vals) / scale) <= 1e-12


# --- frame decomposition -----------------------------------------------------

def test_frame_components_q0():
    fc = frame_components(basis_form("Q0"), (2.5, 0.7, 0.3))
    assert fc.q34 == pytest.approx(-0.5, abs=1e-14)
    assert fc.q43 == pytest.approx(-0.5, abs=1e-14)
    np.testing.assert_allclose(fc.qab, np.eye(2), atol=1e-14)
    for block in (fc.q4a, fc.q3a, fc.qa4, fc.qa3):
        np.testing.assert_allclose(block, 0.0, atol=1e-14)


def test_frame_components_rejects_bad_radius():
    with pytest.raises(ValueError):
        frame_components(basis_form("Q0"), (0.0, 0.3, 0.0))


def test_frame_evaluate_q0_examples():
    fc = frame_components(basis_form("Q0"), (1.0, 0.4, 0.0))
    out = FrameGradient(l=1.0)
    inc = FrameGradient(lbar=1.0)
    ang = FrameGradient(ang=(1.0, 0.0))
    assert evaluate_frame(fc, out, out) == pytest.approx(0.0, abs=1e-15)
    assert evaluate_frame(fc, out, inc) == pytest.approx(-0.5)
    assert evaluate_frame(fc, ang, ang) == pytest.approx(1.0)


def test_frame_cartesian_equivalence_randomized():
    # brute-force change-of-basis oracle over random forms/points/gradients
    rng = np.random.default_rng(2024)
    for q in _random_forms(rng, 20):
        for _ in range(50):
            r = rng.uniform(0.5, 10.0)
            theta = rng.uniform(0.05, np.pi - 0.05)
            phi_az = rng.uniform(0.0, 2 * np.pi)
            fc = frame_components(q, (r, theta, phi_az))
            gphi = FrameGradient(*rng.standard_normal(2), rng.standard_normal(2))
            gpsi = FrameGradient(*rng.standard_normal(2), rng.standard_normal(2))
            xi = gphi.to_cartesian(theta, phi_az)
            eta = gpsi.to_cartesian(theta, phi_az)
            lhs = evaluate_frame(fc, gphi, gpsi)
            rhs = evaluate_cartesian(q, xi, eta)
            scale = max(abs(lhs), abs(rhs), 1e-6)
            assert abs(lhs - rhs) <= 1e-12 * scale


def test_frame_q03_on_axis_matches_cartesian_contraction():
    q03 = basis_form("Q03")
    rng = np.random.default_rng(5)
    for _ in range(10):
        r = rng.uniform(1.0, 9.0)
        fc = frame_components(q03, (r, 0.0, 0.0))
        # on the x3 axis: contraction with L, Lbar covector pairs by hand
        m = frame_covector_map(0.0, 0.0)
        ell = m @ np.array([1.0, 0, 0, 0])
        lbar = m @ np.array([0.0, 1.0, 0, 0])
        assert fc.q43 == pytest.approx(evaluate_cartesian(q03, ell, lbar), abs=1e-14)
        assert fc.q34 == pytest.approx(evaluate_cartesian(q03, lbar, ell), abs=1e-14)
        assert fc.q34 == pytest.approx(-fc.q43)


# --- dimension certification --------------------------------------------------

def test_certified_dimension_is_seven():
    assert certify_null_dimension(100, rng_seed=0) == 7
    assert certify_null_dimension(1000, rng_seed=123) == 7


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_certified_dimension_many_seeds(seed):
    assert certify_null_dimension(200, rng_seed=seed) == 7


def test_certified_dimension_symmetric_restriction():
    # symmetric forms vanishing on the cone: only multiples of the metric
    assert certify_null_dimension(300, rng_seed=11, symmetric_only=True) == 1


def test_certify_rejects_tiny_sample():
    with pytest.raises(ValueError):
        certify_null_dimension(10, rng_seed=0)


# --- rotation commutator -------------------------------------------------------

def _rotation_vector(i, j, x):
    v = np.zeros(4)
    v[j] = x[i]
    v[i] = -x[j]
    return v


def _grad_of_rotated(field, i, j, x):
    # grad of (Omega_ij f): (d_a Omega^m) d_m f + Omega^m H_am
    g = field.grad(x)
    h = field.hess(x)
    out = h @ _rotation_vector(i, j, x)
    out[i] += g[j]
    out[j] += -g[i]
    return out


def _q_field_derivative(q, fphi, fpsi, x):
    # grad of Q(grad phi, grad psi) as a function of x, exact for polynomials
    qmat = q.coefficient_matrix()
    gphi, gpsi = fphi.grad(x), fpsi.grad(x)
    hphi, hpsi = fphi.hess(x), fpsi.hess(x)
    return hphi @ qmat @ gpsi + hpsi @ qmat.T @ gphi


def test_rotation_commutator_q0_vanishes():
    for pair in [(1, 2), (1, 3), (2, 3)]:
        qt = rotation_commutator(basis_form("Q0"), pair)
        assert qt.is_zero()


def test_rotation_commutator_identity_on_polynomials():
    rng = np.random.default_rng(99)
    fields = [(_f_tx1(), _f_x2sq()), (_f_mixed(), _f_cubic()), (_f_cubic(), _f_tx1())]
    forms = [basis_form(k) for k in BASIS_KINDS] + _random_forms(rng, 4)
    for q in forms:
        for i, j in [(1, 2), (1, 3), (2, 3)]:
            qt = rotation_commutator(q, (i, j))
            for fphi, fpsi in fields:
                for _ in range(5):
                    x = rng.uniform(-2, 2, size=4)
                    lhs = float(
                        _rotation_vector(i, j, x) @ _q_field_derivative(q, fphi, fpsi, x)
                    )
                    rhs = evaluate_cartesian(q, _grad_of_rotated(fphi, i, j, x), fpsi.grad(x))
                    rhs += evaluate_cartesian(q, fphi.grad(x), _grad_of_rotated(fpsi, i, j, x))
                    rhs += evaluate_cartesian(qt, fphi.grad(x), fpsi.grad(x))
                    scale = max(abs(lhs), abs(rhs), 1.0)
                    assert abs(lhs - rhs) <= 1e-12 * scale


def test_rotation_commutator_result_is_null_form():
    rng = np.random.default_rng(3)
    xis = sample_null_covectors(2000, rng)
    for q in _random_forms(rng, 5):
        for pair in [(1, 2), (1, 3), (2, 3)]:
            qt = rotation_commutator(q, pair)
            qmat = qt.coefficient_matrix()
            vals = np.einsum("ni,ij,nj->n", xis, qmat, xis)
            assert np.max(np.abs(vals)) <= 1e-10 * max(qt.norm(), 1e-30) * 100


def test_rotation_commutator_invalid_pair():
    with pytest.raises(ValueError):
        rotation_commutator(basis_form("Q0"), (2, 1))
    with pytest.raises(ValueError):
        rotation_commutator(basis_form("Q0"), (0, 1))


# --- null-direction commutator -------------------------------------------------

def test_null_direction_q0_angular_closed_form():
    # for purely angular gradients [L, Q0] = -(2/r) ang_phi . ang_psi and
    # the Lbar value is its exact negative
    q0 = basis_form("Q0")
    gphi = FrameGradient(ang=(0.7, -0.2))
    gpsi = FrameGradient(ang=(-0.3, 1.1))
    r = 3.0
    point = (r, 1.1, 0.4)
    expected = -(2.0 / r) * float(gphi.ang @ gpsi.ang)
    got_l = null_direction_commutator(q0, "L", point, gphi, gpsi)
    got_lbar = null_direction_commutator(q0, "Lbar", point, gphi, gpsi)
    assert got_l == pytest.approx(expected, rel=1e-13)
    assert got_lbar == pytest.approx(-got_l, rel=1e-13)


def test_null_direction_commutator_rejects_bad_input():
    g = FrameGradient()
    with pytest.raises(ValueError):
        null_direction_commutator(basis_form("Q0"), "L", (-1.0, 0.3, 0.0), g, g)
    with pytest.raises(ValueError):
        null_direction_commutator(basis_form("Q0"), "T", (1.0, 0.3, 0.0), g, g)


def _direction_vector(name, x):
    rvec = x[1:] / np.linalg.norm(x[1:])
    sign = 1.0 if name == "L" else -1.0
    return np.concatenate(([1.0], sign * rvec))


def _dirphi_value(field, name, y):
    return float(_direction_vector(name, y) @ field.grad(y))


def _fd_commutator(q, name, x, fphi, fpsi, h):
    # defining identity evaluated with centered finite differences
    dvec = _direction_vector(name, x)

    def qval(y):
        return evaluate_cartesian(q, fphi.grad(y), fpsi.grad(y))

    lhs = (qval(x + h * dvec) - qval(x - h * dvec)) / (2 * h)

    def grad_dir(field):
        out = np.zeros(4)
        for a in range(4):
            e = np.zeros(4)
            e[a] = h
            out[a] = (_dirphi_value(field, name, x + e) - _dirphi_value(field, name, x - e)) / (2 * h)
        return out

    lhs -= evaluate_cartesian(q, grad_dir(fphi), fpsi.grad(x))
    lhs -= evaluate_cartesian(q, fphi.grad(x), grad_dir(fpsi))
    return lhs


def _frame_gradient_at(field, x):
    r = np.linalg.norm(x[1:])
    theta = np.arccos(np.clip(x[3] / r, -1, 1))
    phi_az = np.arctan2(x[2], x[1])
    m = frame_covector_map(theta, phi_az)
    comps = np.linalg.solve(m, field.grad(x))
    return FrameGradient(comps[0], comps[1], comps[2:]), (r, theta, phi_az)


@pytest.mark.parametrize("kind", ["Q0", "Q03", "Q12", "Q01"])
@pytest.mark.parametrize("name", ["L", "Lbar"])
def test_null_direction_commutator_matches_finite_differences(kind, name):
    q = basis_form(kind)
    fphi, fpsi = _f_tx1(), _f_x2sq()
    x = np.array([0.3, 0.8, -0.45, 1.2])
    gphi, point = _frame_gradient_at(fphi, x)
    gpsi, _ = _frame_gradient_at(fpsi, x)
    exact = null_direction_commutator(q, name, point, gphi, gpsi)
    errs = []
    hs = [2e-2, 1e-2, 5e-3]
    for h in hs:
        errs.append(abs(_fd_commutator(q, name, x, fphi, fpsi, h) - exact))
    errs = np.array(errs)
    if np.all(errs < 1e-11):
        return  # commutator exactly representable; nothing to rate
    orders = np.log(errs[:-1] / errs[1:]) / np.log(np.array(hs[:-1]) / np.array(hs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.3)


# --- pointwise bound -------------------------------------------------------------

def test_pointwise_bound_q0_is_three():
    assert pointwise_bound_constant(basis_form("Q0"), (2.0, 0.9, 0.1)) == pytest.approx(3.0)


def test_pointwise_bound_zero_and_scaling():
    zero = NullFormCoeffs()
    assert pointwise_bound_constant(zero, (1.0, 0.5, 0.0)) == 0.0
    q = basis_form("Q13")
    point = (4.0, 1.2, 2.2)
    assert pointwise_bound_constant(q.scaled(2.0), point) == pytest.approx(
        2.0 * pointwise_bound_constant(q, point)
    )


def test_pointwise_bound_dominates_random_gradients():
    rng = np.random.default_rng(17)
    for q in _random_forms(rng, 4) + [basis_form("Q0")]:
        point = (rng.uniform(1, 8), rng.uniform(0.1, 3.0), rng.uniform(0, 6))
        fc = frame_components(q, point)
        c = pointwise_bound_constant(q, point)
        for _ in range(2500):
            gphi = FrameGradient(*rng.standard_normal(2), rng.standard_normal(2))
            gpsi = FrameGradient(*rng.standard_normal(2), rng.standard_normal(2))
            val = abs(evaluate_frame(fc, gphi, gpsi))
            bound = c * mixed_product_bound(gphi, gpsi)
            assert val <= bound + 1e-12


# --- serialization -----------------------------------------------------------------

def test_config_round_trip():
    q = NullFormCoeffs(0.5, basis_form("Q03").c * 2.0)
    q2 = NullFormCoeffs.from_config(q.to_config())
    assert q2.c0 == q.c0
    np.testing.assert_allclose(q2.c, q.c)


def test_config_rejects_bad_indices():
    with pytest.raises(ValueError):
        NullFormCoeffs.from_config({"c0": 0.0, "c": [[3, 0, 1.0]]})
    with pytest.raises(ValueError):
        NullFormCoeffs.from_config({"c0": 0.0, "c": [[1, 1, 1.0]]})
