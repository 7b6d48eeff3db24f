import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conecalib import comass
from conecalib.catalog import MetricParams, derive_params

from oracles import exponents, psi_direct

P35 = derive_params(1, r=3, s=5)
P26 = derive_params(1, r=2, s=6)

row1_shapes = st.tuples(st.integers(2, 12), st.integers(2, 12))
betas = st.floats(0.8, 2.0)


def test_phi_is_one_at_theta0_and_symmetric_case():
    assert comass.phi(P35.theta0, P35) == pytest.approx(1.0, abs=1e-14)
    p22 = derive_params(1, r=2, s=2)
    assert p22.tau == pytest.approx(0.25)
    assert comass.phi(math.pi / 4, p22) == pytest.approx(1.0, abs=1e-14)


def test_phi_interior_value():
    v = comass.phi(0.5, P35)
    assert 0 < v < 1
    assert v == pytest.approx(math.cos(0.5) ** 4 * math.sin(0.5) ** 8 * 729 / 16, rel=1e-13)


def test_psi_normalization_on_2_6():
    assert math.atan(math.sqrt(5)) == pytest.approx(1.150262, abs=1e-6)
    assert comass.psi(math.atan(math.sqrt(5)), P26, 1.0) == pytest.approx(1.0, abs=1e-13)


def test_psi_borderline_endpoint_2_6():
    expected = (2 / 7) ** 2 * (46656 / 3125)
    assert comass.psi(math.pi / 2, P26, 1.0) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(1.2188, abs=1e-4)
    assert comass.psi(math.pi / 2 - 1e-6, P26, 1.0) == pytest.approx(expected, abs=1e-4)


def test_psi_divergent_endpoint_is_inf():
    p = derive_params(1, r=2, s=2)  # q m = 1.6 < 2 at beta = 0.9
    assert comass.psi(0.0, p, 0.9) == math.inf
    assert comass.endpoint_limit(p, 0.9, "right") == math.inf


def test_beta_must_exceed_half():
    with pytest.raises(ValueError):
        comass.psi(1.0, P35, 0.5)


def test_eta_positive_at_theta0():
    assert comass.eta(P35.theta0, P35, 1.0) > 0
    assert comass.eta(P26.theta0, P26, 1.0) > 0


@pytest.mark.parametrize("shape,expected", [((3, 5), (32, -156, 192, -240)),
                                            ((4, 4), (96, -188, 96, -1520))])
def test_quadratic_test_values(shape, expected):
    qt = comass.quadratic_test(derive_params(1, r=shape[0], s=shape[1]), 1)
    assert (qt.A, qt.B, qt.C, qt.discriminant) == tuple(Fraction(x) for x in expected)
    assert qt.certifies_positive


def test_quadratic_test_degenerates_for_p_equal_2():
    assert comass.quadratic_test(P26, 1).A == 0


def test_quadratic_matches_eta_identity():
    # 4 a^2 eta tan^2 = A Y^2 + B Y + C with Y = tan^2
    for beta in (1, Fraction(6, 5)):
        qt = comass.quadratic_test(P35, beta)
        for th in (0.3, 0.7, 1.2):
            y = math.tan(th) ** 2
            lhs = 4 * 49 * comass.eta(th, P35, float(beta)) * y
            rhs = float(qt.A) * y * y + float(qt.B) * y + float(qt.C)
            assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("shape,bound", [((6, 5), 0), ((7, 5), 36), ((2, 2), -28)])
def test_sigma_bound(shape, bound):
    assert comass.sigma_bound(derive_params(1, r=shape[0], s=shape[1])) == bound


def test_sigma_bound_rejects_other_rows():
    with pytest.raises(ValueError):
        comass.sigma_bound(derive_params(2, k=9))


@given(row1_shapes, betas)
def test_psi_is_one_at_theta0(shape, beta):
    params = derive_params(1, r=shape[0], s=shape[1])
    assert comass.psi(params.theta0, params, beta) == pytest.approx(1.0, abs=1e-12)


@given(row1_shapes, betas, st.floats(0.01, 1.56))
def test_psi_matches_direct_product(shape, beta, theta):
    params = derive_params(1, r=shape[0], s=shape[1])
    p, q, alpha, _ = exponents(1, r=shape[0], s=shape[1])
    got = comass.psi(theta, params, beta)
    ref = float(psi_direct(theta, p, q, alpha, beta))
    assert got >= 0
    assert got == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(row1_shapes, betas, st.floats(0.05, 1.52))
def test_phi_at_most_one(shape, beta, theta):
    params = derive_params(1, r=shape[0], s=shape[1])
    assert 0 < comass.phi(theta, params) <= 1 + 1e-15


@settings(max_examples=100)
@given(st.sampled_from([(1, dict(r=3, s=5)), (1, dict(r=2, s=6)), (2, dict(k=9)),
                        (3, dict(k=4)), (6, {}), (9, {})]),
       betas, st.floats(0.1, 0.9))
def test_derivative_identity(case, beta, frac):
    row, kw = case
    params = derive_params(row, **kw)
    lo, hi = params.domain
    th = lo + frac * (hi - lo)
    h = 1e-6
    fd = (comass.psi(th + h, params, beta) - comass.psi(th - h, params, beta)) / (2 * h)
    m = 2 * beta - 1
    exact = (comass.phi(th, params) ** m * comass.slope_factor(th, params)
             * comass.eta(th, params, beta))
    assert fd == pytest.approx(exact, abs=max(1e-6, 1e-6 * abs(exact)))
    assert comass.psi_prime(th, params, beta) == pytest.approx(exact, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("shape", [(3, 3), (3, 5), (4, 4), (5, 3), (4, 6), (5, 7)])
def test_discriminant_implies_positive_eta(shape):
    params = derive_params(1, r=shape[0], s=shape[1])
    qt = comass.quadratic_test(params, 1)
    if qt.A > 0 and qt.discriminant < 0:
        th = np.linspace(0, math.pi / 2, 100_002)[1:-1]
        assert np.min(comass.eta(th, params, 1.0)) > 0


@pytest.mark.parametrize("shape,beta", [((3, 5), 1.0), ((2, 6), 1.0), ((4, 4), 1.2), ((5, 6), 1.2)])
def test_endpoint_limits_agree_with_interior(shape, beta):
    params = derive_params(1, r=shape[0], s=shape[1])
    for side, th, near in (("left", 0.0, 1e-7), ("right", math.pi / 2, math.pi / 2 - 1e-7)):
        lim = comass.endpoint_limit(params, beta, side)
        if math.isfinite(lim):
            assert comass.psi(th, params, beta) == lim
            assert abs(lim - comass.psi(near, params, beta)) <= 1e-4


def test_type_i_psi_symmetric_about_pi_over_2():
    params = derive_params(9)
    th = np.linspace(0.1, 1.4, 20)
    assert np.allclose(comass.psi(th, params, 1.2), comass.psi(math.pi - th, params, 1.2),
                       rtol=1e-12)
    assert comass.psi(math.pi / 2, params, 1.2) == pytest.approx(1.0, abs=1e-14)


def test_vectorised_and_scalar_agree():
    th = np.array([0.2, 0.9, 1.3])
    vec = comass.psi(th, P35, 1.2)
    assert [comass.psi(float(t), P35, 1.2) for t in th] == pytest.approx(vec.tolist(), rel=1e-15)


def test_generic_metric_constructor():
    params = MetricParams.type_ii(4, 8)
    assert params.alpha == 7
    assert comass.psi(params.theta0, params, 1.0) == pytest.approx(1.0, abs=1e-13)


def test_evaluate_bundles_point_values():
    pt = comass.evaluate(1.0, P35, 1.0)
    assert pt.psi == comass.psi(1.0, P35, 1.0)
    assert pt.phi == comass.phi(1.0, P35)
