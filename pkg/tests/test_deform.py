import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conecalib import comass
from conecalib.catalog import derive_params
from conecalib.deform import (DeformationError, DeformationSpec, LambdaRamp, Side,
                              ambient_parity_check, build_theorem_c_deformation,
                              check_target_exponent, default_target_exponent,
                              deformed_comass_sq, lambda_x, log_sin_integral,
                              vanishing_limit_check)
from conecalib.profile import AngularProfile, Mollified, Smoothness, mollify

from oracles import riemann_midpoint

P35 = derive_params(1, r=3, s=5)


def _inv_log_sin(g):
    return 1.0 / np.log(np.sin(g))


def test_log_sin_integral_trivial_cases():
    assert log_sin_integral(0.3, 0.3) == 0.0
    assert log_sin_integral(0.05, 0.1) < 0


def test_log_sin_integral_from_zero_matches_riemann():
    ref = riemann_midpoint(_inv_log_sin, 0.0, 0.5, 1_000_000)
    assert log_sin_integral(0.0, 0.5) == pytest.approx(ref, rel=1e-8)


@given(st.floats(0.0, 0.8), st.floats(0.01, 0.5))
@settings(max_examples=25)
def test_log_sin_integral_additive(a, w):
    b, c = a + w, a + 1.5 * w
    whole = log_sin_integral(a, c)
    assert whole == pytest.approx(log_sin_integral(a, b) + log_sin_integral(b, c), abs=1e-11)


def test_log_sin_integral_domain():
    with pytest.raises(ValueError):
        log_sin_integral(0.2, math.pi / 2)


def test_lambda_x_branches():
    x, N, t = 0.1, 11, 9.6
    assert lambda_x(x / 4, x, N, t) == pytest.approx(N - t)
    assert lambda_x(x, x, N, t) == 0.0
    assert lambda_x(0.5, x, N, t) == 0.0
    mid = np.linspace(x / 2, x, 201)
    vals = lambda_x(mid, x, N, t)
    assert np.all(np.diff(vals) <= 0)
    assert vals[0] == pytest.approx(N - t) and vals[-1] == pytest.approx(0.0, abs=1e-12)


def test_lambda_ramp_matches_integral_definition():
    x, N, t = 0.2, 12, 9.6
    ramp = LambdaRamp(x, N, t)
    th = 0.15
    expected = (N - t) * (1 - log_sin_integral(x / 2, th) / log_sin_integral(x / 2, x))
    assert ramp.value(th) == pytest.approx(expected, rel=1e-10)
    h = 1e-6
    assert ramp.derivative(th) == pytest.approx((ramp.value(th + h) - ramp.value(th - h)) / (2 * h),
                                                rel=1e-6)


def test_mollified_ramp_support_arithmetic():
    x0, N, t = 0.1, 11, 9.6
    eps = x0 / 10
    m = Mollified(LambdaRamp(x0, N, t), eps)
    left = np.linspace(1e-4, x0 / 2 - eps, 50)
    right = np.linspace(x0 + eps, 0.5, 50)
    assert np.all(m.value(left) == N - t)
    assert np.all(m.value(right) == 0.0)
    prof = m.sample(np.linspace(x0 / 2 - 2 * eps, x0 + 2 * eps, 4001))
    assert prof.fd_mismatch() < 1e-4


def test_mollify_constant_profile():
    th = np.linspace(0.0, 1.0, 21)
    out = mollify(AngularProfile.constant(th, 2.0, Smoothness.LIPSCHITZ), 0.01)
    assert np.allclose(out.value, 2.0, atol=1e-14)


def test_deformed_comass_reduces_to_psi():
    beta = 1.2
    spec = DeformationSpec(beta * 4, beta * 8, math.exp(-beta * P35.log_tau), 12, 0.1, 0.01,
                           Side.NEAR_ZERO)
    th = np.linspace(0.01, 1.56, 200)
    got = deformed_comass_sq(th, P35, spec, 0.0, 0.0)
    assert np.allclose(got, comass.psi(th, P35, beta), rtol=1e-12)
    assert deformed_comass_sq(P35.theta0, P35, spec, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_target_exponent_parity():
    check_target_exponent(11, 8, 9.6)  # 11 - 4 - 1 = 6
    with pytest.raises(ValueError):
        check_target_exponent(10, 8, 9.6)  # gap 5 is odd
    with pytest.raises(ValueError):
        check_target_exponent(7, 8, 9.6)  # N must exceed t
    assert default_target_exponent(8, 9.6) == 11


def test_vanishing_limit_positive_and_decreasing():
    xs = [0.1 * 2.0 ** -i for i in range(7)]
    for rho in (1.5, 2, 3, 5):
        v = vanishing_limit_check(rho, xs)
        assert np.all(v > 0) and np.all(np.diff(v) < 0)
    assert np.all(vanishing_limit_check(5, xs) < vanishing_limit_check(3, xs))
    with pytest.raises(ValueError):
        vanishing_limit_check(1.0, xs)


@pytest.mark.parametrize("r,s,expected", [(4, 4, True), (3, 5, False), (4, 6, True),
                                          (2, 6, False), (6, 3, False), (8, 10, True)])
def test_parity_predicate(r, s, expected):
    assert ambient_parity_check(r, s) is expected


def test_parity_shortcut_for_4_4():
    d = build_theorem_c_deformation(derive_params(1, r=4, s=4), 1.0)
    assert d.report.note == "C1 parity applies"
    lam, dlam = d.lambda_values(np.linspace(0.1, 1.4, 5))
    assert np.all(lam == 0) and np.all(dlam == 0)


def test_deformation_3_5_beta_1():
    d = build_theorem_c_deformation(P35, 1.0, n_uniform=20_000)
    assert d.report.max_comass_sq <= 1 + 1e-6
    th = np.linspace(1e-3, math.pi / 2 - 1e-3, 5001)
    lam, _ = d.lambda_values(th)
    mu, _ = d.mu_values(th)
    x0 = d.report.x0
    assert np.all(lam[th > x0 + d.report.eps] == 0)
    assert np.all(mu[th < math.pi / 2 - x0 - d.report.eps] == 0)
    assert d.report.sigma_max <= 2


def test_invalid_target_exponent_rejected():
    with pytest.raises(ValueError, match="even"):
        build_theorem_c_deformation(P35, 1.0, N_left=10)


def test_requires_global_certificate():
    with pytest.raises(ValueError, match="global"):
        build_theorem_c_deformation(P35, 1.2)


def test_shrink_budget_exhausted():
    with pytest.raises(DeformationError, match="no admissible"):
        build_theorem_c_deformation(derive_params(1, r=2, s=7), 1.2, max_shrink=0,
                                    n_uniform=5_000)
