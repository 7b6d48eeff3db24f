import math

import numpy as np
import pytest

from conecalib import comass
from conecalib.catalog import derive_params
from conecalib.certify import Verdict, certify
from conecalib.odecal import (ROW3_K4, BudgetExhausted, Phi0Error, PowerSeed, build_phi0,
                              choose_seed_beta, envelope, extremal_slope_check, glue_lambda1,
                              halving_check, lambda1_rhs, slope_field_monotonicity_check,
                              solve_lambda1, star_comass_sq)
from conecalib.rk import IntegrationError

from oracles import first_sign_change, rk4_fixed


@pytest.fixture(scope="module")
def sol():
    return solve_lambda1()


def test_row3_k4_constants():
    assert (ROW3_K4.p, ROW3_K4.q, float(ROW3_K4.alpha)) == (4, 10, 7.5)
    assert 1 / ROW3_K4.tau == pytest.approx((14 / 4) ** 2 * (14 / 10) ** 5, rel=1e-14)
    assert ROW3_K4.theta0 < 1.00686


def test_star_comass_normalised_and_reduces_to_psi():
    assert star_comass_sq(ROW3_K4.theta0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    th = np.linspace(0.05, 1.5, 50)
    assert np.allclose(star_comass_sq(th, 0.0, 0.0), comass.psi(th, ROW3_K4, 1.0), rtol=1e-12)


def test_lambda1_starts_at_zero(sol):
    assert sol(1.007) == 0.0
    assert sol.values[0] == 0.0


def test_lambda1_zero_near_1_2(sol):
    assert 1.15 < sol.theta1 < 1.25
    assert abs(sol(sol.theta1)) < 1e-12


def test_lambda1_against_rk4_oracle(sol):
    ts, ys = rk4_fixed(lambda1_rhs, 1.007, 0.0, 1.25, 80_000)
    assert first_sign_change(ts, ys, 1.1) == pytest.approx(sol.theta1, abs=1e-8)
    assert np.max(np.abs(sol(ts) - ys)) <= 1e-8


def test_star_comass_along_solution(sol):
    assert sol.star_residual() <= 1e-8


def test_step_halving(sol):
    h = halving_check(sol)
    assert h["theta1"] <= 1e-7 and h["max_value"] <= 1e-7 and h["peak"] <= 1e-7


def test_solution_changes_sign_before_theta1(sol):
    # the computed exponent is not of one sign on (1.007, theta1)
    assert sol.peak > 0 and sol.trough < 0
    assert len(sol.zeros) == 2 and sol.zeros[-1] == sol.theta1


def test_start_must_exceed_theta0():
    with pytest.raises(ValueError):
        solve_lambda1(1.0)


def test_solution_blows_up_past_1_37():
    with pytest.raises(IntegrationError) as info:
        solve_lambda1(1.007, 1.5)
    assert not isinstance(info.value, BudgetExhausted)
    assert 1.36 < info.value.t < 1.38 and info.value.y > 10


def test_rhs_clamps_negative_budget():
    # lambda = -5 makes c^(4 + 2 lambda) large, so the square-root argument is negative
    v = lambda1_rhs(1.1, -5.0)
    c, s = math.cos(1.1), math.sin(1.1)
    assert v == pytest.approx((10 * c / s + s / c) / -math.log(c), rel=1e-14)


def test_glue(sol):
    g = glue_lambda1(sol)
    assert g.max_comass_sq <= 1 + 1e-6
    assert all(u <= 1 + 1e-9 for u in g.outside_sup)
    lo, hi = g.support
    assert 1.0 <= lo and hi <= 1.25
    th = np.array([0.5, lo - 1e-6, hi + 1e-6, 1.4])
    assert np.all(g.value(th) == 0.0)
    mid = np.linspace(g.switch_left, g.switch_right, 101)
    assert np.allclose(g.value(mid), sol(mid), atol=1e-15)
    prof = g.profile(np.linspace(lo, hi, 20001))
    assert prof.fd_mismatch() < 1e-4


def test_envelope_values():
    p35 = derive_params(1, r=3, s=5)
    assert envelope(p35.theta0, p35) == pytest.approx(1.0, abs=1e-14)
    assert envelope(math.pi / 2, derive_params(9)) == pytest.approx(1.0, abs=1e-15)
    assert envelope(0.0, p35) == 0.0 and envelope(0.0, derive_params(9)) == 0.0


def test_seed_residual_nonpositive():
    p35 = derive_params(1, r=3, s=5)
    seed = PowerSeed(p35, 1.0)
    th = np.linspace(0.01, 1.56, 2001)
    assert np.all(seed.residual(th) <= 1e-14)


def test_choose_seed_beta_requires_vanishing_ends():
    # (4,4) at beta = 1 has end exponents 6, so beta = 1 is accepted
    assert choose_seed_beta(derive_params(1, r=4, s=4)) == 1.0
    b = choose_seed_beta(derive_params(2, k=9))
    left, right = comass.endpoint_exponents(derive_params(2, k=9), b)
    assert left > 2 and right > 2


@pytest.mark.parametrize("row,kw", [(1, dict(r=3, s=5)), (9, {})])
def test_build_phi0(row, kw):
    params = derive_params(row, **kw)
    prof = build_phi0(params, n_verify=20_000)
    assert prof.value_at_theta0 == pytest.approx(1.0, abs=1e-10)
    assert prof.residual_max <= 1e-9
    lo, hi = params.domain
    a, b = prof.support
    assert lo < a < prof.theta0 < b < hi
    th = np.concatenate([np.linspace(lo + 1e-9, a, 100), np.linspace(b, hi - 1e-9, 100)])
    assert np.all(prof.value(th) == 0.0)
    grid = np.linspace(lo, hi, 4001)[1:-1]
    v = prof.value(grid)
    assert np.all(v >= 0) and np.all(v * v <= envelope(grid, params) * (1 + 1e-12))
    # the derivative is consistent with the values across the splice windows
    h = 1e-7
    for z, far in prof.glue_windows:
        t = np.linspace(z, far, 401)[1:-1]
        fd = (prof.value(t + h) - prof.value(t - h)) / (2 * h)
        assert np.max(np.abs(fd - prof.derivative(t))) <= 1e-5 * (1 + np.max(np.abs(fd)))


def test_build_phi0_rejects_non_global_seed():
    with pytest.raises(Phi0Error):
        build_phi0(derive_params(1, r=2, s=6), 1.0)


def test_slope_field_monotone():
    params = derive_params(1, r=3, s=5)
    grid = []
    for th in np.linspace(0.1, 1.4, 14):
        e = envelope(th, params)
        grid.append((th, np.linspace(0, 1, 6) * math.sqrt(e)))
    assert slope_field_monotonicity_check(params, grid)
    e = envelope(0.7, params)
    assert params.af * math.sqrt(max(e - math.sqrt(e) ** 2, 0.0)) == pytest.approx(0, abs=1e-7)
    with pytest.raises(ValueError):
        slope_field_monotonicity_check(params, [(0.7, [2.0])])


@pytest.mark.parametrize("row,kw,beta", [(1, dict(r=3, s=5), 1.0), (2, dict(k=9), 1.2)])
def test_extremal_curves_bracket_seed(row, kw, beta):
    params = derive_params(row, **kw)
    assert certify(params, beta).verdict is Verdict.GLOBAL
    assert extremal_slope_check(params, beta)
