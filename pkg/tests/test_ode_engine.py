import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtbranch import dopri
from mtbranch.ode_engine import (
    BlowUpError,
    NoZeroError,
    ShootConfig,
    StartRadiusError,
    auto_start_radius,
    dense_samples,
    evaluate_profile,
    f_density,
    integrate_profile,
    integrate_to,
    normalized_rhs,
    series_initial_state,
    series_r4_coefficient,
)
from reference_values import SHOOT

J0 = 2.404825557695773


@pytest.fixture(scope="module")
def profiles():
    return {mu: integrate_profile(ShootConfig(mu)) for mu in (0.5, 1.0, 2.0, 4.0, 10.0, 16.0)}


# -- normalized_rhs -------------------------------------------------------------

def test_rhs_at_peak_and_zero():
    for mu in (0.01, 1.0, 7.0, 30.0):
        assert normalized_rhs(mu, mu) == pytest.approx(4.0 / mu, rel=1e-15)
        assert normalized_rhs(0.0, mu) == 0.0


def test_rhs_example_value():
    assert normalized_rhs(1.0, 2.0) == pytest.approx(math.exp(-3.0), rel=1e-15)
    assert normalized_rhs(1.0, 2.0) == pytest.approx(0.049787, abs=5e-7)


@given(mu=st.floats(0.05, 4.0), frac=st.floats(0.0, 1.0))
def test_rhs_matches_unfused_form(mu, frac):
    u = frac * mu
    lam_star = 4.0 / (mu * mu * math.exp(mu * mu))
    assert normalized_rhs(u, mu) == pytest.approx(lam_star * u * math.exp(u * u), rel=1e-12, abs=1e-300)


@given(mu=st.floats(1.0, 30.0), frac=st.floats(0.0, 1.0))
def test_rhs_finite_for_large_mu(mu, frac):
    val = normalized_rhs(frac * mu, mu)
    assert math.isfinite(val) and 0.0 <= val <= 4.0 / mu * (1 + 1e-12)


def test_rhs_rejects_out_of_domain():
    with pytest.raises(ValueError):
        normalized_rhs(-0.1, 1.0)
    with pytest.raises(ValueError):
        normalized_rhs(1.1, 1.0)


# -- series start ---------------------------------------------------------------

def test_series_start_examples():
    st1 = series_initial_state(ShootConfig(1.0, s_start=math.log(1e-4)))
    assert st1.u == pytest.approx(1.0 - 1e-8, abs=1e-16)
    assert st1.v == pytest.approx(-2e-8, rel=1e-12)
    st10 = series_initial_state(ShootConfig(10.0, s_start=math.log(1e-4)))
    assert st10.u == pytest.approx(10.0 - 1e-9, abs=1e-14)


def test_series_remainder_below_abs_tol():
    # next term of u: b r^4 with b = (1 + 2 mu^2)/(4 mu^3)
    assert series_r4_coefficient(1.0) == pytest.approx(0.75)
    assert series_r4_coefficient(1.0) * 1e-16 < 1e-12


def test_series_coefficient_against_ode():
    # u = mu - r^2/mu + b r^4 must satisfy u'' + u'/r = -g(u) to O(r^4)
    mu = 1.3
    b = series_r4_coefficient(mu)
    for r in (1e-3, 2e-3):
        lap = -4.0 / mu + 16.0 * b * r * r
        u = mu - r * r / mu + b * r**4
        assert abs(lap + normalized_rhs(u, mu)) < 50 * r**4


def test_start_radius_too_large():
    with pytest.raises(StartRadiusError, match="start radius too large"):
        ShootConfig(1.0, s_start=math.log(1e-2))


def test_auto_start_radius_respects_remainder():
    for mu in (1e-3, 0.1, 1.0, 10.0, 30.0):
        r0 = auto_start_radius(mu, 1e-12)
        assert r0 <= 1e-4
        assert series_r4_coefficient(mu) * r0**4 < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        ShootConfig(0.0)
    with pytest.raises(ValueError):
        ShootConfig(1.0, rel_tol=0.0)
    with pytest.raises(ValueError):
        ShootConfig(1.0, s_max=-20.0)
    assert ShootConfig(4.0).end == pytest.approx(28.0)


# -- integrate_profile -----------------------------------------------------------

@pytest.mark.parametrize("mu", [0.5, 1.0, 2.0])
def test_against_independent_oracle(profiles, mu):
    p, ref = profiles[mu], SHOOT[mu]
    assert p.s_hat == pytest.approx(ref["s_hat"], rel=1e-9, abs=1e-10)
    assert p.lambda_mu == pytest.approx(ref["lambda_mu"], rel=1e-9)
    assert p.dirichlet_energy == pytest.approx(ref["Lambda"], rel=1e-9)


def test_scaling_law_mu_one(profiles):
    # lambda_mu from s_hat equals tau(1)^2 of the unscaled lambda=1 shoot
    p = profiles[1.0]
    assert p.log_lambda_mu == pytest.approx(math.log(SHOOT[1.0]["lambda_mu"]), rel=1e-9)
    assert p.lambda_mu == pytest.approx(p.tau_hat**2 * 4.0 / math.e, rel=1e-14)


def test_small_mu_eigenvalue_limit():
    p = integrate_profile(ShootConfig(1e-3))
    assert abs(p.lambda_mu - J0**2) < 1e-3
    assert p.lambda_mu == pytest.approx(SHOOT[1e-3]["lambda_mu"], rel=1e-8)


def test_lambda_bound_mu_ten(profiles):
    assert profiles[10.0].lambda_mu <= 4.0 / 100.0


def test_log_lambda_identity(profiles):
    for mu, p in profiles.items():
        expect = math.log(4.0) + 2 * p.s_hat - mu * mu - 2 * math.log(mu)
        assert p.log_lambda_mu == expect


def test_zero_and_start(profiles):
    for p in profiles.values():
        assert abs(p.evaluate(p.s_hat)[0]) <= p.config.zero_tol
        s0 = series_initial_state(p.config)
        u, v = p.evaluate(p.s_start)
        assert u == pytest.approx(s0.u, abs=1e-15 * p.mu)
        assert v == pytest.approx(s0.v, abs=1e-20)


def test_evaluate_range_error(profiles):
    p = profiles[1.0]
    with pytest.raises(ValueError):
        evaluate_profile(p, p.s_hat + 1e-3)
    with pytest.raises(ValueError):
        evaluate_profile(p, p.s_start - 1.0)


@pytest.mark.parametrize("mu", [0.5, 4.0, 16.0])
def test_interpolation_matches_reintegration(profiles, mu):
    p = profiles[mu]
    tol = 10 * p.config.rel_tol * max(1.0, mu)
    for s in np.linspace(p.s_start, p.s_hat, 23)[1:-1]:
        assert abs(p.evaluate(s)[0] - integrate_to(p.config, s).u) <= tol


def test_dense_output_continuous_at_knots(profiles):
    p = profiles[4.0]
    for a, b in zip(p.segments[:-1], p.segments[1:]):
        ya, yb = a(a.t1), b(b.t0)
        assert abs(ya[0] - yb[0]) <= 1e-14 * p.mu
        assert abs(ya[1] - yb[1]) <= 1e-13 * p.mu


@pytest.mark.parametrize("mu", [0.5, 4.0, 16.0])
def test_tolerance_convergence(profiles, mu):
    p = profiles[mu]
    q = integrate_profile(ShootConfig(mu, rel_tol=p.config.rel_tol / 2))
    predicted = p.error_sum / abs(p.evaluate(p.s_hat)[1])
    assert abs(q.s_hat - p.s_hat) < predicted


def test_max_principle_and_monotonicity(profiles):
    for p in profiles.values():
        d = dense_samples(p)
        u, us = d[:-1, 1], d[:-1, 2]
        assert np.all(u > 0) and np.all(u <= p.mu)
        assert np.all(np.diff(d[:, 1]) < 0)
        assert np.all(us < 0)


def test_accumulators_nondecreasing(profiles):
    for p in profiles.values():
        lam = [seg.y1[2] for seg in p.segments]
        mass = [seg.y1[3] for seg in p.segments]
        assert np.all(np.diff(lam) >= 0) and np.all(np.diff(mass) >= 0)


@settings(max_examples=25, deadline=None)
@given(mu=st.floats(1e-3, 30.0))
def test_energy_identity_and_shape_across_range(mu):
    p = integrate_profile(ShootConfig(mu))
    assert p.energy_identity_gap <= 1e-6
    assert p.dirichlet_energy > 0
    assert 0 < p.lambda_mu < 6.3
    knots = np.array([seg.y1[0] for seg in p.segments[:-1]])
    assert np.all((knots > 0) & (knots <= mu))


def test_step_budget_exhausted():
    with pytest.raises(NoZeroError, match="no zero before s_max"):
        integrate_profile(ShootConfig(4.0, max_steps=5))


def test_s_max_reached():
    with pytest.raises(NoZeroError):
        integrate_profile(ShootConfig(4.0, s_max=1.0))


def test_blowup_detection():
    def f(t, y):
        return (y[0] * y[0],)

    with pytest.raises((RuntimeError, ArithmeticError)):
        dopri.integrate(f, 0.0, (1.0,), 2.0, 0.01, 1e-8, (1e-10,), max_steps=10_000)
    assert issubclass(BlowUpError, RuntimeError)


def test_dopri_fifth_order():
    # y' = y on [0, 1]; error shrinks like rtol^(~1) at near-tolerance
    segs = dopri.integrate(lambda t, y: (y[0],), 0.0, (1.0,), 1.0, 0.1, 1e-12, (1e-14,))
    assert segs[-1].y1[0] == pytest.approx(math.e, rel=1e-11)
    mid = segs[len(segs) // 2]
    tm = mid.t0 + 0.37 * mid.h
    assert mid(tm)[0] == pytest.approx(math.exp(tm), rel=1e-11)


def test_f_density_matches_rhs():
    mu = 3.0
    for u in (0.0, 1.0, 2.9):
        assert f_density(u, mu) == pytest.approx(u * normalized_rhs(u, mu), rel=1e-14, abs=1e-300)


def test_profile_is_deterministic():
    a = integrate_profile(ShootConfig(2.5))
    b = integrate_profile(ShootConfig(2.5))
    assert a.s_hat == b.s_hat and a.dirichlet_energy == b.dirichlet_energy
