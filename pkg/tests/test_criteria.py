import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from polyheat import criteria
from polyheat.criteria import (ClassifyConfig, ball_mass_sup, classify, lalpha_condition,
                               necessary_exponent_scan, orlicz_condition, orlicz_phi,
                               orlicz_phi_inverse, subcritical_condition, subcritical_sufficiency,
                               supercritical_profile_check)
from polyheat.data import GridField, InitialData
from polyheat.errors import AlphaOutOfRange, InsufficientSigmas, WrongRegime
from polyheat.params import ProblemParams

SIGMAS = [2.0 ** -k for k in range(0, 21)]


def test_power_ball_mass_at_origin():
    mu = InitialData.power(2, 1.0, 1.0, cutoff=1.0)
    assert ball_mass_sup(mu, 1.0) == pytest.approx(2 * math.pi, rel=1e-10)
    assert ball_mass_sup(mu, 0.5) == pytest.approx(oracles.ball_mass_power(1.0, 1.0, 2, 0.5), rel=1e-10)


def test_logpower_ball_mass_against_mpmath():
    mu = InitialData.logpower(1, 1.0, 0.5, 2.0, cutoff=0.5)
    r = 0.25
    with mpmath.workdps(30):
        exact = 2 * mpmath.quad(lambda x: x ** -0.5 * mpmath.log(mpmath.e + 1 / x) ** -2.0, [0, r])
    assert ball_mass_sup(mu, r) == pytest.approx(float(exact), rel=1e-8)


def test_critical_logpower_ball_mass_against_mpmath():
    # a = N: |x|^{-N} log(e + 1/|x|)^{-b} is integrable for b > 1
    mu = InitialData.logpower(1, 1.0, 1.0, 2.0, cutoff=0.5)
    r = 0.1
    with mpmath.workdps(30):
        f = lambda u: mpmath.log(mpmath.e + mpmath.exp(u)) ** -2.0  # x = e^{-u}
        exact = 2 * mpmath.quad(f, [mpmath.log(1 / mpmath.mpf(r)), 10, 100, mpmath.inf])
    assert ball_mass_sup(mu, r) == pytest.approx(float(exact), rel=1e-8)


def test_atom_ball_sup_one_dimension():
    mu = InitialData.atoms_of(1, [(np.array([0.0]), 1.0), (np.array([1.0]), 2.0), (np.array([5.0]), 0.5)])
    assert ball_mass_sup(mu, 0.4) == pytest.approx(2.0)
    assert ball_mass_sup(mu, 0.6) == pytest.approx(3.0)


def test_atom_ball_sup_two_dimensions():
    pts = [np.array([math.cos(a), math.sin(a)]) for a in (0.0, 2.0, 4.0)]
    mu = InitialData.atoms_of(2, [(p, 1.0) for p in pts])
    assert ball_mass_sup(mu, 1.0 + 1e-9) == pytest.approx(3.0)
    assert ball_mass_sup(mu, 0.5) == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 3.0))
def test_grid_ball_sup_monotone_in_radius(sigma):
    g = GridField(1, 4.0, 64, np.exp(-np.linspace(-4, 4, 64, endpoint=False) ** 2))
    mu = InitialData.from_grid(g)
    assert ball_mass_sup(mu, sigma) <= ball_mass_sup(mu, sigma * 1.5) + 1e-12


def test_scan_needs_enough_sigmas():
    with pytest.raises(InsufficientSigmas):
        necessary_exponent_scan(InitialData.dirac(1), ProblemParams(1, 2, 3.0), [1, 0.5, 0.25])


@pytest.mark.parametrize("p,verdict", [(3.0, "INCONCLUSIVE"), (5.0, "NONEXISTENCE_INDICATED"),
                                       (6.0, "NONEXISTENCE_INDICATED")])
def test_scan_dirac(p, verdict):
    res = necessary_exponent_scan(InitialData.dirac(1), ProblemParams(1, 2, p), SIGMAS)
    assert res.verdict == verdict


def test_subcritical_dirac_closed_form_is_sharp():
    params = ProblemParams(1, 2, 3.0)
    mu = InitialData.dirac(1, 2.0)
    T = subcritical_sufficiency(mu, params, 0.5)
    lhs, rhs = subcritical_condition(mu, params, 0.5, T)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    with pytest.raises(WrongRegime):
        subcritical_sufficiency(mu, ProblemParams(1, 2, 6.0), 0.5)


@pytest.mark.parametrize("mu", [InitialData.dirac(1, 2.0), InitialData.power(1, 1.0, 0.5),
                                InitialData.atoms_of(1, [(np.array([0.0]), 1.0), (np.array([0.3]), 1.0)])])
@pytest.mark.parametrize("T", [0.01, 1.0, 37.0])
def test_subcritical_condition_invariant_under_scaling(mu, T):
    params = ProblemParams(1, 2, 3.0)
    lhs, rhs = subcritical_condition(mu, params, 0.7, T)
    lhs1, rhs1 = subcritical_condition(mu.scaled(T, params), params, 0.7, 1.0)
    assert lhs1 / rhs1 == pytest.approx(lhs / rhs, rel=1e-12)


def test_lalpha_constant_closed_form():
    params = ProblemParams(1, 2, 3.0)
    assert lalpha_condition(InitialData.constant(1, 0.5), params, 2.0, 1.0) == pytest.approx(4.0)
    with pytest.raises(AlphaOutOfRange):
        lalpha_condition(InitialData.constant(1, 0.5), params, 3.5, 1.0)


def test_supercritical_profile():
    params = ProblemParams(1, 2, 6.0)
    e = 2 * 2 / 5
    good = InitialData.power(1, 0.5, e)
    bad = InitialData.power(1, 0.5, e + 0.2)
    assert supercritical_profile_check(good, params, 1.0).verdict == "SATISFIED"
    assert supercritical_profile_check(bad, params, 1.0).verdict == "INCONCLUSIVE"
    with pytest.raises(WrongRegime):
        supercritical_profile_check(good, ProblemParams(1, 2, 2.0), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0.05, 3.0))
def test_orlicz_inverse_roundtrip(y, beta):
    s = orlicz_phi_inverse(y, beta)
    assert orlicz_phi(s, beta) == pytest.approx(y, rel=1e-12)


def test_orlicz_condition_constant_data():
    params = ProblemParams(1, 2, 5.0)
    grid = criteria.DEFAULT_T_GRID[::10]
    assert orlicz_condition(InitialData.constant(1, 1e-3), params, 0.5, 1.0, grid) is not None
    with pytest.raises(WrongRegime):
        orlicz_condition(InitialData.constant(1, 1e-3), ProblemParams(1, 2, 3.0), 0.5, 1.0)


def _p_grid(pm):
    return [pm + d * (pm - 1) / 2 for d in np.linspace(-1, 1, 11)]


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("m", [2, 3])
def test_dirac_verdict_follows_critical_exponent(N, m):
    pm = 1 + 2 * m / N
    for p in _p_grid(pm):
        rep = classify(InitialData.dirac(N, 1.0), ProblemParams(N, m, p))
        expected = "EXISTS_BY thm1.3" if p < pm and not math.isclose(p, pm) else "NONEXISTENCE_BY cor1.2"
        assert rep.summary_line() == expected, (N, m, p)


def test_classify_zero_data_exists():
    rep = classify(InitialData.zero(1), ProblemParams(1, 2, 3.0))
    assert rep.summary_line().startswith("EXISTS_BY")


def test_classify_config_defaults():
    cfg = ClassifyConfig()
    assert cfg.gamma2 > 0 and len(cfg.sigmas) >= 4
