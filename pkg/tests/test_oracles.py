"""The frozen reference numbers agree with their defining formulas."""

import math

import mpmath
import pytest
from scipy import optimize

import oracles


def test_d0_constant_matches_formula():
    assert oracles.d0_heat_cauchy_formula() == pytest.approx(oracles.D0_HEAT_CAUCHY, rel=1e-14)


def test_biharmonic_minimum_matches_quadrature():
    res = optimize.minimize_scalar(oracles.biharmonic_1d, bounds=(3, 6), method="bounded",
                                   options={"xatol": 1e-8})
    assert res.fun == pytest.approx(oracles.BIHARMONIC_1D_MIN, abs=1e-10)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_origin_value_reduces_to_closed_forms(N):
    assert oracles.value_at_origin(2, N) == pytest.approx(oracles.gaussian(0, N), rel=1e-14)
    assert oracles.value_at_origin(1, N) == pytest.approx(oracles.cauchy(0, N), rel=1e-14)


def test_ode_solution_solves_ode():
    c, p = 0.7, 2.5
    for t in (0.1, 0.5, 1.0):
        h = 1e-5
        d = (oracles.ode_solution(c, p, t + h) - oracles.ode_solution(c, p, t - h)) / (2 * h)
        assert d == pytest.approx(oracles.ode_solution(c, p, t) ** p, rel=1e-8)
    assert oracles.ode_blowup_time(1.0, 2.0) == 1.0


def test_eta_midpoint():
    assert oracles.eta(1.5) == 0.5
    assert oracles.eta(0.5) == 1.0 and oracles.eta(3.0) == 0.0


def test_power_ball_mass():
    with mpmath.workdps(20):
        v = mpmath.quad(lambda r: 2 * math.pi * r * r ** -1.0, [0, 1])
    assert oracles.ball_mass_power(1.0, 1.0, 2, 1.0) == pytest.approx(float(v), rel=1e-12)
