import math

import numpy as np
import pytest
from scipy import integrate

import oracles
from polyheat.data import GridField, InitialData
from polyheat.errors import ConfigError, SupportMismatch
from polyheat.params import ProblemParams
from polyheat.solver import PicardConfig, picard_solve
from polyheat.testfn import (CutoffSpec, ball_mass_at, derivative_bound_check, eta, eta_derivative,
                             eta_star, nesting_integral, nonexistence_diagnostic)

P2 = ProblemParams(1, 2, 2.0)


def test_eta_matches_oracle_and_plateaus():
    s = np.linspace(0, 3, 301)
    assert np.allclose(eta(s), [oracles.eta(v) for v in s], atol=1e-15)
    assert eta(0.5) == 1.0 and eta(2.5) == 0.0
    assert np.all(np.diff(eta(s)) <= 1e-15)
    assert eta_star(0.9) == 0.0 and eta_star(1.5) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        eta(-0.1)


def test_eta_derivative_against_differences():
    s, h = 1.3, 1e-5
    fd = (oracles.eta(s + h) - oracles.eta(s - h)) / (2 * h)
    assert eta_derivative(s, 1) == pytest.approx(fd, rel=1e-6)
    fd2 = (oracles.eta(s + 1e-4) - 2 * oracles.eta(s) + oracles.eta(s - 1e-4)) / 1e-8
    assert eta_derivative(s, 2) == pytest.approx(fd2, rel=1e-4)
    assert eta_derivative(0.5, 3) == 0.0 and eta_derivative(2.5, 1) == 0.0


def test_derivative_bounds_saturate():
    out = derivative_bound_check(2.0, k_max=2, grids=(50, 100, 200))
    for k, est in out.items():
        assert est.saturated and math.isfinite(est.value) and est.value > 0
    assert out[2].value > out[1].value


def test_derivative_bound_validation():
    with pytest.raises(ConfigError):
        derivative_bound_check(2.0, k_max=5)
    with pytest.raises(ConfigError):
        derivative_bound_check(1.0)


def test_cutoff_geometry():
    cs = CutoffSpec((0.0,), 0.3, P2)
    assert cs.psi(cs.ball_radius * 0.999, 0.0) == 1.0
    assert cs.psi(cs.support_radius * 1.001, 0.0) == 0.0
    assert cs.psi(0.0, 0.2) == 0.0 and cs.psi_star(0.0, 0.05) == 0.0
    with pytest.raises(ConfigError):
        CutoffSpec((0.0,), 1.5, P2)
    with pytest.raises(ConfigError):
        CutoffSpec((0.0, 0.0), 0.5, P2)


def test_nesting_integral_bound():
    # int_0^R psi_r* dr / r = int_1^2 eta(s) ds / s deep inside the support, less outside
    full, _ = integrate.quad(lambda s: oracles.eta(s) / s, 1, 2, epsabs=1e-14)
    for x, t in [(0.0, 1e-3), (0.1, 1e-4), (0.3, 0.01), (0.75, 0.0)]:
        val, _ = nesting_integral(x, t, 1.0, 2)
        assert 0 <= val <= full + 1e-6
    val, _ = nesting_integral(0.0, 1e-4, 1.0, 2)
    assert val == pytest.approx(full, rel=1e-5)
    assert nesting_integral(1.0, 0.0, 0.5, 2) == (0.0, 0.0)


def test_ball_mass():
    mu = InitialData.atoms_of(1, [(np.array([0.0]), 1.0), (np.array([0.5]), 2.0)])
    assert ball_mass_at(mu, [0.0], 0.4) == 1.0
    assert ball_mass_at(mu, [0.4], 0.2) == 2.0
    pw = InitialData.power(1, 1.0, 0.5, 1.0)
    assert ball_mass_at(pw, [0.0], 0.25) == pytest.approx(oracles.ball_mass_power(1.0, 0.5, 1, 0.25))
    with pytest.raises(ConfigError):
        ball_mass_at(pw, [0.3], 0.1)


def test_diagnostic_bounded_for_solution(spec):
    mu = InitialData.dirac(1, 0.02)
    cfg = PicardConfig(T=1.0, n_t=128, tol=1e-6, L=16.0, n=512)
    snaps = picard_solve(mu, P2, cfg, spec(1, 2)).snapshots
    rows, flagged = nonexistence_diagnostic(snaps, mu, P2, [0.0], [0.5, 0.25, 0.125, 0.0625])
    assert not flagged
    assert all(r.lhs > 0 and r.rhs > 0 for r in rows)
    assert [r.R for r in rows] == sorted((r.R for r in rows), reverse=True)


def test_diagnostic_flags_missing_solution():
    mu = InitialData.dirac(1, 1.0)
    g = GridField(1, 8.0, 64, np.zeros(64))
    snaps = [(t, g) for t in np.linspace(0, 1, 9)]
    rows, flagged = nonexistence_diagnostic(snaps, mu, P2, [0.0], [0.5, 0.25])
    assert flagged and math.isinf(rows[0].ratio)


def test_diagnostic_zero_data():
    g = GridField(1, 8.0, 64, np.zeros(64))
    snaps = [(t, g) for t in np.linspace(0, 1, 9)]
    rows, flagged = nonexistence_diagnostic(snaps, InitialData.zero(1), P2, [0.0], [0.5])
    assert not flagged and rows[0].ratio == 0.0


def test_diagnostic_support_mismatch():
    g = GridField(1, 8.0, 64, np.zeros(64))
    with pytest.raises(SupportMismatch):
        nonexistence_diagnostic([(0.0, g), (0.2, g)], InitialData.zero(1), P2, [0.0], [0.5])
    small = GridField(1, 0.5, 64, np.zeros(64))
    with pytest.raises(SupportMismatch):
        nonexistence_diagnostic([(0.0, small), (1.0, small)], InitialData.zero(1), P2, [0.0], [1.0])
