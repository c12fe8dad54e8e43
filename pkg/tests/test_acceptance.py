"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are collected into an
"acceptance criteria" section of the terminal summary.  Run alone with
``pytest tests/test_acceptance.py -s``.
"""

import math
import sys
import time

import numpy as np
import pytest

import oracles
from polyheat import kernels
from polyheat.criteria import classify, subcritical_condition
from polyheat.data import GridField, InitialData
from polyheat.kernels import KernelKind, build_profile, semigroup_residual, semigroup_truncation_bound
from polyheat.majorant import (convolution_vs_reduction, estimate_d_j, estimate_d_star,
                               omega_sandwich_holds)
from polyheat.params import ProblemParams
from polyheat.solver import PicardConfig, delta_sweep, picard_solve, rescale_field
from polyheat.testfn import derivative_bound_check, eta

R = np.linspace(0.0, 20.0, 401)


def test_criterion_01_kernel_oracles(tmp_path, monkeypatch, report):
    monkeypatch.delenv("POLYHEAT_CACHE")
    monkeypatch.setattr(kernels, "_memory_cache", {})
    worst_err, worst_time = 0.0, 0.0
    for kind, oracle in ((KernelKind.polyharmonic(1), oracles.gaussian),
                         (KernelKind.stable(1.0), oracles.cauchy)):
        for N in (1, 2, 3):
            t0 = time.perf_counter()
            prof = build_profile(kind, N, cache_dir=tmp_path)
            worst_time = max(worst_time, time.perf_counter() - t0)
            exact = np.array([oracle(r, N) for r in R])
            worst_err = max(worst_err, float(np.max(np.abs(prof(R) / exact - 1))))
    ok = worst_err < 1e-8 and worst_time < 10
    report(1, ok, f"max rel err {worst_err:.2e} (< 1e-8), slowest build {worst_time:.1f} s (< 10 s)")
    assert ok


def test_criterion_02_mass_and_positivity(profile, report):
    worst_mass, min_origin = 0.0, math.inf
    shipped = [("polyharmonic", m) for m in (1, 2, 3)] + [("stable", th) for th in (0.5, 1.0, 1.5)]
    for name, order in shipped:
        for N in (1, 2, 3):
            prof = profile(name, order, N)
            worst_mass = max(worst_mass, abs(prof.mass() - 1))
            min_origin = min(min_origin, prof.value_at_origin)
    g2_min = profile("polyharmonic", 2, 1).min_value()
    ok = worst_mass < 1e-4 and min_origin > 0 and g2_min < -1e-10
    report(2, ok, f"max |mass-1| {worst_mass:.2e} (< 1e-4), min G(0,1) {min_origin:.3g} (> 0), "
                  f"min G_2 on the line {g2_min:.4g} (< -1e-10)")
    assert ok


def test_criterion_03_stable_semigroup(profile, report):
    prof = profile("stable", 1.0, 1)
    floor = semigroup_truncation_bound(prof, 2.0, 1.0, 200.0)
    ns = [2 ** k for k in range(9, 15)]
    res = [semigroup_residual(prof, 2.0, 1.0, 200.0, n) for n in ns]
    # each doubling must halve the residual until it reaches the box-truncation floor
    halving = all(b <= a / 2 or b <= floor for a, b in zip(res, res[1:]))
    ok = res[-1] < 1e-5 and halving
    report(3, ok, f"residual at n=2^14 {res[-1]:.2e} (< 1e-5), history "
                  f"{', '.join(f'{r:.1e}' for r in res)}, truncation floor {floor:.1e}")
    assert ok


def test_criterion_04_majorant_suite(spec, report):
    s = spec(1, 2)
    ests = {f"d{j}": estimate_d_j(s, j) for j in (0, 1, 2)}
    ests["d_star"] = estimate_d_star(s)
    saturated = all(e.saturated for e in ests.values())
    # estimate_d_star already asserts the sandwich on its 10 x 3 x 50 (t, s/t, x)
    # sample; omega does not depend on x, so the (t, s) pairs are checked again here
    e = s.time_exponent
    ts = np.logspace(-2, 2, 10)
    sandwich = all(omega_sandwich_holds(e, t, f * t) for t in ts for f in (0.1, 0.5, 0.9))
    grid = max(convolution_vs_reduction(s, t, f * t) for t in ts[::3] for f in (0.1, 0.5, 0.9))
    ok = saturated and sandwich and grid < 1e-5
    hist = ", ".join(f"{k}={v.value:.4g}{'' if v.saturated else '(!)'}" for k, v in ests.items())
    report(4, ok, f"saturated: {hist}; sandwich on 10 x 3 (t, s/t): {sandwich}; "
                  f"grid vs reduction {grid:.1e} (< 1e-5)")
    assert ok


def test_criterion_05_picard_contraction(spec, report):
    params = ProblemParams(1, 2, 2.0)
    cfg = PicardConfig(T=1.0, n_t=64, tol=1e-13, L=8.0, n=64)
    rep = picard_solve(InitialData.constant(1, 0.01), params, cfg, spec(1, 2))
    h = rep.norm_history
    # ratios from iteration 2 on, while the increment is above rounding level
    ratios = [b / a for a, b in zip(h, h[1:]) if b > 1e-15]
    M = cfg.delta_M(rep.d0_used)[1]
    ok = (all(rep.condition_53_holds) and all(r <= 1.1 * rep.nu for r in ratios)
          and max(rep.iterate_norms) <= M)
    report(5, ok, f"nu {rep.nu:.3g}, max increment ratio {max(ratios):.3g} (<= 1.1 nu), "
                  f"max iterate norm {max(rep.iterate_norms):.3g} (<= M = {M:.3g})")
    assert ok


def test_criterion_06_ode_oracle(spec, report):
    c, p = 1.0, 2.0
    params = ProblemParams(1, 2, p)
    T = 0.5 * oracles.ode_blowup_time(c, p)
    cfg = PicardConfig(T=T, n_t=256, tol=1e-9, L=8.0, n=2 ** 10, force=True, max_iter=200)
    t0 = time.perf_counter()
    rep = picard_solve(InitialData.constant(1, c), params, cfg, spec(1, 2))
    elapsed = time.perf_counter() - t0
    err = max(float(np.max(np.abs(f.values - oracles.ode_solution(c, p, t)))) for t, f in rep.snapshots)
    ok = rep.fixed_point_converged and err < 1e-4 and elapsed < 60
    report(6, ok, f"sup error {err:.2e} (< 1e-4) up to half the blowup time, {elapsed:.1f} s (< 60 s)")
    assert ok


def _sweep(spec, p):
    params = ProblemParams(1, 2, p)
    cfg = PicardConfig(T=4.0, n_t=64, L=10.0, n=4096)
    rows = delta_sweep(params, 0.05, [2.0 ** -k for k in range(1, 7)], cfg, spec(1, 2, p))
    return [r.D_star for r in rows]


def test_criterion_07_dichotomy_trend(spec, report):
    t0 = time.perf_counter()
    sub = _sweep(spec, 3.0)
    sup = _sweep(spec, 6.0)
    elapsed = time.perf_counter() - t0
    settle = sub[-1] / sub[-2]
    growth = [b / a for a, b in zip(sup[2:], sup[3:])]
    ok = abs(settle - 1) <= 0.05 and all(g >= 2 for g in growth) and elapsed < 600
    report(7, ok, f"p=3 last-step D_* ratio {settle:.4f} (within 5%), p=6 growth per halving "
                  f"{', '.join(f'{g:.2f}' for g in growth)} (>= 2), {elapsed:.1f} s")
    assert ok


def test_criterion_08_classifier(report):
    mismatches, total = [], 0
    for N in (1, 2, 3):
        for m in (2, 3):
            pm = 1 + 2 * m / N
            for p in np.linspace(pm - 1, pm + 1, 11):
                if p <= 1:
                    p = 1 + (pm - 1) / 4
                total += 1
                verdict = classify(InitialData.dirac(N, 1.0), ProblemParams(N, m, float(p))).summary_line()
                expected = "EXISTS_BY thm1.3" if p < pm and not math.isclose(p, pm) \
                    else "NONEXISTENCE_BY cor1.2"
                if verdict != expected:
                    mismatches.append((N, m, float(p), verdict))
    ok = not mismatches
    report(8, ok, f"{total - len(mismatches)}/{total} Dirac verdicts follow the sign of p - p_m")
    assert ok, mismatches


def test_criterion_09_scaling_covariance(spec, report):
    params = ProblemParams(1, 2, 2.0)
    s = spec(1, 2)
    g = GridField(1, 16.0, 512, np.zeros(512))
    mu = InitialData.from_grid(g.with_values(0.005 * np.exp(-g.axis() ** 2)))
    T = 4.0
    a = picard_solve(mu, params, PicardConfig(T=T, n_t=64, tol=1e-10, L=16.0, n=512), s)
    muT = mu.scaled(T, params)
    b = picard_solve(muT, params, PicardConfig(T=1.0, n_t=64, tol=1e-10, L=muT.grid.L, n=512), s)
    diff = max(float(np.max(np.abs(rescale_field(fa, T, params).values - fb.values)))
               for (_, fa), (_, fb) in zip(a.snapshots, b.snapshots))
    p3 = ProblemParams(1, 2, 3.0)
    dev = 0.0
    for data in (InitialData.dirac(1, 2.0), InitialData.power(1, 1.0, 0.5)):
        for T2 in (0.01, 37.0):
            lhs, rhs = subcritical_condition(data, p3, 0.7, T2)
            lhs1, rhs1 = subcritical_condition(data.scaled(T2, p3), p3, 0.7, 1.0)
            dev = max(dev, abs(lhs1 / rhs1 - lhs / rhs) / (lhs / rhs))
    ok = diff < 1e-3 and dev < 1e-12
    report(9, ok, f"solve/rescale sup difference {diff:.1e} (< 1e-3), "
                  f"sufficient-condition ratio change under scaling {dev:.1e}")
    assert ok


def test_criterion_10_cutoff(report):
    s = np.linspace(0, 3, 10 ** 4)
    v = eta(s)
    values = eta(0.5) == 1.0 and eta(3.0) == 0.0 and abs(eta(1.5) - 0.5) < 1e-15
    monotone = bool(np.all(np.diff(v) <= 0))
    ests = derivative_bound_check(2.0, k_max=4)
    saturated = all(e.saturated for e in ests.values())
    ok = values and monotone and saturated
    report(10, ok, f"boundary values {values}, monotone on 1e4 points {monotone}, derivative ratios "
                   f"{', '.join(f'k={k}: {e.value:.3g}' for k, e in ests.items())} saturated {saturated}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
