"""Smooth space-time cutoffs and a weighted-integral non-existence diagnostic.

The cutoff is psi_R(x, t) = eta(3(|x - x0|^{2m} + t) / R) with eta = 1 on
[0, 1], 0 on [2, inf), built from f(s) = exp(-1/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from .data import InitialData
from .errors import ConfigError, EstimateDiverging, SupportMismatch
from .params import ConstantEstimate, ProblemParams


def _f(s):
    s = np.asarray(s, dtype=float)
    pos = s > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, s, 1.0)), 0.0)


def eta(s):
    """f(2 - s) / (f(2 - s) + f(s - 1)): 1 on [0, 1], 0 on [2, inf), smooth."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ConfigError("eta needs s >= 0")
    a, b = _f(2 - s), _f(s - 1)
    out = np.where(s <= 1, 1.0, np.where(s >= 2, 0.0, a / np.where(a + b > 0, a + b, 1.0)))
    return out if out.ndim else float(out)


def eta_star(s):
    """0 on [0, 1), eta on [1, inf)."""
    s = np.asarray(s, dtype=float)
    out = np.where(s < 1, 0.0, eta(s))
    return out if out.ndim else float(out)


def _eta_mp(s):
    a = mpmath.exp(-1 / (2 - s))
    b = mpmath.exp(-1 / (s - 1))
    return a / (a + b)


def eta_derivative(s: float, k: int, dps: int = 40) -> float:
    """k-th derivative of eta at s in (1, 2), by extended-precision differencing."""
    if not 1 < s < 2:
        return 0.0 if (s < 1 or s > 2) or k > 0 else float(eta(s))
    with mpmath.workdps(dps):
        return float(mpmath.diff(_eta_mp, mpmath.mpf(s), k))


def derivative_bound_check(p: float, k_max: int = 4, grids=(100, 200, 400, 800),
                           edge_points=(1.001, 1.999)) -> dict:
    """sup over s in [1, 2] of |eta^{(k)}(s)| / eta_star(s)^{1/p}, for k = 1..k_max.

    Each grid in ``grids`` is a uniform interior grid of (1, 2) plus the
    edge points; the history of sups across grids must saturate.  The
    ratio is set to 0 where eta_star underflows, since every derivative
    vanishes faster there.
    """
    if not 1 <= k_max <= 4:
        raise ConfigError("k_max must lie in 1..4")
    if not p > 1:
        raise ConfigError("p must exceed 1")
    out = {}
    for k in range(1, k_max + 1):
        history = []
        cache: dict = {}
        for n in grids:
            s = np.concatenate([np.linspace(1, 2, n + 1)[1:-1], edge_points])
            best = 0.0
            for si in s:
                key = float(si)
                if key not in cache:
                    den = float(eta_star(si)) ** (1 / p)
                    cache[key] = 0.0 if den == 0 else abs(eta_derivative(key, k)) / den
                best = max(best, cache[key])
            history.append((n, best))
        grow = [b[1] > a[1] * 1.02 for a, b in zip(history, history[1:])]
        if len(grow) >= 3 and all(grow[-3:]):
            raise EstimateDiverging(f"k={k}: ratio keeps growing {history}")
        out[k] = ConstantEstimate(history, info={"k": k, "p": p})
    return out


@dataclass(frozen=True)
class CutoffSpec:
    x0: tuple
    R: float
    params: ProblemParams

    def __post_init__(self):
        if not 0 < self.R <= 1:
            raise ConfigError("R must lie in (0, 1]")
        if len(self.x0) != self.params.N:
            raise ConfigError("x0 has the wrong dimension")

    def argument(self, r, t):
        return 3 * (np.asarray(r, dtype=float) ** (2 * self.params.m) + np.asarray(t)) / self.R

    def psi(self, r, t):
        return eta(self.argument(r, t))

    def psi_star(self, r, t):
        return eta_star(self.argument(r, t))

    @property
    def support_radius(self) -> float:
        return (2 * self.R / 3) ** (1 / (2 * self.params.m))

    @property
    def ball_radius(self) -> float:
        return (self.R / 3) ** (1 / (2 * self.params.m))


def nesting_integral(x_dist: float, t: float, R: float, m: int) -> tuple[float, float]:
    """(int_0^R psi_r*(x, t) dr / r, psi_R*(x, t)) at distance x_dist from the centre.

    With s = a / r the integral is int_{max(a/R, 1)}^2 eta(s) ds / s, which
    avoids the jump of eta_star at s = 1.
    """
    a = 3 * (x_dist ** (2 * m) + t)
    if a <= 0:
        return 0.0, 0.0
    lo = max(a / R, 1.0)
    if lo >= 2:
        return 0.0, float(eta_star(a / R))
    val, _ = integrate.quad(lambda s: float(eta(s)) / s, lo, 2.0, epsabs=1e-14, epsrel=1e-12)
    return float(val), float(eta_star(a / R))


def ball_mass_at(mu: InitialData, x0, r: float) -> float:
    """mu(B(x0, r)) for a specific centre."""
    x0 = np.asarray(x0, dtype=float)
    if mu.is_atomic:
        return float(sum(w for x, w in mu.atoms if np.linalg.norm(np.asarray(x) - x0) <= r))
    if mu.is_radial and np.allclose(x0, 0):
        return float(mu.radial_mass(r))
    if mu.kind == "GRID":
        g = mu.grid
        dist = np.sqrt(sum((c - x0[i]) ** 2 for i, c in enumerate(g.coords())))
        return float(np.sum(g.values[dist <= r]) * g.h ** g.N)
    raise ConfigError(f"ball mass off the origin is not available for {mu.kind} data")


@dataclass
class DiagnosticRow:
    R: float
    m_R: float
    lhs: float
    rhs: float
    ratio: float


def nonexistence_diagnostic(snapshots, mu: InitialData, params: ProblemParams, x0, R_list,
                            growth_flag: float = 10.0):
    """Tabulate LHS_R = m_R + int int |u|^p psi_R and
    RHS_R = R^{(N(p-1)/2m - 1)/p} (int int |u|^p psi_R*)^{1/p} over R.

    ``snapshots`` is a list of (t, GridField) covering [0, max R].  Returns
    (rows, flagged); flagged is True when some ratio is infinite or the
    ratio grows by more than ``growth_flag`` from the largest to the
    smallest R.  The unknown constant in the inequality is never used, so
    only trends are meaningful.
    """
    N, m, p = params.N, params.m, params.p
    Rs = sorted(R_list, reverse=True)
    if not snapshots:
        raise ConfigError("no snapshots")
    times = np.array([t for t, _ in snapshots])
    fields = [f for _, f in snapshots]
    if times[-1] < max(Rs) * (1 - 1e-12):
        raise SupportMismatch(f"snapshots end at t={times[-1]:.4g} < max R={max(Rs):.4g}")
    g = fields[0]
    x0 = np.asarray(x0, dtype=float)
    dist = np.sqrt(sum((c - x0[i]) ** 2 for i, c in enumerate(g.coords())))
    up = np.stack([np.abs(f.values) ** p for f in fields])
    if len(times) > 1 and up[0].max() > 10 * up[1].max():
        up[0] = up[1]  # singular data: the t = 0 slice is a sampled measure
    rows = []
    expo = (N * (p - 1) / (2 * m) - 1) / p
    for R in Rs:
        cs = CutoffSpec(tuple(x0), R, params)
        if np.any(np.abs(x0) + cs.support_radius > g.L):
            raise SupportMismatch(f"cutoff support at R={R} leaves the box")
        sel = times <= R * (1 + 1e-12)
        ts = times[sel]
        if ts.size < 2:
            raise SupportMismatch(f"fewer than two snapshots in [0, {R}]")
        dv = g.h ** N
        I = np.array([np.sum(up[i] * cs.psi(dist, t)) * dv for i, t in enumerate(ts)])
        Is = np.array([np.sum(up[i] * cs.psi_star(dist, t)) * dv for i, t in enumerate(ts)])
        mR = ball_mass_at(mu, x0, cs.ball_radius) if not mu.is_zero else 0.0
        lhs = mR + float(np.trapezoid(I, ts))
        rhs = R ** expo * max(float(np.trapezoid(Is, ts)), 0.0) ** (1 / p)
        if lhs == 0 and rhs == 0:
            ratio = 0.0
        elif rhs == 0:
            ratio = math.inf
        else:
            ratio = lhs / rhs
        rows.append(DiagnosticRow(R, mR, lhs, rhs, ratio))
    ratios = [r.ratio for r in rows]
    flagged = any(math.isinf(r) for r in ratios) or (
        ratios[0] > 0 and ratios[-1] / ratios[0] > growth_flag)
    return rows, flagged
