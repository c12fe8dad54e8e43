"""Existence and non-existence tests for initial data.

Every check compares a computed quantity against a threshold built from a
configurable constant gamma.  The constants in the underlying estimates are
existential, so a check that cannot decide reports INCONCLUSIVE rather than
asserting the opposite claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve

from .data import GridField, InitialData
from .errors import (AlphaOutOfRange, ConfigError, InsufficientSigmas, PointwiseUnavailable,
                     WrongRegime)
from .params import ProblemParams, sphere_area, unit_ball_volume

SATISFIED = "SATISFIED"
VIOLATED = "VIOLATED"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_T_GRID = tuple(np.logspace(-8, 4, 121))

# Solver-calibrated default for gamma_2: largest Dirac mass for which the
# Picard iteration was observed to converge at unit horizon, divided by 4.
# See ``polyheat.solver.calibrate_gamma2``.
DEFAULT_GAMMA2 = 0.62  # D_max = 2.49 (N=1, m=2, p=2)
DEFAULT_GAMMA3 = 1.0
DEFAULT_GAMMA_SCAN = 1e3
DEFAULT_GAMMA_ALPHA = 1.0
DEFAULT_GAMMA_ORLICZ = 1.0


# ---------------------------------------------------------------------------
# ball masses

def _quad(f, a, b, **kw):
    val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400, **kw)
    return val


def radial_ball_mass(mu: InitialData, r: float) -> float:
    """mu(B(0, r)) for POWER and LOGPOWER data."""
    mu.require_measure()
    N = mu.N
    S = sphere_area(N)
    R = min(r, mu.cutoff)
    if R <= 0:
        return 0.0
    if mu.kind == "POWER":
        return mu.c * S * R ** (N - mu.a) / (N - mu.a)
    if mu.kind != "LOGPOWER":
        raise ConfigError("radial ball mass needs a radial profile")
    a, b = mu.a, mu.b
    if a == N:
        # v = log(e + 1/rho): d rho / rho = -e^v / (e^v - e) dv
        v0 = math.log(math.e + 1 / R)
        tail = v0 ** (1 - b) / (b - 1)
        corr = _quad(lambda v: v ** (-b) * math.exp(1 - v) / -math.expm1(1 - v), v0, np.inf)
        return mu.c * S * (tail + corr)
    k = N - a
    # rho = R s^{1/k}: rho^{k-1} d rho = R^k ds / k
    g = lambda s: math.log(math.e + 1 / (R * s ** (1 / k))) ** (-b) if s > 0 else 0.0
    return mu.c * S * R ** k / k * _quad(g, 0.0, 1.0)


def _atom_arrays(mu):
    pts = np.array([x for x, _ in mu.atoms], dtype=float).reshape(-1, mu.N)
    masses = np.array([m for _, m in mu.atoms], dtype=float)
    return pts, masses


def _atom_candidates(pts, sigma):
    """Centres that realise every maximal set of atoms coverable by one ball."""
    n, N = pts.shape
    cands = [p for p in pts]
    for i in range(n):
        for j in range(i + 1, n):
            d = pts[j] - pts[i]
            half = 0.5 * np.linalg.norm(d)
            if half > sigma or half == 0:
                continue
            mid = 0.5 * (pts[i] + pts[j])
            off = math.sqrt(max(sigma * sigma - half * half, 0.0))
            if N == 2:
                perp = np.array([-d[1], d[0]]) / (2 * half)
                cands += [mid + off * perp, mid - off * perp]
            elif N == 3:
                u = np.cross(d, [1.0, 0, 0])
                if np.linalg.norm(u) < 1e-12 * np.linalg.norm(d):
                    u = np.cross(d, [0, 1.0, 0])
                cands.append(mid + off * u / np.linalg.norm(u))
    if N == 3:
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    a, b, c = pts[i], pts[j], pts[k]
                    ab, ac = b - a, c - a
                    nrm = np.cross(ab, ac)
                    nn = nrm @ nrm
                    if nn == 0:
                        continue
                    cc = a + (np.cross(nrm, ab) * (ac @ ac) + np.cross(ac, nrm) * (ab @ ab)) / (2 * nn)
                    rho = np.linalg.norm(cc - a)
                    if rho > sigma:
                        continue
                    off = math.sqrt(sigma * sigma - rho * rho) / math.sqrt(nn)
                    cands += [cc + off * nrm, cc - off * nrm]
    return np.array(cands)


def _atoms_ball_sup(mu, sigma):
    pts, masses = _atom_arrays(mu)
    if masses.size == 0:
        return 0.0
    slack = sigma * (1 + 1e-12)
    if mu.N == 1:
        order = np.argsort(pts[:, 0])
        x, w = pts[order, 0], masses[order]
        csum = np.concatenate([[0.0], np.cumsum(w)])
        hi = np.searchsorted(x, x + 2 * slack, side="right")
        return float(np.max(csum[hi] - csum[:-1]))
    cands = _atom_candidates(pts, sigma)
    dist = np.linalg.norm(cands[:, None, :] - pts[None, :, :], axis=-1)
    return float(np.max((dist <= slack) @ masses))


def _ball_stencil(h, N, sigma):
    k = int(math.floor(sigma / h))
    ax = h * np.arange(-k, k + 1)
    r = np.sqrt(sum(c * c for c in np.meshgrid(*([ax] * N), indexing="ij")))
    return (r <= sigma * (1 + 1e-12)).astype(float)


def grid_ball_average(g: GridField, sigma: float, values=None) -> np.ndarray:
    """Average of ``values`` (default: the grid values) over grid balls of radius sigma."""
    v = g.values if values is None else values
    st = _ball_stencil(g.h, g.N, sigma)
    return fftconvolve(v, st, mode="same") / st.sum()


def ball_mass_sup(mu: InitialData, sigma: float) -> float:
    """sup over centres x of mu(B(x, sigma)).

    Radial profiles are symmetric decreasing, so the sup sits at the origin.
    Grid densities use the exhaustive max of the ball-filtered density over
    grid centres.
    """
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    mu.require_measure()
    if mu.is_atomic:
        return _atoms_ball_sup(mu, sigma)
    if mu.kind == "GRID":
        g = mu.grid
        st = _ball_stencil(g.h, g.N, sigma)
        filt = fftconvolve(g.values, st, mode="same") * g.h ** g.N
        return float(max(filt.max(), 0.0))
    if mu.is_constant:
        return mu.c * unit_ball_volume(mu.N) * sigma ** mu.N
    return radial_ball_mass(mu, sigma)


# ---------------------------------------------------------------------------
# scaling mu -> mu_T

def scale_data(mu: InitialData, T: float, params: ProblemParams) -> InitialData:
    """Initial datum of the rescaled solution T^{1/(p-1)} u(T^{1/2m} x, T t)."""
    if not T > 0:
        raise ConfigError("T must be positive")
    N, m, p = params.N, params.m, params.p
    amp = T ** (1 / (p - 1))
    lam = T ** (1 / (2 * m))
    if mu.is_atomic:
        atoms = tuple((x / lam, w * amp * lam ** (-N)) for x, w in mu.atoms)
        return InitialData(mu.kind, N, atoms=atoms)
    if mu.kind == "POWER":
        return InitialData("POWER", N, c=mu.c * amp * lam ** (-mu.a), a=mu.a,
                           cutoff=mu.cutoff / lam)
    if mu.kind == "GRID":
        g = mu.grid
        return InitialData.from_grid(GridField(g.N, g.L / lam, g.n, g.values * amp))
    raise ConfigError(f"{mu.kind} data has no closed-form rescaling")


# ---------------------------------------------------------------------------
# necessary condition: growth of the normalised ball mass as sigma -> 0

@dataclass
class ScanResult:
    exponent_fit: float
    verdict: str
    q: list
    sigmas: list
    limit: float | None = None
    reason: str = ""


def _scan_normaliser(params, sigma):
    N, m, p = params.N, params.m, params.p
    if params.is_critical():
        return math.log(math.e + 1 / sigma) ** (N / (2 * m))
    return sigma ** (-(N - 2 * m / (p - 1)))


def _asymptotic_trend(mu, params):
    """'diverges', 'bounded' (with limit) or 'vanishes' as sigma -> 0, when known exactly."""
    N, m, p = params.N, params.m, params.p
    crit = params.is_critical()
    kappa = N - 2 * m / (p - 1)  # q ~ mass(sigma) * sigma^{-kappa}
    if mu.is_atomic:
        pts, masses = _atom_arrays(mu)
        top = float(masses.max()) if masses.size else 0.0
        if top == 0:
            return "vanishes", 0.0
        if crit or kappa > 0:
            return "diverges", math.inf
        return "vanishes", 0.0
    if mu.kind == "POWER":
        if mu.is_constant:
            return "vanishes", 0.0
        rate = N - mu.a - (0 if crit else kappa)  # q ~ sigma^{rate} (times logs at p_m)
        if crit:
            return ("vanishes", 0.0) if N - mu.a > 0 else ("diverges", math.inf)
        if rate > 0:
            return "vanishes", 0.0
        if rate < 0:
            return "diverges", math.inf
        return "bounded", mu.c * sphere_area(N) / (N - mu.a)
    if mu.kind == "LOGPOWER":
        a, b = mu.a, mu.b
        if crit:
            if a < N:
                return "vanishes", 0.0
            # mass ~ c S v^{1-b}/(b-1), q ~ c S v^{1-b+N/2m}/(b-1), v = log(1/sigma)
            e = 1 - b + N / (2 * m)
            if e > 0:
                return "diverges", math.inf
            if e < 0:
                return "vanishes", 0.0
            return "bounded", mu.c * sphere_area(N) / (b - 1)
        if a == N:
            return ("diverges", math.inf) if kappa > 0 else ("vanishes", 0.0)
        rate = N - a - kappa  # q ~ c sigma^{rate} log(1/sigma)^{-b}
        if rate > 0 or (rate == 0 and b > 0):
            return "vanishes", 0.0
        if rate < 0 or b < 0:
            return "diverges", math.inf
        return "bounded", mu.c * sphere_area(N) / (N - a)
    return None, None


def necessary_exponent_scan(mu: InitialData, params: ProblemParams, sigmas,
                            gamma: float | None = None) -> ScanResult:
    """Normalised ball mass q(sigma) across decreasing dyadic sigmas.

    q(sigma) = sup_x mu(B(x, sigma)) sigma^{-(N - 2m/(p-1))}, or at the critical
    exponent q(sigma) = sup_x mu(B(x, sigma)) log(e + 1/sigma)^{N/2m}.  The
    verdict is NONEXISTENCE_INDICATED when q diverges as sigma -> 0, or when
    it stays above ``gamma`` (if given); otherwise INCONCLUSIVE.  For atoms
    and radial profiles the trend is decided from the exact asymptotics;
    grid data uses a log-log fit over the supplied sigmas.
    """
    sig = np.asarray(sorted(sigmas, reverse=True), dtype=float)
    if sig.size < 4:
        raise InsufficientSigmas(f"need at least 4 scales, got {sig.size}")
    mu.require_measure()
    q = np.array([ball_mass_sup(mu, s) * _scan_normaliser(params, s) for s in sig])
    with np.errstate(divide="ignore"):
        lq = np.log(np.where(q > 0, q, np.nan))
    tail = slice(max(0, sig.size - 4), sig.size)
    ok = np.isfinite(lq[tail])
    if ok.sum() >= 2:
        fit = float(np.polyfit(-np.log(sig[tail][ok]), lq[tail][ok], 1)[0])
    else:
        fit = -math.inf
    trend, limit = _asymptotic_trend(mu, params)
    if trend is None:
        increasing = np.all(np.diff(q[tail]) > 0)
        trend = "diverges" if (fit > 0.05 and increasing) else "bounded"
        limit = math.inf if trend == "diverges" else float(q[-1])
    if trend == "diverges":
        return ScanResult(fit, "NONEXISTENCE_INDICATED", q.tolist(), sig.tolist(), limit,
                          "normalised ball mass diverges as sigma -> 0")
    if gamma is not None and limit is not None and limit > gamma:
        return ScanResult(fit, "NONEXISTENCE_INDICATED", q.tolist(), sig.tolist(), limit,
                          f"normalised ball mass tends to {limit:.6g} > gamma={gamma:g}")
    return ScanResult(fit, "INCONCLUSIVE", q.tolist(), sig.tolist(), limit,
                      "normalised ball mass stays bounded")


# ---------------------------------------------------------------------------
# sufficient conditions

def _largest_admissible(ok, T_grid, refine=True, iters=60):
    """Largest grid T with ok(T); bisection towards the next grid point when
    the admissible set is known to be downward closed."""
    Ts = np.sort(np.asarray(T_grid, dtype=float))
    flags = [ok(T) for T in Ts]
    if not any(flags):
        return None
    i = max(k for k, f in enumerate(flags) if f)
    T = float(Ts[i])
    if refine and i + 1 < Ts.size:
        lo, hi = math.log(T), math.log(Ts[i + 1])
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if ok(math.exp(mid)) else (lo, mid)
        T = math.exp(lo)
    return T


def subcritical_condition(mu, params, gamma2, T):
    """(lhs, rhs) of sup_x mu(B(x, T^{1/2m})) <= gamma2 T^{N/2m - 1/(p-1)}."""
    N, m, p = params.N, params.m, params.p
    lhs = ball_mass_sup(mu, T ** (1 / (2 * m))) if not mu.is_zero else 0.0
    return lhs, gamma2 * T ** (N / (2 * m) - 1 / (p - 1))


def subcritical_sufficiency(mu: InitialData, params: ProblemParams, gamma2: float,
                            T_grid=DEFAULT_T_GRID) -> float | None:
    """Largest T with sup_x mu(B(x, T^{1/2m})) <= gamma2 T^{N/2m - 1/(p-1)}.

    The admissible set is downward closed (the left side grows with T, the
    right side shrinks), so the grid answer is refined by bisection.  A
    single atom is inverted in closed form.
    """
    if params.regime() != "SUBCRITICAL":
        raise WrongRegime("the subcritical test needs p < p_m")
    if not gamma2 > 0:
        raise ConfigError("gamma2 must be positive")
    N, m, p = params.N, params.m, params.p
    kappa = N / (2 * m) - 1 / (p - 1)
    if mu.is_zero:
        return float(max(T_grid))
    mu.require_measure()
    if mu.kind == "DIRAC":
        D = mu.atoms[0][1]
        return (D / gamma2) ** (1 / kappa)

    def ok(T):
        lhs, rhs = subcritical_condition(mu, params, gamma2, T)
        return lhs <= rhs

    return _largest_admissible(ok, T_grid)


def critical_profile(params: ProblemParams, r):
    """|x|^{-2m/(p-1)} above p_m, |x|^{-N} log(e + 1/|x|)^{-N/2m - 1} at p_m."""
    N, m, p = params.N, params.m, params.p
    r = np.asarray(r, dtype=float)
    if params.is_critical():
        return r ** (-N) * np.log(math.e + 1 / r) ** (-N / (2 * m) - 1)
    return r ** (-2 * m / (p - 1))


@dataclass
class PointwiseResult:
    verdict: str
    worst_ratio: float
    worst_radius: float | None


def supercritical_profile_check(mu: InitialData, params: ProblemParams,
                                gamma3: float, n_radii: int = 4000) -> PointwiseResult:
    """Pointwise domination mu(x) <= gamma3 * profile(x) + gamma3.

    SATISFIED when it holds on a dense radial sample (plus every node for grid
    data); otherwise INCONCLUSIVE, since failing a sufficient test proves
    nothing.
    """
    if params.regime() == "SUBCRITICAL":
        raise WrongRegime("the profile test needs p >= p_m")
    if mu.is_zero:
        return PointwiseResult(SATISFIED, 0.0, None)
    if mu.is_atomic:
        raise PointwiseUnavailable("atomic data has no pointwise values")
    if mu.kind == "GRID":
        g = mu.grid
        r = g.radius().reshape(-1)
        v = g.values.reshape(-1)
    else:
        top = mu.cutoff if math.isfinite(mu.cutoff) else 1e6
        r = np.geomspace(1e-12, top, n_radii)
        v = mu.radial_density(r)
    with np.errstate(divide="ignore", over="ignore"):
        bound = gamma3 * np.where(r > 0, critical_profile(params, np.where(r > 0, r, 1.0)), np.inf) + gamma3
    ratio = v / bound
    i = int(np.argmax(ratio))
    verdict = SATISFIED if ratio[i] <= 1.0 else INCONCLUSIVE
    return PointwiseResult(verdict, float(ratio[i]), float(r[i]))


def _radial_power_integral(mu, power, sigma, ratio=None):
    """int_{B(0, sigma)} F(mu(x)) dx for radial data.

    F(t) = t^power, or F(t) = t * ratio(log t) when ``ratio`` is given (the
    log form keeps the singular LOGPOWER integrand free of overflow).
    """
    N = mu.N
    R = min(sigma, mu.cutoff)
    if ratio is None:
        ratio = lambda logt: math.exp((power - 1) * logt)
        if mu.kind == "POWER":
            e = N - mu.a * power
            if e <= 0:
                return math.inf
            return mu.c ** power * sphere_area(N) * R ** e / e
    if mu.kind == "LOGPOWER" and mu.a == N:
        # v = log(e + 1/r): mu = c r^{-N} v^{-b}, dr / r = -e^v / (e^v - e) dv
        c, b = mu.c, mu.b

        def g(v):
            log_inv_r = v + math.log1p(-math.exp(1 - v))
            logt = math.log(c) + N * log_inv_r - b * math.log(v)
            return ratio(logt) * c * v ** (-b) / -math.expm1(1 - v)

        v0 = math.log(math.e + 1 / R)
        return sphere_area(N) * (_quad(g, v0, 10 * v0) + _quad(g, 10 * v0, np.inf))

    def g(u):
        t = float(mu.radial_density(math.exp(u)))
        return t * ratio(math.log(t)) * math.exp(N * u) if t > 0 else 0.0

    return sphere_area(N) * _quad(g, -np.inf, math.log(R))


def ball_average_power(mu: InitialData, sigma: float, alpha: float) -> float:
    """sup_x [average over B(x, sigma) of mu^alpha]^{1/alpha}."""
    N = mu.N
    vol = unit_ball_volume(N) * sigma ** N
    if mu.is_constant:
        return mu.c
    if mu.kind == "GRID":
        avg = grid_ball_average(mu.grid, sigma, mu.grid.values ** alpha)
        return float(max(avg.max(), 0.0)) ** (1 / alpha)
    return (_radial_power_integral(mu, alpha, sigma) / vol) ** (1 / alpha)


def _sigma_grid(top, n=200, bottom=1e-10):
    return np.geomspace(min(bottom, top), top, n)


def lalpha_condition(mu: InitialData, params: ProblemParams, alpha: float, gamma: float,
                     T_grid=DEFAULT_T_GRID) -> float | None:
    """Largest T with [avg_{B(x,s)} mu^alpha]^{1/alpha} <= gamma s^{-2m/(p-1)} for all s <= T^{1/2m}.

    The condition over all s <= T^{1/2m} is downward closed in T.
    """
    N, m, p = params.N, params.m, params.p
    if not 1 < alpha < p:
        raise AlphaOutOfRange(f"alpha must lie in (1, p={p}), got {alpha}")
    if mu.is_zero:
        return float(max(T_grid))
    if mu.is_atomic:
        raise PointwiseUnavailable("atoms have no L^alpha ball averages")
    if mu.is_constant:
        return (gamma / mu.c) ** (p - 1)
    e = 2 * m / (p - 1)
    if mu.kind == "POWER" and mu.a * alpha >= N:
        return None
    if mu.kind == "POWER" and mu.a > e:
        return None  # unbounded as s -> 0

    sig_all = _sigma_grid(max(T_grid) ** (1 / (2 * m)), n=400)
    vals = np.array([ball_average_power(mu, s, alpha) for s in sig_all])
    f = np.maximum.accumulate(vals * sig_all ** e)

    def ok(T):
        top = T ** (1 / (2 * m))
        k = np.searchsorted(sig_all, top, side="right")
        worst = f[k - 1] if k > 0 else 0.0
        # the exact endpoint value
        worst = max(worst, ball_average_power(mu, top, alpha) * top ** e)
        return worst <= gamma

    return _largest_admissible(ok, T_grid)


def orlicz_phi(s, beta, L=math.e):
    """Phi_L(s) = s log(L + s)^beta (L = e gives Phi)."""
    s = np.asarray(s, dtype=float)
    return s * np.log(L + s) ** beta


def orlicz_phi_inverse(y, beta, L=math.e, iters=200):
    """Inverse of s -> s log(L+s)^beta by vectorised bisection.

    For L >= e the root lies in [y / log(L+y)^beta, y].
    """
    y = np.asarray(y, dtype=float)
    lo = y / np.log(L + y) ** beta
    hi = y.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        big = orlicz_phi(mid, beta, L) > y
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    out = 0.5 * (lo + hi)
    return float(out) if out.ndim == 0 else out


def orlicz_rho(s, N, m):
    s = np.asarray(s, dtype=float)
    return s ** (-N) * np.log(math.e + 1 / s) ** (-N / (2 * m))


def orlicz_ratio(mu, params, beta, T, sigma):
    """Phi^{-1}[avg Phi(T^{1/(p-1)} mu)] / rho(sigma T^{-1/2m}) at ball radius sigma."""
    N, m, p = params.N, params.m, params.p
    lam = T ** (1 / (p - 1))
    vol = unit_ball_volume(N) * sigma ** N
    if mu.kind == "GRID":
        avg = float(grid_ball_average(mu.grid, sigma, orlicz_phi(lam * mu.grid.values, beta)).max())
    elif mu.is_constant:
        avg = float(orlicz_phi(lam * mu.c, beta))
    else:
        # Phi(lam t) / t = lam log(e + lam t)^beta, evaluated from log t
        ratio = lambda logt: lam * np.logaddexp(1.0, math.log(lam) + logt) ** beta
        avg = _radial_power_integral(mu, None, sigma, ratio=ratio) / vol
    return orlicz_phi_inverse(max(avg, 0.0), beta) / float(orlicz_rho(sigma * T ** (-1 / (2 * m)), N, m))


def orlicz_condition(mu: InitialData, params: ProblemParams, beta: float, gamma: float,
                     T_grid=DEFAULT_T_GRID, window_exponent: float | None = None,
                     n_sigma: int = 60) -> float | None:
    """Largest grid T passing the Orlicz-average test at the critical exponent.

    For every sigma in (0, T^w] (w = ``window_exponent``, default 1/2m) the
    ball average of Phi(T^{1/(p-1)} mu), mapped back through Phi^{-1}, must not
    exceed gamma * rho(sigma T^{-1/2m}).  The admissible set need not be an
    interval in T, so every grid point is tested.
    """
    N, m = params.N, params.m
    if not params.is_critical():
        raise WrongRegime("the Orlicz test applies at p = p_m only")
    if not beta > 0:
        raise ConfigError("beta must be positive")
    if mu.is_zero:
        return float(max(T_grid))
    if mu.is_atomic:
        raise PointwiseUnavailable("atoms have no Orlicz ball averages")
    if mu.kind == "LOGPOWER" and mu.a == N and beta >= mu.b - 1:
        return None  # Phi(mu) is not locally integrable
    if mu.kind == "POWER" and mu.a >= N:
        return None
    w = 1 / (2 * m) if window_exponent is None else window_exponent
    best = None
    for T in sorted(T_grid):
        top = T ** w
        sig = np.geomspace(top * 1e-8, top, n_sigma)
        worst = max(orlicz_ratio(mu, params, beta, T, s) for s in sig)
        if worst <= gamma:
            best = float(T)
    return best


# ---------------------------------------------------------------------------
# classification

@dataclass
class Check:
    criterion: str
    verdict: str
    quantity: float | None
    threshold: float | None
    gamma: float | None
    note: str = ""


@dataclass
class ClassifyConfig:
    gamma2: float = DEFAULT_GAMMA2
    gamma3: float = DEFAULT_GAMMA3
    gamma_scan: float | None = DEFAULT_GAMMA_SCAN
    gamma_alpha: float = DEFAULT_GAMMA_ALPHA
    alpha: float | None = None
    gamma_orlicz: float = DEFAULT_GAMMA_ORLICZ
    beta: float = 0.1
    orlicz_window: float | None = None
    sigmas: tuple = tuple(2.0 ** -k for k in range(0, 21))
    T_grid: tuple = DEFAULT_T_GRID


@dataclass
class ClassificationReport:
    p_vs_pm: str
    checks: list = field(default_factory=list)
    suggested_T: float | None = None
    verdict_summary: str = "UNDECIDED"

    def summary_line(self) -> str:
        return self.verdict_summary


def classify(mu: InitialData, params: ProblemParams,
             config: ClassifyConfig | None = None) -> ClassificationReport:
    """Run every applicable check and summarise.

    Precedence: a diverging necessary scan gives NONEXISTENCE; otherwise any
    sufficiency check returning a horizon gives EXISTS; otherwise UNDECIDED.
    """
    cfg = config or ClassifyConfig()
    regime = params.regime()
    rep = ClassificationReport(p_vs_pm=regime)
    scan = None
    if mu.sigma_finite:
        scan = necessary_exponent_scan(mu, params, cfg.sigmas, gamma=cfg.gamma_scan)
        q_last = scan.q[-1]
        rep.checks.append(Check("thm1.2", VIOLATED if scan.verdict == "NONEXISTENCE_INDICATED"
                                else INCONCLUSIVE, q_last, scan.limit, cfg.gamma_scan, scan.reason))
    else:
        rep.checks.append(Check("thm1.2", INCONCLUSIVE, None, None, None, "not locally integrable"))
    if scan is not None and scan.verdict == "NONEXISTENCE_INDICATED":
        rep.verdict_summary = "NONEXISTENCE_BY " + ("cor1.2" if mu.is_atomic else "thm1.2")
        return rep

    exists_by = None
    if regime == "SUBCRITICAL" and mu.sigma_finite:
        T = subcritical_sufficiency(mu, params, cfg.gamma2, cfg.T_grid)
        rep.checks.append(Check("thm1.3", SATISFIED if T else INCONCLUSIVE, T, None, cfg.gamma2,
                                "largest admissible horizon"))
        if T:
            rep.suggested_T = T
            exists_by = exists_by or "thm1.3"
    if regime != "SUBCRITICAL" and (mu.is_zero or not mu.is_atomic):
        res = supercritical_profile_check(mu, params, cfg.gamma3)
        rep.checks.append(Check("thm1.4", res.verdict, res.worst_ratio, 1.0, cfg.gamma3,
                                "max of mu / (gamma3 profile + gamma3)"))
        if res.verdict == SATISFIED:
            exists_by = exists_by or "thm1.4"
    if not mu.is_atomic and mu.sigma_finite:
        alpha = cfg.alpha if cfg.alpha is not None else 0.5 * (1 + params.p)
        try:
            T = lalpha_condition(mu, params, alpha, cfg.gamma_alpha, cfg.T_grid)
            rep.checks.append(Check("thm5.2", SATISFIED if T else INCONCLUSIVE, T, None,
                                    cfg.gamma_alpha, f"alpha={alpha:g}"))
            if T:
                exists_by = exists_by or "thm5.2"
                rep.suggested_T = rep.suggested_T or T
        except (PointwiseUnavailable, AlphaOutOfRange) as exc:
            rep.checks.append(Check("thm5.2", INCONCLUSIVE, None, None, cfg.gamma_alpha, str(exc)))
    if regime == "CRITICAL" and not mu.is_atomic and mu.sigma_finite:
        # every T is tested separately here, so a coarser grid keeps classify fast
        T = orlicz_condition(mu, params, cfg.beta, cfg.gamma_orlicz, cfg.T_grid[::5], cfg.orlicz_window)
        rep.checks.append(Check("thm5.3", SATISFIED if T else INCONCLUSIVE, T, None,
                                cfg.gamma_orlicz, f"beta={cfg.beta:g}"))
        if T:
            exists_by = exists_by or "thm5.3"
            rep.suggested_T = rep.suggested_T or T
    if exists_by:
        rep.verdict_summary = "EXISTS_BY " + exists_by
    return rep
