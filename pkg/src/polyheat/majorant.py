"""The majorising kernel K(x, t) = G_theta(x, t^{theta/2m}) and its constants.

Three constants are estimated numerically (they exist but are not given
explicitly):

* d_j  : |d^alpha G_m(x, t)| <= d_j t^{-j/2m} K(x, t) for |alpha| = j,
* d''  : ||S_K(t) mu||_inf <= d'' t^{-N/2m} sup_x mu(B(x, t^{1/2m})),
* d_*  : int K(x-y, t-s) K(y, s) dy <= d_* K(x, t).

Every estimate carries its refinement history; saturation (last two entries
within 2%) is the acceptance bar.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import kernels
from .criteria import ball_mass_sup
from .data import GridField, InitialData
from .errors import (ConfigError, DegenerateMeasure, EstimateDiverging, NonPositiveTime,
                     SemigroupMismatch)
from .kernels import KernelKind, RadialKernelProfile, eval_kernel, eval_radial
from .params import ConstantEstimate, ProblemParams, sphere_area

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MajorantSpec:
    params: ProblemParams
    gm_profile: RadialKernelProfile
    gtheta_profile: RadialKernelProfile

    def __post_init__(self):
        if self.gm_profile.kind.is_stable or not self.gtheta_profile.kind.is_stable:
            raise ConfigError("need a polyharmonic and a stable profile")
        if not (self.gm_profile.N == self.gtheta_profile.N == self.params.N):
            raise ConfigError("profiles and parameters must share the dimension N")
        if int(self.gm_profile.kind.order) != self.params.m:
            raise ConfigError("polyharmonic profile order differs from params.m")
        if not math.isclose(self.gtheta_profile.kind.order, self.params.theta):
            raise ConfigError("stable profile index differs from params.theta")

    @property
    def time_exponent(self) -> float:
        """theta / 2m, always inside (0, 1)."""
        return self.params.theta / (2 * self.params.m)

    @classmethod
    def build(cls, params: ProblemParams, cache_dir=None) -> "MajorantSpec":
        gm = kernels.build_profile(KernelKind.polyharmonic(params.m), params.N, cache_dir=cache_dir)
        gt = kernels.build_profile(KernelKind.stable(params.theta), params.N, cache_dir=cache_dir)
        return cls(params, gm, gt)


def eval_K(spec: MajorantSpec, x, t):
    """K(x, t) = G_theta(x, t^{theta/2m})."""
    if not t > 0:
        raise NonPositiveTime(f"K needs t > 0, got {t}")
    return eval_kernel(spec.gtheta_profile, x, t ** spec.time_exponent)


def K_radial(spec: MajorantSpec, r, t):
    if not t > 0:
        raise NonPositiveTime(f"K needs t > 0, got {t}")
    return eval_radial(spec.gtheta_profile, r, t ** spec.time_exponent)


def omega(spec_or_exponent, t, s):
    """omega_{t,s} = (t-s)^{theta/2m} + s^{theta/2m}."""
    e = spec_or_exponent.time_exponent if isinstance(spec_or_exponent, MajorantSpec) else spec_or_exponent
    return (t - s) ** e + s ** e


def omega_sandwich_holds(e, t, s) -> bool:
    """t^e <= omega_{t,s} <= 2 t^e for 0 < s < t and 0 < e < 1."""
    w = omega(e, t, s)
    return t ** e <= w <= 2 * t ** e


# ---------------------------------------------------------------------------
# d_j

def _tail_radius(C_env, q, K_at, target, r0):
    """Radius beyond which C e^{-r^q / C} / K(r) stays below ``target``.

    K is radially decreasing with a power-law tail, so the quotient is
    eventually decreasing; we scan outward geometrically and then bisect.
    """
    f = lambda r: math.log(C_env) - r ** q / C_env - math.log(float(K_at(r)))
    lt = math.log(target)
    r = r0
    while f(r) > lt:
        r *= 1.25
        if r > 1e6:
            return math.inf
    return r


def estimate_d_j(spec: MajorantSpec, j: int, L0: float = 8.0, h: float | None = None,
                 enlargements: int = 4) -> ConstantEstimate:
    """sup_x |d^alpha G_m(x, 1)| / K(x, 1) over |alpha| = j.

    Both sides scale identically in (x, t), so t = 1 suffices.  The sup is
    taken over spectral derivative grids on growing boxes; a tail radius is
    computed from the stretched-exponential envelope of the numerator and
    the decreasing denominator, and must lie inside the last box.
    """
    if j not in (0, 1, 2):
        raise ConfigError("j must be 0, 1 or 2")
    gm = spec.gm_profile
    N, m = spec.params.N, spec.params.m
    h = kernels.ENVELOPE_SPACING[N] if h is None else h
    history = []
    L_used = L0
    for e in range(enlargements + 1):
        L = L0 * 2 ** e
        n = 2 * int(math.ceil(L / h))
        if n > kernels.ENVELOPE_MAX_N[N] and history:
            break
        rg = kernels.grid_radius(L, n, N)
        Kg = K_radial(spec, rg, 1.0)
        best = 0.0
        for alpha, d in kernels.spectral_derivatives(m, N, L, n, j):
            best = max(best, float(np.max(np.abs(d) / Kg)))
        history.append((n ** N, best))
        L_used = L
    est = ConstantEstimate(history, info={"j": j})
    growth = [history[i + 1][1] > history[i][1] * 1.02 for i in range(len(history) - 1)]
    if len(growth) >= 3 and all(growth[-3:]):
        raise EstimateDiverging(f"d_{j} keeps growing: {history}")
    env = kernels.derivative_envelope_check(gm, j, L0=L0, h=h, enlargements=enlargements)
    q = 2 * m / (2 * m - 1)
    R = _tail_radius(env.value, q, lambda r: K_radial(spec, r, 1.0), 0.5 * est.value, 1.0)
    est.info.update(envelope_constant=env.value, tail_radius=R, box_half_width=L_used,
                    x0_ratio=float(abs(gm.value_at_origin) / K_radial(spec, 0.0, 1.0)))
    log.info("d_%d: tail radius %.3g inside box half-width %.3g", j, R, L_used)
    if R > L_used:
        log.warning("d_%d: tail radius %.3g exceeds the sampled box %.3g", j, R, L_used)
    return est


def d0_heat_cauchy_oracle() -> tuple[float, float]:
    """sup_r (4 pi)^{-1/2} e^{-r^2/4} pi (1 + r^2): Gaussian over Cauchy in N = 1.

    The derivative vanishes where r^2 = 3.
    """
    r = math.sqrt(3.0)
    return math.pi / math.sqrt(4 * math.pi) * 4 * math.exp(-0.75), r


# ---------------------------------------------------------------------------
# S_K applied to data, and d''

def sk_sup(spec: MajorantSpec, mu: InitialData, t: float, L: float | None = None,
           n: int = 1024) -> float:
    """||S_K(t) mu||_inf.

    Atoms: kernel sums evaluated at the atoms and on a grid through them.
    Radial symmetric-decreasing data: the convolution of two symmetric
    decreasing functions peaks at the origin, so the sup is one radial
    integral.  Grid data: spectral multiplier on the data's box.
    """
    if not t > 0:
        raise NonPositiveTime("t must be positive")
    N = spec.params.N
    tau = t ** spec.time_exponent
    prof = spec.gtheta_profile
    if mu.is_atomic:
        if mu.is_zero:
            return 0.0
        pts = np.array([x for x, _ in mu.atoms])
        w = np.array([m for _, m in mu.atoms])
        cand = [pts]
        if len(mu.atoms) > 1:
            lo, hi = pts.min(axis=0) - 1, pts.max(axis=0) + 1
            axes = [np.linspace(lo[i], hi[i], 64 if N < 3 else 24) for i in range(N)]
            cand.append(np.stack([c.reshape(-1) for c in np.meshgrid(*axes, indexing="ij")], axis=1))
        X = np.concatenate(cand)
        r = np.linalg.norm(X[:, None, :] - pts[None, :, :], axis=-1)
        return float(np.max(eval_radial(prof, r, tau) @ w))
    if mu.is_constant:
        return mu.c * prof.mass()
    if mu.is_radial:
        mu.require_measure()
        S = sphere_area(N)
        R = mu.cutoff

        def g(u):
            r = math.exp(u)
            return float(mu.radial_density(r)) * float(eval_radial(prof, r, tau)) * r ** N

        val, _ = integrate.quad(g, -60.0, math.log(R), limit=400, epsabs=0, epsrel=1e-10)
        return S * val
    from .solver import apply_SK
    return apply_SK(spec, mu.grid, t).sup()


def smoothing_bound_check(spec: MajorantSpec, mu: InitialData, times) -> ConstantEstimate:
    """max over t of ||S_K(t) mu||_inf t^{N/2m} / sup_x mu(B(x, t^{1/2m})).

    The history records the running maximum after each sampled time.
    """
    N, m = spec.params.N, spec.params.m
    history, ratios = [], []
    best = None
    for k, t in enumerate(sorted(times, reverse=True)):
        if not 0 < t <= 1:
            raise ConfigError("times must lie in (0, 1]")
        bm = ball_mass_sup(mu, t ** (1 / (2 * m))) if not mu.is_zero else 0.0
        if bm <= 0:
            continue
        ratio = sk_sup(spec, mu, t) * t ** (N / (2 * m)) / bm
        ratios.append((t, ratio))
        best = ratio if best is None else max(best, ratio)
        history.append((k + 1, best))
    if not history:
        raise DegenerateMeasure("every sampled ball mass is zero")
    return ConstantEstimate(history, info={"ratios": ratios})


# ---------------------------------------------------------------------------
# d_*

def convolution_vs_reduction(spec: MajorantSpec, t: float, s: float, L: float = 400.0,
                             n: int = 2 ** 14, tol: float = 1e-5):
    """Grid convolution of K(., t-s) with K(., s) against G_theta(., omega_{t,s}).

    K(., t-s) = G_theta(., (t-s)^e) and K(., s) = G_theta(., s^e), so the
    semigroup property turns the convolution into G_theta(., omega).  Raises
    SemigroupMismatch when the sup difference over |x| <= L/2 exceeds tol.
    """
    e = spec.time_exponent
    a, b = (t - s) ** e, s ** e
    res = kernels.semigroup_residual(spec.gtheta_profile, a + b, b, L, n)
    if res > tol:
        raise SemigroupMismatch(f"grid convolution differs from the reduction by {res:.3g}")
    return res


def d_star_ratio(spec: MajorantSpec, t, s, r):
    """[int K(x-y, t-s) K(y, s) dy] / K(x, t) via the exact reduction, |x| = r."""
    w = omega(spec, t, s)
    prof = spec.gtheta_profile
    return eval_radial(prof, r, w) / eval_radial(prof, r, t ** spec.time_exponent)


def default_d_star_samples(n_t=10, fractions=(0.1, 0.5, 0.9), n_x=50, x_max=50.0):
    ts = np.logspace(-1, 1, n_t)
    xs = np.linspace(0.0, x_max, n_x)
    return [(float(t), float(f * t), float(x)) for t in ts for f in fractions for x in xs]


def estimate_d_star(spec: MajorantSpec, samples=None, check_grid: bool = True,
                    L: float = 400.0, n: int = 2 ** 14, tol: float = 1e-5) -> ConstantEstimate:
    """max over samples (t, s, |x|) of the convolution-to-K ratio.

    Ratios come from the reduction to G_theta(x, omega_{t,s}); each distinct
    (t, s) pair is cross-checked against a zero-padded grid convolution, and
    the omega sandwich is asserted for every sample.  The history is the
    running sup over nested |x| ranges (x_max / 8, / 4, / 2, full).  The
    reported tail limit is the |x| -> inf value omega/t^e of the ratio.
    """
    samples = default_d_star_samples() if samples is None else samples
    e = spec.time_exponent
    pairs = {}
    for t, s, x in samples:
        if not 0 < s < t:
            raise ConfigError("samples need 0 < s < t")
        if not omega_sandwich_holds(e, t, s):
            raise SemigroupMismatch(f"omega sandwich fails at t={t}, s={s}")
        pairs.setdefault((t, s), []).append(abs(float(np.linalg.norm(np.atleast_1d(x)))))
    residuals = {}
    if check_grid:
        for (t, s) in pairs:
            residuals[(t, s)] = convolution_vs_reduction(spec, t, s, L, n, tol)
    xmax = max(max(v) for v in pairs.values())
    history = []
    for frac in (0.125, 0.25, 0.5, 1.0):
        best = 0.0
        for (t, s), xs in pairs.items():
            xs = np.array([x for x in xs if x <= frac * xmax + 1e-12])
            if xs.size:
                best = max(best, float(np.max(d_star_ratio(spec, t, s, xs))))
        history.append((int(sum(np.sum(np.array(v) <= frac * xmax + 1e-12) for v in pairs.values())), best))
    tail = max(omega(spec, t, s) / t ** e for (t, s) in pairs)
    return ConstantEstimate(history, info={"tail_limit": tail,
                                           "max_grid_residual": max(residuals.values()) if residuals else None,
                                           "pairs": len(pairs)})


def scaled_ratios(spec: MajorantSpec, lam: float, t, s, x):
    """d_* and d_0-type ratios at (x, t, s) and at (lam x, lam^{2m} t, lam^{2m} s)."""
    m = spec.params.m
    a = d_star_ratio(spec, t, s, abs(x))
    b = d_star_ratio(spec, lam ** (2 * m) * t, lam ** (2 * m) * s, abs(lam * x))
    return float(a), float(b)


_CONSTANTS_CACHE: dict = {}


def majorant_constants(spec: MajorantSpec, check_grid: bool = False) -> tuple[float, float]:
    """(d0, d_*) used by the solver; d_* is never below its |x| -> inf limit.

    Values are memoised per (N, m, theta).
    """
    key = (spec.params.N, spec.params.m, spec.params.theta)
    if key not in _CONSTANTS_CACHE:
        d0 = estimate_d_j(spec, 0).value
        ds = estimate_d_star(spec, check_grid=check_grid)
        _CONSTANTS_CACHE[key] = (d0, max(ds.value, ds.info["tail_limit"]))
    return _CONSTANTS_CACHE[key]
