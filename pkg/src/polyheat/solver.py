"""Mild solutions of u_t + (-Delta)^m u = |u|^p by Picard iteration.

Space is the periodic box [-L, L)^N with a Fourier multiplier for the
semigroup; time is a uniform grid on [0, T].  The Duhamel term is advanced
mode by mode with a product-trapezoid exponential integrator, which is exact
for the linear part and second order in the step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .criteria import orlicz_phi, orlicz_phi_inverse
from .data import GridField, InitialData
from .errors import (ConfigError, IterationDiverged, NaNDetected, NoContraction, NonPositiveTime,
                     OutOfBox, WeightDegenerate)
from .kernels import wavenumbers
from .params import ProblemParams

log = logging.getLogger(__name__)

U_LINEAR = "U_LINEAR"
U_ALPHA = "U_ALPHA"
U_ORLICZ = "U_ORLICZ"
WEIGHT_MODES = (U_LINEAR, U_ALPHA, U_ORLICZ)
V_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# Fourier multipliers

def _k2(N, L, n):
    k = wavenumbers(L, n)
    shape = lambda ax: tuple(n if i == ax else 1 for i in range(N))
    return sum((k * k).reshape(shape(ax)) for ax in range(N))


def sm_symbol(N, L, n, m):
    """|xi|^{2m} on the discrete frequency lattice xi = pi k / L."""
    return _k2(N, L, n) ** m


def _real_part(z, what):
    scale = max(1.0, float(np.abs(z.real).max()))
    if np.abs(z.imag).max() > 1e-12 * scale:
        raise NaNDetected(f"{what}: imaginary residue {np.abs(z.imag).max():.3g}")
    return z.real


def apply_Sm(f: GridField, dt: float, m: int) -> GridField:
    """exp(-dt (-Delta)^m) on the periodic box."""
    if dt < 0:
        raise NonPositiveTime("dt must be nonnegative")
    if dt == 0:
        return f
    mult = np.exp(-dt * sm_symbol(f.N, f.L, f.n, m))
    out = _real_part(np.fft.ifftn(np.fft.fftn(f.values) * mult), "apply_Sm")
    return f.with_values(out, None if f.time_tag is None else f.time_tag + dt)


def apply_SK(spec, obj, t: float, L: float | None = None, n: int | None = None) -> GridField:
    """Convolution with K(., t) = G_theta(., t^{theta/2m}).

    Grid fields use the multiplier exp(-t^{theta/2m} |xi|^theta), which is the
    Fourier transform of the stable profile, so constants are preserved
    exactly.  Atomic data is evaluated directly as a kernel sum on the
    (L, n) grid.
    """
    if not t > 0:
        raise NonPositiveTime("S_K needs t > 0")
    tau = t ** spec.time_exponent
    theta = spec.params.theta
    if isinstance(obj, InitialData):
        if obj.is_atomic:
            if L is None or n is None:
                raise ConfigError("atomic data needs a grid (L, n)")
            g = GridField(obj.N, L, n, np.zeros((n,) * obj.N))
            if obj.is_zero:
                return g
            from .kernels import eval_radial
            X = np.stack([c.reshape(-1) for c in g.coords()], axis=1)
            vals = np.zeros(X.shape[0])
            for x0, w in obj.atoms:
                vals += w * eval_radial(spec.gtheta_profile, np.linalg.norm(X - x0, axis=1), tau)
            return g.with_values(vals.reshape((n,) * obj.N))
        obj = obj.sample(L, n) if L is not None else obj.grid
    f = obj
    mult = np.exp(-tau * _k2(f.N, f.L, f.n) ** (theta / 2))
    return f.with_values(_real_part(np.fft.ifftn(np.fft.fftn(f.values) * mult), "apply_SK"))


# ---------------------------------------------------------------------------
# configuration and report

@dataclass
class PicardConfig:
    T: float = 1.0
    n_t: int = 128
    tol: float = 1e-8
    max_iter: int = 100
    weight_mode: str = U_LINEAR
    alpha: float | None = None
    beta: float | None = None
    L_orlicz: float = math.e
    delta: float | None = None
    M: float | None = None
    L: float = 16.0
    n: int = 256
    seed: int = 0
    force: bool = False
    residual_samples: int = 8

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.n_t < 2:
            raise ConfigError("n_t must be at least 2")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.weight_mode == U_ORLICZ:
            if self.beta is None or not self.beta > 0:
                raise ConfigError("U_ORLICZ needs beta > 0")
            if self.L_orlicz < math.e:
                raise ConfigError("L_orlicz must be at least e")
        if self.delta is not None and self.M is not None and self.delta > self.M:
            raise ConfigError("delta must not exceed M")

    def validate_for(self, params: ProblemParams):
        if self.weight_mode == U_ALPHA:
            if self.alpha is None or not 1 < self.alpha < params.p:
                raise ConfigError(f"U_ALPHA needs 1 < alpha < p={params.p}")

    def delta_M(self, d0: float):
        """delta and M; defaults follow the weight mode (1/2, 1 or d0, 2 d0)."""
        if self.weight_mode == U_ORLICZ:
            dd, MM = d0, 2 * d0
        else:
            dd, MM = 0.5, 1.0
        return (self.delta if self.delta is not None else dd,
                self.M if self.M is not None else MM)


@dataclass
class ContractionCheck:
    D_star: float
    holds_53: tuple
    nu: float
    delta: float
    M: float
    times: list = field(default_factory=list)
    outer: list = field(default_factory=list)
    inner: list = field(default_factory=list)


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    norm_history: list
    contraction_estimate: float
    D_star_value: float
    d0_used: float
    dstar_used: float
    condition_53_holds: tuple
    snapshots: list
    residual: float
    nu: float = 0.0
    iterate_norms: list = field(default_factory=list)
    fixed_point_converged: bool = False
    excluded_points: int = 0
    status: str = ""


# ---------------------------------------------------------------------------
# weights

def _data_grid(mu: InitialData, cfg: PicardConfig) -> GridField:
    if mu.kind == "GRID" and mu.grid.L == cfg.L and mu.grid.n == cfg.n:
        return mu.grid
    if mu.is_constant:
        return GridField(mu.N, cfg.L, cfg.n, np.full((cfg.n,) * mu.N, mu.c))
    return mu.sample(cfg.L, cfg.n)


def _U_source(mu_grid: GridField, cfg: PicardConfig, d0: float):
    """(field fed to S_K, prefactor applied to its output)."""
    a = np.abs(mu_grid.values)
    if cfg.weight_mode == U_LINEAR:
        return mu_grid.with_values(a), 2 * d0
    if cfg.weight_mode == U_ALPHA:
        return mu_grid.with_values(a ** cfg.alpha), (2 * d0) ** cfg.alpha
    return mu_grid.with_values(orlicz_phi(a, cfg.beta, cfg.L_orlicz)), 1.0


def _psi(U, cfg: PicardConfig):
    if cfg.weight_mode == U_LINEAR:
        return U
    if cfg.weight_mode == U_ALPHA:
        return U ** (1 / cfg.alpha)
    return orlicz_phi_inverse(U, cfg.beta, cfg.L_orlicz)


def weight_U(spec, mu_grid, cfg, d0, t):
    src, pref = _U_source(mu_grid, cfg, d0)
    return pref * np.maximum(apply_SK(spec, src, t).values, 0.0)


def check_contraction(cfg: PicardConfig, params: ProblemParams, d0: float, dstar: float,
                      mu: InitialData, spec, n_times: int = 160, t_min_rel: float = 1e-12
                      ) -> ContractionCheck:
    """D_*, the two inequalities delta + d0 d* D* M^p <= M and nu < 1, and nu.

    D_* = sup_t ||U/Psi(U)||(t) int_0^t ||Psi(U)^p / U||(s) ds is evaluated on a
    geometric time grid down to t_min_rel * T; the inner integral uses the
    piecewise power-law rule in t plus a power-law extrapolation on [0, t_min].
    """
    cfg.validate_for(params)
    delta, M = cfg.delta_M(d0)
    p = params.p
    if mu.is_zero:
        return ContractionCheck(0.0, (delta <= M, True), 0.0, delta, M)
    mu_grid = _data_grid(mu, cfg)
    ts = np.geomspace(t_min_rel * cfg.T, cfg.T, n_times)
    outer, inner = [], []
    for t in ts:
        U = weight_U(spec, mu_grid, cfg, d0, t)
        pos = U > V_FLOOR
        if not pos.any():
            raise WeightDegenerate(f"U vanishes identically at t={t:.3g}")
        Up = U[pos]
        V = _psi(Up, cfg)
        outer.append(float(np.max(Up / V)))
        inner.append(float(np.max(V ** p / Up)))
    outer, inner = np.array(outer), np.array(inner)
    # power law B(s) ~ B(t0) (s/t0)^g on [0, t0]
    g = math.log(inner[1] / inner[0]) / math.log(ts[1] / ts[0])
    head = inner[0] * ts[0] / (g + 1) if g > -1 else math.inf
    u = np.log(ts)
    # exact for B s on each cell when B is a power of s: logarithmic mean
    y = inner * ts
    y0, y1 = y[:-1], y[1:]
    ratio = np.log(y1 / y0)
    flat = np.abs(ratio) < 1e-8
    lmean = np.where(flat, 0.5 * (y0 + y1), (y1 - y0) / np.where(flat, 1.0, ratio))
    seg = lmean * np.diff(u)
    cum = head + np.concatenate([[0.0], np.cumsum(seg)])
    D = float(np.max(outer * cum))
    nu = 2 * p * d0 * dstar * D * M ** (p - 1)
    holds = (delta + d0 * dstar * D * M ** p <= M, nu < 1)
    return ContractionCheck(D, holds, nu, delta, M, ts.tolist(), outer.tolist(), inner.tolist())


# ---------------------------------------------------------------------------
# Picard iteration

def _phi_weights(z):
    """Product-trapezoid weights for int_0^h e^{-lam (h - s)} f(s) ds / h.

    phi1 = (1 - e^{-z}) / z and psi = (1 - e^{-z}(1 + z)) / z^2, z = lam h;
    left weight psi, right weight phi1 - psi.  Series for small z.
    """
    z = np.asarray(z, dtype=float)
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1 - z / 2 + z * z / 6 - z ** 3 / 24, -np.expm1(-zs) / zs)
    psi = np.where(small, 0.5 - z / 3 + z * z / 8 - z ** 3 / 30,
                   (-np.expm1(-zs) - zs * np.exp(-zs)) / zs ** 2)
    return psi, phi1 - psi


class _Duhamel:
    """N(t_j) = int_0^{t_j} S_m(t_j - s) f(s) ds on a uniform time grid."""

    def __init__(self, N, L, n, m, h):
        lam = sm_symbol(N, L, n, m)
        self.E = np.exp(-lam * h)
        wl, wr = _phi_weights(lam * h)
        self.wL, self.wR = h * wl, h * wr

    def __call__(self, f_hat):
        out = np.empty(f_hat.shape, dtype=complex)
        acc = np.zeros(f_hat.shape[1:], dtype=complex)
        out[0] = 0
        for j in range(f_hat.shape[0] - 1):
            acc = self.E * acc + self.wL * f_hat[j] + self.wR * f_hat[j + 1]
            out[j + 1] = acc
        return out


def linear_evolution(mu_grid: GridField, m: int, times) -> np.ndarray:
    """S_m(t) mu at each time, stacked along axis 0."""
    lam = sm_symbol(mu_grid.N, mu_grid.L, mu_grid.n, m)
    mh = np.fft.fftn(mu_grid.values)
    out = np.empty((len(times),) + mu_grid.values.shape)
    for i, t in enumerate(times):
        out[i] = _real_part(np.fft.ifftn(mh * np.exp(-t * lam)), "S_m")
    return out


def _weighted_sup(diff, V, mask):
    return float(np.max(np.abs(diff[mask]) / V[mask])) if mask.any() else float(np.max(np.abs(diff)))


def picard_solve(mu: InitialData, params: ProblemParams, cfg: PicardConfig, spec=None,
                 d0: float | None = None, dstar: float | None = None,
                 contraction: ContractionCheck | None = None) -> SolveReport:
    """Picard iteration u_{k+1} = S_m(t) mu + int_0^t S_m(t-s) |u_k(s)|^p ds.

    Starts from u_0 = S_m(t) mu and stops when the weighted increment
    sup_{t, x} |u_{k+1} - u_k| / V drops below ``cfg.tol``.  Points where V
    underflows (V <= 1e-300) are excluded from the weighted sup and counted;
    if every point is excluded the sup norm is used.  Raises NoContraction
    when nu >= 1 unless ``cfg.force``.
    """
    cfg.validate_for(params)
    N, m, p = params.N, params.m, params.p
    if mu.N != N:
        raise ConfigError("data dimension differs from params.N")
    if spec is None:
        from .majorant import MajorantSpec
        spec = MajorantSpec.build(params)
    if d0 is None or dstar is None:
        from .majorant import majorant_constants
        d0_, ds_ = majorant_constants(spec)
        d0 = d0_ if d0 is None else d0
        dstar = ds_ if dstar is None else dstar
    if contraction is None:
        contraction = check_contraction(cfg, params, d0, dstar, mu, spec)
    if contraction.nu >= 1 and not cfg.force:
        raise NoContraction(f"nu = {contraction.nu:.4g} >= 1; the Picard map need not contract")

    h = cfg.T / cfg.n_t
    times = h * np.arange(cfg.n_t + 1)
    shape = (cfg.n,) * N
    if mu.is_zero:
        zero = np.zeros(shape)
        snaps = [(float(t), GridField(N, cfg.L, cfg.n, zero, float(t))) for t in times]
        return SolveReport(True, 1, [0.0], 0.0, contraction.D_star, d0, dstar,
                           contraction.holds_53, snaps, 0.0, contraction.nu, [0.0], True, 0,
                           "converged")
    mu_grid = _data_grid(mu, cfg)
    u0 = linear_evolution(mu_grid, m, times)
    V = np.empty_like(u0)
    V[0] = np.inf
    for i, t in enumerate(times[1:], start=1):
        V[i] = _psi(weight_U(spec, mu_grid, cfg, d0, t), cfg)
    mask = V > V_FLOOR
    mask[0] = False
    excluded = int((~mask[1:]).sum())
    # singular data: the t = 0 slice is a sampled measure, not a function;
    # start the quadrature from the first positive time instead
    singular = np.abs(u0[0]).max() > 10 * np.abs(u0[1]).max()
    duh = _Duhamel(N, cfg.L, cfg.n, m, h)
    axes = tuple(range(1, N + 1))

    u = u0.copy()
    history, norms, ratios = [], [], []
    converged = False
    status = "max_iter"
    it = 0
    for it in range(1, cfg.max_iter + 1):
        f = np.abs(u) ** p
        if singular:
            f[0] = f[1]
        f_hat = np.fft.fftn(f, axes=axes)
        Nt = _real_part(np.fft.ifftn(duh(f_hat), axes=axes), "Duhamel")
        new = u0 + Nt
        if not np.all(np.isfinite(new)):
            raise NaNDetected(f"non-finite values at iteration {it}")
        inc = _weighted_sup(new - u, V, mask)
        history.append(inc)
        norms.append(_weighted_sup(new, V, mask))
        if len(history) >= 2 and history[-2] > 0:
            ratios.append(history[-1] / history[-2])
        u = new
        log.debug("picard %d: increment %.3e", it, inc)
        if inc <= cfg.tol:
            converged = True
            status = "converged"
            break
        if len(history) >= 6 and all(history[-i] > history[-i - 1] for i in range(1, 6)):
            err = IterationDiverged(f"increment grew 5 times in a row: {history[-6:]}")
            err.history = history
            raise err

    snaps = [(float(t), GridField(N, cfg.L, cfg.n, u[i], float(t))) for i, t in enumerate(times)]
    residual = math.nan
    if converged and cfg.residual_samples:
        residual = integral_equation_residual(u, u0, V, mask, times, mu_grid, params, cfg)
    ok = converged and (not math.isfinite(residual) or residual <= 10 * cfg.tol)
    if converged and not ok:
        status = "discretisation_limited"
    return SolveReport(ok, it, history, max(ratios) if ratios else 0.0, contraction.D_star,
                       d0, dstar, contraction.holds_53, snaps, residual, contraction.nu, norms,
                       converged, excluded, status)


def integral_equation_residual(u, u0, V, mask, times, mu_grid, params, cfg) -> float:
    """Weighted defect of the integral equation at random (x, t).

    Independent of the marching scheme: S_m(t) mu is applied at the exact
    sample time, and the Duhamel integral uses 4-point Gauss-Legendre on
    every time cell with |u|^p from cubic-in-time interpolation; the result
    is evaluated at x by trigonometric interpolation.
    """
    N, m, p = params.N, params.m, params.p
    rng = np.random.default_rng(cfg.seed)
    lam = sm_symbol(N, cfg.L, cfg.n, m)
    spline = CubicSpline(times, u, axis=0)
    xg, wg = np.polynomial.legendre.leggauss(4)
    mh = np.fft.fftn(mu_grid.values)
    axes = tuple(range(1, N + 1))
    worst = 0.0
    h = times[1] - times[0]
    for _ in range(cfg.residual_samples):
        i = int(rng.integers(max(2, cfg.n_t // 4), cfg.n_t + 1))
        t = float(times[i] - h * rng.uniform(0, 0.999))
        x = rng.uniform(-cfg.L / 2, cfg.L / 2, size=N)
        cells = np.arange(int(math.ceil(t / h)))
        a = cells * h
        b = np.minimum(a + h, t)
        s = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * xg[None, :]).reshape(-1)
        w = (0.5 * (b - a)[:, None] * wg[None, :]).reshape(-1)
        us = spline(s)
        first = s < h
        if np.abs(u0[0]).max() > 10 * np.abs(u0[1]).max():
            us[first] = u[1]  # singular data: same convention as the marching scheme
        fh = np.fft.fftn(np.abs(us) ** p, axes=axes)
        decay = np.exp(-(t - s).reshape((-1,) + (1,) * N) * lam[None])
        duh = np.tensordot(w, fh * decay, axes=([0], [0]))
        rhs_hat = mh * np.exp(-t * lam) + duh
        rhs = _eval_at(rhs_hat, x, cfg.L, cfg.n, N)
        lhs = _eval_at(np.fft.fftn(spline(t)), x, cfg.L, cfg.n, N)
        j = min(max(int(round(t / h)), 1), cfg.n_t)
        vx = _eval_at(np.fft.fftn(np.where(mask[j], V[j], 0.0)), x, cfg.L, cfg.n, N)
        scale = vx if vx > V_FLOOR else 1.0
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def _eval_at(coef_hat, x, L, n, N):
    k = np.fft.fftfreq(n, d=1.0 / n)
    nyq = n // 2
    term = coef_hat / n ** N
    for ax in range(N):
        arg = np.pi * (x[ax] + L) / L
        e = np.exp(1j * k * arg)
        e[nyq] = np.cos(nyq * arg)
        term = np.tensordot(e, term, axes=([0], [0]))
    return float(np.real(term))


# ---------------------------------------------------------------------------
# rescaling

def rescale_field(u: GridField, T: float, params: ProblemParams,
                  target: tuple | None = None) -> GridField:
    """u_T(x, t) = T^{1/(p-1)} u(T^{1/2m} x, T t).

    By default the nodes are reused on the box of half-width L / T^{1/2m},
    which is exact.  With ``target=(L, n)`` the field is interpolated onto
    that grid; OutOfBox when T^{1/2m} L_target exceeds the source box.
    """
    if not T > 0:
        raise ConfigError("T must be positive")
    amp = T ** (1 / (params.p - 1))
    lam = T ** (1 / (2 * params.m))
    tag = None if u.time_tag is None else u.time_tag / T
    if target is None:
        return GridField(u.N, u.L / lam, u.n, u.values * amp, tag)
    L2, n2 = target
    if lam * L2 > u.L * (1 + 1e-12):
        raise OutOfBox(f"rescaled box {lam * L2:.4g} exceeds the source half-width {u.L:.4g}")
    g = GridField(u.N, L2, n2, np.zeros((n2,) * u.N))
    pts = np.stack([c.reshape(-1) for c in g.coords()], axis=1) * lam
    vals = u.interpolate(pts).reshape((n2,) * u.N) * amp
    return GridField(u.N, L2, n2, vals, tag)


# ---------------------------------------------------------------------------
# sweeps and calibration

def mollified_dirac(spec, D: float, eps: float, L: float, n: int) -> InitialData:
    """D G_theta(., eps) sampled on the grid: mass-D bump of width eps^{1/theta}."""
    from .kernels import eval_radial
    N = spec.params.N
    g = GridField(N, L, n, np.zeros((n,) * N))
    vals = D * eval_radial(spec.gtheta_profile, g.radius(), eps)
    return InitialData.from_grid(g.with_values(vals))


@dataclass
class SweepRow:
    eps: float
    D_star: float
    nu: float
    converged: bool
    sup_half: float
    status: str = ""


def delta_sweep(params: ProblemParams, D: float, eps_list, cfg: PicardConfig, spec=None,
                d0: float | None = None, dstar: float | None = None) -> list:
    """Contraction data and solves for mollified Dirac data D G_theta(., eps)."""
    eps = list(eps_list)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_list must be decreasing")
    if spec is None:
        from .majorant import MajorantSpec
        spec = MajorantSpec.build(params)
    if d0 is None or dstar is None:
        from .majorant import majorant_constants
        d0_, ds_ = majorant_constants(spec)
        d0 = d0_ if d0 is None else d0
        dstar = ds_ if dstar is None else dstar
    rows = []
    for e in eps:
        if D == 0:
            rows.append(SweepRow(e, 0.0, 0.0, True, 0.0, "zero data"))
            continue
        mu = mollified_dirac(spec, D, e, cfg.L, cfg.n)
        cc = check_contraction(cfg, params, d0, dstar, mu, spec)
        try:
            rep = picard_solve(mu, params, cfg, spec, d0, dstar, contraction=cc)
            half = rep.snapshots[len(rep.snapshots) // 2][1].sup()
            rows.append(SweepRow(e, cc.D_star, cc.nu, rep.converged, half, rep.status))
        except (NoContraction, IterationDiverged, NaNDetected) as exc:
            rows.append(SweepRow(e, cc.D_star, cc.nu, False, math.nan, exc.category))
    return rows


def calibrate_gamma2(params: ProblemParams, masses=None, eps: float = 2.0 ** -4,
                     cfg: PicardConfig | None = None, spec=None) -> tuple[float, float]:
    """Largest Dirac mass D whose mollified Picard solve converges on [0, 1].

    At unit horizon the subcritical ball-mass test for a Dirac reads
    D <= gamma_2, so gamma_2 = D_max / 4 is a conservative default.
    Returns (gamma_2, D_max).
    """
    if params.regime() != "SUBCRITICAL":
        raise ConfigError("calibration uses a subcritical exponent")
    masses = np.geomspace(0.05, 20.0, 24) if masses is None else masses
    cfg = cfg or PicardConfig(T=1.0, n_t=128, tol=1e-8, L=16.0, n=512, force=True,
                              max_iter=200, residual_samples=0)
    if spec is None:
        from .majorant import MajorantSpec
        spec = MajorantSpec.build(params)
    best = 0.0
    for D in sorted(masses):
        mu = mollified_dirac(spec, D, eps, cfg.L, cfg.n)
        cc = ContractionCheck(0.0, (True, True), 0.0, 0.5, 1.0)
        try:
            rep = picard_solve(mu, params, cfg, spec, 1.0, 1.0, contraction=cc)
        except (IterationDiverged, NaNDetected):
            break
        if not rep.fixed_point_converged:
            break
        best = D
    return best / 4, best
