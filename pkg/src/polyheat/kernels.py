"""Polyharmonic and stable heat kernels as cached radial profiles.

A profile tabulates r -> G(r e_1, 1) on a geometric radial grid; any other
time follows from the self-similar scaling

    G_m(x, t)     = t^{-N/2m}  G_m(t^{-1/2m} x, 1)
    G_theta(x, t) = t^{-N/theta} G_theta(t^{-1/theta} x, 1).
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from . import _radial
from .errors import (BoxTooSmall, ConfigError, EstimateDiverging, NonPositiveTime,
                     QuadratureNonConvergence, UnsupportedDimension)
from .params import ConstantEstimate, sphere_area

log = logging.getLogger(__name__)

R_MIN = 1e-3
CACHE_VERSION = 2
SIGN_MARGIN = 1e-10


@dataclass(frozen=True)
class KernelKind:
    """``polyharmonic`` (symbol e^{-|xi|^{2m}}) or ``stable`` (e^{-|xi|^theta})."""

    name: str
    order: float

    def __post_init__(self):
        if self.name == "polyharmonic":
            if int(self.order) != self.order or self.order < 1:
                raise ConfigError(f"polyharmonic order must be an integer >= 1, got {self.order}")
        elif self.name == "stable":
            if not 0 < self.order < 2:
                raise ConfigError(f"stable index must lie in (0, 2), got {self.order}")
        else:
            raise ConfigError(f"unknown kernel kind {self.name!r}")

    @classmethod
    def polyharmonic(cls, m: int) -> "KernelKind":
        return cls("polyharmonic", int(m))

    @classmethod
    def stable(cls, theta: float) -> "KernelKind":
        return cls("stable", float(theta))

    @property
    def symbol_exponent(self) -> float:
        """q in the Fourier symbol e^{-t |xi|^q}."""
        return 2 * self.order if self.name == "polyharmonic" else self.order

    @property
    def is_stable(self) -> bool:
        return self.name == "stable"

    def label(self) -> str:
        if self.name == "polyharmonic":
            return f"polyharmonic(m={int(self.order)})"
        return f"stable(theta={self.order:g})"


def envelope_rate(m: int) -> float:
    """Decay rate b in |G_m(r,1)| ~ exp(-b r^{2m/(2m-1)}) (saddle-point value)."""
    q = 2 * m / (2 * m - 1)
    return (2 * m - 1) * (2 * m) ** (-q) * math.sin(math.pi / (2 * (2 * m - 1)))


def default_r_max(kind: KernelKind) -> float:
    if kind.is_stable:
        return 1e3
    m = int(kind.order)
    q = 2 * m / (2 * m - 1)
    return max(20.0, (40.0 / envelope_rate(m)) ** (1 / q))


@dataclass(frozen=True, eq=False)
class RadialKernelProfile:
    """Tabulated radial section of a kernel at t = 1 plus its tail model.

    ``radii[0] == 0``; the remaining radii are geometric with
    ``resolution`` points per octave from ``R_MIN`` to ``r_max``.
    """

    kind: KernelKind
    N: int
    radii: np.ndarray
    values: np.ndarray
    tail: dict
    quad_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.radii.setflags(write=False)
        self.values.setflags(write=False)
        # stable: spline log G; polyharmonic: spline G divided by its
        # stretched-exponential envelope, so tails keep relative accuracy
        u = np.log(self.radii[1:])
        if self.kind.is_stable:
            y = np.log(self.values[1:])
        else:
            y = self.values[1:] * self._envelope(self.radii[1:], -1)
        object.__setattr__(self, "_interp", CubicSpline(u, y))

    def _envelope(self, r, sign=1):
        m = int(self.kind.order)
        return np.exp(-sign * envelope_rate(m) * r ** (2 * m / (2 * m - 1)))

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def value_at_origin(self) -> float:
        return float(self.values[0])

    def tail_value(self, r):
        r = np.asarray(r, dtype=float)
        t = self.tail
        if self.kind.is_stable:
            th = self.kind.order
            return sum(t[f"c{k}"] * r ** (-self.N - k * th) for k in range(1, STABLE_TAIL_TERMS + 1))
        return t["amplitude"] * np.exp(-t["rate"] * r ** t["exponent"])

    def __call__(self, r):
        """Kernel value at radius ``r`` and time 1 (vectorized)."""
        r = np.abs(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        inner = r < R_MIN
        mid = (~inner) & (r <= self.r_max)
        outer = r > self.r_max
        g0 = self.values[0]
        g1 = self.values[1]
        out[inner] = g0 + (g1 - g0) * (r[inner] / R_MIN) ** 2
        y = self._interp(np.log(r[mid]))
        out[mid] = np.exp(y) if self.kind.is_stable else y * self._envelope(r[mid])
        out[outer] = self.tail_value(r[outer])
        return out

    def mass(self) -> float:
        """Reconstructed integral of G(., 1) over R^N."""
        N = self.N
        r = self.radii[1:]
        body = simpson(r ** N * self.values[1:], x=np.log(r))
        core = self.values[0] * R_MIN ** N / N  # G is flat to O(r^2) here
        tail = self._outer_mass(self.r_max) if self.kind.is_stable else 0.0
        return sphere_area(N) * (core + body + tail)

    def _outer_mass(self, radius):
        """int_radius^inf r^{N-1} G(r) dr from the tail series."""
        th = self.kind.order
        return sum(self.tail[f"c{k}"] * radius ** (-k * th) / (k * th)
                   for k in range(1, STABLE_TAIL_TERMS + 1))

    def min_value(self) -> float:
        return float(self.values.min())

    def has_sign_change(self, margin: float = SIGN_MARGIN) -> bool:
        return bool(self.values.min() < -margin)

    def tail_mass(self, radius: float) -> float:
        """Mass of G(., 1) outside the ball of the given radius."""
        N = self.N
        if radius <= 0:
            return 1.0
        if radius >= self.r_max:
            return sphere_area(N) * self._outer_mass(radius) if self.kind.is_stable else 0.0
        inside = self.radii <= radius
        r = np.concatenate([self.radii[inside][1:], [radius]])
        part = simpson(r ** N * self(r), x=np.log(r)) + self.values[0] * R_MIN ** N / N
        return max(0.0, self.mass() - sphere_area(N) * part)

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.radii).tobytes())
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# construction

def radial_grid(r_max: float, resolution: int) -> np.ndarray:
    octaves = math.log2(r_max / R_MIN)
    n = int(math.ceil(octaves * resolution))
    r = R_MIN * 2.0 ** (np.arange(n + 1) / resolution)
    r[-1] = r_max
    return np.concatenate([[0.0], r[r <= r_max]]) if r[-2] < r_max else np.concatenate([[0.0], r])


STABLE_TAIL_TERMS = 4


def stable_tail_coefficient(theta: float, N: int, k: int) -> float:
    """Coefficient of r^{-N-k theta} in the large-r expansion of G_theta(r, 1).

    (-1)^{k+1} / k! 2^{k theta} Gamma((k theta + N)/2) Gamma(k theta/2 + 1)
    sin(k pi theta / 2) / pi^{N/2 + 1}.
    """
    kt = k * theta
    return ((-1) ** (k + 1) / math.factorial(k) * 2 ** kt * math.gamma((kt + N) / 2)
            * math.gamma(kt / 2 + 1) * math.sin(math.pi * kt / 2) / math.pi ** (N / 2 + 1))


def _fit_tail(kind, N, radii, values):
    lo = radii[-1] / 10
    sel = radii >= lo
    r, v = radii[sel], values[sel]
    if kind.is_stable:
        th = kind.order
        out = {"model": "power_series", "fit_from": float(lo)}
        for k in range(1, STABLE_TAIL_TERMS + 1):
            out[f"c{k}"] = stable_tail_coefficient(th, N, k)
        series = sum(out[f"c{k}"] * r ** (-N - k * th) for k in range(1, STABLE_TAIL_TERMS + 1))
        out["series_mismatch"] = float(np.max(np.abs(series / v - 1)))
        return out
    m = int(kind.order)
    q = 2 * m / (2 * m - 1)
    a = np.abs(v)
    floor = 1e-15 * abs(values[0])
    peaks = [i for i in range(1, a.size - 1) if a[i] >= a[i - 1] and a[i] >= a[i + 1] and a[i] > floor]
    if len(peaks) >= 2:
        rp, ap = r[peaks], a[peaks]
    else:
        # no oscillation resolved (m = 1): fit every resolved point
        ok = a > floor
        rp, ap = r[ok], a[ok]
    if rp.size < 2:
        return {"model": "stretched_exp", "amplitude": 0.0, "rate": envelope_rate(m),
                "exponent": q, "fit_from": float(lo), "fitted": False}
    A = np.stack([np.ones_like(rp), -rp ** q], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(ap), rcond=None)
    return {"model": "stretched_exp", "amplitude": float(np.exp(coef[0])), "rate": float(coef[1]),
            "exponent": q, "fit_from": float(lo), "fitted": True}


def _quadrature(kind, N, r, tol):
    q = kind.symbol_exponent
    if kind.is_stable:
        return _radial.stable_ray(r, kind.order, N, tol=tol), "ray"
    if N in (1, 3):
        return _radial.polyharmonic_line(r, int(kind.order), N, tol=tol), "line"
    # N = 2: direct quadrature near the origin, shifted line beyond r = 1
    near = r < 1.0
    vals, errs = np.empty_like(r), np.empty_like(r)
    if near.any():
        vals[near], errs[near] = _radial.direct(r[near], q, N, tol=tol)
    if (~near).any():
        vals[~near], errs[~near] = _radial.polyharmonic_plane(r[~near], int(kind.order), tol=tol)
    return (vals, errs), "direct+plane"


def _compute_profile(kind, N, r_max, resolution, tol):
    radii = radial_grid(r_max, resolution)
    (vals, errs), route = _quadrature(kind, N, radii[1:], tol)
    values = np.concatenate([[_radial.value_at_origin(N, kind.symbol_exponent)], vals])
    if kind.is_stable and not np.all(values > 0):
        bad = radii[np.argmax(values <= 0)]
        raise QuadratureNonConvergence(f"stable profile lost positivity at r={bad:.4g}")
    tail = _fit_tail(kind, N, radii, values)
    meta = {"route": route, "resolution": resolution, "gl_order": _radial.GL_ORDER,
            "tol": tol, "max_refinement_change": float(errs.max())}
    return RadialKernelProfile(kind, N, radii, values, tail, meta)


_memory_cache: dict = {}


def cache_dir_from_env(cache_dir=None):
    """POLYHEAT_CACHE when set, else ``cache_dir``."""
    env = os.environ.get("POLYHEAT_CACHE")
    if env:
        return Path(env)
    return Path(cache_dir) if cache_dir is not None else None


def build_profile(kind: KernelKind, N: int, r_max: float | None = None,
                  resolution: int = 64, tol: float = 1e-11, cache_dir=None) -> RadialKernelProfile:
    """Tabulate G(r, 1) for ``kind`` in dimension ``N``.

    ``resolution`` is the number of radii per octave of the geometric grid.
    Profiles are memoized in-process and, when ``cache_dir`` (or the
    ``POLYHEAT_CACHE`` environment variable) is set, on disk.
    """
    if N not in (1, 2, 3):
        raise UnsupportedDimension(f"shipped quadrature covers N = 1, 2, 3; got N={N}")
    if r_max is None:
        r_max = default_r_max(kind)
    if not r_max > 0:
        raise ConfigError("r_max must be positive")
    if resolution < 64:
        raise ConfigError("resolution must be at least 64 points per octave")
    key = (kind, N, float(r_max), int(resolution), float(tol))
    if key in _memory_cache:
        return _memory_cache[key]
    directory = cache_dir_from_env(cache_dir)
    prof = None
    if directory is not None:
        path = directory / cache_filename(kind, N, r_max, resolution)
        if path.exists():
            try:
                prof = load_profile(path)
                log.info("cache: hit %s", path.name)
            except (ValueError, OSError) as exc:
                log.warning("cache: unreadable %s (%s), rebuilding", path.name, exc)
        if prof is None:
            log.info("cache: miss %s", path.name)
            prof = _compute_profile(kind, N, float(r_max), int(resolution), tol)
            save_profile(prof, path)
    else:
        prof = _compute_profile(kind, N, float(r_max), int(resolution), tol)
    _memory_cache[key] = prof
    return prof


# ---------------------------------------------------------------------------
# on-disk cache: text header, (radius, value) rows, atomic rename

def cache_filename(kind, N, r_max, resolution):
    return f"{kind.name}_{kind.order:g}_N{N}_r{r_max:g}_res{resolution}.prof"


def save_profile(prof: RadialKernelProfile, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# polyheat-profile v{CACHE_VERSION}",
             f"kind={prof.kind.name}", f"order={prof.kind.order!r}", f"N={prof.N}",
             f"r_max={prof.r_max!r}", f"resolution={prof.quad_meta.get('resolution')}",
             f"checksum={prof.checksum()}"]
    for k, v in sorted(prof.tail.items()):
        lines.append(f"tail.{k}={v!r}")
    for k, v in sorted(prof.quad_meta.items()):
        lines.append(f"meta.{k}={v!r}")
    lines.append("# radius value")
    body = "\n".join(f"{r!r} {v!r}" for r, v in zip(prof.radii.tolist(), prof.values.tolist()))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".prof")
    with os.fdopen(fd, "w") as fh:
        fh.write("\n".join(lines) + "\n" + body + "\n")
    os.replace(tmp, path)


def _literal(s):
    if s in ("True", "False"):
        return s == "True"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s.strip("'\"")


def load_profile(path) -> RadialKernelProfile:
    header, rows = {}, []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# polyheat-profile v{CACHE_VERSION}":
            raise ValueError(f"unsupported profile header {first!r}")
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" in line:
                k, v = line.split("=", 1)
                header[k] = v
            else:
                a, b = line.split()
                rows.append((float(a), float(b)))
    data = np.array(rows)
    kind = KernelKind(header["kind"], _literal(header["order"]))
    tail = {k[5:]: _literal(v) for k, v in header.items() if k.startswith("tail.")}
    meta = {k[5:]: _literal(v) for k, v in header.items() if k.startswith("meta.")}
    prof = RadialKernelProfile(kind, int(header["N"]), data[:, 0].copy(), data[:, 1].copy(), tail, meta)
    if prof.checksum() != header["checksum"]:
        raise ValueError("profile checksum mismatch")
    return prof


# ---------------------------------------------------------------------------
# evaluation

def time_scale_exponent(kind: KernelKind) -> float:
    """1/(2m) for polyharmonic, 1/theta for stable."""
    return 1.0 / kind.symbol_exponent


def eval_radial(profile: RadialKernelProfile, r, t):
    """G(x, t) for |x| = r using the self-similar scaling."""
    t = float(t)
    if not t > 0:
        raise NonPositiveTime(f"kernel time must be positive, got {t}")
    a = time_scale_exponent(profile.kind)
    scale = t ** (-a)
    return scale ** profile.N * profile(np.asarray(r, dtype=float) * scale)


def eval_kernel(profile: RadialKernelProfile, x, t):
    """G(x, t) at point(s) ``x``; the last axis of ``x`` holds coordinates.

    For ``N == 1`` a scalar or a 1-D array of positions is also accepted.
    """
    x = np.asarray(x, dtype=float)
    if profile.N == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        r = np.abs(x)
    else:
        if x.shape[-1] != profile.N:
            raise ConfigError(f"points must have {profile.N} coordinates")
        r = np.sqrt(np.sum(x * x, axis=-1))
    out = eval_radial(profile, r, t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# periodic grids

def grid_axis(L: float, n: int) -> np.ndarray:
    return -L + (2 * L / n) * np.arange(n)


def grid_radius(L: float, n: int, N: int) -> np.ndarray:
    ax = grid_axis(L, n)
    mesh = np.meshgrid(*([ax] * N), indexing="ij")
    return np.sqrt(sum(c * c for c in mesh))


def wavenumbers(L: float, n: int) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(n, d=2 * L / n)


def _offset_grid(L, n, N):
    """Radii of offsets x_i - y_j between two n-point grids on [-L, L)."""
    h = 2 * L / n
    off = h * np.arange(-(n - 1), n)
    mesh = np.meshgrid(*([off] * N), indexing="ij")
    return np.sqrt(sum(c * c for c in mesh))


def semigroup_truncation_bound(profile, t, s, L, window=0.5):
    """Upper bound for the part of the convolution lost by truncating to the box.

    On |x| <= window*L a factor mass sitting outside the box is at distance
    at least (1-window)*L from x, so it is weighted by the other factor
    evaluated there.
    """
    th = profile.kind.order
    gap = (1 - window) * L
    a, b = t - s, s
    return max(float(eval_radial(profile, gap, a)) * profile.tail_mass(L / b ** (1 / th)),
               float(eval_radial(profile, gap, b)) * profile.tail_mass(L / a ** (1 / th)))


def semigroup_residual(profile: RadialKernelProfile, t: float, s: float, L: float, n: int,
                       window: float = 0.5, return_fields: bool = False):
    """sup over grid |x| <= window*L of |(G(.,t-s) * G(., s))(x) - G(x, t)|.

    Both factors are sampled on the n^N grid of [-L, L)^N and convolved with
    zero padding (no periodic wrap).  A factor too narrow to sample (scale
    below four grid cells) is applied through its exact Fourier multiplier
    instead (only the narrower factor is ever treated this way).
    ``BoxTooSmall`` is raised when the neglected part of the
    convolution on the evaluation window could exceed 1e-6.
    """
    if not profile.kind.is_stable:
        raise ConfigError("semigroup residual is defined for stable profiles")
    if not 0 < s < t:
        raise ConfigError("need 0 < s < t")
    N = profile.N
    th = profile.kind.order
    h = 2 * L / n
    a, b = t - s, s
    neglect = semigroup_truncation_bound(profile, t, s, L, window)
    if neglect > 1e-6:
        raise BoxTooSmall(f"neglected convolution mass {neglect:.3g} exceeds 1e-6; enlarge L")
    rg = grid_radius(L, n, N)
    narrow = min(a, b)
    if narrow ** (1 / th) < 4 * h:
        tau_m, tau_f = (a, b) if a <= b else (b, a)
        field_ = eval_radial(profile, rg, tau_f)
        k = wavenumbers(L, n)
        kk = np.sqrt(sum(c * c for c in np.meshgrid(*([k] * N), indexing="ij")))
        conv = np.real(np.fft.ifftn(np.fft.fftn(field_) * np.exp(-tau_m * kk ** th)))
    else:
        g = eval_radial(profile, rg, b)
        f = eval_radial(profile, _offset_grid(L, n, N), a)
        full = fftconvolve(f, g, mode="full")
        sl = tuple(slice(n - 1, 2 * n - 1) for _ in range(N))
        conv = full[sl] * h ** N
    exact = eval_radial(profile, rg, t)
    win = rg <= window * L
    res = float(np.max(np.abs(conv - exact)[win]))
    if return_fields:
        return res, conv, exact
    return res


# ---------------------------------------------------------------------------
# derivative envelopes

def spectral_derivatives(m: int, N: int, L: float, n: int, j: int):
    """List of (alpha, d^alpha G_m(x, 1)) on the periodic grid, |alpha| = j."""
    k = wavenumbers(L, n)
    kr = np.fft.rfftfreq(n, d=2 * L / n) * 2 * np.pi
    axes = [k] * (N - 1) + [kr]
    shape = lambda ax, size: tuple(size if i == ax else 1 for i in range(N))
    ks = [axes[ax].reshape(shape(ax, axes[ax].size)) for ax in range(N)]
    k2 = sum(c * c for c in ks)
    mult0 = np.exp(-k2 ** m)
    # e^{-i xi L} = (-1)^index moves the origin to the grid centre
    for ax in range(N):
        sign = np.where(np.arange(axes[ax].size) % 2, -1.0, 1.0)
        mult0 = mult0 * sign.reshape(shape(ax, sign.size))
    h = 2 * L / n
    out = []
    for alpha in _multi_indices(N, j):
        mult = mult0.astype(complex)
        for ax, a in enumerate(alpha):
            if a:
                mult = mult * (1j * ks[ax]) ** a
        out.append((alpha, np.fft.irfftn(mult, s=(n,) * N, axes=tuple(range(N))) / h ** N))
    return out


def _multi_indices(N, j):
    if N == 1:
        return [(j,)]
    out = []
    for first in range(j, -1, -1):
        for rest in _multi_indices(N - 1, j - first):
            out.append((first,) + rest)
    return out


ENVELOPE_SPACING = {1: 0.05, 2: 0.2, 3: 0.8}
ENVELOPE_MAX_N = {1: 2 ** 16, 2: 1024, 3: 160}


def minimal_envelope_constant(values, radii, q):
    """Smallest C with |v| <= C exp(-r^q / C) at every sample.

    C exp(-a/C) is increasing in C, so each sample needs C >= a / W(a/|v|).
    """
    v = np.abs(values)
    a = radii ** q
    C = np.where(a == 0, v, 0.0)
    pos = (a > 0) & (v > 0)
    C[pos] = a[pos] / np.real(special.lambertw(a[pos] / v[pos]))
    return C


def derivative_envelope_check(profile: RadialKernelProfile, j: int, L0: float = 8.0,
                              h: float | None = None, enlargements: int = 4,
                              noise_floor: float = 1e-13) -> ConstantEstimate:
    """Estimate C in |d^alpha G_m(x,1)| <= C exp(-|x|^{2m/(2m-1)} / C).

    Derivatives come from the spectral multiplier (i xi)^alpha on periodic
    boxes of half-width L0 * 2^k at fixed spacing ``h``; the box stops
    growing once the grid would exceed the per-dimension size cap.  Samples
    below ``noise_floor`` times the maximum are round-off and are skipped.
    """
    if profile.kind.is_stable:
        raise ConfigError("derivative envelopes are for polyharmonic profiles")
    if j not in (0, 1, 2):
        raise ConfigError("derivative order must be 0, 1 or 2")
    m = int(profile.kind.order)
    N = profile.N
    q = 2 * m / (2 * m - 1)
    h = ENVELOPE_SPACING[N] if h is None else h
    history = []
    consistency = None
    for e in range(enlargements + 1):
        L = L0 * 2 ** e
        n = 2 * int(math.ceil(L / h))
        if n > ENVELOPE_MAX_N[N] and history:
            break
        rg = grid_radius(L, n, N)
        best = 0.0
        for alpha, d in spectral_derivatives(m, N, L, n, j):
            keep = np.abs(d) > noise_floor * np.abs(d).max()
            C = minimal_envelope_constant(d[keep], rg[keep], q)
            best = max(best, float(C.max()))
            if j == 0:
                inner = rg <= L / 2
                consistency = float(np.max(np.abs(d - profile(rg))[inner]))
        history.append((n ** N, best))
    est = ConstantEstimate(history, info={"j": j, "spacing": h,
                                          "profile_vs_spectral": consistency})
    growth = [history[i + 1][1] > history[i][1] * 1.02 for i in range(len(history) - 1)]
    if len(growth) >= 3 and all(growth[-3:]):
        raise EstimateDiverging(f"envelope constant keeps growing: {history}")
    return est
