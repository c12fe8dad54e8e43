"""Radial Fourier inversion of e^{-|xi|^q} at t = 1.

For a radial symbol F(|xi|) the inverse transform (mass-one convention,
(2 pi)^{-N} in front of the N-dimensional integral) reduces to

    G(r) = (2 pi)^{-N/2} r^{1-N/2} int_0^inf J_{N/2-1}(r rho) F(rho) rho^{N/2} d rho.

Three evaluation routes are provided.

``line``     polyharmonic symbol, N in {1, 3}.  The 1-D cosine transform
             (and its r-derivative, which gives N = 3) is written as a
             full-line Fourier integral and the contour is shifted to the
             horizontal line through the dominant saddle of
             i r z - z^{2m}.  The integrand then no longer cancels, so the
             result is accurate relative to the decaying envelope.
``ray``      stable symbol, any N.  J is replaced by Re H^{(1)} and the
             contour is rotated onto a ray in the upper half plane, where
             H^{(1)} decays exponentially.
``plane``    polyharmonic symbol, N = 2, r >= 1.  J_0 is split into Hankel
             functions, the integral folded onto the full line and shifted
             to the saddle line as in ``line``.
``direct``   adaptive Gauss-Legendre on [0, P] with panels split at the
             zeros of J; absolute accuracy only.  Used for the polyharmonic
             kernel in N = 2 at r < 1 and as an independent cross-check.

All routes integrate with composite Gauss-Legendre and compare against a
refined rule (every panel halved); disagreement beyond ``tol`` raises
``QuadratureNonConvergence``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import QuadratureNonConvergence
from .params import sphere_area

GL_ORDER = 20
_LOG_CUT = 42.0  # integrand tails below e^{-42} relative are dropped


def _gl(order):
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(breaks, order):
    """Nodes and weights for per-row panel breakpoints, shape (rows, nb)."""
    x, w = _gl(order)
    a = breaks[:, :-1, None]
    b = breaks[:, 1:, None]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x
    weights = half * w
    rows = breaks.shape[0]
    return nodes.reshape(rows, -1), weights.reshape(rows, -1)


def _halve_panels(breaks):
    mid = 0.5 * (breaks[:, :-1] + breaks[:, 1:])
    out = np.empty((breaks.shape[0], 2 * breaks.shape[1] - 1), dtype=breaks.dtype)
    out[:, 0::2] = breaks
    out[:, 1::2] = mid
    return out


def _integrate_refined(func, breaks, tol, what):
    """Integrate ``func`` on each row's panels at two resolutions."""
    nodes, weights = _panel_nodes(breaks, GL_ORDER)
    coarse = np.sum(func(nodes) * weights, axis=1)
    nodes, weights = _panel_nodes(_halve_panels(breaks), GL_ORDER)
    fine = np.sum(func(nodes) * weights, axis=1)
    err = np.abs(fine - coarse)
    return fine, err


def value_at_origin(N: int, q: float) -> float:
    """G(0) = (2 pi)^{-N} |S^{N-1}| Gamma(N/q) / q."""
    return (2 * math.pi) ** (-N) * sphere_area(N) * math.gamma(N / q) / q


# ---------------------------------------------------------------------------
# polyharmonic, shifted line (N = 1, 3)

def _saddle(r, m):
    ang = math.pi / (2 * (2 * m - 1))
    return (r / (2 * m)) ** (1.0 / (2 * m - 1)) * np.exp(1j * ang)


def polyharmonic_line(radii, m: int, N: int, tol: float = 1e-11, chunk: int = 64):
    """G_m(r, 1) for r > 0 and N in {1, 3} on the saddle-shifted line.

    Returns (values, error_estimates); the error estimate is absolute.
    """
    if N not in (1, 3):
        raise ValueError("line route covers N = 1 and N = 3 only")
    radii = np.asarray(radii, dtype=float)
    k = 0 if N == 1 else 1
    out = np.empty_like(radii)
    err = np.empty_like(radii)
    for lo in range(0, radii.size, chunk):
        r = radii[lo:lo + chunk]
        zs = _saddle(r, m)
        c = zs.imag
        log_env = np.real(1j * r * zs - zs ** (2 * m))

        def logmag(rho):
            z = rho + 1j * c[:, None]
            return np.real(1j * r[:, None] * z - z ** (2 * m)) - log_env[:, None] \
                + k * np.log(np.abs(z) + 1e-300)

        # upper limit: first point past the saddle where the integrand is negligible
        B = np.maximum(2.0 * np.abs(zs), 1.0)
        for _ in range(200):
            bad = logmag(B[:, None])[:, 0] > -_LOG_CUT
            if not bad.any():
                break
            B = np.where(bad, B * 1.15, B)
        # panels: enough to resolve the residual phase along the line
        phase_rate = r + 2 * m * (B + c) ** (2 * m - 1)
        n_pan = int(np.clip(np.max(np.ceil(B * phase_rate / (2 * math.pi))) + 16, 16, 4096))
        t = np.linspace(0.0, 1.0, n_pan + 1)
        breaks = B[:, None] * t[None, :]

        def f(rho):
            z = rho + 1j * c[:, None]
            expo = 1j * r[:, None] * z - z ** (2 * m) - log_env[:, None]
            val = np.exp(expo)
            if k:
                val = val * (1j * z)
            return val.real

        integ, e = _integrate_refined(f, breaks, tol, "line")
        scale = np.exp(log_env) / math.pi
        if k == 0:
            out[lo:lo + chunk] = integ * scale
            err[lo:lo + chunk] = e * scale
        else:
            fac = -scale / (2 * math.pi * r)
            out[lo:lo + chunk] = integ * fac
            err[lo:lo + chunk] = e * np.abs(fac)
        bad = e > tol * np.maximum(1.0, np.abs(integ))
        if bad.any():
            raise QuadratureNonConvergence(
                f"shifted-line quadrature did not settle at r={r[bad][0]:.4g} "
                f"(refinement change {e[bad][0]:.3g})")
    return out, err


def polyharmonic_plane(radii, m: int, tol: float = 1e-11, chunk: int = 64):
    """G_m(r, 1) for N = 2 on the saddle-shifted line.

    With J_0 = (H^(1)_0 + H^(2)_0) / 2 and the symmetry of the even symbol,
    int_0^inf J_0(r rho) F(rho) rho d rho = 1/2 int_R H^(1)_0(r z) F(z) z dz
    along a path above the branch cut; the path is moved to the horizontal
    line through the saddle of i r z - z^{2m}.  Meant for r >~ 1, where
    the saddle height keeps r z away from the logarithmic point at 0.
    """
    radii = np.asarray(radii, dtype=float)
    out = np.empty_like(radii)
    err = np.empty_like(radii)
    for lo in range(0, radii.size, chunk):
        r = radii[lo:lo + chunk]
        zs = _saddle(r, m)
        c = zs.imag
        log_env = np.real(1j * r * zs - zs ** (2 * m))

        def logmag(rho):
            z = rho + 1j * c[:, None]
            return np.real(1j * r[:, None] * z - z ** (2 * m)) - log_env[:, None] \
                + np.log(np.abs(z) + 1e-300)

        B = np.maximum(2.0 * np.abs(zs), 1.0)
        for _ in range(200):
            bad = logmag(B[:, None])[:, 0] > -_LOG_CUT
            if not bad.any():
                break
            B = np.where(bad, B * 1.15, B)
        # panels: total phase of i r z - z^{2m} along [-B, B], two panels per turn
        u = np.linspace(-1.0, 1.0, 2001)
        zz = B[:, None] * u[None, :] + 1j * c[:, None]
        dphase = np.abs(r[:, None] - np.imag(2 * m * zz ** (2 * m - 1)))
        turns = np.sum(dphase[:, 1:] + dphase[:, :-1], axis=1) * (B / 2000) / (2 * math.pi)
        n_pan = int(np.clip(np.max(np.ceil(2 * turns)) + 32, 32, 8192))
        t = np.linspace(-1.0, 1.0, n_pan + 1)
        breaks = B[:, None] * t[None, :]

        def f(rho):
            z = rho + 1j * c[:, None]
            w = r[:, None] * z
            expo = 1j * w - z ** (2 * m) - log_env[:, None]
            return (special.hankel1e(0, w) * np.exp(expo) * z).real

        integ, e = _integrate_refined(f, breaks, tol, "plane")
        scale = np.exp(log_env) / (4 * math.pi)
        out[lo:lo + chunk] = integ * scale
        err[lo:lo + chunk] = e * scale
        bad = e > tol * np.maximum(1.0, np.abs(integ))
        if bad.any():
            raise QuadratureNonConvergence(
                f"shifted-line quadrature did not settle at r={r[bad][0]:.4g} "
                f"(refinement change {e[bad][0]:.3g})")
    return out, err


# ---------------------------------------------------------------------------
# stable, rotated ray with Hankel functions (any N)

def _hankel_factor(N, w):
    """H^{(1)}_{N/2-1}(w) for complex w."""
    if N == 1:
        return np.sqrt(2 / (np.pi * w)) * np.exp(1j * w)
    if N == 3:
        return -1j * np.sqrt(2 / (np.pi * w)) * np.exp(1j * w)
    return special.hankel1(N / 2 - 1, w)


def stable_ray_angle(theta: float) -> float:
    return 0.8 * min(math.pi / 2, math.pi / (2 * theta))


def stable_ray(radii, theta: float, N: int, tol: float = 1e-11,
               panels_per_decade: int = 16, decades: float = 15.0, chunk: int = 64):
    """G_theta(r, 1) for r > 0 via the rotated Hankel representation."""
    radii = np.asarray(radii, dtype=float)
    phi = stable_ray_angle(theta)
    e_phi = np.exp(1j * phi)
    dr = math.sin(phi)
    dth = math.cos(theta * phi)
    nu_fac = (2 * math.pi) ** (-N / 2)
    out = np.empty_like(radii)
    err = np.empty_like(radii)
    n_pan = int(math.ceil(decades * panels_per_decade))
    for lo in range(0, radii.size, chunk):
        r = radii[lo:lo + chunk]
        # s_hi solves r s sin(phi) + s^theta cos(theta phi) = cut
        a, b = np.full_like(r, 1e-30), np.full_like(r, 1e12)
        for _ in range(200):
            mid = np.sqrt(a * b)
            g = r * mid * dr + mid ** theta * dth
            a = np.where(g < _LOG_CUT, mid, a)
            b = np.where(g < _LOG_CUT, b, mid)
        s_hi = b
        rel = np.geomspace(10.0 ** (-decades), 1.0, n_pan)
        breaks = np.concatenate([np.zeros((r.size, 1)), s_hi[:, None] * rel[None, :]], axis=1)

        def f(s):
            z = s * e_phi
            h = _hankel_factor(N, r[:, None] * z)
            val = h * np.exp(-z ** theta) * z ** (N / 2) * e_phi
            return val.real

        integ, e = _integrate_refined(f, breaks, tol, "ray")
        pref = nu_fac * r ** (1 - N / 2)
        out[lo:lo + chunk] = pref * integ
        err[lo:lo + chunk] = pref * e
        # scale of the integrand: |H(r s)| s^{N/2} ~ r^{-1/2} s^{(N-1)/2} over s <~ 1/r
        mag = np.maximum(np.abs(integ), 1e-300)
        bad = e > tol * np.maximum(mag, 1e-3 * np.abs(integ).max())
        if bad.any():
            raise QuadratureNonConvergence(
                f"rotated-ray quadrature did not settle at r={r[bad][0]:.4g}")
    return out, err


# ---------------------------------------------------------------------------
# direct Bessel quadrature with zero-aligned panels

def _bessel_zeros(nu, upto):
    """Positive zeros of J_nu below ``upto`` (nu in {-1/2, 0, 1/2})."""
    if upto <= 0:
        return np.empty(0)
    if nu == -0.5:
        z = (np.arange(1, int(upto / math.pi) + 2) - 0.5) * math.pi
    elif nu == 0.5:
        z = np.arange(1, int(upto / math.pi) + 2) * math.pi
    else:
        n = int(upto / math.pi) + 2
        z = special.jn_zeros(int(nu), n)
    return z[z < upto]


def direct(radii, symbol_exponent: float, N: int, tol: float = 1e-12,
           max_oscillations: int = 20000):
    """Adaptive panel Gauss-Legendre of the Bessel integral (absolute accuracy)."""
    q = symbol_exponent
    nu = N / 2 - 1
    P = _LOG_CUT ** (1.0 / q)
    out = np.empty(len(radii))
    err = np.empty(len(radii))
    base = np.concatenate([[0.0], np.geomspace(P * 1e-12, P, 48)])
    for i, r in enumerate(np.asarray(radii, dtype=float)):
        if r == 0.0:
            out[i] = value_at_origin(N, q)
            err[i] = 0.0
            continue
        zeros = _bessel_zeros(nu, r * P) / r
        if zeros.size > max_oscillations:
            raise QuadratureNonConvergence(
                f"direct route needs {zeros.size} oscillation panels at r={r:.4g}")
        br = np.unique(np.concatenate([base, zeros, np.linspace(0, P, 33)]))[None, :]

        def f(rho):
            return special.jv(nu, r * rho) * np.exp(-rho ** q) * rho ** (N / 2)

        integ, e = _integrate_refined(f, br, tol, "direct")
        pref = (2 * math.pi) ** (-N / 2) * r ** (1 - N / 2)
        out[i] = pref * integ[0]
        err[i] = pref * e[0]
        if err[i] > tol * max(1.0, abs(out[i])):
            raise QuadratureNonConvergence(f"direct quadrature did not settle at r={r:.4g}")
    return out, err
