"""Grid fields on periodic boxes and initial data (measures) on R^N."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NonSigmaFinite, PointwiseUnavailable
from .params import unit_ball_volume


@dataclass(frozen=True, eq=False)
class GridField:
    """Real values on the n^N grid x_j = -L + j*2L/n of the box [-L, L)^N."""

    N: int
    L: float
    n: int
    values: np.ndarray
    time_tag: float | None = None

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise ConfigError(f"n must be a power of two >= 16, got {self.n}")
        if not self.L > 0:
            raise ConfigError("L must be positive")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n,) * self.N:
            v = v.reshape((self.n,) * self.N)
        if not np.all(np.isfinite(v)):
            raise ConfigError("grid values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return 2 * self.L / self.n

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    def coords(self):
        return np.meshgrid(*([self.axis()] * self.N), indexing="ij")

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords()))

    def with_values(self, values, time_tag=None) -> "GridField":
        return GridField(self.N, self.L, self.n, values, time_tag)

    def integral(self) -> float:
        return float(self.values.sum() * self.h ** self.N)

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def interpolate(self, points) -> np.ndarray:
        """Trigonometric interpolation at arbitrary points (last axis = coordinates)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.N)
        coef = np.fft.fftn(self.values) / self.n ** self.N
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        nyq = self.n // 2
        out = np.empty(pts.shape[0])
        for i, x in enumerate(pts):
            term = coef
            for ax in range(self.N):
                arg = np.pi * (x[ax] + self.L) / self.L
                e = np.exp(1j * k * arg)
                e[nyq] = np.cos(nyq * arg)  # split Nyquist mode keeps the interpolant real
                term = np.tensordot(e, term, axes=([0], [0]))
            out[i] = np.real(term)
        return out

    # ----- text file: header lines "N", "L", "n", then row-major values
    def save(self, path) -> None:
        path = Path(path)
        with open(path, "w") as fh:
            fh.write(f"N {self.N}\nL {self.L!r}\nn {self.n}\n")
            if self.time_tag is not None:
                fh.write(f"t {self.time_tag!r}\n")
            np.savetxt(fh, self.values.reshape(-1), fmt="%.17g")

    @classmethod
    def load(cls, path) -> "GridField":
        head = {}
        with open(path) as fh:
            while True:
                pos = fh.tell()
                line = fh.readline()
                parts = line.split()
                if len(parts) == 2 and parts[0] in ("N", "L", "n", "t"):
                    head[parts[0]] = parts[1]
                    continue
                fh.seek(pos)
                break
            vals = np.loadtxt(fh, ndmin=1)
        try:
            N, L, n = int(head["N"]), float(head["L"]), int(head["n"])
        except KeyError as exc:
            raise ConfigError(f"grid file {path} lacks header field {exc}") from None
        if vals.size != n ** N:
            raise ConfigError(f"grid file {path} holds {vals.size} values, expected {n ** N}")
        t = float(head["t"]) if "t" in head else None
        return cls(N, L, n, vals, t)


def grid_axis(L, n):
    return -L + (2 * L / n) * np.arange(n)


KINDS = ("DIRAC", "ATOMS", "POWER", "LOGPOWER", "GRID")


@dataclass(frozen=True, eq=False)
class InitialData:
    """Nonnegative initial datum on R^N.

    kinds and their parameters:

    * ``ATOMS``: ``atoms`` is a list of (point, mass); ``DIRAC`` is a single atom.
    * ``POWER``: density c |x|^{-a} on |x| <= cutoff (``cutoff=inf`` with
      ``a=0`` is the constant density c).
    * ``LOGPOWER``: density c |x|^{-a} log(e + 1/|x|)^{-b} on |x| <= cutoff.
    * ``GRID``: a sampled density ``grid`` (a GridField), zero outside its box.
    """

    kind: str
    N: int
    c: float = 0.0
    a: float = 0.0
    b: float = 0.0
    cutoff: float = 1.0
    atoms: tuple = ()
    grid: GridField | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown data kind {self.kind!r}")
        if self.N not in (1, 2, 3):
            raise ConfigError("initial data supports N = 1, 2, 3")
        if self.kind in ("POWER", "LOGPOWER"):
            if not self.c > 0:
                raise ConfigError("density coefficient c must be positive")
            if not self.cutoff > 0:
                raise ConfigError("cutoff must be positive")
            if self.a < 0:
                raise ConfigError("power a must be nonnegative")
            if math.isinf(self.cutoff) and (self.kind != "POWER" or self.a != 0):
                raise ConfigError("an infinite cutoff is only allowed for constant density")
        if self.kind in ("DIRAC", "ATOMS"):
            atoms = tuple((np.atleast_1d(np.asarray(x, dtype=float)), float(mass))
                          for x, mass in self.atoms)
            for x, mass in atoms:
                if x.shape != (self.N,):
                    raise ConfigError(f"atom location must have {self.N} coordinates")
                if mass < 0:
                    raise ConfigError("atom masses must be nonnegative")
            object.__setattr__(self, "atoms", atoms)
        if self.kind == "GRID":
            if self.grid is None or self.grid.N != self.N:
                raise ConfigError("GRID data needs a GridField of matching dimension")
            if np.any(self.grid.values < 0):
                raise ConfigError("grid density must be nonnegative")

    # ----- constructors
    @classmethod
    def dirac(cls, N, mass=1.0, location=None):
        x = np.zeros(N) if location is None else location
        if not mass > 0:
            raise ConfigError("Dirac mass must be positive")
        return cls("DIRAC", N, atoms=((x, mass),))

    @classmethod
    def atoms_of(cls, N, atoms):
        return cls("ATOMS", N, atoms=tuple(atoms))

    @classmethod
    def zero(cls, N):
        return cls("ATOMS", N, atoms=())

    @classmethod
    def power(cls, N, c, a, cutoff=1.0):
        return cls("POWER", N, c=float(c), a=float(a), cutoff=float(cutoff))

    @classmethod
    def constant(cls, N, c):
        return cls("POWER", N, c=float(c), a=0.0, cutoff=math.inf)

    @classmethod
    def logpower(cls, N, c, a, b, cutoff=1.0):
        return cls("LOGPOWER", N, c=float(c), a=float(a), b=float(b), cutoff=float(cutoff))

    @classmethod
    def from_grid(cls, grid: GridField):
        return cls("GRID", grid.N, grid=grid)

    # ----- properties
    @property
    def is_atomic(self) -> bool:
        return self.kind in ("DIRAC", "ATOMS")

    @property
    def is_radial(self) -> bool:
        return self.kind in ("POWER", "LOGPOWER")

    @property
    def is_zero(self) -> bool:
        if self.is_atomic:
            return all(mass == 0 for _, mass in self.atoms)
        if self.kind == "GRID":
            return not np.any(self.grid.values)
        return False

    @property
    def is_constant(self) -> bool:
        return self.kind == "POWER" and self.a == 0 and math.isinf(self.cutoff)

    @property
    def sigma_finite(self) -> bool:
        """False for radial profiles that are not locally integrable at 0."""
        if self.kind == "POWER":
            return self.a < self.N
        if self.kind == "LOGPOWER":
            return self.a < self.N or (self.a == self.N and self.b > 1)
        return True

    def require_measure(self):
        if not self.sigma_finite:
            raise NonSigmaFinite(f"{self.kind} profile with a={self.a} is not locally integrable")

    def total_mass(self) -> float:
        self.require_measure()
        if self.is_atomic:
            return float(sum(mass for _, mass in self.atoms))
        if self.kind == "GRID":
            return self.grid.integral()
        return self.radial_mass(self.cutoff)

    # ----- pointwise values
    def density(self, x) -> np.ndarray:
        """Density at points ``x`` (last axis = coordinates, or radii for N=1)."""
        if self.is_atomic:
            if self.is_zero:
                x = np.asarray(x, dtype=float)
                return np.zeros(x.shape[:-1] if x.ndim and x.shape[-1] == self.N and self.N > 1 else x.shape)
            raise PointwiseUnavailable("atomic data has no pointwise density")
        x = np.asarray(x, dtype=float)
        if self.kind == "GRID":
            pts = x.reshape(-1, self.N)
            return nearest_grid_values(self.grid, pts).reshape(pts.shape[:-1] if self.N > 1 else x.shape)
        if self.N == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            r = np.abs(x)
        else:
            r = np.sqrt(np.sum(x * x, axis=-1))
        return self.radial_density(r)

    def radial_density(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            v = self.c * np.where(r > 0, r, 0.0) ** (-self.a) if self.a else np.full(r.shape, self.c)
            if self.kind == "LOGPOWER":
                v = v * np.log(math.e + 1 / r) ** (-self.b)
        return np.where(r <= self.cutoff, v, 0.0)

    def radial_mass(self, r: float) -> float:
        """mu(B(0, r)) for radial profiles."""
        from .criteria import radial_ball_mass
        return radial_ball_mass(self, r)

    # ----- discretisation
    def sample(self, L: float, n: int) -> GridField:
        """Cell-consistent samples on the n^N grid of [-L, L)^N.

        Radial profiles take point values except at the origin node, which
        receives the mass of the ball with the cell's volume divided by the
        cell volume (finite even for singular profiles).  Atoms are deposited
        on their nearest node with weight mass / h^N.
        """
        self.require_measure()
        N = self.N
        h = 2 * L / n
        if self.kind == "GRID":
            g = self.grid
            if g.L == L and g.n == n:
                return g
            ax = grid_axis(L, n)
            pts = np.stack([c.reshape(-1) for c in np.meshgrid(*([ax] * N), indexing="ij")], axis=1)
            return GridField(N, L, n, nearest_grid_values(g, pts).reshape((n,) * N))
        if self.is_atomic:
            vals = np.zeros((n,) * N)
            for x, mass in self.atoms:
                idx = tuple(int(round((xi + L) / h)) % n for xi in x)
                vals[idx] += mass / h ** N
            return GridField(N, L, n, vals)
        ax = grid_axis(L, n)
        r = np.sqrt(sum(c * c for c in np.meshgrid(*([ax] * N), indexing="ij")))
        vals = self.radial_density(np.where(r > 0, r, 1.0))
        origin = (n // 2,) * N
        rho = (h ** N / unit_ball_volume(N)) ** (1 / N)
        vals[origin] = self.radial_mass(rho) / h ** N
        return GridField(N, L, n, vals)

    def scaled(self, T: float, params) -> "InitialData":
        """Datum of u_T(x, t) = T^{1/(p-1)} u(T^{1/2m} x, T t).

        As a density this is T^{1/(p-1)} mu(T^{1/2m} x), so ball masses obey
        mu_T(B(x, s)) = T^{1/(p-1) - N/2m} mu(B(T^{1/2m} x, T^{1/2m} s)).
        """
        from .criteria import scale_data
        return scale_data(self, T, params)


def nearest_grid_values(g: GridField, pts) -> np.ndarray:
    """Density of GRID data at points: nearest node inside the box, 0 outside."""
    pts = np.asarray(pts, dtype=float).reshape(-1, g.N)
    idx = np.rint((pts + g.L) / g.h).astype(int)
    inside = np.all((pts >= -g.L) & (pts < g.L), axis=1)
    idx = np.clip(idx, 0, g.n - 1)
    out = g.values[tuple(idx.T)]
    return np.where(inside, out, 0.0)
