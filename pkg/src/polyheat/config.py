"""Run configuration: plain key=value text with typed fields and a stable hash."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .criteria import (DEFAULT_GAMMA2, DEFAULT_GAMMA3, DEFAULT_GAMMA_ALPHA, DEFAULT_GAMMA_ORLICZ,
                       DEFAULT_GAMMA_SCAN, ClassifyConfig)
from .data import GridField, InitialData
from .errors import ConfigError
from .params import ProblemParams
from .solver import WEIGHT_MODES, PicardConfig

DATA_KINDS = ("zero", "dirac", "atoms", "power", "constant", "logpower", "gaussian", "grid")
_DATA_KEYS = {
    "zero": (),
    "dirac": ("mass", "x0"),
    "atoms": ("atoms",),
    "power": ("c", "a", "cutoff"),
    "constant": ("c",),
    "logpower": ("c", "a", "b", "cutoff"),
    "gaussian": ("c", "width"),
    "grid": ("file",),
}


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split()) if text.strip() else ()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return "" if v is None else str(v)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    N: int = 1
    m: int = 2
    p: float = 2.0
    theta: float = 1.0
    L: float = 16.0
    n: int = 256
    n_t: int = 128
    T: float = 1.0
    tol: float = 1e-8
    max_iter: int = 100
    force: bool = False
    weight_mode: str = "U_LINEAR"
    alpha: float | None = None
    beta: float = 0.1
    L_orlicz: float = math.e
    delta: float | None = None
    M: float | None = None
    gamma2: float = DEFAULT_GAMMA2
    gamma3: float = DEFAULT_GAMMA3
    gamma_alpha: float = DEFAULT_GAMMA_ALPHA
    gamma_orlicz: float = DEFAULT_GAMMA_ORLICZ
    gamma_scan: float = DEFAULT_GAMMA_SCAN
    data: tuple = (("kind", "zero"),)
    sweep_mass: float = 0.05
    sweep_eps: tuple = tuple(2.0 ** -k for k in range(1, 7))
    R_list: tuple = (0.5, 0.25, 0.125, 0.0625)
    x0: tuple = ()
    cache_dir: str = ""
    output_dir: str = "out"
    seed: int = 0
    snapshots: int = 33

    def __post_init__(self):
        self.problem()  # dimension, order, p and theta checks
        if not self.L > 0:
            raise ConfigError("L must be positive")
        if self.n < 16 or self.n & (self.n - 1):
            raise ConfigError("n must be a power of two, at least 16")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"weight_mode must be one of {WEIGHT_MODES}")
        for name in ("gamma2", "gamma3", "gamma_alpha", "gamma_orlicz", "gamma_scan", "beta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.weight_mode == "U_ALPHA" and (self.alpha is None or not 1 < self.alpha < self.p):
            raise ConfigError("U_ALPHA needs 1 < alpha < p")
        if self.L_orlicz < math.e:
            raise ConfigError("L_orlicz must be at least e")
        if any(not 0 < r <= 1 for r in self.R_list):
            raise ConfigError("R_list entries must lie in (0, 1]")
        if any(b >= a for a, b in zip(self.sweep_eps, self.sweep_eps[1:])):
            raise ConfigError("sweep_eps must be decreasing")
        if self.snapshots < 0:
            raise ConfigError("snapshots must be nonnegative")
        if self.x0 and len(self.x0) != self.N:
            raise ConfigError("x0 has the wrong dimension")
        d = dict(self.data)
        kind = d.get("kind")
        if kind not in DATA_KINDS:
            raise ConfigError(f"data kind must be one of {DATA_KINDS}")
        unknown = set(d) - {"kind"} - set(_DATA_KEYS[kind])
        if unknown:
            raise ConfigError(f"unknown data keys for {kind}: {sorted(unknown)}")
        self.picard()  # solver preconditions

    # --- conversions -----------------------------------------------------

    def problem(self) -> ProblemParams:
        return ProblemParams(self.N, self.m, self.p, self.theta)

    def picard(self, **over) -> PicardConfig:
        kw = dict(T=self.T, n_t=self.n_t, tol=self.tol, max_iter=self.max_iter,
                  weight_mode=self.weight_mode, alpha=self.alpha,
                  beta=self.beta if self.weight_mode == "U_ORLICZ" else None,
                  L_orlicz=self.L_orlicz, delta=self.delta, M=self.M, L=self.L, n=self.n,
                  seed=self.seed, force=self.force)
        kw.update(over)
        return PicardConfig(**kw)

    def classify_config(self) -> ClassifyConfig:
        return ClassifyConfig(gamma2=self.gamma2, gamma3=self.gamma3, gamma_scan=self.gamma_scan,
                              gamma_alpha=self.gamma_alpha, alpha=self.alpha,
                              gamma_orlicz=self.gamma_orlicz, beta=self.beta)

    def initial_data(self) -> InitialData:
        d = dict(self.data)
        kind, N = d["kind"], self.N
        g = lambda k, v: float(d.get(k, v))
        if kind == "zero":
            return InitialData.zero(N)
        if kind == "dirac":
            loc = _floats(d["x0"]) if "x0" in d else None
            return InitialData.dirac(N, g("mass", 1.0), loc)
        if kind == "atoms":
            atoms = []
            for item in d.get("atoms", "").split(";"):
                if item.strip():
                    pos, w = item.split(":")
                    atoms.append((np.array(_floats(pos)), float(w)))
            return InitialData.atoms_of(N, atoms)
        if kind == "power":
            return InitialData.power(N, g("c", 1.0), g("a", 0.0), g("cutoff", 1.0))
        if kind == "constant":
            return InitialData.constant(N, g("c", 1.0))
        if kind == "logpower":
            return InitialData.logpower(N, g("c", 1.0), g("a", float(N)), g("b", 2.0), g("cutoff", 0.5))
        if kind == "gaussian":
            grid = GridField(N, self.L, self.n, np.zeros((self.n,) * N))
            vals = g("c", 1.0) * np.exp(-(grid.radius() / g("width", 1.0)) ** 2)
            return InitialData.from_grid(grid.with_values(vals))
        grid = GridField.load(d["file"])
        if grid.N != N:
            raise ConfigError("grid file dimension differs from N")
        return InitialData.from_grid(grid)

    # --- text form -------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "data":
                for k, x in sorted(v):
                    lines.append(f"data.{k}={x}")
            else:
                lines.append(f"{f.name}={_fmt(v)}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        """sha256 prefix of the text form, without the location-only keys."""
        text = "".join(line + "\n" for line in self.to_text().splitlines()
                       if line.split("=", 1)[0] not in _LOCATION_KEYS)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_pairs(cls, pairs, base: "RunConfig | None" = None) -> "RunConfig":
        base = base or cls()
        types = {f.name: f for f in fields(cls)}
        kw = {}
        data_pairs = {}
        for key, value in pairs:
            key, value = key.strip(), value.strip()
            if key.startswith("data."):
                data_pairs[key[5:]] = _normalise_data_value(value)
                continue
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kw[key] = _parse_value(key, value, getattr(base, key))
        if data_pairs:
            data = dict(base.data)
            if data_pairs.get("kind", data["kind"]) != data["kind"]:
                data = {}  # a new kind starts from a clean parameter set
            data.update(data_pairs)
            kw["data"] = tuple(sorted(data.items()))
        try:
            return replace(base, **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        pairs = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got {raw!r}")
            k, v = line.split("=", 1)
            pairs.append((k, v))
        return cls.from_pairs(pairs, base)

    @staticmethod
    def parse_data_spec(spec: str) -> list:
        """'kind=dirac mass=1' -> [('data.kind', 'dirac'), ('data.mass', '1')]."""
        out = []
        for tok in spec.split():
            if "=" not in tok:
                raise ConfigError(f"data token {tok!r} is not key=value")
            k, v = tok.split("=", 1)
            out.append(("data." + k, v))
        if not any(k == "data.kind" for k, _ in out):
            raise ConfigError("data spec needs kind=...")
        return out


_LOCATION_KEYS = {"cache_dir", "output_dir"}
_INT = {"N", "m", "n", "n_t", "max_iter", "seed", "snapshots"}
_TUPLE = {"sweep_eps", "R_list", "x0"}
_OPTIONAL = {"alpha", "delta", "M"}


def _normalise_data_value(value: str) -> str:
    try:
        return repr(float(value))
    except ValueError:
        return value


def _parse_value(key, value, current):
    try:
        if key in _INT:
            return int(value)
        if key in _TUPLE:
            return _floats(value)
        if key == "force":
            return _bool(value)
        if key in _OPTIONAL:
            return None if value in ("", "none", "None") else float(value)
        if isinstance(current, float) or key in ("p", "theta", "L", "T", "tol", "beta", "L_orlicz"):
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
