"""Problem parameters and small shared value types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError


def unit_ball_volume(N: int) -> float:
    """Lebesgue measure of the unit ball in R^N."""
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1} (2 for N=1)."""
    return 2 * math.pi ** (N / 2) / math.gamma(N / 2)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``N``, order ``m``, exponent ``p`` and stable index ``theta``.

    ``m = 1`` is accepted so the classical heat kernel can serve as an
    analytic oracle; the equations of interest have ``m >= 2``.
    """

    N: int
    m: int
    p: float = 2.0
    theta: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N}")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m}")
        if not self.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.p}")
        if not 0 < self.theta < 2:
            raise ConfigError(f"theta must lie in (0, 2), got {self.theta}")

    def p_m(self) -> float:
        return 1 + 2 * self.m / self.N

    def scaling_exponent_space(self) -> float:
        return 1 / (2 * self.m)

    def scaling_exponent_amplitude(self) -> float:
        return 1 / (self.p - 1)

    def regime(self, rtol: float = 1e-12) -> str:
        """'SUBCRITICAL', 'CRITICAL' or 'SUPERCRITICAL' relative to p_m."""
        pm = self.p_m()
        if math.isclose(self.p, pm, rel_tol=rtol, abs_tol=0.0):
            return "CRITICAL"
        return "SUBCRITICAL" if self.p < pm else "SUPERCRITICAL"

    def is_critical(self) -> bool:
        return self.regime() == "CRITICAL"


@dataclass
class ConstantEstimate:
    """A numerically estimated constant with its refinement record.

    ``refinement_history`` holds ``(grid_size, estimate)`` pairs in the order
    they were computed; ``value`` is always the last estimate and
    ``saturated`` says whether the last two agree within ``rel_tol``.
    """

    refinement_history: list[tuple[int, float]]
    rel_tol: float = 0.02
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.refinement_history:
            raise ValueError("refinement history must be nonempty")

    @property
    def value(self) -> float:
        return self.refinement_history[-1][1]

    @property
    def saturated(self) -> bool:
        if len(self.refinement_history) < 2:
            return False
        a = self.refinement_history[-2][1]
        b = self.refinement_history[-1][1]
        return abs(b - a) <= self.rel_tol * max(abs(a), abs(b))
