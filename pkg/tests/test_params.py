import math

import pytest
from hypothesis import given, strategies as st

from polyheat.errors import ConfigError
from polyheat.params import ConstantEstimate, ProblemParams, sphere_area, unit_ball_volume


def test_ball_and_sphere():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@given(st.integers(1, 3), st.integers(1, 4))
def test_critical_exponent_and_regime(N, m):
    pm = 1 + 2 * m / N
    assert ProblemParams(N, m, pm).regime() == "CRITICAL"
    assert ProblemParams(N, m, pm * 0.99 if pm * 0.99 > 1 else 1.001).regime() == "SUBCRITICAL"
    assert ProblemParams(N, m, pm + 0.5).regime() == "SUPERCRITICAL"


@pytest.mark.parametrize("kw", [dict(N=0, m=2), dict(N=1, m=0), dict(N=1, m=2, p=1.0),
                                dict(N=1, m=2, theta=2.0), dict(N=1.5, m=2)])
def test_rejects_bad_params(kw):
    with pytest.raises(ConfigError):
        ProblemParams(**kw)


def test_constant_estimate_saturation():
    assert ConstantEstimate([(1, 1.0), (2, 1.01)]).saturated
    assert not ConstantEstimate([(1, 1.0), (2, 1.1)]).saturated
    assert ConstantEstimate([(1, 1.0), (2, 3.0)]).value == 3.0
    with pytest.raises(ValueError):
        ConstantEstimate([])
