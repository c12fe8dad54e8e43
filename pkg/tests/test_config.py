import numpy as np
import pytest

from polyheat.config import RunConfig
from polyheat.errors import ConfigError


def test_text_round_trip_and_hash():
    cfg = RunConfig.from_pairs([("p", "3"), ("T", "0.5"), ("data.kind", "dirac"), ("data.mass", "2")])
    back = RunConfig.from_text(cfg.to_text())
    assert back == cfg and back.hash() == cfg.hash()
    assert cfg.p == 3.0 and dict(cfg.data) == {"kind": "dirac", "mass": "2.0"}


def test_hash_ignores_locations_and_number_spelling():
    a = RunConfig.from_pairs([("tol", "1e-6"), ("data.kind", "dirac"), ("data.mass", "1")])
    b = RunConfig.from_pairs([("tol", "0.000001"), ("data.kind", "dirac"), ("data.mass", "1.0"),
                              ("output_dir", "elsewhere"), ("cache_dir", "/tmp/x")])
    assert a.hash() == b.hash()
    assert a.hash() != RunConfig.from_pairs([("tol", "1e-7")]).hash()


def test_comments_and_new_data_kind():
    base = RunConfig.from_text("data.kind=dirac  # point mass\ndata.mass=3\n\n")
    cfg = RunConfig.from_text("data.kind=constant\ndata.c=0.5", base)
    assert dict(cfg.data) == {"kind": "constant", "c": "0.5"}
    assert cfg.initial_data().kind == "POWER"


def test_data_spec_parsing():
    pairs = RunConfig.parse_data_spec("kind=atoms atoms=0:1;0.5:2")
    mu = RunConfig.from_pairs(pairs).initial_data()
    assert mu.is_atomic and mu.total_mass() == pytest.approx(3.0)
    with pytest.raises(ConfigError):
        RunConfig.parse_data_spec("mass=1")
    with pytest.raises(ConfigError):
        RunConfig.parse_data_spec("kind")


def test_gaussian_data_on_grid():
    cfg = RunConfig.from_pairs([("L", "8"), ("n", "64"), ("data.kind", "gaussian"),
                                ("data.c", "2"), ("data.width", "0.5")])
    g = cfg.initial_data().grid
    assert g.values.max() == pytest.approx(2.0)
    assert g.integral() == pytest.approx(2 * 0.5 * np.sqrt(np.pi), rel=1e-10)


@pytest.mark.parametrize("pairs", [
    [("N", "0")],
    [("m", "0")],
    [("p", "1")],
    [("n", "100")],
    [("L", "-1")],
    [("weight_mode", "U_FOO")],
    [("weight_mode", "U_ALPHA"), ("alpha", "3")],
    [("L_orlicz", "2")],
    [("R_list", "0.5,2")],
    [("sweep_eps", "0.1,0.2")],
    [("x0", "0,0")],
    [("data.kind", "blob")],
    [("data.kind", "dirac"), ("data.c", "1")],
    [("bogus", "1")],
    [("n", "many")],
    [("force", "maybe")],
    [("gamma2", "0")],
])
def test_validation_errors(pairs):
    with pytest.raises(ConfigError):
        RunConfig.from_pairs(pairs)


def test_malformed_text():
    with pytest.raises(ConfigError):
        RunConfig.from_text("p 2")


def test_picard_overrides():
    cfg = RunConfig.from_pairs([("T", "2"), ("n", "64")])
    pc = cfg.picard(T=0.5)
    assert pc.T == 0.5 and pc.n == 64 and pc.beta is None
