import os

import pytest

from polyheat import kernels
from polyheat.kernels import KernelKind, build_profile
from polyheat.majorant import MajorantSpec
from polyheat.params import ProblemParams


@pytest.fixture(scope="session", autouse=True)
def profile_cache(tmp_path_factory):
    """One shared on-disk profile cache for the whole run."""
    d = os.environ.get("POLYHEAT_CACHE") or str(tmp_path_factory.mktemp("profiles"))
    os.environ["POLYHEAT_CACHE"] = d
    return d


@pytest.fixture(scope="session")
def profile(profile_cache):
    def get(name, order, N):
        kind = KernelKind.polyharmonic(order) if name == "polyharmonic" else KernelKind.stable(order)
        return build_profile(kind, N)
    return get


@pytest.fixture(scope="session")
def spec(profile_cache):
    cache = {}

    def get(N, m, p=2.0, theta=1.0):
        key = (N, m, p, theta)
        if key not in cache:
            cache[key] = MajorantSpec.build(ProblemParams(N, m, p, theta))
        return cache[key]
    return get


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""
    def rec(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return rec


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
