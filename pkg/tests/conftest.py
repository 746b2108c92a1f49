import numpy as np
import pytest

from rotators.model import RotatorSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def quadratic():
    return RotatorSpec(1.0, 1.0, "quadratic")


@pytest.fixture(scope="session")
def cubic():
    return RotatorSpec(1.0, 1.0, [1.0, 0.5, 0.7, 0.2])


@pytest.fixture(scope="session")
def fund_plus():
    return RotatorSpec(1.0, 1.0, "fundamental+")


@pytest.fixture(scope="session")
def fund_minus():
    return RotatorSpec(1.0, 1.0, "fundamental-")


@pytest.fixture(scope="session", params=["quadratic", "cubic", "fundamental+", "fundamental-", "scaled"])
def any_spec(request):
    return {
        "quadratic": RotatorSpec(1.0, 1.0, "quadratic"),
        "cubic": RotatorSpec(1.0, 1.0, [1.0, 0.5, 0.7, 0.2]),
        "fundamental+": RotatorSpec(1.0, 1.0, "fundamental+"),
        "fundamental-": RotatorSpec(1.0, 1.0, "fundamental-"),
        "scaled": RotatorSpec(1.7, 0.6, "quadratic"),
    }[request.param]


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    def check(number, title, measurements):
        ok = all(bool(np.isfinite(v) and v < tol) for _, v, tol in measurements)
        worst = ", ".join(f"{label} {v:.3g} < {tol:g}" for label, v, tol in measurements)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} [{worst}]"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
