import numpy as np
import pytest

from wickphase import catalog

# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{number:2d} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def oscillator():
    return catalog("harmonic_oscillator", {"omega": 1.0})


@pytest.fixture
def hyperbolic():
    return catalog("hyperbolic_1d", {"kappa": 1.0})


CATALOG_CASES = [
    ("harmonic_oscillator", {"omega": 1.0}),
    ("harmonic_oscillator", {"omega": 0.7, "n": 2}),
    ("hyperbolic_1d", {"kappa": 1.0}),
    ("inverted_oscillator", {"kappa": 0.8}),
    ("degenerate_hyperbolic", {"n": 2, "kappa": 1.0}),
    ("positive_definite", {}),
    ("loxodromic_2d", {"omega": 1.0, "kappa": 4.0}),
    ("loxodromic_2d", {"omega": 0.2, "kappa": 1.0}),
]
