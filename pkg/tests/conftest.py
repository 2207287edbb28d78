import math

import numpy as np
import pytest

from vortexdiv.spectrum import ModeSpectrum

E0 = 1.0 - math.exp(-1.0)


def random_spectrum(rng, n_modes, n_max=10, ell_max=10, ells=None, real=False):
    """Spectrum with ``n_modes`` distinct random modes and normal coefficients."""
    coeffs = {}
    while len(coeffs) < n_modes:
        n = int(rng.integers(0, n_max + 1))
        ell = int(rng.choice(ells)) if ells is not None else int(rng.integers(-ell_max, ell_max + 1))
        re = rng.standard_normal()
        coeffs[(n, ell)] = complex(re, 0.0 if real else rng.standard_normal())
    return ModeSpectrum(coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
