import numpy as np
import pytest

from sllgs.magnet import MagnetParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def generic_params():
    """Tilted easy axis, unequal demag factors: no accidental symmetries."""
    return MagnetParams(Ms=8e5, Hk=2e5, alpha=0.1, volume=1e-24, temperature=300.0,
                        easy_axis=(0.0, 0.6, 0.8), demag=(0.2, 0.3, 0.5))


def random_unit(rng, n=None):
    shape = (3,) if n is None else (n, 3)
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
