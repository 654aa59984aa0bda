import numpy as np
import pytest

from wavepinn.core import DomainSpec, GaussianSource

# (name, passed, detail) rows appended by test_acceptance.py; echoed as a
# terminal section so the verdict survives pytest's output capture
ACCEPTANCE_RESULTS: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, ok, detail in ACCEPTANCE_RESULTS:
            verdict = "PASS" if ok else "FAIL"
            terminalreporter.write_line(f"{name} {verdict}: {detail}")
from wavepinn.material import (
    FrequencyBand,
    PorousLayer,
    miki_surface_impedance,
    normalize_material,
    vector_fit,
)


@pytest.fixture(scope="session")
def domain():
    return DomainSpec()


@pytest.fixture(scope="session")
def source():
    return GaussianSource(x0=0.0, sigma0=0.2)


@pytest.fixture(scope="session")
def paper_material_fit():
    """Rational admittance fitted to the 10 cm / 8000 Ns/m4 porous layer.

    Session-scoped: the fit is deterministic and shared by the material,
    losses, reference, CLI, and acceptance tests.
    """
    layer = PorousLayer(d_mat=0.10, sigma_mat=8000.0)
    band = FrequencyBand(20.0, 1000.0, 200)
    layer_n, band_n = normalize_material(layer, band, 343.0)
    f = band_n.frequencies()
    y = 1.0 / miki_surface_impedance(f, layer_n)
    fit = vector_fit(f, y, q=2, s=1, iterations=40, weights=1.0 / np.abs(y))
    return fit, band_n, layer_n
