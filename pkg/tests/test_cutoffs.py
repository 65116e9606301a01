import numpy as np
import pytest

from sgwave.cutoffs import CutoffPair, eta
from sgwave.spectral import Grid2


def test_eta_support_and_plateau():
    x = np.linspace(-6, 6, 12001)
    e = eta(x)
    assert np.all(e[np.abs(x) <= 2] == 1)
    assert np.all(e[np.abs(x) >= 4] == 0)
    np.testing.assert_array_equal(e, eta(-x))


def test_psi_has_unit_mass():
    cut = CutoffPair()
    x, w = cut.quadrature()
    assert np.sum(w * cut.psi(x)) == pytest.approx(1.0, abs=1e-14)
    # plateau of width 4 plus two symmetric transition halves gives mass 6
    assert cut.eta_mass == pytest.approx(6.0, abs=1e-6)


def test_scaled_cutoffs_and_window():
    cut = CutoffPair()
    assert cut.eta_T(0.5)(1.0) == 1.0 and cut.eta_T(0.5)(2.0) == 0.0
    g = Grid2(16.0, 128)
    w = cut.window(g, 0.5)
    a, b = g.mesh()
    assert np.all(w[(np.abs(a) >= 2) | (np.abs(b) >= 2)] == 0)
    assert np.all(w[(np.abs(a) <= 1) & (np.abs(b) <= 1)] == 1)
