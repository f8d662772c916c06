import math

import numpy as np
import pytest
from scipy import integrate

from movingwall.boundary import BoundaryMotion, Regime
from movingwall.fv import Grid
from movingwall.profiles import make_profile, physical_approximant

CASES = [(1.0, 0.0, 1.0, 1.0), (2.0, 0.25, 0.5, 3.0), (2.0, 0.5, 1.0, 1.0), (0.7, 0.5, 2.0, 0.4),
         (1.0, 0.75, 1.0, 1.0), (1.0, 1.0, 1.0, 1.0), (3.0, 1.0, 0.5, 2.0)]


def test_amplitude_examples():
    assert make_profile(1.0, 1.0, 1.0, 1.0).W0 == pytest.approx(1.0, rel=1e-15)
    assert make_profile(1.0, 0.0, 1.0, 1.0).W0 == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    raw, _ = integrate.quad(lambda y: math.exp(-y * y / 4 - y), 0, math.inf, epsabs=1e-14, epsrel=1e-14)
    W = make_profile(2.0, 0.5, 1.0, 1.0)
    assert W.W0 == pytest.approx(1 / raw, rel=1e-12)
    assert W.W0 == pytest.approx(1.3194, abs=1e-4)


def test_rejects_nonpositive_mass_and_negative_y():
    with pytest.raises(ValueError):
        make_profile(1.0, 0.5, 1.0, 0.0)
    with pytest.raises(ValueError):
        make_profile(1.0, 0.5, 1.0, 1.0).eval(-0.1)


def test_eval_examples():
    W = make_profile(1.0, 1.0, 1.0, 1.0)
    assert W.eval(0.0) == pytest.approx(W.W0, rel=1e-15)
    assert W.eval(1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    sub = make_profile(1.5, 0.25, 0.8, 1.0)
    crit = make_profile(1.5, 0.5, 0.8, 1.0)
    y = np.linspace(0.0, 5.0, 11)
    np.testing.assert_allclose(crit.eval(y), sub.eval(y) * np.exp(-1.5 * y / 1.6) * crit.W0 / sub.W0, rtol=1e-14)


@pytest.mark.parametrize("c,beta,d,M", CASES)
def test_mass_by_quadrature(c, beta, d, M):
    W = make_profile(c, beta, d, M)
    ymax = 30.0 * max(math.sqrt(d), d / (c * beta) if beta > 0 else 0.0)
    body, _ = integrate.quad(W.eval, 0.0, ymax, epsabs=1e-14, epsrel=1e-13, limit=500)
    assert body + W.tail_mass(ymax) == pytest.approx(M, rel=1e-10)
    assert W.tail_mass(0.0) == pytest.approx(M, rel=1e-13)


@pytest.mark.parametrize("c,beta,d,M", CASES)
def test_stationary_equation_residual(c, beta, d, M):
    W = make_profile(c, beta, d, M)
    D = W.diffusivity
    y = np.linspace(0.05, 6.0, 60)
    h = 1e-4
    flux = lambda q: D * (W.eval(q + h) - W.eval(q - h)) / (2 * h) + W.potential_slope(q) * W.eval(q)
    # zero flux everywhere, and hence zero divergence
    scale = np.abs(W.potential_slope(y) * W.eval(y)) + 1e-300
    assert np.max(np.abs(flux(y)) / scale) <= 1e-6
    div = (flux(y + 1e-3) - flux(y - 1e-3)) / 2e-3
    assert np.max(np.abs(div)) <= 1e-6 * W.W0
    assert abs(D * (W.eval(h) - W.eval(0.0)) / h + W.potential_slope(0.0) * W.eval(0.0)) <= 1e-3 * W.W0


@pytest.mark.parametrize("c,beta,d,M", CASES)
def test_strictly_decreasing(c, beta, d, M):
    W = make_profile(c, beta, d, M)
    v = W.eval(np.linspace(0.0, 10.0, 1000))
    assert np.all(np.diff(v) < 0)


def test_regime_tags_and_first_moment():
    assert make_profile(1.0, 0.2, 1.0, 1.0).regime is Regime.SUB_CRITICAL
    assert make_profile(1.0, 0.5, 1.0, 1.0).regime is Regime.CRITICAL
    assert make_profile(1.0, 0.6, 1.0, 1.0).regime is Regime.SUPER_CRITICAL
    for c, beta, d, M in CASES:
        W = make_profile(c, beta, d, M)
        m1, _ = integrate.quad(lambda y: y * W.eval(y), 0.0, math.inf, epsabs=1e-13, epsrel=1e-12)
        assert W.first_moment() == pytest.approx(m1, rel=1e-9)


def test_cell_integrals_and_tabulation():
    W = make_profile(1.3, 0.5, 0.9, 2.0)
    grid = Grid(400, 20.0)
    cells = W.cell_integrals(grid.edges)
    assert cells.sum() + W.tail_mass(20.0) == pytest.approx(2.0, rel=1e-13)
    tab = W.tabulate(grid)
    assert grid.h * tab.sum() == pytest.approx(cells.sum(), rel=1e-13)
    # midpoint samples differ from cell averages at second order
    assert grid.h * np.abs(tab - cells / grid.h).sum() <= grid.h ** 2


def test_physical_approximant():
    lin = BoundaryMotion(1.0, 1.0)
    W = make_profile(1.0, 1.0, 1.0, 1.0)
    x = np.linspace(0.0, 5.0, 11)
    for t in (0.0, 3.0, 100.0):
        np.testing.assert_allclose(physical_approximant(W, lin, t, x), np.exp(-x), rtol=1e-14)
    sub = BoundaryMotion(1.0, 0.0)
    W0 = make_profile(1.0, 0.0, 1.0, 1.0)
    assert physical_approximant(W0, sub, 3.0, 0.0) == pytest.approx(W0.W0 / 2, rel=1e-15)
    for beta in (0.0, 0.25, 0.5, 0.75):
        bm = BoundaryMotion(1.0, beta)
        Wb = make_profile(1.0, beta, 1.0, 1.0)
        for t in (0.0, 10.0, 1000.0):
            m, _ = integrate.quad(lambda q: physical_approximant(Wb, bm, t, q), 0.0, math.inf, epsabs=1e-12)
            assert m == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ValueError):
        physical_approximant(W, lin, -1.0, 0.0)
