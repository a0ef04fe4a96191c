import math

import numpy as np
import pytest

from filament_waves import lyapunov_schmidt as ls
from filament_waves import traveling as tr
from filament_waves.errors import DegenerateFrequency

CFG = tr.TravelConfig(N=24)


def test_nu0_examples():
    assert tr.nu0(2.0, 0) == pytest.approx(math.sqrt(5) / 2, abs=1e-15)
    assert tr.nu0(2.0, 1) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    with pytest.raises(DegenerateFrequency):
        tr.nu0(1.0, 1)
    with pytest.raises(DegenerateFrequency):
        tr.nu0(0.5, 1)


@pytest.mark.parametrize("l", [0, 1])
def test_jacobian_at_zero_is_the_linear_spectrum(l):
    a, nu = 2.0, tr.nu0(2.0, l)
    jac = tr.galerkin_jacobian(np.zeros((2, 9)), nu, a, tr.TravelConfig(N=8))
    assert np.max(np.abs(jac - np.diag(np.diag(jac)))) == 0
    c = tr.active_component(l)
    j = np.arange(9)
    active = np.diag(jac).reshape(2, 9)[c]
    np.testing.assert_allclose(active, j * j - nu * nu + (-1) ** l / a**2, atol=1e-13)
    assert active[1] == pytest.approx(0, abs=1e-15)


def test_jacobian_matches_difference_quotient():
    rng = np.random.default_rng(0)
    U = rng.normal(size=(2, 13)) * 0.02 / np.arange(1, 14) ** 2
    cfg = tr.TravelConfig(N=12, chop_rel=0.0)
    jac = tr.galerkin_jacobian(U, 1.1, 2.0, cfg)
    h = 1e-7
    fd = np.zeros_like(jac)
    for i in range(U.size):
        e = np.zeros(U.size)
        e[i] = h
        e = e.reshape(U.shape)
        fd[:, i] = ((tr.galerkin_residual(U + e, 1.1, 2.0, cfg)
                     - tr.galerkin_residual(U - e, 1.1, 2.0, cfg)) / (2 * h)).ravel()
    rows = np.ones(U.shape, bool)
    rows[:, 0] = False
    assert np.max(np.abs(jac - fd)[rows.ravel()]) < 1e-8


def test_zero_amplitude_profile():
    pt = tr.solve_profile(0.0, 2.0, 0, CFG)
    assert pt.nu == tr.nu0(2.0, 0) and not np.any(pt.cos_coeffs)
    assert tr.travel_residual(pt) == 0


@pytest.mark.parametrize("l", [0, 1])
def test_branch_scaling_and_leading_order(l):
    grid = [0, 0.0125, 0.025, 0.05, 0.1]
    profiles = tr.solve_travel_branch(2.0, l, grid, CFG)
    nu0 = tr.nu0(2.0, l)
    slope = ls.fit_exponent(grid, [abs(p.nu - nu0) for p in profiles])
    assert 1.8 <= slope <= 2.2
    assert max(p.residual for p in profiles) < 1e-10
    pt = profiles[3]
    xi = np.linspace(0, 2 * np.pi, 101)
    dev = pt.evaluate(xi)
    dev[tr.active_component(l)] -= pt.b * np.cos(xi)
    assert np.max(np.abs(dev)) < pt.b**2


@pytest.mark.parametrize("l", [0, 1])
def test_profile_respects_isotropy(l):
    pt = tr.solve_profile(0.1, 2.0, l, CFG)
    assert np.all(pt.cos_coeffs[~tr.fix_mask(l, CFG.N)] == 0)
    if l == 1:
        assert not np.any(pt.cos_coeffs[1])


def test_residual_decays_spectrally_before_roundoff():
    res = [tr.solve_profile(0.1, 2.0, 0, CFG.replace(N=n)).residual for n in (4, 6, 8)]
    assert res[0] > 100 * res[1] > 100 * 100 * res[2]


def test_embedding_solves_first_order_system():
    pt = tr.solve_profile(0.05, 2.0, 0, CFG)
    K = 32
    w1, w2, drift = tr.embed_profile(pt, K)
    k = np.arange(-K, K + 1)
    # d_t w1 from translation against i d_s^2 w2 from the equation
    np.testing.assert_allclose(1j * k * pt.nu * w1, -1j * k**2 * w2, atol=1e-13)
    assert drift.real == pytest.approx(0, abs=1e-14)
    with pytest.raises(ValueError):
        tr.embed_profile(pt, 4)
