from fractions import Fraction

import numpy as np
import pytest

from filament_waves import fourier
from filament_waves import lyapunov_schmidt as ls
from filament_waves.errors import BranchTruncated, ResonantSite, SingularSite
from filament_waves.fourier import FourierField
from filament_waves.lattice import RationalFrequency, bifurcation_site

SITE_A = bifurcation_site(RationalFrequency(1, 2), 1, 1, 0)
SITE_C = bifurcation_site(RationalFrequency(3, 2), 1, 1, 1)
CFG = ls.SolverConfig(J=24, K=24)


@pytest.fixture(scope="module")
def point_a():
    return ls.solve_branch_point(0.05, SITE_A.a0, SITE_A, CFG)


@pytest.fixture(scope="module")
def point_c():
    return ls.solve_branch_point(0.05, SITE_C.a0, SITE_C, CFG)


def test_config_validation():
    with pytest.raises(ValueError):
        ls.SolverConfig(s=4)
    with pytest.raises(ValueError):
        ls.SolverConfig(tol=0)
    with pytest.raises(ValueError):
        ls.SolverConfig(oversample=1)


def test_apply_L_matches_eigenvalues():
    u = FourierField.from_modes(4, 4, {(3, 1, 0): 1.0, (0, 2, 0): 1.0, (1, 1, 0): 1.0})
    Lu = ls.apply_L(u, SITE_A.freq, 0.75)
    assert Lu.coeff(3, 1)[0] == pytest.approx(2.0, abs=1e-15)
    assert Lu.coeff(0, 2)[0] == pytest.approx(-13.0, abs=1e-15)
    assert Lu.coeff(1, 1)[0] == pytest.approx(0.0, abs=1e-15)


def test_inverse_on_range_and_kernel():
    u = FourierField.from_modes(4, 4, {(3, 1, 0): 1.0, (1, 1, 0): 1.0})
    out = ls.apply_inverse_PLP_ds2(u, SITE_A.freq, 0.75, SITE_A.kernel)
    assert out.coeff(3, 1)[0] == pytest.approx(-1.0 / 2.0)
    assert out.coeff(1, 1)[0] == 0


def test_singular_site_outside_kernel():
    with pytest.raises(SingularSite):
        ls.apply_inverse_PLP_ds2(FourierField.zeros(4, 4), SITE_A.freq, Fraction(3, 4),
                                 frozenset())


def test_solve_range_trivial():
    sol = ls.solve_range(0.0, SITE_A.a0, SITE_A, CFG)
    assert not np.any(sol.w.coeffs)
    assert ls.bifurcation_value(0.0, SITE_A.a0, SITE_A, CFG) == 0


def test_range_part_is_quadratic():
    norms = [fourier.sobolev_norm(ls.solve_range(b, SITE_A.a0, SITE_A, CFG).w, 6)
             for b in (0.01, 0.02)]
    assert np.log2(norms[1] / norms[0]) == pytest.approx(2.0, abs=0.05)


def test_range_solution_residual_and_symmetry():
    sol = ls.solve_range(0.05, SITE_A.a0, SITE_A, CFG)
    assert sol.range_residual < 1e-10
    cls = ls.site_symmetry(SITE_A)
    proj = fourier.project_symmetry(sol.w, cls)
    assert np.max(np.abs(proj.coeffs - sol.w.coeffs)) < 1e-18


def test_reduced_problem_matches_full_space():
    full = CFG.replace(reduce_symmetry=False)
    for a in (SITE_A.a0, 1.01 * SITE_A.a0):
        reduced_value = ls.bifurcation_value(0.05, a, SITE_A, CFG)
        full_value = ls.bifurcation_value(0.05, a, SITE_A, full)
        assert abs(reduced_value - full_value) < 1e-12


def test_transversality():
    b, a0, h = 1e-3, SITE_A.a0, 1e-5
    slope = (ls.bifurcation_value(b, a0 + h, SITE_A, CFG)
             - ls.bifurcation_value(b, a0 - h, SITE_A, CFG)) / (2 * h)
    assert slope == pytest.approx(-2 * a0**-3 * b, rel=1e-3)


def test_branch_point_instance_a(point_a):
    assert point_a.range_residual < 1e-10
    assert point_a.full_residual < 1e-10
    assert abs(point_a.B) < 1e-12
    # frozen regression value of a(0.05) (truncation-independent beyond 8 modes)
    assert point_a.a == pytest.approx(1.1556424270142, abs=1e-11)


def test_negative_amplitude_maps_by_time_shift(point_a):
    neg = ls.solve_branch_point(-0.05, SITE_A.a0, SITE_A, CFG)
    assert neg.a == point_a.a
    t = np.linspace(0, 2 * np.pi, 13)
    s = np.linspace(0, 2 * np.pi, 11)
    np.testing.assert_allclose(neg.u.evaluate(t, s), point_a.u.evaluate(t + np.pi, s),
                               atol=1e-14)


def test_branch_point_zero_amplitude():
    pt = ls.solve_branch_point(0.0, 1.3, SITE_A, CFG)
    assert pt.a == SITE_A.a0 and pt.w_norm == 0


def test_assembled_solution_instance_a(point_a):
    sol = ls.assemble_solution(point_a)
    res = ls.full_residual(sol)
    assert res["sup"] < 1e-9
    defects = ls.symmetry_defects(sol, n=64)
    assert max(defects.values()) < 1e-12
    assert sol.drift_defect < 1e-12
    # leading order: w1 = a0 - a0 b cos(t/2) cos s + O(b^2)
    t = np.linspace(0, sol.period, 21)
    s = np.linspace(0, 2 * np.pi, 17)
    lead = SITE_A.a0 * (1 - 0.05 * np.outer(np.cos(t / 2), np.cos(s)))
    assert np.max(np.abs(sol.w1(t, s) - lead)) < 5 * 0.05**2


def test_assembled_straight_pair():
    pt = ls.solve_branch_point(0.0, SITE_A.a0, SITE_A, CFG)
    sol = ls.assemble_solution(pt)
    assert sol.drift == pytest.approx(-1j / SITE_A.a0, abs=1e-15)
    assert ls.full_residual(sol)["sup"] < 1e-14


def test_instance_c_figure_eight_symmetry(point_c):
    assert point_c.range_residual < 1e-10
    sol = ls.assemble_solution(point_c)
    defects = ls.symmetry_defects(sol, n=64)
    assert defects["x_half_period"] < 1e-12 and defects["y_half_period"] < 1e-12
    assert ls.full_residual(sol)["sup"] < 1e-9
    # y-component of w1 present at t = 0
    assert np.max(np.abs(sol.w1([0.0], np.linspace(0, 2 * np.pi, 16)).imag)) > 1e-3


def test_branch_exponents():
    branch = ls.continue_branch(SITE_A, [0, 0.0125, 0.025, 0.05], CFG)
    assert branch.fits["w_norm_exponent"] == pytest.approx(2.0, abs=0.1)
    assert branch.fits["a_shift_exponent"] == pytest.approx(2.0, abs=0.2)
    assert len(branch.points) == 4


def test_continue_branch_rejects_resonance_and_bad_grid():
    resonant = bifurcation_site(RationalFrequency(2, 1), 1, 1, 1)
    with pytest.raises(ResonantSite):
        ls.continue_branch(resonant, [0, 0.01], CFG)
    with pytest.raises(ValueError):
        ls.continue_branch(SITE_A, [0.01, 0.02], CFG)


def test_branch_truncation_keeps_partial_branch():
    cfg = ls.SolverConfig(J=8, K=8, b_halvings=1, max_iter=60)
    with pytest.raises(BranchTruncated) as info:
        ls.continue_branch(SITE_A, [0, 0.05, 0.95], cfg)
    branch = info.value.branch
    assert branch.points[-1].b >= 0.05
    assert info.value.exit_code == 0


def test_fit_exponent():
    b = np.array([0.1, 0.2, 0.4])
    assert ls.fit_exponent(b, 3 * b**2) == pytest.approx(2.0)
    assert np.isnan(ls.fit_exponent([0.0, 0.1], [0.0, 1.0]))


def test_full_residual_decays_spectrally_before_roundoff():
    res = []
    for n in (2, 4, 8):
        pt = ls.solve_branch_point(0.05, SITE_A.a0, SITE_A, CFG.replace(J=n, K=n))
        res.append(ls.full_residual(ls.assemble_solution(pt))["sup"])
    assert res[0] > 100 * res[1] > 100 * 100 * res[2]
    assert res[2] < 1e-9
