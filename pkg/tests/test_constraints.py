# tests/test_constraints.py

import math

import numpy as np
import pytest

from app.core.errors import ProvenanceError
from app.schemas.background_schemas import GlueParams
from app.schemas.grid_schemas import GridSpec
from app.services.background import constraint_residuals, evaluate_glued
from app.services.constraints import (
    doubled_neck_check, quadratic_remainder, solve_divergence_fix, solve_lichnerowicz, verify_barrier,
)
from app.services.constraints.barrier import (
    barrier_derivatives, barrier_precondition, barrier_profile, barrier_quadrature, single_mass_laplacian,
)
from app.services.constraints.divergence_fix import band_mask, divergence_source
from app.services.geometry import build_atlas, divergence, weighted_sup_norm

from tests.conftest import MASS, SCALE


@pytest.fixture(scope="module")
def fixed(glued):
    return solve_divergence_fix(glued)


@pytest.fixture(scope="module")
def solved(fixed):
    return solve_lichnerowicz(fixed[0])


def test_barrier_precondition():
    assert barrier_precondition(MASS, 12.0, 0.05) is None
    assert "m < 1" in barrier_precondition(1.0, 12.0, 0.05)
    assert "T >=" in barrier_precondition(MASS, 4.0, 0.05)


@pytest.mark.parametrize("r", [0.01, 0.1, 1.0, 5.0])
def test_barrier_closed_form_matches_quadrature(r):
    T = 10.0
    assert float(barrier_profile(r, MASS, T)) == pytest.approx(barrier_quadrature(r, MASS, T), rel=1e-8)


def test_barrier_vanishes_on_the_cut():
    assert float(barrier_profile(math.exp(-SCALE), MASS, SCALE)) == pytest.approx(0.0, abs=1e-15)


def test_barrier_laplacian_in_the_one_puncture_metric():
    r = np.array([1e-3, 0.05, 0.5, 2.0])
    d1, lap = barrier_derivatives(r, MASS, SCALE)
    P = 1.0 + MASS / r
    expected = (P * lap - MASS / r ** 2 * d1) / P ** 3
    np.testing.assert_allclose(single_mass_laplacian(r, MASS, SCALE), expected, rtol=1e-10)
    assert np.all(expected < 0.0)


def test_verify_barrier(atlas):
    report = verify_barrier(MASS, SCALE, atlas)
    assert report.psi_one_in_bracket
    assert report.psi_one == pytest.approx(report.psi_one_quadrature, rel=1e-8)
    assert report.w_min > 0.0
    assert report.deep_limit == pytest.approx(-math.exp(-SCALE) / MASS ** 3)


def test_verify_barrier_refuses_large_mass(atlas):
    with pytest.raises(ValueError):
        verify_barrier(1.5, SCALE, atlas)


def test_divergence_source_stays_in_the_bands(glued, atlas):
    f = divergence_source(glued)
    bands = band_mask(atlas, atlas.T)
    outside = {c.name: c.active & ~bands[c.name] for c in atlas.charts}
    assert f.sup() > 0.0
    assert f.sup(outside) <= 1e-6 * f.sup()


def test_divergence_fix_requires_glued_data(exact_mp):
    with pytest.raises(ProvenanceError):
        solve_divergence_fix(exact_mp)


@pytest.mark.slow
def test_divergence_fix_removes_the_divergence(fixed):
    data, report = fixed
    assert data.provenance == "divergence-fixed"
    assert report.schwarz.converged
    remaining = weighted_sup_norm(divergence(data.electric, data.metric), 3.0)
    assert remaining == pytest.approx(report.weighted_after)
    assert remaining <= 1e-2 * report.weighted_before
    assert report.residual_norm_after < report.residual_norm_before
    assert report.cut_max <= 1e-10 * max(report.sup_phi, 1.0)
    assert report.out_of_band_source <= 1e-6 * report.source_sup
    assert data.potential is report.phi


def _neck_divergence(data):
    div = divergence(data.electric, data.metric)
    rows = {c.name: c.pde_rows("odd") & c.owned if c.kind == "cylinder" else np.zeros(c.shape, dtype=bool)
            for c in data.atlas.charts}
    return div.sup(rows)


@pytest.mark.slow
def test_correction_passes_shrink_the_neck_divergence(glued, fixed):
    plain, plain_report = solve_divergence_fix(glued, correction_passes=0)
    data, report = fixed
    assert plain_report.correction_passes == 0
    assert report.correction_passes >= 1
    assert plain_report.weighted_before == pytest.approx(report.weighted_before)
    assert _neck_divergence(data) < 0.5 * _neck_divergence(plain)


@pytest.mark.slow
def test_residual_methods_agree_on_the_fixed_divergence(fixed):
    data, report = fixed
    semi = constraint_residuals(data, "semi_discrete").norms
    grid = constraint_residuals(data, "discrete").norms
    assert semi.div_weighted == pytest.approx(report.weighted_after, rel=1e-10, abs=1e-12 * report.weighted_before)
    assert abs(semi.div_weighted - grid.div_weighted) <= 1e-2 * report.weighted_before
    assert abs(semi.div_sup - grid.div_sup) <= 1e-2 * report.residual_norm_before


@pytest.mark.slow
def test_divergence_fix_on_the_baseline_grid():
    glue = GlueParams(m=0.1, T=8.0)
    data, report = solve_divergence_fix(evaluate_glued(glue, build_atlas(glue, GridSpec())))
    remaining = weighted_sup_norm(divergence(data.electric, data.metric), 3.0)
    assert remaining <= 1e-2 * report.weighted_before


@pytest.mark.slow
def test_divergence_fix_mirrors_phi(fixed):
    _, report = fixed
    phi = report.phi
    assert phi.parity == "odd"
    neck = phi.atlas.necks[0]
    s = np.array([0.2, 0.7])
    theta = np.array([1.0, 2.0])
    up = phi.sample(neck.name, s, theta)[0]
    down = phi.sample(neck.name, -s, theta)[0]
    np.testing.assert_allclose(down, -up, atol=1e-12 * max(report.sup_phi, 1.0))


def test_lichnerowicz_requires_divergence_fixed_data(glued):
    with pytest.raises(ProvenanceError):
        solve_lichnerowicz(glued)


def test_lichnerowicz_rejects_unknown_mode(exact_mp):
    with pytest.raises(ValueError):
        solve_lichnerowicz(exact_mp, mode="anderson")


def test_lichnerowicz_leaves_exact_data_alone(exact_mp):
    _, report = solve_lichnerowicz(exact_mp)
    assert report.eta < 1e-8
    assert report.min_factor == pytest.approx(1.0, abs=1e-8)


@pytest.mark.slow
def test_newton_solve(solved):
    data, report = solved
    assert data.provenance == "solved"
    assert report.mode == "newton"
    assert report.min_factor > 0.0
    assert report.residual_norm < report.initial_residual
    assert report.eta == pytest.approx(report.psi.sup())
    assert constraint_residuals(data).norms.method == "semi_discrete"


@pytest.mark.slow
def test_fixed_point_agrees_with_newton(fixed, solved):
    _, newton = solved
    _, picard = solve_lichnerowicz(fixed[0], mode="fixed-point")
    atlas = newton.psi.atlas
    gap = max(float(np.max(np.abs(newton.psi[c.name] - picard.psi[c.name])[c.active])) for c in atlas.charts)
    assert gap <= 1e-4 * newton.eta + 1e-8


@pytest.mark.slow
def test_quadratic_remainder_is_quadratic(fixed, solved):
    _, report = solved
    small = report.psi.map(lambda v: 1e-3 * v)
    smaller = report.psi.map(lambda v: 5e-4 * v)
    ratio = quadratic_remainder(small, fixed[0]).sup() / quadratic_remainder(smaller, fixed[0]).sup()
    assert ratio == pytest.approx(4.0, rel=1e-2)


@pytest.mark.slow
def test_doubled_neck_divergence_check(glued):
    check = doubled_neck_check(glued, "divergence")
    assert check.parity == "odd"
    assert check.symmetry_defect <= 1e-8 * check.scale
    assert check.cut_value <= 1e-8 * check.scale


def test_doubled_neck_check_needs_mirrored_data(exact_mp):
    with pytest.raises(ProvenanceError):
        doubled_neck_check(exact_mp)
