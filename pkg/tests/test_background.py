# tests/test_background.py

import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import AtlasError, ProvenanceError
from app.schemas.background_schemas import LAMBDA_CRIT, GlueParams, MPParams
from app.services.background import (
    analytic_summary, constraint_residuals, cutoff, evaluate_glued, evaluate_mp, evaluate_schwarzschild,
    single_puncture_data,
)
from app.services.diagnostics import charge_estimate, mass_estimate
from app.services.geometry import build_atlas

from tests.conftest import COARSE_GRID, MASS, SCALE


def test_analytic_summary_unit_mass():
    summary = analytic_summary(1.0)
    assert summary.mu == 2.0
    assert summary.Q == 2.0
    assert summary.A_necks == pytest.approx(8.0 * math.pi)
    assert summary.R == pytest.approx(math.sqrt(2.0))
    assert summary.deficit == pytest.approx(2.0 - 1.5 * math.sqrt(2.0))
    assert summary.lambda_crit == pytest.approx(1.02268, abs=1e-5)


def test_analytic_deficit_at_default_mass():
    assert analytic_summary(0.05).deficit == pytest.approx(-0.0060660, abs=1e-7)


def test_analytic_summary_scales_linearly():
    one, three = analytic_summary(1.0), analytic_summary(3.0)
    assert three.mu == pytest.approx(3.0 * one.mu)
    assert three.A_necks == pytest.approx(9.0 * one.A_necks)
    assert three.deficit == pytest.approx(3.0 * one.deficit)


@pytest.mark.parametrize("m", [0.0, -1.0])
def test_analytic_summary_needs_positive_mass(m):
    with pytest.raises(ValueError):
        analytic_summary(m)


def test_lambda_crit_lies_above_one():
    assert 1.0 < LAMBDA_CRIT < 1.03


@pytest.mark.parametrize("kwargs", [
    {"masses": [-0.1, 1.0]},
    {"masses": [1.0, 1.0], "centers": [(0.5, 0.0, 1.0), (0.0, 0.0, -1.0)]},
    {"masses": [1.0, 1.0], "centers": [(0.0, 0.0, 1.0), (0.0, 0.0, 1.0)]},
    {"masses": [1.0], "centers": [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0)]},
    {"masses": []},
])
def test_mp_params_validation(kwargs):
    with pytest.raises(ValidationError):
        MPParams(**kwargs)


def test_mp_params_allow_zero_mass():
    params = MPParams(masses=[0.0, 1.0])
    assert params.N == 2


def test_cutoff_profiles_switch_across_the_band():
    T = 8.0
    lo, hi = math.exp(-T + 1.0), math.exp(-T + 2.0)
    r = np.array([0.5 * lo, lo, math.sqrt(lo * hi), hi, 2.0 * hi])
    for profile in ("quintic", "septic"):
        chi, dchi, _ = cutoff(r, T, profile)
        np.testing.assert_allclose(chi[[0, 1]], 0.0, atol=1e-14)
        np.testing.assert_allclose(chi[[3, 4]], 1.0, atol=1e-14)
        assert chi[2] == pytest.approx(0.5)
        assert dchi[0] == 0.0 and dchi[4] == 0.0
        assert dchi[2] > 0.0


def test_exact_mp_satisfies_constraints(exact_mp):
    norms = constraint_residuals(exact_mp).norms
    assert norms.method == "closed_form"
    assert norms.gauss_sup == 0.0
    assert norms.div_sup == 0.0


def test_grid_divergence_of_exact_mp_is_small(exact_mp, glued):
    discrete = constraint_residuals(exact_mp, "discrete").norms
    glued_before = constraint_residuals(glued, "discrete").norms
    assert discrete.div_sup < 1.0
    assert discrete.div_weighted < 1e-2 * glued_before.div_weighted


def test_exact_mp_rejects_foreign_punctures(atlas):
    params = MPParams(masses=[MASS, MASS], centers=[(0.0, 0.0, 2.0), (0.0, 0.0, -2.0)])
    with pytest.raises(AtlasError):
        evaluate_mp(params, atlas)


def test_exact_mp_mass_and_charge(exact_mp):
    assert mass_estimate(exact_mp).value == pytest.approx(2.0 * MASS, rel=1e-4)
    assert abs(charge_estimate(exact_mp).value) == pytest.approx(2.0 * MASS, rel=1e-6)


def test_single_puncture_has_no_atlas():
    data = single_puncture_data(1.0)
    assert data.atlas is None
    with pytest.raises(ProvenanceError):
        data.require_atlas()


def test_glued_data_is_a_cylinder_deep_in_the_neck(glued, atlas):
    assert glued.provenance == "glued"
    assert glued.metric.mirror
    assert glued.magnetic == 0.0
    for neck in atlas.necks:
        W = glued.metric.scale(neck)
        deep = neck.x1 <= 1.0
        np.testing.assert_allclose(W[deep], MASS, rtol=1e-14)
        E = glued.electric[neck.name]
        np.testing.assert_allclose(E[deep, :, 0], -1.0)


def test_glued_residuals_live_in_the_cutoff_bands(glued, atlas):
    residuals = constraint_residuals(glued)
    assert residuals.norms.gauss_sup > 0.0
    lo, hi = glued.background.glue.band
    for chart in atlas.charts:
        r = np.minimum(np.hypot(chart.rho, chart.z - atlas.heights[0]), np.hypot(chart.rho, chart.z - atlas.heights[1]))
        outside = chart.active & ((r < 0.99 * lo) | (r > 1.01 * hi))
        values = residuals.gauss[chart.name][outside]
        assert np.nanmax(np.abs(values)) < 1e-8 * residuals.norms.gauss_sup


def test_glued_residuals_decay_with_gluing_scale():
    sups = []
    for T in (6.0, 9.0):
        glue = GlueParams(m=MASS, T=T)
        sups.append(constraint_residuals(evaluate_glued(glue, build_atlas(glue, COARSE_GRID))).norms.gauss_sup)
    assert sups[1] < sups[0]


def test_glued_mass_matches_the_pair(glued):
    assert mass_estimate(glued).value == pytest.approx(2.0 * MASS, rel=1e-4)


def test_glued_data_checks_its_atlas(atlas):
    with pytest.raises(AtlasError):
        evaluate_glued(GlueParams(m=MASS, T=SCALE + 1.0), atlas)


def test_residual_methods(glued):
    with pytest.raises(ValueError):
        constraint_residuals(glued, method="spectral")


def test_schwarzschild_needs_positive_mass():
    with pytest.raises(ValueError):
        evaluate_schwarzschild(0.0)
