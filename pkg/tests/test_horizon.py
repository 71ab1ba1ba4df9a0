# tests/test_horizon.py

import math
import os

import numpy as np
import pytest

from app.core.errors import HorizonNotFoundError
from app.schemas.horizon_schemas import FlowRun, TrialSurfaceResult
from app.services.background import evaluate_schwarzschild
from app.services.geometry import EXTERIOR, MetricState, ScalarField
from app.services.geometry.surfaces import coordinate_sphere, neck_graph
from app.services.horizon import (
    export_profiles, exterior_exclusion_scan, find_neck_horizon, level_set_mean_curvature, mean_curvature,
    outermost_report, schwarzschild_horizon,
)
from app.services.horizon.exclusion import CURVATURE_FLOOR, curvature_floor, floor_verdict, trial_family
from app.services.horizon.finder import horizon_tolerance
from app.services.horizon.flows import flow_passes, puncture_heights
from app.services.horizon.mean_curvature import flat_data

from tests.conftest import MASS


def _run(outcome, pieces=()):
    return FlowRun(seed="s", chart=EXTERIOR, outcome=outcome, steps=1, time=0.1, max_abs_H=1.0, pieces=list(pieces))


def test_horizon_tolerance_scales_with_mass():
    assert horizon_tolerance(0.05) == pytest.approx(2e-3)


def test_flat_sphere_mean_curvature():
    H = mean_curvature(coordinate_sphere(2.0), flat_data())
    np.testing.assert_allclose(H, 1.0, rtol=1e-3)


def test_schwarzschild_spheres_change_sign_at_the_horizon():
    state = evaluate_schwarzschild(1.0)
    assert np.mean(mean_curvature(coordinate_sphere(0.3), state)) < 0.0
    assert np.mean(mean_curvature(coordinate_sphere(1.0), state)) > 0.0


def test_schwarzschild_horizon():
    horizon = schwarzschild_horizon(1.0)
    assert horizon.radius == pytest.approx(0.5, rel=1e-3)
    assert horizon.radius_min_area == pytest.approx(0.5, rel=1e-3)
    assert horizon.area == pytest.approx(16.0 * math.pi, rel=1e-3)
    assert horizon.area_exact == pytest.approx(16.0 * math.pi)
    assert abs(horizon.mass_gap) < 1e-3


def test_level_set_curvature_of_flat_spheres(atlas):
    flat = MetricState(atlas, flat_data().background)
    F = ScalarField.from_function(atlas, lambda c: c.radius)
    H = level_set_mean_curvature(F, flat)
    chart = atlas.exterior
    away = np.minimum(np.hypot(chart.rho, chart.z - 1.0), np.hypot(chart.rho, chart.z + 1.0))
    nodes = chart.active & (chart.radius > 1.5) & (chart.radius < 3.0) & (away > 0.5) & (chart.rho > 0.2)
    error = np.abs(H[EXTERIOR][nodes] * chart.radius[nodes] / 2.0 - 1.0)
    assert np.median(error) < 0.05


def test_trial_family_and_flat_floor():
    heights = (1.0, -1.0)
    assert len(trial_family(heights)) == 12
    results = curvature_floor(flat_data(), heights)
    assert all(r.floor_ok for r in results)
    assert min(r.max_abs_H_flat for r in results) >= CURVATURE_FLOOR
    assert all(r.v_bound_ok for r in results)
    assert floor_verdict(results) == (True, True)


def test_v_bound_failure_fails_the_floor_verdict():
    passing = TrialSurfaceResult(name="sphere r=2", max_abs_H_flat=1.0, max_abs_H_state=1.0, floor_ok=True,
                                 v_bound=0.25, H_at_v_max=1.0, v_bound_ok=True)
    skipped = TrialSurfaceResult(name="ellipsoid", max_abs_H_flat=1.0, max_abs_H_state=1.0, floor_ok=True,
                                 v_skipped="grad v vanishes at the max point")
    failing = passing.model_copy(update={"name": "dented", "H_at_v_max": 0.1, "v_bound_ok": False})
    assert floor_verdict([passing, skipped]) == (True, True)
    assert floor_verdict([passing, failing]) == (True, False)


def test_exclusion_scan_rejects_wide_disks(glued):
    with pytest.raises(ValueError):
        exterior_exclusion_scan(glued, eps=0.5)


def test_puncture_heights(glued):
    assert puncture_heights(glued) == (1.0, -1.0)
    assert puncture_heights(flat_data()) == ()


@pytest.mark.parametrize("outcome,passes", [
    ("entered", True), ("collapsed", True), ("left", True), ("exited_cut", True),
    ("stalled", False), ("minimal", False), ("undetermined", False),
])
def test_flow_outcomes(outcome, passes):
    assert flow_passes(_run(outcome)) is passes


def test_pinched_flow_passes_only_with_passing_pieces():
    assert flow_passes(_run("pinched", [_run("entered"), _run("collapsed")]))
    assert not flow_passes(_run("pinched", [_run("entered"), _run("stalled")]))
    assert not flow_passes(_run("pinched"))


def test_cut_cross_section_is_minimal(glued):
    H = mean_curvature(neck_graph(0, 0.0, 65), glued)
    np.testing.assert_allclose(H, 0.0, atol=1e-10)


def test_neck_horizon_on_glued_data(glued):
    component = find_neck_horizon(glued, 0)
    assert component.neck == 1
    assert component.area == pytest.approx(4.0 * math.pi * MASS ** 2, rel=1e-4)
    assert component.distance_to_cut < 1e-12
    assert component.reflection_defect < 1e-12
    assert abs(component.charge) == pytest.approx(MASS, rel=1e-4)


def test_exact_mp_neck_has_no_horizon(exact_mp):
    with pytest.raises(HorizonNotFoundError):
        find_neck_horizon(exact_mp, 0, max_steps=50)


def test_horizon_set_without_scan(glued, tmp_path):
    horizon = outermost_report(glued, scan=False)
    assert len(horizon.components) == 2
    assert horizon.total_area == pytest.approx(8.0 * math.pi * MASS ** 2, rel=1e-4)
    assert horizon.total_radius == pytest.approx(math.sqrt(2.0) * MASS, rel=1e-4)
    assert horizon.outermost_certificate is None
    assert not horizon.outermost
    paths = export_profiles(horizon, str(tmp_path))
    assert sorted(os.path.basename(p) for p in paths) == ["horizon_neck_1.csv", "horizon_neck_2.csv"]


@pytest.mark.slow
def test_exclusion_scan_on_glued_data(glued):
    certificate = exterior_exclusion_scan(glued, eps=0.05, max_steps=2000)
    assert certificate.curvature_floor_ok
    assert certificate.v_bound_ok
    assert len(certificate.surfaces) == 12
    assert certificate.descent
