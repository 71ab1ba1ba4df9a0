# tests/test_geometry.py

import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import AtlasError, SurfaceError
from app.schemas.background_schemas import GlueParams, MPParams
from app.schemas.grid_schemas import GridSpec
from app.services.background import evaluate_mp
from app.services.geometry import (
    EXTERIOR, MetricState, ScalarField, build_atlas, divergence, gradient, laplace_beltrami, neck_name,
    overlap_consistency, weighted_sup_norm,
)
from app.services.geometry.grids import first_derivative_weights, graded_nodes, uniform_nodes
from app.services.geometry.surfaces import (
    Surface, coordinate_sphere, ellipsoid, integrate_surface, neck_graph, profile_geometry, remesh_by_arclength,
    surface_area,
)
from app.services.horizon.mean_curvature import flat_data

from tests.conftest import COARSE_GRID, MASS


def test_grid_spec_rejects_tiny_resolutions():
    with pytest.raises(ValidationError):
        GridSpec(exterior=(4, 192))


def test_grid_spec_requires_overlap():
    with pytest.raises(ValidationError):
        GridSpec(r_match=0.05, r_hole=0.05)


def test_refined_grid_keeps_nodes():
    refined = GridSpec(exterior=(9, 17), neck=(9, 9)).refined(2)
    assert refined.exterior == (17, 33)
    assert refined.neck == (17, 17)


@pytest.mark.parametrize("glue,grid", [
    (GlueParams(m=0.05, T=2.0), GridSpec()),
    (GlueParams(m=0.05, T=6.0), GridSpec(outer_radius=10.0)),
    (GlueParams(m=0.05, T=6.0, separation=0.08), GridSpec()),
])
def test_build_atlas_rejects_bad_layouts(glue, grid):
    with pytest.raises(AtlasError):
        build_atlas(glue, grid)


def test_atlas_layout(atlas, glue):
    assert [c.name for c in atlas.charts] == [EXTERIOR, neck_name(0), neck_name(1)]
    assert atlas.s_max == pytest.approx(glue.T + math.log(0.1))
    for neck in atlas.necks:
        assert neck.x1[0] == 0.0
        assert neck.x1[-1] == pytest.approx(atlas.s_max)
        assert np.all(neck.cut[0, :])
    # no exterior node survives inside the excised disks
    for height in atlas.heights:
        inside = np.hypot(atlas.exterior.rho, atlas.exterior.z - height) < atlas.grid.r_hole
        assert np.all(atlas.exterior.hole[inside])


def test_neck_coordinates_invert_neck_map(atlas):
    s = np.array([0.5, 1.0, 2.0])
    theta = np.array([0.3, 1.5, 2.9])
    rho, z = atlas.neck_to_physical(0, s, theta)
    s_back, theta_back = atlas.neck_coordinates(0, rho, z)
    np.testing.assert_allclose(s_back, s, atol=1e-12)
    np.testing.assert_allclose(theta_back, theta, atol=1e-12)


def test_overlap_maps_reproduce_smooth_functions(atlas):
    f = ScalarField.from_function(atlas, lambda c: c.z + 0.5 * c.rho ** 2)
    assert atlas.interface_mismatch(f.values) < 5e-3


def test_graded_nodes_cluster_at_anchors():
    nodes = graded_nodes(-10.0, 10.0, 101, anchors=[1.0], core=0.05)
    assert nodes[0] == -10.0 and nodes[-1] == 10.0
    assert np.all(np.diff(nodes) > 0.0)
    gaps = np.diff(nodes)
    near = np.argmin(np.abs(nodes - 1.0))
    assert gaps[near] < 0.1 * gaps.max()


def test_uniform_nodes_need_three_points():
    with pytest.raises(AtlasError):
        uniform_nodes(0.0, 1.0, 2)


def test_first_derivative_weights_exact_for_quadratics():
    x = np.array([0.0, 0.3, 1.0])
    f = 2.0 + 3.0 * x - x ** 2
    for at in range(3):
        w = first_derivative_weights(x, at, (0, 1, 2))
        assert w @ f == pytest.approx(3.0 - 2.0 * x[at], abs=1e-12)


def test_weighted_norm_rejects_large_exponent(atlas):
    with pytest.raises(ValueError):
        weighted_sup_norm(ScalarField.zeros(atlas), 4.0)


def test_weighted_norm_weights_the_far_field(atlas):
    ones = ScalarField.from_function(atlas, lambda c: np.ones(c.shape))
    assert weighted_sup_norm(ones, 0.0) == pytest.approx(1.0)
    far = float(np.max(atlas.exterior.radius[atlas.exterior.active]))
    assert weighted_sup_norm(ones, 1.0) == pytest.approx(far, rel=1e-6)


def test_surface_endpoints_must_touch_axis():
    angle = np.linspace(0.1, math.pi, 17)
    with pytest.raises(SurfaceError):
        Surface(EXTERIOR, np.sin(angle), np.cos(angle), orientation=1)


def test_flat_sphere_area_and_curvature():
    flat = flat_data()
    S = coordinate_sphere(2.0)
    assert surface_area(S, flat.metric) == pytest.approx(16.0 * math.pi, rel=1e-6)
    H = profile_geometry(S).flat_mean_curvature
    np.testing.assert_allclose(H, 1.0, rtol=1e-3)


def test_ellipsoid_normals_point_outward():
    S = ellipsoid(2.0, 1.0)
    normal = profile_geometry(S).normal
    radial = np.stack([S.x1, S.x2], axis=1)
    assert np.all(np.sum(normal * radial, axis=1) > 0.0)


def test_neck_graph_is_a_cylinder_cross_section():
    S = neck_graph(1, 0.5, n=33)
    assert S.chart == neck_name(1)
    assert S.puncture == 1
    np.testing.assert_allclose(profile_geometry(S).kappa, 0.0, atol=1e-12)


def test_remesh_keeps_axis_endpoints():
    S = ellipsoid(1.0, 3.0, n=65)
    R = remesh_by_arclength(S, 41)
    assert R.size == 41
    assert R.x1[0] == 0.0 and R.x1[-1] == 0.0
    seg = np.hypot(np.diff(R.x1), np.diff(R.x2))
    assert seg.max() / seg.min() < 1.1


def test_scalar_field_csv_export(atlas, tmp_path):
    f = ScalarField.from_function(atlas, lambda c: c.rho)
    path = f.export_csv(str(tmp_path / "rho.csv"))
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
    assert header == "chart,coord1,coord2,value"


def test_neck_profiles_map_to_small_circles(atlas):
    S = neck_graph(0, 1.0, n=17)
    rho, z = S.physical(atlas)
    assert np.all(rho >= 0.0)
    np.testing.assert_allclose(np.hypot(rho, z - atlas.heights[0]), math.exp(1.0 - atlas.T), rtol=1e-12)
    with pytest.raises(SurfaceError):
        S.physical()


def test_profiles_must_stay_in_their_chart(atlas):
    coordinate_sphere(2.0).check_within(atlas)
    neck_graph(0, -0.5).check_within(atlas, mirrored=True)
    with pytest.raises(SurfaceError):
        neck_graph(0, -0.5).check_within(atlas)
    with pytest.raises(SurfaceError):
        neck_graph(0, atlas.s_max + 1.0).check_within(atlas)
    with pytest.raises(SurfaceError):
        coordinate_sphere(1.0).check_within(atlas)


def test_conformal_factor_of_the_mp_pair(exact_mp, atlas):
    v = exact_mp.metric.conformal_factor()
    chart = atlas.exterior
    P = 1.0 + sum(MASS / np.hypot(chart.rho, chart.z - h) for h in atlas.heights)
    np.testing.assert_allclose(v[EXTERIOR][chart.active], np.sqrt(P[chart.active]), rtol=1e-12)


def test_overlap_consistency_of_a_smooth_field(atlas):
    f = ScalarField.from_function(atlas, lambda c: c.z + 0.5 * c.rho ** 2)
    assert overlap_consistency(f) < 5e-3


def test_flat_divergence_of_a_gradient(atlas):
    flat = MetricState(atlas, flat_data().background)
    f = ScalarField.from_function(atlas, lambda c: 0.5 * (c.rho ** 2 + c.z ** 2))
    div = divergence(gradient(f), flat)
    chart = atlas.exterior
    nodes = chart.active & ~chart.hole
    np.testing.assert_allclose(div[EXTERIOR][nodes], 3.0, atol=1e-8)


def test_flat_laplacian_of_a_quadratic(atlas):
    flat = MetricState(atlas, flat_data().background)
    f = ScalarField.from_function(atlas, lambda c: c.rho ** 2 + c.z ** 2)
    lap = laplace_beltrami(f, flat)[EXTERIOR]
    values = lap[np.isfinite(lap) & atlas.exterior.active]
    assert values.size > 0
    assert np.median(np.abs(values - 6.0)) < 1e-2


def test_surface_integral_of_a_constant():
    flat = flat_data()
    assert integrate_surface(coordinate_sphere(2.0), 2.0, flat.metric) == pytest.approx(32.0 * math.pi, rel=1e-6)


def test_divergence_of_gradient_matches_laplacian(exact_mp, atlas):
    f = ScalarField.from_function(atlas, lambda c: c.z)
    lap = laplace_beltrami(f, exact_mp.metric)[EXTERIOR]
    div = divergence(gradient(f), exact_mp.metric)[EXTERIOR]
    chart = atlas.exterior
    away = np.minimum(np.hypot(chart.rho, chart.z - 1.0), np.hypot(chart.rho, chart.z + 1.0))
    nodes = chart.active & np.isfinite(lap) & (chart.radius < 3.0) & (away > 0.5) & (np.abs(lap) > 1e-4)
    assert nodes.sum() > 0
    relative = np.abs(div[nodes] - lap[nodes]) / np.abs(lap[nodes])
    assert np.median(relative) < 5e-2


def test_match_term_refines_the_matching_radius():
    plain = graded_nodes(-10.0, 10.0, 101, anchors=[1.0], core=0.05, floor=1.0)
    matched = graded_nodes(-10.0, 10.0, 101, anchors=[1.0], core=0.05, floor=1.0, match_radius=0.1, match_weight=60.0)
    assert np.all(np.diff(matched) > 0.0)

    def gap(nodes, x):
        k = np.searchsorted(nodes, x)
        return nodes[k] - nodes[k - 1]

    assert gap(matched, 1.1) < 0.5 * gap(plain, 1.1)
    assert gap(matched, 0.9) < 0.5 * gap(plain, 0.9)


def test_exterior_defers_the_matching_disks(atlas):
    chart = atlas.exterior
    r = np.minimum.reduce([np.hypot(chart.rho, chart.z - h) for h in atlas.heights])
    assert np.all(r[chart.owned] >= atlas.grid.r_match)
    assert np.any(chart.active & ~chart.owned)
    assert np.all(chart.owned <= chart.active)
    far = chart.active & (r >= atlas.grid.r_match)
    np.testing.assert_array_equal(chart.owned, far)


def test_necks_drop_their_matching_ring(atlas):
    for neck in atlas.necks:
        assert not neck.owned[-1, :].any()
        assert neck.owned[:-1, :].all()


def test_mp_divergence_converges_at_second_order(glue):
    sups = []
    for grid in (COARSE_GRID, COARSE_GRID.refined(2)):
        data = evaluate_mp(MPParams.symmetric_pair(MASS), build_atlas(glue, grid))
        div = divergence(data.electric, data.metric)
        sups.append(div.sup())
    assert sups[1] < sups[0]
    assert sups[0] / sups[1] > 3.0
