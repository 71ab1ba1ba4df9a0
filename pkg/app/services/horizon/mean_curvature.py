# app/services/horizon/mean_curvature.py
# Mean curvature of axisymmetric surfaces in g = W^2 (dx1^2 + dx2^2 + a^2 dphi^2):
#   H_g = W^-1 (H_flat + 2 d_n W / W)
# with H_flat the curvature in the chart's reference metric (flat space on the exterior,
# the product cylinder on the necks), plus a level-set evaluation and the Schwarzschild
# shooting test.
# Date: 2026-10-19
# Version: 0.1.0

import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from app.core.logger import console
from app.schemas.background_schemas import MPParams
from app.schemas.horizon_schemas import SchwarzschildHorizon
from app.services.background import ConformalData, evaluate_mp, evaluate_schwarzschild
from app.services.geometry.fields import MetricState, ScalarField, VectorField
from app.services.geometry.operators import divergence, gradient
from app.services.geometry.surfaces import Surface, coordinate_sphere, profile_geometry, surface_area

ALLOWED = ("exact-mp", "glued", "divergence-fixed", "solved", "schwarzschild")


def flat_data() -> ConformalData:
    """Flat R^3 (a single zero-mass puncture), used for H_delta."""
    return evaluate_mp(MPParams(masses=[0.0], centers=[(0.0, 0.0, 0.0)]))


def mean_curvature(S: Surface, state: ConformalData) -> np.ndarray:
    """
    H of S at its profile samples, positive for a round sphere with the normal toward
    infinity. Raises SurfaceError on a degenerate profile.
    """
    state.require(*ALLOWED)
    geo = profile_geometry(S)
    W, W1, W2 = state.metric.sample(S.chart, S.x1, S.x2)
    dnW = geo.normal[:, 0] * W1 + geo.normal[:, 1] * W2
    return (geo.flat_mean_curvature + 2.0 * dnW / W) / W


def level_set_mean_curvature(F: ScalarField, metric: MetricState) -> ScalarField:
    """
    H = div_g(grad F / |grad F|_g) of the level sets of F, on the grid. The unit normal
    covector is W dF / |dF|; nodes with dF = 0 come out NaN.
    """
    grad = gradient(F)
    normal = {}
    for chart in F.atlas.charts:
        dF = grad[chart.name]
        size = np.hypot(dF[..., 0], dF[..., 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            normal[chart.name] = metric.scale(chart)[..., None] * dF / size[..., None]
    return divergence(VectorField(F.atlas, normal), metric)


def schwarzschild_horizon(m: float, n: int = 129) -> SchwarzschildHorizon:
    """
    Horizon of the slice (1 + m/2r)^4 delta by shooting on the sphere mean curvature,
    checked against the minimizer of the sphere area A(r).
    """
    state = evaluate_schwarzschild(m)

    def sphere_H(r: float) -> float:
        return float(np.mean(mean_curvature(coordinate_sphere(r, n=n), state)))

    def sphere_area(r: float) -> float:
        return surface_area(coordinate_sphere(r, n=n), state.metric)

    radius = brentq(sphere_H, 0.1 * m, 2.0 * m, xtol=1e-14, rtol=1e-13)
    result = minimize_scalar(sphere_area, bounds=(0.1 * m, 2.0 * m), method="bounded",
                             options={"xatol": 1e-10 * m})
    area = sphere_area(radius)
    R = math.sqrt(area / (4.0 * math.pi))
    console.info(f"[Horizon] Schwarzschild m={m}: H = 0 at r={radius:.10f}, area minimum at r={result.x:.10f}")
    return SchwarzschildHorizon(m=m, radius=radius, radius_min_area=float(result.x), area=area,
                                area_exact=16.0 * math.pi * m ** 2, mass_gap=m - R / 2.0)
