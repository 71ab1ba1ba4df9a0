# app/services/horizon/finder.py
# Neck horizon search: descend the area over graphs s = F(theta) in one neck chart.
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import Callable, Optional, Union

import numpy as np

from app.core.errors import HorizonNotFoundError
from app.core.logger import console
from app.schemas.horizon_schemas import HorizonComponent
from app.services.background import ConformalData
from app.services.diagnostics import surface_charge
from app.services.geometry.surfaces import neck_graph, surface_area
from app.services.horizon.flows import MAX_STEPS, neck_flow

NECK_SAMPLES = 65
Seed = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def horizon_tolerance(m: float) -> float:
    """Minimality tolerance sup |H| <= 1e-4 / m; curvature scales like 1/m in the neck."""
    return 1e-4 / m


def _neck_mass(state: ConformalData, neck: int) -> float:
    background = state.background
    if background.cylinder_scale is not None:
        return background.cylinder_scale
    params = background.params
    return params.masses[params.heights.index(state.atlas.heights[neck])]


def find_neck_horizon(state: ConformalData, neck: int, seed: Seed = 0.0, tol: Optional[float] = None,
                      max_steps: int = MAX_STEPS, n: int = NECK_SAMPLES) -> HorizonComponent:
    """
    Minimal graph s = F(theta) in neck chart `neck`, seeded at F = seed. Raises
    HorizonNotFoundError when the descent leaves the chart (through the cut for data
    without a mirror) or does not settle within `max_steps`.
    """
    state.require("solved", "divergence-fixed", "glued", "exact-mp")
    state.require_atlas()
    m = _neck_mass(state, neck)
    tol = tol if tol is not None else horizon_tolerance(m)
    S = neck_graph(neck, seed, n)
    console.info(f"[Horizon] Neck {neck + 1}: descending from max|F|={np.max(np.abs(S.x1)):.3g} (tol {tol:.2e})")

    run = neck_flow(state, S, tol, max_steps, seed=f"neck_{neck + 1}")
    if run.outcome != "minimal":
        raise HorizonNotFoundError(f"Neck {neck + 1}: descent ended '{run.outcome}' after {run.steps} steps "
                                   f"(sup|H|={run.max_abs_H:.3e}); no minimal surface in the chart.")
    S = run.surface
    area = surface_area(S, state.metric)
    component = HorizonComponent(
        surface=S, chart=S.chart, neck=neck + 1, area=area, area_radius=math.sqrt(area / (4.0 * math.pi)),
        residual=run.max_abs_H, tolerance=tol, distance_to_cut=float(np.max(np.abs(S.x1))),
        reflection_defect=float(np.max(np.abs(S.x1 - S.x1[::-1]))),
        charge=surface_charge(S, state), steps=run.steps,
    )
    console.success(f"[Horizon] Neck {neck + 1}: area={area:.10f}, residual={run.max_abs_H:.3e}, "
                    f"distance to cut={component.distance_to_cut:.3e}")
    return component
