# app/services/horizon/exclusion.py
# Numerical proxy for "no closed minimal surface in B_0(3) outside D(eps)": a curvature
# floor on a fixed family of trial surfaces, and area descent from exterior and
# puncture seeds that must all leave B_0(3) minus D(eps).
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.logger import console
from app.schemas.horizon_schemas import ExclusionCertificate, FlowRun, TrialSurfaceResult
from app.services.background import ConformalData
from app.services.geometry.surfaces import Surface, coordinate_sphere, ellipsoid, neck_graph, profile_geometry
from app.services.horizon.flows import MAX_STEPS, exterior_flow, flow_passes, neck_flow, puncture_heights
from app.services.horizon.mean_curvature import flat_data, mean_curvature

CURVATURE_FLOOR = 1.0 / 6.0
FLOOR_TOLERANCE = 0.02
TRIAL_SAMPLES = 129
FLOW_SAMPLES = 65
ORIGIN_RADII = (1.5, 2.0, 2.5, 2.9)
ELLIPSOID_AXES = ((2.5, 1.5), (1.5, 2.5), (2.8, 2.0), (1.6, 2.9))
PUNCTURE_RADII = (0.5, 0.9)
DESCENT_RADII = (1.5, 2.0, 2.5)
NECK_SEED_RADII = (0.05, 0.1)


def trial_family(heights: Sequence[float], n: int = TRIAL_SAMPLES) -> List[Tuple[str, Surface]]:
    """Origin spheres, origin ellipsoids and spheres about each puncture."""
    family = [(f"sphere r={r:g}", coordinate_sphere(r, n=n)) for r in ORIGIN_RADII]
    family += [(f"ellipsoid {a:g}x{b:g}", ellipsoid(a, b, n=n)) for a, b in ELLIPSOID_AXES]
    for k, h in enumerate(heights):
        family += [(f"puncture {k + 1} sphere r={r:g}", coordinate_sphere(r, center_z=h, n=n)) for r in PUNCTURE_RADII]
    return family


def _v_bound(S: Surface, H_flat: np.ndarray, tol: float) -> dict:
    """Check H(q) >= (Delta v - Hess v(n, n)) / |grad v| at the max point q of v = rho^2 - z^2/2."""
    v = S.x1 ** 2 - 0.5 * S.x2 ** 2
    k = int(np.argmax(v))
    grad = math.hypot(2.0 * S.x1[k], S.x2[k])
    if grad < 1e-12:
        return {"v_max": float(v[k]), "v_skipped": "grad v vanishes at the max point"}
    n_rho, n_z = profile_geometry(S).normal[k]
    bound = (3.0 - (2.0 * n_rho ** 2 - n_z ** 2)) / grad
    return {"v_max": float(v[k]), "v_bound": bound, "H_at_v_max": float(H_flat[k]),
            "v_bound_ok": bool(H_flat[k] >= bound - tol)}


def curvature_floor(state: ConformalData, heights: Sequence[float], tol: float = FLOOR_TOLERANCE
                    ) -> List[TrialSurfaceResult]:
    flat = flat_data()
    results = []
    for name, S in trial_family(heights):
        H_flat = mean_curvature(S, flat)
        H_state = mean_curvature(S, state)
        max_flat = float(np.max(np.abs(H_flat)))
        max_state = float(np.max(np.abs(H_state)))
        result = TrialSurfaceResult(
            name=name, max_abs_H_flat=max_flat, max_abs_H_state=max_state,
            floor_ok=bool(max_flat >= CURVATURE_FLOOR - tol and max_state > 0.0),
            **_v_bound(S, H_flat, tol),
        )
        if result.v_skipped:
            console.debug(f"[Horizon] {name}: v-bound skipped ({result.v_skipped})")
        results.append(result)
    return results


def floor_verdict(surfaces: Sequence[TrialSurfaceResult]) -> Tuple[bool, bool]:
    """(floor_ok, v_bound_ok) over the family. A skipped v-bound neither passes nor fails."""
    floor_ok = all(s.floor_ok for s in surfaces)
    v_bound_ok = all(s.v_bound_ok is not False for s in surfaces)
    return floor_ok, v_bound_ok


def _descent(state: ConformalData, heights: Sequence[float], eps: float, tol: float, max_steps: int
             ) -> Tuple[List[FlowRun], List[str]]:
    runs, notes = [], []
    for r in DESCENT_RADII:
        run = exterior_flow(state, coordinate_sphere(r, n=FLOW_SAMPLES), eps, tol, max_steps, seed=f"sphere r={r:g}")
        runs.append(run)
    if state.atlas is not None:
        atlas = state.atlas
        s_eps = atlas.T + math.log(eps)
        for k in range(len(atlas.heights)):
            for r in NECK_SEED_RADII:
                S = neck_graph(k, min(atlas.T + math.log(r), atlas.s_max), FLOW_SAMPLES)
                runs.append(neck_flow(state, S, tol, max_steps, stop_below=s_eps,
                                      seed=f"puncture {k + 1} sphere r={r:g}"))
    for run in _flatten(runs):
        if run.outcome == "stalled":
            notes.append(f"'{run.seed}' stalled outside D(eps) with sup|H|={run.max_abs_H:.3e}")
        elif run.outcome == "minimal" and run.surface is not None and run.surface.is_neck:
            if run.surface.x1.max() > state.atlas.T + math.log(eps):
                notes.append(f"'{run.seed}' settled on a minimal graph outside D(eps)")
    return runs, notes


def _flatten(runs: List[FlowRun]) -> List[FlowRun]:
    out = []
    for run in runs:
        out.append(run)
        out += _flatten(run.pieces)
    return out


def _descent_passes(run: FlowRun, eps: float, T: Optional[float]) -> bool:
    if run.outcome == "minimal" and run.surface is not None and run.surface.is_neck and T is not None:
        return bool(run.surface.x1.max() <= T + math.log(eps))
    return flow_passes(run)


def exterior_exclusion_scan(state: ConformalData, eps: float = 0.05, tol: Optional[float] = None,
                            floor_tolerance: float = FLOOR_TOLERANCE, max_steps: int = MAX_STEPS
                            ) -> ExclusionCertificate:
    """
    (a) max |H_delta| >= 1/6 - floor_tolerance and |H_g| > 0 on every trial surface,
        and H_delta at the max point of v = rho^2 - z^2/2 clears the v-function bound;
    (b) every descent seed shrinks into D(eps), collapses, or leaves B_0(3).
    Stalls outside D(eps) are recorded as counter-observations.
    """
    atlas = state.atlas
    if atlas is not None and eps > atlas.grid.r_match:
        raise ValueError(f"eps={eps} exceeds the neck matching radius r_match={atlas.grid.r_match}.")
    heights = puncture_heights(state)
    tol = tol if tol is not None else 1e-4 / max(state.background.cylinder_scale or 1.0, 1e-12)
    console.info(f"[Horizon] Exclusion scan: eps={eps}, {len(heights)} punctures")

    surfaces = curvature_floor(state, heights, floor_tolerance)
    runs, notes = _descent(state, heights, eps, tol, max_steps)
    T = atlas.T if atlas is not None else None
    floor_ok, v_bound_ok = floor_verdict(surfaces)
    descent_ok = all(_descent_passes(run, eps, T) for run in runs)
    certificate = ExclusionCertificate(
        eps=eps, floor=CURVATURE_FLOOR, floor_tolerance=floor_tolerance, surfaces=surfaces,
        curvature_floor_ok=floor_ok, v_bound_ok=v_bound_ok,
        min_max_abs_H_flat=min(s.max_abs_H_flat for s in surfaces),
        descent=runs, descent_ok=descent_ok, counter_observations=notes,
        passed=floor_ok and v_bound_ok and descent_ok and not notes,
    )
    log = console.success if certificate.passed else console.warning
    log(f"[Horizon] Exclusion scan: floor={floor_ok} (min max|H_delta|={certificate.min_max_abs_H_flat:.4f}), "
        f"v-bound={v_bound_ok}, descent={descent_ok}, counter-observations={len(notes)}")
    return certificate
