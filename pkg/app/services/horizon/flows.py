# app/services/horizon/flows.py
# Area-decreasing descent: explicit mean-curvature flow of axisymmetric profiles.
# Neck graphs move by F_t = -(H / W) sqrt(1 + F'^2); exterior meridian curves move by
# x_t = -(H / W) n with arc-length remeshing, and split in two when they pinch on the axis.
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.errors import SurfaceError
from app.core.logger import console
from app.schemas.horizon_schemas import FlowRun
from app.services.background import ConformalData, GluedBackground, MajumdarPapapetrou
from app.services.geometry.surfaces import Surface, profile_geometry, remesh_by_arclength
from app.services.horizon.mean_curvature import mean_curvature

DT_FACTOR = 0.2
MAX_STEPS = 20000
SCAN_RADIUS = 3.0
MAX_PINCH_DEPTH = 3

PASSING = ("entered", "collapsed", "left", "exited_cut")


def puncture_heights(state: ConformalData) -> Tuple[float, ...]:
    """z of the punctures with positive mass seen by exterior surfaces."""
    if state.atlas is not None:
        return tuple(state.atlas.heights)
    background = state.background
    if isinstance(background, GluedBackground):
        return tuple(background.heights)
    if isinstance(background, MajumdarPapapetrou):
        return tuple(h for m, h in zip(background.params.masses, background.params.heights) if m > 0.0)
    return ()


def _closed(F: np.ndarray) -> np.ndarray:
    """Zero slope at both axis points, second order."""
    F[0] = (4.0 * F[1] - F[2]) / 3.0
    F[-1] = (4.0 * F[-2] - F[-3]) / 3.0
    return F


def neck_flow(state: ConformalData, S: Surface, tol: float, max_steps: int = MAX_STEPS,
              stop_below: Optional[float] = None, seed: str = "") -> FlowRun:
    """
    Flow the graph s = F(theta) until sup |H| <= tol ("minimal"), until it lies below
    s = stop_below ("entered"), or until it leaves the chart through the cut ("exited_cut",
    data without a mirror) or through either end ("left_chart").
    """
    atlas = state.require_atlas()
    lower = -atlas.s_max if state.metric.mirror else 0.0
    theta = S.x2
    dtheta = theta[1] - theta[0]
    F = S.x1.copy()
    time = 0.0
    outcome = "undetermined"
    H = np.zeros_like(F)
    step = 0
    for step in range(max_steps + 1):
        S = S.with_profile(F, theta)
        H = mean_curvature(S, state)
        if stop_below is not None and F.max() < stop_below:
            outcome = "entered"
            break
        if np.max(np.abs(H)) <= tol:
            outcome = "minimal"
            break
        if step == max_steps:
            break
        W = state.metric.sample(S.chart, F, theta)[0]
        dt = DT_FACTOR * float(np.min(W)) ** 2 * dtheta ** 2
        slope = np.gradient(F, theta, edge_order=2)
        F = _closed(F - dt * (H / W) * np.sqrt(1.0 + slope ** 2))
        time += dt
        if F.min() < lower:
            outcome = "exited_cut" if lower == 0.0 else "left_chart"
            break
        if F.max() > atlas.s_max:
            outcome = "left_chart"
            break
    S = S.with_profile(F, theta)
    run = FlowRun(surface=S, seed=seed or S.chart, chart=S.chart, outcome=outcome, steps=step, time=time,
                  max_abs_H=float(np.max(np.abs(H))))
    console.debug(f"[Horizon] Neck flow '{run.seed}': {outcome} after {step} steps, sup|H|={run.max_abs_H:.3e}")
    return run


def _split(S: Surface, k: int) -> Tuple[Surface, Surface]:
    x1, x2 = S.x1.copy(), S.x2.copy()
    x1[k] = 0.0
    upper = remesh_by_arclength(Surface(S.chart, x1[:k + 1], x2[:k + 1], S.orientation), S.size)
    lower = remesh_by_arclength(Surface(S.chart, x1[k:], x2[k:], S.orientation), S.size)
    return upper, lower


def _pinch_index(S: Surface) -> Optional[int]:
    seg = float(np.mean(np.hypot(np.diff(S.x1), np.diff(S.x2))))
    inner = np.arange(4, S.size - 4)
    close = inner[S.x1[inner] < 0.5 * seg]
    if close.size == 0:
        return None
    return int(close[np.argmin(S.x1[close])])


def exterior_flow(state: ConformalData, S: Surface, eps: float, tol: float, max_steps: int = MAX_STEPS,
                  seed: str = "", depth: int = 0) -> FlowRun:
    """
    Flow a meridian curve until it reaches into D(eps) ("entered"), shrinks below eps
    ("collapsed"), leaves B_0(3) ("left") or stalls with sup |H| <= tol ("stalled").
    A pinch on the axis splits the curve and both pieces are flowed on ("pinched").
    """
    heights: Sequence[float] = puncture_heights(state)
    outer = state.atlas.outer_radius if state.atlas is not None else math.inf
    seed = seed or "exterior"
    time = 0.0
    outcome = "undetermined"
    pieces = []
    H = np.zeros(S.size)
    step = 0
    for step in range(max_steps + 1):
        if heights and min(float(np.min(np.hypot(S.x1, S.x2 - h))) for h in heights) < eps:
            outcome = "entered"
            break
        extent = max(float(np.ptp(S.x1)), float(np.ptp(S.x2)))
        if extent < eps:
            outcome = "collapsed"
            break
        if float(np.min(np.hypot(S.x1, S.x2))) > SCAN_RADIUS:
            outcome = "left"
            break
        k = _pinch_index(S)
        if k is not None and depth < MAX_PINCH_DEPTH:
            outcome = "pinched"
            budget = max(max_steps - step, 0)
            for i, piece in enumerate(_split(S, k)):
                pieces.append(exterior_flow(state, piece, eps, tol, budget, f"{seed}/{i + 1}", depth + 1))
            break
        H = mean_curvature(S, state)
        if np.max(np.abs(H)) <= tol:
            outcome = "stalled"
            break
        if step == max_steps:
            break
        W = state.metric.sample(S.chart, S.x1, S.x2)[0]
        speed = np.abs(H / W)
        seg = float(np.min(np.hypot(np.diff(S.x1), np.diff(S.x2))))
        dt = DT_FACTOR * float(np.min(W)) ** 2 * seg ** 2
        if speed.max() > 0.0:
            dt = min(dt, 0.25 * seg / float(speed.max()))
        normal = profile_geometry(S).normal
        move = -dt * (H / W)[:, None] * normal
        x1 = np.maximum(S.x1 + move[:, 0], 0.0)
        x1[0] = x1[-1] = 0.0
        S = remesh_by_arclength(S.with_profile(x1, S.x2 + move[:, 1]))
        time += dt
        if float(np.max(np.hypot(S.x1, S.x2))) > outer:
            raise SurfaceError(f"Exterior flow '{seed}' left the chart at the outer boundary.")
    run = FlowRun(surface=S, seed=seed, chart=S.chart, outcome=outcome, steps=step, time=time,
                  max_abs_H=float(np.max(np.abs(H))), pieces=pieces)
    console.debug(f"[Horizon] Exterior flow '{seed}': {outcome} after {step} steps")
    return run


def flow_passes(run: FlowRun) -> bool:
    """True when the run, and every piece of a pinched run, left B_0(3) minus D(eps)."""
    if run.outcome == "pinched":
        return bool(run.pieces) and all(flow_passes(p) for p in run.pieces)
    return run.outcome in PASSING
