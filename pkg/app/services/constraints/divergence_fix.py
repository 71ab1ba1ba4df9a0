# app/services/constraints/divergence_fix.py
# Restores div E = 0 on the glued data: solve Delta_ghat phi = f = div E_hat (phi odd across
# the cut, Robin decay outside) and replace E_hat by E_hat - d phi.
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.errors import GluingError
from app.core.logger import console
from app.schemas.solver_schemas import BarrierComparison, BarrierReport, DivergenceFixReport
from app.services.background import ConformalData
from app.services.constraints.barrier import barrier_field, barrier_precondition, verify_barrier
from app.services.constraints.elliptic import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, SchwarzSolver
from app.services.geometry.atlas import Atlas
from app.services.geometry.fields import ScalarField, VectorField, overlap_consistency
from app.services.geometry.operators import chart_gradient, divergence, weighted_sup_norm

BAND_LEAK_RTOL = 1e-6
DEFECT_PASSES = 3
DEFECT_RTOL = 1e-10


def band_mask(atlas: Atlas, T: float) -> Dict[str, np.ndarray]:
    """Nodes inside some closed cutoff band e^{-T+1} <= r_i <= e^{-T+2} (one node of slack)."""
    lo, hi = math.exp(-T + 1.0), math.exp(-T + 2.0)
    masks = {}
    for chart in atlas.charts:
        mask = np.zeros(chart.shape, dtype=bool)
        for height in atlas.heights:
            r = np.hypot(chart.rho, chart.z - height)
            mask |= (r >= lo * (1.0 - 1e-12)) & (r <= hi * (1.0 + 1e-12))
        masks[chart.name] = mask
    return masks


def divergence_source(data: ConformalData) -> ScalarField:
    """f = div_ghat E_hat at the nodes, closed form; odd across the cut."""
    atlas = data.require_atlas()
    return ScalarField(atlas, {c.name: data.background.chart_invariants(atlas, c).div for c in atlas.charts}, "odd")


def _barrier_comparison(phi: ScalarField, f_sup: float, data: ConformalData, barrier: Optional[BarrierReport]
                        ) -> BarrierComparison:
    glue = data.background.glue
    reason = barrier_precondition(glue.m, glue.T)
    if reason is not None:
        return BarrierComparison(available=False, reason=reason)
    if barrier is None:
        barrier = verify_barrier(glue.m, glue.T, data.atlas)
    if barrier.c_measured <= 0.0:
        return BarrierComparison(available=False, reason="barrier constant c is not positive")
    w, _ = barrier_field(glue, data.atlas)
    K = f_sup / (barrier.c_measured * math.exp(-glue.T))
    worst = -math.inf
    for chart in data.atlas.charts:
        active = chart.active
        worst = max(worst, float(np.max(np.abs(phi[chart.name][active]) - K * w[chart.name][active])))
    return BarrierComparison(
        available=True, ratio=phi.sup() / w.sup(), K=K,
        holds=bool(worst <= 1e-12 * max(phi.sup(), 1e-300)), worst_margin=worst,
    )


def _corrected_field(data: ConformalData, phi: ScalarField) -> VectorField:
    """E' = E_hat - d phi on every chart."""
    return VectorField(data.atlas, {
        c.name: data.electric[c.name] - chart_gradient(c, phi[c.name]) for c in data.atlas.charts
    })


def _neck_defect(div: ScalarField) -> Tuple[Dict[str, np.ndarray], float]:
    """The divergence left on the neck equation rows, as a right-hand side, and its sup."""
    rhs, worst = {}, 0.0
    for chart in div.atlas.charts:
        values = np.zeros(chart.shape)
        if chart.kind == "cylinder":
            rows = chart.pde_rows("odd")
            values[rows] = np.nan_to_num(div[chart.name][rows], nan=0.0, posinf=0.0, neginf=0.0)
            worst = max(worst, float(np.max(np.abs(values[rows & chart.owned]), initial=0.0)))
        rhs[chart.name] = values
    return rhs, worst


def solve_divergence_fix(data: ConformalData, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                         barrier: Optional[BarrierReport] = None,
                         correction_passes: int = DEFECT_PASSES) -> Tuple[ConformalData, DivergenceFixReport]:
    """
    Returns the divergence-fixed data (E' = E_hat - d phi, provenance divergence-fixed)
    and the report. Raises GluingError when f leaks out of the cutoff bands.

    The first solve uses the closed-form source. Each correction pass solves again with
    the discrete divergence of E' left on the neck equation rows, so the grid divergence
    operator applied to E' vanishes there and not only the Laplacian residual.
    Before and after norms are the discrete divergence over owned nodes.
    """
    data.require("glued")
    atlas = data.require_atlas()
    metric = data.metric
    console.info(f"[DivergenceFix] Solving Delta phi = div E_hat on M+ (T={atlas.T})")

    f = divergence_source(data)
    f_sup = f.sup()
    bands = band_mask(atlas, atlas.T)
    outside = {c.name: c.active & ~bands[c.name] for c in atlas.charts}
    leak = f.sup(outside)
    if leak > BAND_LEAK_RTOL * max(f_sup, 1e-300) and leak > 0.0:
        raise GluingError(f"div E_hat is not supported in the cutoff bands: max outside = {leak:.3e}, overall = {f_sup:.3e}.")

    before = divergence(data.electric, metric)
    solver = SchwarzSolver(atlas, metric, "odd", tol=tol, max_sweeps=max_sweeps, label="DivergenceFix")
    solution = solver.solve(f.values)
    phi = solution.field
    sweeps = solution.stats.sweeps

    electric = _corrected_field(data, phi)
    after = divergence(electric, metric)
    rhs, defect = _neck_defect(after)
    passes = 0
    for _ in range(correction_passes):
        if defect <= DEFECT_RTOL * max(f_sup, 1e-300):
            break
        correction = solver.solve(rhs)
        trial_phi = ScalarField(atlas, {c.name: phi[c.name] + correction.field[c.name] for c in atlas.charts}, "odd")
        trial_electric = _corrected_field(data, trial_phi)
        trial_after = divergence(trial_electric, metric)
        trial_rhs, trial_defect = _neck_defect(trial_after)
        if trial_defect >= defect:
            console.debug(f"[DivergenceFix] Correction pass stalled at {defect:.3e}; keeping the previous potential.")
            break
        phi, electric, after, rhs, defect = trial_phi, trial_electric, trial_after, trial_rhs, trial_defect
        sweeps += correction.stats.sweeps
        passes += 1
        console.debug(f"[DivergenceFix] Correction pass {passes}: neck divergence {defect:.3e}")

    cut_max = max(float(np.max(np.abs(phi[neck.name][0, :]))) for neck in atlas.necks)
    comparison = _barrier_comparison(phi, f_sup, data, barrier)

    report = DivergenceFixReport(
        phi=phi,
        source_sup=f_sup,
        residual_norm_before=before.sup(),
        residual_norm_after=after.sup(),
        weighted_before=weighted_sup_norm(before, 3.0),
        weighted_after=weighted_sup_norm(after, 3.0),
        correction_passes=passes,
        out_of_band_source=leak,
        sup_phi=phi.sup(),
        weighted_phi=weighted_sup_norm(phi, 1.0),
        cut_max=cut_max,
        overlap_consistency=overlap_consistency(phi),
        barrier_margin=comparison,
        iterations=sweeps,
        schwarz=solution.stats,
    )
    fixed = ConformalData(atlas, metric, electric, "divergence-fixed", data.background, potential=phi)
    console.success(f"[DivergenceFix] sup|phi|={report.sup_phi:.6e}, weighted div "
                    f"{report.weighted_before:.3e} -> {report.weighted_after:.3e} "
                    f"({passes} correction passes, {report.iterations} sweeps)")
    return fixed, report
