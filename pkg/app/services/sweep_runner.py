# app/services/sweep_runner.py
# Parameter sweeps over (m, T): independent pipeline runs executed in a process pool,
# collected in deterministic order into one CSV row each.
# Date: 2026-10-19
# Version: 0.1.0

import multiprocessing
import os
import time
from typing import Dict, List, Optional

from app.core.config import settings
from app.core.errors import StageError
from app.core.logger import console
from app.schemas.diagnostics_schemas import DecayStudy
from app.schemas.pipeline_schemas import PenroseReport, PipelineConfig, SweepReport, SweepRow
from app.services.background import analytic_summary
from app.services.diagnostics import decay_fit
from app.services.pipeline_executor import run_pipeline
from app.services.report_writer import save_json, write_sweep_csv

MIN_FIT_POINTS = 3


def sweep_configs(config: PipelineConfig, out_dir: Optional[str] = None) -> List[PipelineConfig]:
    """One config per (m, T) of sweep_masses x sweep_T, masses outermost, in list order."""
    if not config.sweep_masses or not config.sweep_T:
        raise ValueError("Empty sweep: sweep_masses and sweep_T must both be nonempty.")
    configs = []
    for m in config.sweep_masses:
        for T in config.sweep_T:
            run_out = os.path.join(out_dir, f"m{m:g}_T{T:g}") if out_dir else None
            configs.append(config.model_copy(update={"m": m, "T": T, "out": run_out,
                                                     "sweep_masses": [], "sweep_T": []}))
    return configs


def _row(config: PipelineConfig, report: PenroseReport, status: str, error: Optional[str] = None) -> SweepRow:
    horizon = report.horizon
    certificate = horizon.outermost_certificate if horizon is not None else None
    glued = report.glued_residuals
    return SweepRow(
        m=config.m, T=config.T, h=report.neck_spacing,
        m_tilde=report.m_tilde, Q_tilde=report.Q_tilde, A_tilde=report.A_tilde, R_tilde=report.R_tilde,
        deficit=report.deficit,
        gauss_residual=glued.gauss_sup if glued is not None else None,
        div_residual=glued.div_sup if glued is not None else None,
        horizon_ok=bool(horizon is not None and len(horizon.components) == 2),
        exclusion_ok=bool(certificate is not None and certificate.passed),
        wall_time=report.wall_time, status=status, error=error,
    )


def run_single(config: PipelineConfig) -> SweepRow:
    """One sweep point; a failing run becomes a row tagged 'failed' instead of raising."""
    start = time.perf_counter()
    write = config.out is not None
    try:
        report = run_pipeline(config, write=write)
        return _row(config, report, "completed")
    except StageError as e:
        console.warning(f"[Sweep] m={config.m}, T={config.T} failed in stage '{e.stage}'")
        report = PenroseReport.model_validate(e.partial_report)
        return _row(config, report, "failed", str(e))
    except Exception as e:
        console.exception(f"[Sweep] m={config.m}, T={config.T} failed")
        return SweepRow(m=config.m, T=config.T, wall_time=time.perf_counter() - start, status="failed", error=str(e))


def _monotone(rows: List[SweepRow]) -> Dict[str, bool]:
    flags = {}
    for m in sorted({row.m for row in rows}):
        points = sorted((row.T, row.deficit) for row in rows if row.m == m and row.deficit is not None)
        if len(points) < 2:
            continue
        target = analytic_summary(m).deficit
        gaps = [abs(d - target) for _, d in points]
        flags[f"{m:g}"] = all(b < a for a, b in zip(gaps, gaps[1:]))
    return flags


def _decay_fits(rows: List[SweepRow]) -> Dict[str, List[DecayStudy]]:
    fits = {}
    for m in sorted({row.m for row in rows}):
        done = sorted((r for r in rows if r.m == m and r.gauss_residual is not None), key=lambda r: r.T)
        if len({r.T for r in done}) < MIN_FIT_POINTS:
            continue
        fits[f"{m:g}"] = [
            decay_fit([(r.T, r.gauss_residual) for r in done], "exponential", "gauss_residual"),
            decay_fit([(r.T, r.div_residual) for r in done], "exponential", "div_residual"),
        ]
    return fits


def run_sweep(config: PipelineConfig, out_dir: Optional[str] = None) -> SweepReport:
    """
    Runs every (m, T) of the sweep lists, concurrently when more than one worker is
    configured. Rows keep the order of sweep_configs, so serial and concurrent runs
    produce identical numeric output. Writes sweep.csv and sweep.json when `out_dir`
    (or config.out) is given.
    """
    out_dir = out_dir or config.out
    configs = sweep_configs(config, out_dir)
    workers = min(config.workers or settings.SWEEP_WORKERS, len(configs))
    console.rule(f"[Sweep] {len(configs)} runs on {workers} worker(s)")

    if workers > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            rows = pool.map(run_single, configs)
    else:
        rows = [run_single(c) for c in console.get_progress_tracker(configs, description="Sweep")]

    report = SweepReport(rows=rows, deficit_monotone=_monotone(rows), decay_fits=_decay_fits(rows))
    console.display_rows([row.model_dump() for row in rows],
                         ["m", "T", "deficit", "gauss_residual", "div_residual", "horizon_ok", "status"], "Sweep")
    for m, flag in report.deficit_monotone.items():
        log = console.success if flag else console.warning
        log(f"[Sweep] m={m}: deficit approaches the analytic value monotonically in T: {flag}")
    if out_dir:
        report.csv_path = write_sweep_csv(rows, os.path.join(out_dir, "sweep.csv"))
        save_json(os.path.join(out_dir, "sweep.json"), report.model_dump(mode="json"))
    return report
