# app/cli.py
# Command-line surface of the lab: mp-info, glue, solve, horizon, report and sweep.
# Config precedence: PipelineConfig defaults < JSON document (--config) < flags.
# Exit codes: 0 success, 1 failed stage, 2 invalid configuration.
# Date: 2026-10-19
# Version: 0.1.0

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import StageError
from app.core.logger import console
from app.schemas.pipeline_schemas import PenroseReport, PipelineConfig
from app.services.background import analytic_summary
from app.services.pipeline_executor import run_pipeline
from app.services.report_writer import save_json
from app.services.sweep_runner import run_sweep

EXIT_OK = 0
EXIT_STAGE_FAILED = 1
EXIT_INVALID = 2


def _pair(text: str) -> List[int]:
    """'96x192' or '96,192' -> [96, 192]."""
    parts = text.replace("x", ",").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two resolutions like 96x192, got '{text}'")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolutions must be integers, got '{text}'")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON document with PipelineConfig fields")
    common.add_argument("--mass", type=float, default=None, help="puncture mass m")
    common.add_argument("--T", type=float, default=None, help="gluing scale T (>= 3)")
    common.add_argument("--grid-exterior", type=_pair, default=None, help="exterior nodes n_rho x n_z, e.g. 160x512")
    common.add_argument("--grid-neck", type=_pair, default=None, help="neck nodes n_s x n_theta, e.g. 97x33")
    common.add_argument("--match-refinement", type=float, default=None, help="exterior node weight within r_match of each puncture")
    common.add_argument("--r-out", type=float, default=None, help="truncation radius of the exterior chart")
    common.add_argument("--tol", type=float, default=None, help="Schwarz interface tolerance")
    common.add_argument("--mode", choices=["newton", "fixed-point"], default=None, help="Lichnerowicz iteration")
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None)

    parser = argparse.ArgumentParser(prog="gluedmp", description="Glued Majumdar-Papapetrou numerical lab")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mp-info", parents=[common], help="closed-form reference values of the MP pair")
    for name, text in (("glue", "atlas, glued data and residuals"),
                       ("solve", "glue, divergence fix and Lichnerowicz solve"),
                       ("horizon", "solve, then find the outermost horizon"),
                       ("report", "full pipeline with diagnostics")):
        sub.add_parser(name, parents=[common], help=text)
    sweep = sub.add_parser("sweep", parents=[common], help="concurrent sweep over masses x gluing scales")
    sweep.add_argument("--masses", type=_floats, default=None, help="comma-separated masses")
    sweep.add_argument("--Ts", type=_floats, default=None, help="comma-separated gluing scales")
    sweep.add_argument("--workers", type=int, default=None, help="number of sweep processes")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    """Defaults, then the JSON document, then explicit flags. Raises ValidationError."""
    data: Dict[str, Any] = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            data.update(json.load(f))
    flags = {
        "m": args.mass, "T": args.T, "grid_exterior": args.grid_exterior, "grid_neck": args.grid_neck,
        "match_refinement": args.match_refinement,
        "r_out": args.r_out, "tol": args.tol, "mode": args.mode, "out": args.out,
        "sweep_masses": getattr(args, "masses", None), "sweep_T": getattr(args, "Ts", None),
        "workers": getattr(args, "workers", None),
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    return PipelineConfig.model_validate(data)


def _summary(report: PenroseReport) -> Dict[str, Any]:
    return {
        "status": report.final_status, "stages": report.stages,
        "m_tilde": report.m_tilde, "Q_tilde": report.Q_tilde, "A_tilde": report.A_tilde,
        "R_tilde": report.R_tilde, "deficit": report.deficit,
        "analytic_deficit": report.analytic_reference.deficit, "wall_time": report.wall_time,
    }


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        console.set_level(args.log_level)

    try:
        config = load_config(args)
    except ValidationError as e:
        console.display_error_panel("config", str(e), hint="Check m > 0, T >= 3 and positive resolutions.")
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as e:
        console.display_error_panel("config", f"Could not read {args.config}: {e}")
        return EXIT_INVALID

    if args.command == "mp-info":
        summary = analytic_summary(config.m)
        console.display_data_as_table(summary.model_dump(), f"Majumdar-Papapetrou pair, m={config.m}")
        if config.out:
            save_json(os.path.join(config.out, "analytic.json"), summary.model_dump(mode="json"))
        print(summary.model_dump_json(indent=2))
        return EXIT_OK

    if args.command == "sweep":
        try:
            report = run_sweep(config)
        except ValueError as e:
            console.display_error_panel("sweep", str(e), hint="Pass --masses and --Ts, or sweep lists in --config.")
            return EXIT_INVALID
        failed = [row for row in report.rows if row.status != "completed"]
        return EXIT_STAGE_FAILED if failed else EXIT_OK

    try:
        report = run_pipeline(config, until=args.command)
    except StageError as e:
        console.display_error_panel(e.stage, str(e), hint="See report.json in the output directory for the stages that ran.")
        return EXIT_STAGE_FAILED
    console.display_data_as_table(_summary(report), f"{settings.PROJECT_NAME}: {args.command}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
