# app/services/pipeline_executor.py
# This module contains the PipelineExecutor class, which executes a deterministic plan of
# stage tools (glue -> solve -> horizon -> diagnostics), and run_pipeline, which turns the
# execution context into a PenroseReport.
# Date: 2026-10-19
# Version: 0.2.0

import math
import os
import time
import uuid
from typing import Any, Dict, List, Optional

from app.core.config import settings
from app.core.errors import StageError
from app.core.logger import console
from app.schemas.pipeline_schemas import STAGE_ORDER, AreaBound, LambdaBands, PenroseReport, PipelineConfig
from app.services.background import analytic_summary
from app.services.diagnostics import CHARGE_RTOL, MASS_RTOL
from app.services.horizon.exclusion import FLOOR_TOLERANCE
from app.services.horizon.finder import horizon_tolerance
from app.services.report_writer import write_report
from app.services.tools import ConstraintTool, DiagnosticsTool, GluingTool, HorizonTool

# steps each requested stage needs, in execution order
STAGE_STEPS = {
    "glue": ("glue",),
    "solve": ("glue", "solve"),
    "horizon": ("glue", "solve", "horizon"),
    "report": ("glue", "solve", "horizon", "diagnostics"),
}
SMALL_MASS = 0.25
SMALL_ETA = 0.1
AREA_RTOL = 1e-4


def build_plan(config: PipelineConfig, until: str = "report") -> Dict[str, List[Dict[str, Any]]]:
    """The plan for `config` up to stage `until`; a pure function of its arguments."""
    if until not in STAGE_STEPS:
        raise ValueError(f"Unknown stage '{until}'; expected one of {STAGE_ORDER}.")
    steps = {
        "glue": {
            "tool_name": "glue_mp_data",
            "description": f"Build the atlas and glue MP data at m={config.m}, T={config.T}",
            "parameters": {
                "m": config.m, "T": config.T, "cutoff_profile": config.cutoff_profile,
                "separation": config.separation, "grid_exterior": config.grid_exterior,
                "grid_neck": config.grid_neck, "r_out": config.r_out, "r_match": config.r_match,
                "r_hole": config.r_hole, "match_refinement": config.match_refinement,
            },
        },
        "solve": {
            "tool_name": "solve_constraints",
            "description": "Barrier check, divergence fix and Lichnerowicz solve",
            "parameters": {
                "state": "{{steps.glue.output.state}}", "tol": config.tol, "max_sweeps": config.max_sweeps,
                "lichnerowicz_tol": config.lichnerowicz_tol, "mode": config.mode, "eps": config.eps,
            },
        },
        "horizon": {
            "tool_name": "find_outermost_horizon",
            "description": "Neck minimal surfaces and the exterior exclusion scan",
            "parameters": {
                "state": "{{steps.solve.output.state}}", "eps": config.eps,
                "max_steps": config.horizon_max_steps, "scan": config.exclusion_scan,
            },
        },
        "diagnostics": {
            "tool_name": "measure_invariants",
            "description": "ADM mass, total charge and the charged Penrose deficit",
            "parameters": {
                "state": "{{steps.solve.output.state}}", "horizon": "{{steps.horizon.output.horizon}}",
                "m": config.m,
            },
        },
    }
    plan = []
    for number, name in enumerate(STAGE_STEPS[until], start=1):
        plan.append({"step_number": number, "step_name": name, **steps[name]})
    return {"plan": plan}


class PipelineExecutor:
    """
    Executes the stage tools of a plan in sequence.
    Manages the state and data flow between steps.
    """
    def __init__(self, run_id: str):
        self.run_id = run_id
        self.context: Dict[str, Any] = {}
        self._register_tools()
        console.info(f"[Pipeline] Initialized for run {self.run_id}")

    def _register_tools(self):
        """Initializes all tool classes and maps them to their names."""
        self.tools = {
            "glue_mp_data": GluingTool().execute,
            "solve_constraints": ConstraintTool().execute,
            "find_outermost_horizon": HorizonTool().execute,
            "measure_invariants": DiagnosticsTool().execute,
        }
        console.debug(f"[Pipeline] Registered tools: {list(self.tools.keys())}")

    def _resolve_parameters(self, params: dict) -> dict:
        """
        Replaces references like {{steps.glue.output.state}} with the named output of an
        earlier step.
        """
        resolved_params = {}
        for key, value in params.items():
            if isinstance(value, str) and value.startswith("{{") and value.endswith("}}"):
                ref_parts = value.strip('{}').split('.')
                if len(ref_parts) != 4 or ref_parts[0] != "steps" or ref_parts[2] != "output":
                    raise ValueError(f"Invalid reference format: {value}")
                step_name_ref, output_key = ref_parts[1], ref_parts[3]
                output = self.context.get(step_name_ref, {}).get("output", {})
                if output_key not in output:
                    raise ValueError(f"Could not resolve reference '{value}': key '{output_key}' "
                                     f"not found in output of '{step_name_ref}'.")
                resolved_params[key] = output[output_key]
            else:
                resolved_params[key] = value
        return resolved_params

    def execute_plan(self, plan: Dict[str, List[Dict]]) -> Dict[str, Any]:
        """
        Executes the plan step by step; stops at the first step whose tool does not report
        success. context["final_status"] is {"status": "completed"} or
        {"status": "failed", "step": ..., "error": ...}.
        """
        console.rule(f"[Pipeline] Run {self.run_id}", style="bold magenta")
        self.context = {}
        if "plan" not in plan or not isinstance(plan["plan"], list):
            raise ValueError("Invalid plan format: must be a dict with a 'plan' key containing a list of steps.")

        failure: Optional[Dict[str, Any]] = None
        for step in sorted(plan["plan"], key=lambda s: s["step_number"]):
            name, tool_name = step["step_name"], step["tool_name"]
            console.info(f"[Pipeline] Step {step['step_number']}: {step.get('description', name)} (tool '{tool_name}')")
            start = time.perf_counter()
            try:
                resolved_params = self._resolve_parameters(step.get("parameters", {}))
                result = self.tools[tool_name](tool_input=resolved_params)
            except Exception as e:
                console.exception(f"[Pipeline] Critical error executing tool '{tool_name}' in step '{name}'")
                result = {"status": "failed", "error": str(e)}
            elapsed = time.perf_counter() - start
            self.context[name] = {"tool_name": tool_name, "status": result.get("status"), "output": result,
                                  "wall_time": elapsed}
            if result.get("status") != "success":
                failure = {"status": "failed", "step": name, "error": result.get("error", "unknown error")}
                console.error(f"[Pipeline] Step '{name}' failed: {failure['error']}")
                break

        console.rule("[Pipeline] Plan execution finished", style="bold magenta")
        self.context["final_status"] = failure or {"status": "completed"}
        if failure is None:
            console.success(f"[Pipeline] Run {self.run_id} completed.")
        return self.context


def _output(context: Dict[str, Any], step: str) -> Dict[str, Any]:
    entry = context.get(step, {})
    return entry.get("output", {}) if entry.get("status") == "success" else {}


def _unmet_hypotheses(config: PipelineConfig, solve: Dict[str, Any], horizon: Dict[str, Any]) -> List[str]:
    """Smallness conditions on m and eta under which the construction is expected to work."""
    unmet = []
    if solve.get("barrier_skipped"):
        unmet.append(solve["barrier_skipped"])
    if config.m >= SMALL_MASS:
        unmet.append(f"m={config.m} is not small (threshold {SMALL_MASS})")
    lich = solve.get("lichnerowicz")
    if lich is not None and lich.eta >= SMALL_ETA:
        unmet.append(f"eta=sup|psi|={lich.eta:.4g} is not small (threshold {SMALL_ETA})")
    horizon_set = horizon.get("horizon")
    if horizon_set is not None:
        certificate = horizon_set.outermost_certificate
        if certificate is not None and not certificate.passed:
            unmet.append("exterior exclusion scan did not pass")
        if not horizon_set.outermost:
            unmet.append("outermost horizon not certified")
    return unmet


def assemble_report(config: PipelineConfig, context: Dict[str, Any], wall_time: float = 0.0) -> PenroseReport:
    """PenroseReport from an execution context; stages that did not succeed leave their fields unset."""
    glue, solve = _output(context, "glue"), _output(context, "solve")
    horizon, diag = _output(context, "horizon"), _output(context, "diagnostics")
    final = context.get("final_status", {"status": "failed"})

    bands = LambdaBands.for_mass(config.m, config.lam)
    if "m_tilde" in diag:
        bands.mass_ok = bool(diag["m_tilde"] <= bands.mass_bound)
        bands.charge_ok = bool(diag["Q_tilde"] >= bands.charge_bound)
    if "A_tilde" in diag:
        bands.area_ok = bool(diag["A_tilde"] <= bands.area_bound)

    area_bound = None
    lich = solve.get("lichnerowicz")
    if lich is not None:
        area_bound = AreaBound(eta=lich.eta, bound=8.0 * math.pi * config.m ** 2 * (1.0 + lich.eta) ** 4)
        if "A_tilde" in diag:
            area_bound.respected = bool(diag["A_tilde"] <= area_bound.bound * (1.0 + AREA_RTOL))
        if "m_tilde" in diag:
            area_bound.mass_shift = abs(diag["m_tilde"] - 2.0 * config.m)
            area_bound.mass_shift_over_eta = area_bound.mass_shift / lich.eta if lich.eta > 0.0 else None

    analytic = glue.get("analytic") or analytic_summary(config.m)
    deficit = diag.get("deficit")
    report = PenroseReport(
        inputs=config.model_dump(mode="json", exclude={"sweep_masses", "sweep_T", "workers", "out"}),
        stages=[name for name in STAGE_STEPS["report"] if context.get(name, {}).get("status") == "success"],
        final_status="completed" if final.get("status") == "completed" else "failed",
        failed_stage=final.get("step"),
        error=final.get("error"),
        m_tilde=diag.get("m_tilde"),
        Q_tilde=diag.get("Q_tilde"),
        A_tilde=diag.get("A_tilde"),
        R_tilde=diag.get("R_tilde"),
        deficit=deficit,
        deficit_relative_error=abs(deficit - analytic.deficit) / abs(analytic.deficit) if deficit is not None else None,
        neck_spacing=glue.get("h"),
        analytic_reference=analytic,
        lambda_bands=bands,
        area_bound=area_bound,
        unmet_hypotheses=_unmet_hypotheses(config, solve, horizon),
        glued_residuals=glue.get("residuals"),
        solved_residuals=solve.get("residuals"),
        barrier=solve.get("barrier"),
        divergence_fix=solve.get("divergence_fix"),
        lichnerowicz=lich,
        horizon=horizon.get("horizon"),
        mass=diag.get("mass"),
        charge=diag.get("charge"),
        inequalities=diag.get("inequalities"),
        tolerances={
            "schwarz": config.tol, "lichnerowicz": config.lichnerowicz_tol, "horizon": horizon_tolerance(config.m),
            "mass_agreement": MASS_RTOL, "charge_spread": CHARGE_RTOL, "exclusion_eps": config.eps,
            "curvature_floor": FLOOR_TOLERANCE,
        },
        timings={name: context[name]["wall_time"] for name in STAGE_STEPS["report"] if name in context},
        wall_time=wall_time,
    )
    return report


def run_directory(config: PipelineConfig, run_id: str) -> str:
    return config.out or os.path.join(settings.RUNS_DIR, run_id)


def run_pipeline(config: PipelineConfig, until: str = "report", write: bool = True,
                 run_id: Optional[str] = None) -> PenroseReport:
    """
    Runs the stages up to `until` and returns the report; with `write`, report.json,
    report.md and the field and profile CSVs go to config.out (RUNS_DIR/<run id> when unset).
    Raises StageError carrying the partial report when a stage fails.
    """
    run_id = run_id or uuid.uuid4().hex[:12]
    start = time.perf_counter()
    executor = PipelineExecutor(run_id)
    context = executor.execute_plan(build_plan(config, until))
    report = assemble_report(config, context, time.perf_counter() - start)

    if write:
        solve, horizon = _output(context, "solve"), _output(context, "horizon")
        fields = {}
        if config.export_fields and solve:
            fields = {"phi": solve["divergence_fix"].phi, "psi": solve["lichnerowicz"].psi}
        write_report(report, run_directory(config, run_id), fields, horizon.get("horizon"))

    if report.final_status != "completed":
        raise StageError(report.failed_stage or "unknown", report.error or "unknown error",
                         partial_report=report.model_dump(mode="json"))
    return report
