# tests/test_pipeline.py

import csv
import json
import math
import os

import pytest

from app.core.errors import StageError
from app.schemas.pipeline_schemas import LambdaBands, SweepRow
from app.services.pipeline_executor import PipelineExecutor, assemble_report, build_plan, run_pipeline
from app.services.report_writer import SWEEP_COLUMNS, render_markdown, write_sweep_csv
from app.services.sweep_runner import _monotone, run_single, run_sweep, sweep_configs

from tests.conftest import MASS


def test_plan_stops_at_the_requested_stage(coarse_config):
    plan = build_plan(coarse_config, "solve")["plan"]
    assert [step["step_name"] for step in plan] == ["glue", "solve"]
    assert [step["step_number"] for step in plan] == [1, 2]
    assert plan[1]["parameters"]["state"] == "{{steps.glue.output.state}}"


def test_full_plan_wires_horizon_into_diagnostics(coarse_config):
    plan = build_plan(coarse_config)["plan"]
    assert [step["tool_name"] for step in plan] == [
        "glue_mp_data", "solve_constraints", "find_outermost_horizon", "measure_invariants",
    ]
    assert plan[3]["parameters"]["horizon"] == "{{steps.horizon.output.horizon}}"


def test_plan_rejects_unknown_stage(coarse_config):
    with pytest.raises(ValueError):
        build_plan(coarse_config, "evolve")


def test_parameter_references():
    executor = PipelineExecutor("test")
    executor.context = {"glue": {"output": {"state": "data"}}}
    resolved = executor._resolve_parameters({"state": "{{steps.glue.output.state}}", "tol": 1e-3})
    assert resolved == {"state": "data", "tol": 1e-3}
    with pytest.raises(ValueError):
        executor._resolve_parameters({"state": "{{glue.output.state}}"})
    with pytest.raises(ValueError):
        executor._resolve_parameters({"state": "{{steps.solve.output.state}}"})


def test_executor_rejects_malformed_plans():
    with pytest.raises(ValueError):
        PipelineExecutor("test").execute_plan({"steps": []})


def test_lambda_bands():
    bands = LambdaBands.for_mass(1.0, 1.01)
    assert bands.mass_bound == pytest.approx(2.02)
    assert bands.area_bound == pytest.approx(8.0 * math.pi * 1.01 ** 2)
    assert bands.charge_bound == pytest.approx(2.0 / 1.01)


def test_report_of_an_empty_context(coarse_config):
    report = assemble_report(coarse_config, {})
    assert report.final_status == "failed"
    assert report.stages == []
    assert report.deficit is None
    assert report.lambda_bands.mass_ok is None
    assert "out" not in report.inputs
    assert "Status: **failed**" in render_markdown(report)


def test_failing_stage_keeps_a_partial_report(coarse_config):
    config = coarse_config.model_copy(update={"r_out": 10.0})
    with pytest.raises(StageError) as info:
        run_pipeline(config)
    assert info.value.stage == "glue"
    assert info.value.partial_report["final_status"] == "failed"
    assert info.value.partial_report["stages"] == []
    with open(os.path.join(config.out, "report.json"), encoding="utf-8") as f:
        assert json.load(f)["failed_stage"] == "glue"


def test_glue_stage_only(coarse_config):
    report = run_pipeline(coarse_config, until="glue")
    assert report.final_status == "completed"
    assert report.stages == ["glue"]
    assert report.glued_residuals.gauss_sup > 0.0
    assert report.neck_spacing > 0.0
    assert report.lichnerowicz is None
    assert os.path.isfile(os.path.join(coarse_config.out, "report.md"))


@pytest.mark.slow
def test_full_pipeline_on_a_coarse_grid(coarse_config):
    config = coarse_config.model_copy(update={"exclusion_scan": False})
    report = run_pipeline(config)
    assert report.stages == ["glue", "solve", "horizon", "diagnostics"]
    assert report.m_tilde == pytest.approx(2.0 * MASS, rel=5e-2)
    assert report.Q_tilde == pytest.approx(2.0 * MASS, rel=5e-2)
    assert report.deficit < 0.0
    assert report.area_bound.respected
    assert "outermost horizon not certified" in report.unmet_hypotheses
    written = set(os.listdir(config.out))
    assert {"report.json", "report.md", "field_phi.csv", "field_psi.csv"} <= written


def test_sweep_configs_put_masses_outermost(coarse_config):
    config = coarse_config.model_copy(update={"sweep_masses": [0.05, 0.02], "sweep_T": [8.0, 9.0]})
    configs = sweep_configs(config, "out")
    assert [(c.m, c.T) for c in configs] == [(0.05, 8.0), (0.05, 9.0), (0.02, 8.0), (0.02, 9.0)]
    assert configs[0].out == os.path.join("out", "m0.05_T8")
    assert all(not c.sweep_masses and not c.sweep_T for c in configs)


def test_empty_sweep_is_rejected(coarse_config):
    with pytest.raises(ValueError):
        sweep_configs(coarse_config)


def test_monotone_flags():
    target = -0.0060660
    rows = [SweepRow(m=0.05, T=T, deficit=target + gap) for T, gap in ((8.0, 1e-3), (9.0, 5e-4), (10.0, 1e-4))]
    assert _monotone(rows) == {"0.05": True}
    rows.append(SweepRow(m=0.05, T=11.0, deficit=target + 2e-4))
    assert _monotone(rows) == {"0.05": False}
    assert _monotone([SweepRow(m=0.05, T=8.0, deficit=target)]) == {}


def test_failing_sweep_point_becomes_a_row(coarse_config):
    row = run_single(coarse_config.model_copy(update={"r_out": 10.0, "out": None}))
    assert row.status == "failed"
    assert "glue" in row.error
    assert row.deficit is None


def test_sweep_writes_its_table(coarse_config, tmp_path):
    config = coarse_config.model_copy(update={
        "r_out": 10.0, "out": str(tmp_path / "sweep"), "sweep_masses": [0.05], "sweep_T": [8.0, 9.0], "workers": 1,
    })
    report = run_sweep(config)
    assert [row.status for row in report.rows] == ["failed", "failed"]
    with open(report.csv_path, newline="", encoding="utf-8") as f:
        table = list(csv.reader(f))
    assert table[0] == SWEEP_COLUMNS
    assert len(table) == 3
    assert table[1][SWEEP_COLUMNS.index("horizon_ok")] == "false"
    assert os.path.isfile(os.path.join(config.out, "sweep.json"))


def test_sweep_csv_formats_cells(tmp_path):
    row = SweepRow(m=0.05, T=8.0, deficit=-0.1, horizon_ok=True)
    path = write_sweep_csv([row], str(tmp_path / "rows.csv"))
    with open(path, newline="", encoding="utf-8") as f:
        table = list(csv.DictReader(f))
    assert table[0]["m"] == "0.050000000000000003"
    assert table[0]["deficit"] == "-0.10000000000000001"
    assert table[0]["horizon_ok"] == "true"
    assert table[0]["h"] == ""
