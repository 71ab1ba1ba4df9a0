# app/api/endpoints.py
# This module defines the API endpoints of the lab.
# It submits pipeline runs as background tasks and serves their status and reports.
# Date: 2026-10-19
# Version: 0.2.0

import json
import os
import uuid

from fastapi import APIRouter, BackgroundTasks, HTTPException

from app.core.config import settings
from app.core.errors import StageError
from app.core.logger import console
from app.schemas.api_schemas import TaskCreationResponse, TaskStatusResponse, ToolListResponse
from app.schemas.background_schemas import AnalyticSummary
from app.schemas.pipeline_schemas import PipelineConfig
from app.services.background import analytic_summary
from app.services.pipeline_executor import run_pipeline
from app.services.report_writer import save_json
from app.services.tools import ALL_TOOL_DEFS

router = APIRouter()


def _run_pipeline_task(task_id: str, config: PipelineConfig):
    """
    Runs the full pipeline in the background. _status.json moves through
    running -> completed | failed; report.json and report.md are written by the pipeline.
    """
    task_dir = os.path.join(settings.RUNS_DIR, task_id)
    status_file = os.path.join(task_dir, "_status.json")
    save_json(status_file, {"status": "running", "details": f"Pipeline running for m={config.m}, T={config.T}"})
    try:
        run_pipeline(config.model_copy(update={"out": task_dir}), run_id=task_id)
        save_json(status_file, {"status": "completed", "details": "Pipeline finished successfully."})
        console.success(f"Task {task_id} completed successfully.")
    except StageError as e:
        save_json(status_file, {"status": "failed", "details": f"Stage '{e.stage}' failed.", "error": str(e)})
    except Exception as e:
        console.exception(f"Task {task_id} failed during execution.")
        save_json(status_file, {"status": "failed", "error": str(e)})


@router.post("/pipeline/run", response_model=TaskCreationResponse, status_code=202)
async def submit_pipeline(config: PipelineConfig, background_tasks: BackgroundTasks):
    """
    Accepts a PipelineConfig, creates a task id and runs the pipeline in the background.
    Outputs go to RUNS_DIR/<task_id>/.
    """
    task_id = uuid.uuid4().hex
    task_dir = os.path.join(settings.RUNS_DIR, task_id)
    os.makedirs(task_dir, exist_ok=True)
    save_json(os.path.join(task_dir, "_status.json"), {"status": "queued", "details": "Waiting for a worker."})
    console.info(f"Created task {task_id}: m={config.m}, T={config.T}")
    background_tasks.add_task(_run_pipeline_task, task_id, config)
    return {"message": "Pipeline run accepted. Processing in the background.", "task_id": task_id}


@router.get("/pipeline/status/{task_id}", response_model=TaskStatusResponse)
async def get_task_status(task_id: str):
    """
    Status of a pipeline run, with its report once one has been written.
    Raises 404 when the task id is unknown.
    """
    task_dir = os.path.join(settings.RUNS_DIR, os.path.basename(task_id))
    if not os.path.isdir(task_dir):
        raise HTTPException(status_code=404, detail=f"Task with ID '{task_id}' not found.")

    def _read_json_file(path):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (FileNotFoundError, json.JSONDecodeError):
            return None

    response_data = {"task_id": task_id, "status": "unknown"}
    status_data = _read_json_file(os.path.join(task_dir, "_status.json"))
    if status_data:
        response_data.update(status_data)
    response_data["report"] = _read_json_file(os.path.join(task_dir, "report.json"))
    return response_data


@router.get("/analytic/{m}", response_model=AnalyticSummary)
async def get_analytic_summary(m: float):
    """Closed-form reference values of the symmetric MP pair of mass m."""
    if m <= 0.0:
        raise HTTPException(status_code=422, detail=f"Mass must be positive, got {m}.")
    return analytic_summary(m)


@router.get("/tools", response_model=ToolListResponse)
async def list_tools():
    """The pipeline stage tools with their JSON input schemas."""
    return {"tools": ALL_TOOL_DEFS}
