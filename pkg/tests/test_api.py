# tests/test_api.py

import pytest
from fastapi.testclient import TestClient

from app.core.config import settings
from app.main import app

API = settings.API_V1_STR


@pytest.fixture
def client(runs_dir):
    return TestClient(app)


def test_health_check(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_analytic_summary(client):
    response = client.get(f"{API}/analytic/1")
    assert response.status_code == 200
    body = response.json()
    assert body["mu"] == 2.0
    assert body["deficit"] < 0.0


def test_analytic_summary_needs_positive_mass(client):
    assert client.get(f"{API}/analytic/0").status_code == 422


def test_tool_listing(client):
    tools = client.get(f"{API}/tools").json()["tools"]
    assert [t["tool_name"] for t in tools] == [
        "glue_mp_data", "solve_constraints", "find_outermost_horizon", "measure_invariants",
    ]
    assert all("properties" in t["input_schema"] for t in tools)


def test_unknown_task_is_404(client):
    assert client.get(f"{API}/pipeline/status/nope").status_code == 404


def test_invalid_config_is_rejected(client):
    assert client.post(f"{API}/pipeline/run", json={"m": -1.0}).status_code == 422


def test_failed_run_reports_its_stage(client, runs_dir):
    response = client.post(f"{API}/pipeline/run", json={"m": 0.05, "T": 8.0, "r_out": 10.0})
    assert response.status_code == 202
    task_id = response.json()["task_id"]
    assert (runs_dir / task_id).is_dir()

    status = client.get(f"{API}/pipeline/status/{task_id}").json()
    assert status["status"] == "failed"
    assert "glue" in status["details"]
    assert status["report"]["failed_stage"] == "glue"
