# tests/conftest.py
# Shared fixtures: a coarse atlas at a small gluing scale and the data living on it.

import pytest

from app.core.config import settings
from app.schemas.background_schemas import GlueParams, MPParams
from app.schemas.grid_schemas import GridSpec
from app.schemas.pipeline_schemas import PipelineConfig
from app.services.background import evaluate_glued, evaluate_mp
from app.services.geometry import build_atlas

MASS = 0.05
SCALE = 8.0
COARSE_GRID = GridSpec(exterior=(96, 320), neck=(49, 17), match_refinement=60.0)


@pytest.fixture(scope="session")
def glue() -> GlueParams:
    return GlueParams(m=MASS, T=SCALE)


@pytest.fixture(scope="session")
def atlas(glue):
    return build_atlas(glue, COARSE_GRID)


@pytest.fixture(scope="session")
def glued(glue, atlas):
    return evaluate_glued(glue, atlas)


@pytest.fixture(scope="session")
def exact_mp(atlas):
    return evaluate_mp(MPParams.symmetric_pair(MASS), atlas)


@pytest.fixture
def coarse_config(tmp_path) -> PipelineConfig:
    return PipelineConfig(m=MASS, T=SCALE, grid_exterior=COARSE_GRID.exterior, grid_neck=COARSE_GRID.neck,
                          match_refinement=COARSE_GRID.match_refinement,
                          out=str(tmp_path / "run"), horizon_max_steps=2000)


@pytest.fixture
def runs_dir(tmp_path, monkeypatch):
    path = tmp_path / "runs"
    path.mkdir()
    monkeypatch.setattr(settings, "RUNS_DIR", str(path))
    return path
