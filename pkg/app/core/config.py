# app/core/config.py
# The module provides process-level settings using Pydantic's BaseSettings.
# It loads configuration from environment variables and a .env file.
# Run-level numerics (mass, gluing scale, grids, tolerances) live in PipelineConfig.
# Date: 2026-10-19
# Version: 0.2.0

import os
from typing import Literal

from pydantic_settings import BaseSettings


ROOT_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

class Settings(BaseSettings):
    """
    Application settings are loaded from environment variables and .env file.
    Every field has a default, so the lab runs without any .env present.
    """
    PROJECT_NAME: str = "GluedMP Lab"
    API_V1_STR: str = "/api/v1"

    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # number of worker processes used by parameter sweeps
    SWEEP_WORKERS: int = 2

    # significant digits for floats in CSV and console output
    FLOAT_DIGITS: int = 17

    # workspace settings, with default values
    WORKSPACE_DIR: str = os.path.join(ROOT_DIR, "workspace")
    RUNS_DIR: str = os.path.join(WORKSPACE_DIR, "runs")

    class Config:
        env_file = os.path.join(ROOT_DIR, ".env")
        env_file_encoding = 'utf-8'
        case_sensitive = False

settings = Settings()
