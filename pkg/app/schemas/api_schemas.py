# app/schemas/api_schemas.py
# This module defines the Pydantic models for the public-facing API endpoints.
# It ensures the data returned to the client is structured and validated.
# Date: 2026-10-19
# Version: 0.2.0

from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class TaskCreationResponse(BaseModel):
    """
    The response returned to the user immediately after submitting a pipeline run.
    """
    message: str
    task_id: str


class TaskStatusResponse(BaseModel):
    """
    The detailed response when a user queries the status of a pipeline run.
    """
    task_id: str
    status: str
    details: Optional[str] = None
    error: Optional[str] = None
    report: Optional[Dict[str, Any]] = None


class ToolListResponse(BaseModel):
    tools: List[Dict[str, Any]]
