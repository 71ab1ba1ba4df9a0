# app/schemas/tool_schemas.py
# The module defines Pydantic models for input parameters of the pipeline stage tools.
# Grid objects handed from one stage to the next ride in `state`, which the executor
# resolves from a step reference such as {{steps.glue.output.state}}.
# Date: 2026-10-19
# Version: 0.2.0

from typing import Any, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field


class StageInput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


# Gluing Tool Input Schema
class GluingToolInput(StageInput):
    """
    Defines the input parameters for building the atlas and the glued data.
    """
    m: float = Field(..., gt=0.0, description="Common puncture mass.")
    T: float = Field(..., ge=3.0, description="Gluing scale; the cut sits at r_i = e^{-T}.")
    cutoff_profile: Literal["quintic", "septic"] = Field("quintic", description="Cutoff smoothstep in log r.")
    separation: float = Field(1.0, gt=0.0, description="Punctures sit at z = +separation and z = -separation.")
    grid_exterior: Tuple[int, int] = Field((160, 512), description="Nodes (n_rho, n_z) of the exterior chart.")
    grid_neck: Tuple[int, int] = Field((97, 33), description="Nodes (n_s, n_theta) of each neck chart.")
    match_refinement: float = Field(200.0, ge=0.0, description="Extra exterior node density around r_match of each puncture.")
    r_out: float = Field(40.0, gt=0.0, description="Truncation radius of the exterior chart.")
    r_match: float = Field(0.1, gt=0.0)
    r_hole: float = Field(0.05, gt=0.0)


# Constraint Tool Input Schema
class ConstraintToolInput(StageInput):
    """
    Defines the input parameters for the barrier check, the divergence fix and the Lichnerowicz solve.
    """
    state: Any = Field(..., description="Glued conformal data, usually {{steps.glue.output.state}}.")
    tol: float = Field(1e-12, gt=0.0, description="Relative interface tolerance of the Schwarz sweeps.")
    max_sweeps: int = Field(400, gt=0)
    lichnerowicz_tol: float = Field(1e-10, gt=0.0, description="Residual tolerance of the Lichnerowicz solve.")
    mode: Literal["newton", "fixed-point"] = Field("newton", description="Lichnerowicz iteration.")
    eps: float = Field(0.05, gt=0.0, description="Radius of D(eps) in the barrier preconditions.")


# Horizon Tool Input Schema
class HorizonToolInput(StageInput):
    """
    Defines the input parameters for the neck horizon search and the exterior exclusion scan.
    """
    state: Any = Field(..., description="Solved conformal data, usually {{steps.solve.output.state}}.")
    eps: float = Field(0.05, gt=0.0, description="Radius of the puncture disks D(eps).")
    max_steps: int = Field(20000, gt=0, description="Step cap of every area descent.")
    scan: bool = Field(True, description="Run the exterior exclusion scan.")


# Diagnostics Tool Input Schema
class DiagnosticsToolInput(StageInput):
    """
    Defines the input parameters for the asymptotic invariants and the Penrose deficit.
    """
    state: Any = Field(..., description="Solved conformal data.")
    horizon: Any = Field(None, description="HorizonSet of the horizon stage; None skips the area terms.")
    m: float = Field(..., gt=0.0, description="Puncture mass of the glued data.")
