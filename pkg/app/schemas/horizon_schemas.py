# app/schemas/horizon_schemas.py
# Pydantic records of the horizon search: flow runs, horizon components, the exterior
# exclusion certificate and the combined outermost-horizon set.
# Date: 2026-10-19
# Version: 0.1.0

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

FlowOutcome = Literal[
    "minimal", "entered", "collapsed", "left", "pinched", "exited_cut", "left_chart", "stalled", "undetermined",
]


class FlowRun(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    surface: Any = Field(None, exclude=True, description="Final profile (Surface).")
    seed: str
    chart: str
    outcome: FlowOutcome
    steps: int
    time: float = Field(..., description="Flow time reached.")
    max_abs_H: float = Field(..., description="sup |H| over the final profile.")
    pieces: List["FlowRun"] = Field(default_factory=list, description="Runs of the pieces after a pinch.")


class SchwarzschildHorizon(BaseModel):
    m: float
    radius: float = Field(..., description="Coordinate radius with H = 0 (brentq).")
    radius_min_area: float = Field(..., description="Minimizer of the sphere area A(r) (bounded).")
    area: float
    area_exact: float = Field(..., description="16 pi m^2.")
    mass_gap: float = Field(..., description="m - R/2 with R the area radius.")


class HorizonComponent(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    surface: Any = Field(None, exclude=True, description="Profile of the component (Surface).")
    chart: str
    neck: int
    area: float
    area_radius: float
    residual: float = Field(..., description="sup |H| over the profile.")
    tolerance: float
    distance_to_cut: float = Field(..., description="max |F| of the graph s = F(theta).")
    reflection_defect: float = Field(..., description="max |F(theta) - F(pi - theta)|.")
    charge: float = Field(..., description="Flux charge through the component.")
    steps: int


class TrialSurfaceResult(BaseModel):
    name: str
    max_abs_H_flat: float
    max_abs_H_state: float
    floor_ok: bool
    v_max: Optional[float] = None
    v_bound: Optional[float] = Field(None, description="(Delta v - Hess v(n, n)) / |grad v| at the max point of v.")
    H_at_v_max: Optional[float] = None
    v_bound_ok: Optional[bool] = Field(None, description="H at the max point of v is at least the bound (up to the floor tolerance).")
    v_skipped: Optional[str] = Field(None, description="Why the v-function bound was not evaluated.")


class ExclusionCertificate(BaseModel):
    eps: float
    floor: float = Field(1.0 / 6.0, description="Curvature floor for closed surfaces in B_0(3).")
    floor_tolerance: float
    surfaces: List[TrialSurfaceResult] = Field(default_factory=list)
    curvature_floor_ok: bool
    v_bound_ok: bool = Field(True, description="No trial surface has H below the v-function bound at the max point of v.")
    min_max_abs_H_flat: float = Field(..., description="min over the family of max |H_delta|.")
    descent: List[FlowRun] = Field(default_factory=list)
    descent_ok: bool
    counter_observations: List[str] = Field(default_factory=list)
    passed: bool


class HorizonSet(BaseModel):
    components: List[HorizonComponent] = Field(default_factory=list)
    total_area: Optional[float] = None
    total_radius: Optional[float] = Field(None, description="sqrt(A / 4 pi).")
    no_horizon: bool = False
    outermost_certificate: Optional[ExclusionCertificate] = None
    outermost: bool = Field(False, description="Both components found and the exclusion scan passed.")
    notes: List[str] = Field(default_factory=list)


FlowRun.model_rebuild()
