# app/schemas/pipeline_schemas.py
# Run configuration of the end-to-end pipeline and the reports it produces.
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from app.schemas.background_schemas import LAMBDA_CRIT, AnalyticSummary, GlueParams, ResidualNorms
from app.schemas.diagnostics_schemas import ChargeEstimate, DecayStudy, InequalityVariants, MassEstimate
from app.schemas.grid_schemas import GridSpec
from app.schemas.horizon_schemas import HorizonSet
from app.schemas.solver_schemas import BarrierReport, DivergenceFixReport, LichnerowiczReport

Stage = Literal["glue", "solve", "horizon", "report"]
STAGE_ORDER: Tuple[str, ...] = ("glue", "solve", "horizon", "report")

# lambda used for the band checks: the upper end lambda_crit ~ 1.02268 of the admissible range
DEFAULT_LAMBDA = LAMBDA_CRIT


class PipelineConfig(BaseModel):
    """
    Numerics of one run. Sources in increasing precedence: these defaults, a JSON
    document (--config), command-line flags.
    """
    m: float = Field(0.05, gt=0.0, description="Common puncture mass.")
    T: float = Field(12.0, ge=3.0, description="Gluing scale.")
    cutoff_profile: Literal["quintic", "septic"] = "quintic"
    separation: float = Field(1.0, gt=0.0)
    grid_exterior: Tuple[int, int] = Field((160, 512), description="Nodes (n_rho, n_z) of the exterior chart.")
    grid_neck: Tuple[int, int] = Field((97, 33), description="Nodes (n_s, n_theta) of each neck chart.")
    match_refinement: float = Field(200.0, ge=0.0, description="Extra exterior node density around r_match of each puncture.")
    r_out: float = Field(40.0, gt=0.0, description="Truncation radius of the exterior chart.")
    r_match: float = Field(0.1, gt=0.0)
    r_hole: float = Field(0.05, gt=0.0)
    tol: float = Field(1e-12, gt=0.0, description="Relative interface tolerance of the Schwarz sweeps.")
    max_sweeps: int = Field(400, gt=0)
    lichnerowicz_tol: float = Field(1e-10, gt=0.0)
    mode: Literal["newton", "fixed-point"] = "newton"
    eps: float = Field(0.05, gt=0.0, description="Radius of the puncture disks D(eps) of the exclusion scan.")
    horizon_max_steps: int = Field(20000, gt=0)
    exclusion_scan: bool = True
    lam: float = Field(DEFAULT_LAMBDA, gt=1.0, le=LAMBDA_CRIT)
    out: Optional[str] = Field(None, description="Output directory; RUNS_DIR/<run id> when unset.")
    export_fields: bool = True
    sweep_masses: List[float] = Field(default_factory=list)
    sweep_T: List[float] = Field(default_factory=list)
    workers: Optional[int] = Field(None, gt=0, description="Sweep processes; SWEEP_WORKERS when unset.")

    @field_validator("grid_exterior", "grid_neck")
    @classmethod
    def _positive(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if min(value) <= 0:
            raise ValueError(f"Resolutions must be positive, got {value}.")
        return value

    @field_validator("sweep_masses")
    @classmethod
    def _positive_masses(cls, value: List[float]) -> List[float]:
        if any(m <= 0.0 for m in value):
            raise ValueError(f"Sweep masses must be positive, got {value}.")
        return value

    @field_validator("sweep_T")
    @classmethod
    def _gluing_scales(cls, value: List[float]) -> List[float]:
        if any(T < 3.0 for T in value):
            raise ValueError(f"Sweep gluing scales must be >= 3, got {value}.")
        return value

    @property
    def grid(self) -> GridSpec:
        return GridSpec(exterior=self.grid_exterior, neck=self.grid_neck, outer_radius=self.r_out,
                        r_match=self.r_match, r_hole=self.r_hole, match_refinement=self.match_refinement)

    @property
    def glue(self) -> GlueParams:
        return GlueParams(m=self.m, T=self.T, cutoff_profile=self.cutoff_profile, separation=self.separation)


class LambdaBands(BaseModel):
    lam: float
    mass_bound: float = Field(..., description="2 lambda m")
    area_bound: float = Field(..., description="8 pi lambda^2 m^2")
    charge_bound: float = Field(..., description="2m / lambda")
    mass_ok: Optional[bool] = None
    area_ok: Optional[bool] = None
    charge_ok: Optional[bool] = None

    @classmethod
    def for_mass(cls, m: float, lam: float) -> "LambdaBands":
        return cls(lam=lam, mass_bound=2.0 * lam * m, area_bound=8.0 * math.pi * lam ** 2 * m ** 2,
                   charge_bound=2.0 * m / lam)


class AreaBound(BaseModel):
    eta: float = Field(..., description="sup |psi|")
    bound: float = Field(..., description="8 pi m^2 (1 + eta)^4")
    respected: Optional[bool] = None
    mass_shift: Optional[float] = Field(None, description="|m_tilde - 2m|")
    mass_shift_over_eta: Optional[float] = None


class PenroseReport(BaseModel):
    """Everything one run measured; stages that did not run leave their fields unset."""
    inputs: Dict[str, Any]
    stages: List[str] = Field(default_factory=list, description="Stages that completed.")
    final_status: Literal["completed", "failed"] = "completed"
    failed_stage: Optional[str] = None
    error: Optional[str] = None

    m_tilde: Optional[float] = None
    Q_tilde: Optional[float] = None
    A_tilde: Optional[float] = None
    R_tilde: Optional[float] = None
    deficit: Optional[float] = Field(None, description="m_tilde - (R_tilde + Q_tilde^2 / R_tilde) / 2")
    deficit_relative_error: Optional[float] = Field(None, description="Relative distance to the analytic deficit.")
    neck_spacing: Optional[float] = Field(None, description="Largest neck grid spacing h in s.")
    analytic_reference: AnalyticSummary
    lambda_bands: LambdaBands
    area_bound: Optional[AreaBound] = None
    unmet_hypotheses: List[str] = Field(default_factory=list)

    glued_residuals: Optional[ResidualNorms] = None
    solved_residuals: Optional[ResidualNorms] = None
    barrier: Optional[BarrierReport] = None
    divergence_fix: Optional[DivergenceFixReport] = None
    lichnerowicz: Optional[LichnerowiczReport] = None
    horizon: Optional[HorizonSet] = None
    mass: Optional[MassEstimate] = None
    charge: Optional[ChargeEstimate] = None
    inequalities: Optional[InequalityVariants] = None

    tolerances: Dict[str, float] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)
    wall_time: float = 0.0


class SweepRow(BaseModel):
    m: float
    T: float
    h: Optional[float] = Field(None, description="Largest neck grid spacing in s.")
    m_tilde: Optional[float] = None
    Q_tilde: Optional[float] = None
    A_tilde: Optional[float] = None
    R_tilde: Optional[float] = None
    deficit: Optional[float] = None
    gauss_residual: Optional[float] = None
    div_residual: Optional[float] = None
    horizon_ok: bool = False
    exclusion_ok: bool = False
    wall_time: float = 0.0
    status: str = "completed"
    error: Optional[str] = None


class SweepReport(BaseModel):
    rows: List[SweepRow]
    deficit_monotone: Dict[str, bool] = Field(default_factory=dict, description="Per mass: |deficit - analytic| strictly decreasing in T.")
    decay_fits: Dict[str, List[DecayStudy]] = Field(default_factory=dict)
    csv_path: Optional[str] = None
