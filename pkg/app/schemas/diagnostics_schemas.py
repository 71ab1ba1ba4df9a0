# app/schemas/diagnostics_schemas.py
# Pydantic records of the asymptotic invariants, decay regressions and inequality checks.
# Date: 2026-10-19
# Version: 0.1.0

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

DecayModel = Literal["exponential", "power_exponential", "barrier_rate"]


class MassEstimate(BaseModel):
    value: float = Field(..., description="ADM mass, flux form extrapolated to r = infinity.")
    radii: List[float]
    flux: List[float] = Field(..., description="Flux-form values on the three spheres.")
    monopole: List[float] = Field(..., description="Monopole-form values on the three spheres.")
    monopole_value: float
    agreement: float = Field(..., description="|flux - monopole| after extrapolation.")
    shortcut_value: Optional[float] = Field(None, description="2m - (1/2pi) lim int d_r psi dA_0, solved states only.")


class ChargeEstimate(BaseModel):
    value: float = Field(..., description="Total charge extrapolated to r = infinity.")
    radii: List[float]
    fluxes: List[float]
    spread: float = Field(..., description="Relative sphere-to-sphere spread.")
    tolerance: float


class DecayStudy(BaseModel):
    quantity: str = ""
    model: DecayModel
    samples: List[Tuple[float, float]]
    coefficients: Dict[str, float]
    half_widths: Dict[str, float] = Field(..., description="Student t confidence half-widths (0 without dof).")
    slope: float = Field(..., description="Coefficient of T (exponential models) or of 2 log T - T (barrier_rate).")
    slope_half_width: float
    residuals: List[float]
    dof: int
    confidence: float = 0.95


class TwoSidedCheck(BaseModel):
    applicable: bool
    lower: Optional[float] = None
    upper: Optional[float] = None
    holds: Optional[bool] = None
    failing_side: Optional[Literal["lower", "upper"]] = None


class InequalityVariants(BaseModel):
    mass: float
    charge: float
    area_radius: float
    component_radii: List[float]
    component_charges: List[float]
    charged_penrose_deficit: float = Field(..., description="m - (R + Q^2/R)/2.")
    additive_deficit: float = Field(..., description="m - sum_i (R_i + Q_i^2/R_i)/2.")
    multi_component_q: float = Field(..., description="min over nonempty subsets of |sum Q_i|.")
    multi_component_deficit: float = Field(..., description="m - max_i (R_i + q^2/R_i)/2.")
    riemannian_margin: float = Field(..., description="m - R/2.")
    two_sided: TwoSidedCheck


class NeckTrendPoint(BaseModel):
    radius: float
    area_radius: float
    charge: float
    deficit: float
    deficit_exact: float = Field(..., description="-r^2 / (2 (r + m)).")


class ExtremeRNTrend(BaseModel):
    m: float
    points: List[NeckTrendPoint]
    monotone: bool = Field(..., description="|deficit| decreases as the sphere moves down the neck.")
    max_error: float
