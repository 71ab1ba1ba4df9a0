# app/schemas/solver_schemas.py
# Pydantic reports of the constraint solves: composite Schwarz statistics, the divergence fix,
# the barrier verification, the Lichnerowicz solve and the doubled-neck symmetry check.
# Grid fields ride along as excluded attributes so the JSON stays numeric-summary only.
# Date: 2026-10-19
# Version: 0.1.0

from typing import Any, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field


class SchwarzStats(BaseModel):
    sweeps: int = Field(..., description="Multiplicative Schwarz sweeps performed.")
    converged: bool
    mismatch_history: List[float] = Field(default_factory=list, description="Relative interface mismatch after each sweep.")
    contraction: Optional[float] = Field(None, description="Geometric mean of successive mismatch ratios.")


class BarrierReport(BaseModel):
    """Closed-form barrier w = psi(r_1) + psi(r_2) checked on the grid nodes of M+."""
    m: float
    T: float
    eps: float = Field(..., description="Radius of the puncture disks D(eps).")
    psi_one: float = Field(..., description="psi(1) from the dilogarithm closed form.")
    psi_one_quadrature: float = Field(..., description="psi(1) from adaptive quadrature.")
    psi_one_bracket: Tuple[float, float] = Field(..., description="(T^2 e^-T / 4m, T^2 e^-T / 2m].")
    psi_one_in_bracket: bool
    w_min: float
    w_max: float
    w_bound: float = Field(..., description="m^-1 T^2 e^-T.")
    bounded_ok: bool = Field(..., description="0 < w <= m^-1 T^2 e^-T on every node.")
    laplacian_max: float = Field(..., description="max of Delta w over M+.")
    laplacian_tolerance: float
    superharmonic_ok: bool = Field(..., description="Delta w <= tol on every node.")
    c_measured: float = Field(..., description="min over Gamma(e^{-T+2}) of -e^T Delta w.")
    band_ok: bool = Field(..., description="c_measured > 0.")
    deep_limit: float = Field(..., description="-e^-T / m^3, the r -> 0 limit of Delta psi.")
    passed: bool


class BarrierComparison(BaseModel):
    """Maximum-principle comparison |phi| <= K w with K = sup|f| / (c e^-T)."""
    available: bool
    reason: Optional[str] = None
    ratio: Optional[float] = Field(None, description="sup|phi| / sup w.")
    K: Optional[float] = None
    holds: Optional[bool] = None
    worst_margin: Optional[float] = Field(None, description="max over nodes of |phi| - K w (<= 0 when the bound holds).")


class DivergenceFixReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    phi: Any = Field(None, exclude=True, description="The potential phi (ScalarField, odd across the cut).")
    source_sup: float = Field(..., description="sup |f| with f = div E_hat in closed form.")
    residual_norm_before: float = Field(..., description="sup over owned nodes of the discrete divergence of E_hat.")
    residual_norm_after: float = Field(..., description="sup over owned nodes of the discrete divergence of E' = E_hat - d phi.")
    weighted_before: float = Field(..., description="Weighted (beta = 3) norm of the discrete div E_hat.")
    weighted_after: float = Field(..., description="Weighted (beta = 3) norm of the discrete div E'.")
    correction_passes: int = Field(0, description="Defect-correction solves applied after the first solve.")
    out_of_band_source: float = Field(..., description="max |f| outside the cutoff bands.")
    sup_phi: float
    weighted_phi: float = Field(..., description="weighted_sup_norm(phi, 1).")
    cut_max: float = Field(..., description="max |phi| on the cut s = 0.")
    overlap_consistency: float
    barrier_margin: BarrierComparison
    iterations: int
    schwarz: SchwarzStats


class LichnerowiczReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    psi: Any = Field(None, exclude=True, description="psi with conformal factor 1 + psi (ScalarField, even).")
    h_field: Any = Field(None, exclude=True, description="h = R/8 + 3/4 |E'|^2 (ScalarField).")
    mode: Literal["newton", "fixed-point"]
    iterations: int
    tolerance: float
    initial_residual: float = Field(..., description="sup |N(1)| over equation nodes.")
    residual_norm: float = Field(..., description="sup |N(1 + psi)| over equation nodes at exit.")
    newton_residual_history: List[float] = Field(default_factory=list)
    newton_rate_constants: List[float] = Field(default_factory=list, description="r_{k+1} / r_k^2 before the algebraic floor.")
    step_lengths: List[float] = Field(default_factory=list)
    fixedpoint_residual_history: List[float] = Field(default_factory=list, description="sup |psi_{k+1} - psi_k|.")
    contraction_factors: List[float] = Field(default_factory=list)
    eta: float = Field(..., description="sup |psi|.")
    eta_weighted: float = Field(..., description="weighted_sup_norm(psi, 1).")
    min_factor: float = Field(..., description="min of 1 + psi.")
    cut_derivative: float = Field(..., description="max |d_s psi| on the cut, one-sided second order.")
    h_min: float
    quadratic_constant: Optional[float] = Field(None, description="Measured C in sup|Q(psi)| <= C eta^2.")


class SymmetryCheck(BaseModel):
    problem: Literal["divergence", "linearized"]
    neck: int
    parity: Literal["even", "odd"]
    grid: Tuple[int, int]
    symmetry_defect: float = Field(..., description="max |u(s) -+ u(-s)| on the doubled chart.")
    cut_value: float = Field(..., description="max |u(0)| (odd) or max |d_s u(0)| (even).")
    agreement: float = Field(..., description="max |u_doubled - u_half| over s >= 0.")
    scale: float = Field(..., description="max |u| on the doubled chart.")
