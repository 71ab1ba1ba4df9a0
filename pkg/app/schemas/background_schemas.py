# app/schemas/background_schemas.py
# The module defines Pydantic models for the parameters of the exact and glued
# Majumdar-Papapetrou backgrounds and for their closed-form reference quantities.
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import List, Literal, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


# lambda_crit = (sqrt(2) - 1/2)^(-1/4): upper end of the admissible lambda range
LAMBDA_CRIT = (math.sqrt(2.0) - 0.5) ** -0.25


class MPParams(BaseModel):
    """
    Exact Majumdar-Papapetrou data u^4 delta with u^2 = 1 + sum m_k / r_k and E = sign * 2 grad log u.
    """
    masses: List[float] = Field([1.0, 1.0], description="Puncture masses m_k; zero masses give the vacuum limit.")
    centers: List[Tuple[float, float, float]] = Field(
        [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0)], description="Puncture locations p_k in R^3 (on the z axis)."
    )
    field_sign: Literal[1, -1] = Field(1, description="+1 for E = 2 grad log u, -1 for the opposite charges.")

    @field_validator("masses")
    @classmethod
    def _masses_nonnegative(cls, masses: List[float]) -> List[float]:
        if not masses:
            raise ValueError("At least one puncture is required.")
        if any(m < 0.0 for m in masses):
            raise ValueError(f"Masses must be nonnegative, got {masses}.")
        return masses

    @model_validator(mode="after")
    def _centers_consistent(self) -> "MPParams":
        if len(self.centers) != len(self.masses):
            raise ValueError("masses and centers must have the same length.")
        for center in self.centers:
            if abs(center[0]) > 0.0 or abs(center[1]) > 0.0:
                raise ValueError(f"Centers must lie on the symmetry axis, got {center}.")
        heights = [c[2] for c in self.centers]
        if len(set(heights)) != len(heights):
            raise ValueError("Centers must be pairwise distinct.")
        return self

    @property
    def N(self) -> int:
        return len(self.masses)

    @property
    def heights(self) -> List[float]:
        return [c[2] for c in self.centers]

    @classmethod
    def symmetric_pair(cls, m: float, field_sign: int = 1) -> "MPParams":
        """Default configuration: m_1 = m_2 = m at (0,0,1) and (0,0,-1)."""
        return cls(masses=[m, m], centers=[(0.0, 0.0, 1.0), (0.0, 0.0, -1.0)], field_sign=field_sign)


class GlueParams(BaseModel):
    """
    Gluing of two MP copies along the necks at r_i = e^{-T}; cutoff bands e^{-T+1} < r_i < e^{-T+2}.
    """
    m: float = Field(..., gt=0.0, description="Common puncture mass.")
    T: float = Field(..., gt=0.0, description="Gluing scale; the cut sits at r_i = e^{-T}. build_atlas requires T >= 3.")
    cutoff_profile: Literal["quintic", "septic"] = Field(
        "quintic", description="Smoothstep in log r used for the cutoff across the band."
    )
    separation: float = Field(1.0, gt=0.0, description="Punctures sit at z = +separation and z = -separation.")

    @property
    def cut_radius(self) -> float:
        return math.exp(-self.T)

    @property
    def band(self) -> Tuple[float, float]:
        return math.exp(-self.T + 1.0), math.exp(-self.T + 2.0)

    @property
    def heights(self) -> Tuple[float, float]:
        return self.separation, -self.separation


class AnalyticSummary(BaseModel):
    """Closed-form reference values of the symmetric MP pair of mass m."""
    m: float = Field(..., description="Puncture mass.")
    mu: float = Field(..., description="Total mass 2m of the asymptotically flat end.")
    Q: float = Field(..., description="Total charge 2m.")
    A_necks: float = Field(..., description="Asymptotic neck cross-section area 8 pi m^2 (both necks).")
    R: float = Field(..., description="Area radius sqrt(2) m.")
    deficit: float = Field(..., description="mu - (R + Q^2/R)/2 = m (2 - 3/sqrt 2) < 0.")
    lambda_crit: float = Field(LAMBDA_CRIT, description="(sqrt 2 - 1/2)^(-1/4).")


class ResidualNorms(BaseModel):
    """Sup norms of the Gauss residual R - 2|E|^2 and of div E."""
    gauss_sup: float = Field(..., description="Unweighted sup of the Gauss residual over active nodes.")
    div_sup: float = Field(..., description="Unweighted sup of div E over active nodes.")
    gauss_weighted: float = Field(..., description="Weighted sup norm (beta = 3) of the Gauss residual.")
    div_weighted: float = Field(..., description="Weighted sup norm (beta = 3) of div E.")
    beta: float = Field(3.0, description="Decay exponent of the weighted norms.")
    method: Literal["closed_form", "semi_discrete", "discrete"] = Field(
        ..., description="closed_form: background formulas; semi_discrete: closed-form background plus discrete solve fields; discrete: all grid operators."
    )
