# app/schemas/grid_schemas.py
# The module defines the grid resolution model shared by the atlas builder and the pipeline config.
# Date: 2026-10-19
# Version: 0.1.0

from typing import Tuple

from pydantic import BaseModel, Field, model_validator


class GridSpec(BaseModel):
    """
    Resolution of the three-chart atlas.
    exterior = (n_rho, n_z) nodes of the meridian chart; neck = (n_s, n_theta) nodes of each neck chart.
    """
    exterior: Tuple[int, int] = Field((160, 512), description="Nodes (n_rho, n_z) of the exterior chart.")
    neck: Tuple[int, int] = Field((97, 33), description="Nodes (n_s, n_theta) of each neck chart.")
    outer_radius: float = Field(40.0, description="Truncation radius R_out of the exterior chart.")
    r_match: float = Field(0.1, gt=0.0, description="Neck charts cover e^{-T} <= r_i <= r_match.")
    r_hole: float = Field(0.05, gt=0.0, description="Exterior chart covers r_i >= r_hole.")
    match_refinement: float = Field(
        200.0, ge=0.0,
        description="Weight of the extra exterior node density within ~r_match of each puncture (0: logarithmic grading only).",
    )

    @model_validator(mode="after")
    def _check_layout(self) -> "GridSpec":
        if min(self.exterior) < 8 or min(self.neck) < 8:
            raise ValueError(f"Grid resolutions must be at least 8 nodes per direction, got {self.exterior}, {self.neck}.")
        if self.r_hole >= self.r_match:
            raise ValueError("r_hole must be smaller than r_match so the charts overlap.")
        return self

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same layout with (n - 1) * factor + 1 nodes per direction."""
        def _refine(n: int) -> int:
            return (n - 1) * factor + 1
        return self.model_copy(update={
            "exterior": (_refine(self.exterior[0]), _refine(self.exterior[1])),
            "neck": (_refine(self.neck[0]), _refine(self.neck[1])),
        })
