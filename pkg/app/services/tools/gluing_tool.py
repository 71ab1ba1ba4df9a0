# app/services/tools/gluing_tool.py
# Stage tool "glue": builds the three-chart atlas, evaluates the glued MP data on it
# and measures the glued constraint residuals.
# Date: 2026-10-19
# Version: 0.1.0

from app.core.logger import console
from app.schemas.background_schemas import GlueParams
from app.schemas.grid_schemas import GridSpec
from app.schemas.tool_schemas import GluingToolInput
from app.services.background import analytic_summary, constraint_residuals, evaluate_glued
from app.services.geometry.atlas import build_atlas

# Description of the gluing tool
GLUING_TOOL_DEF = {
    "tool_name": "glue_mp_data",
    "description": "Builds the atlas of M+ at gluing scale T and evaluates the glued Majumdar-Papapetrou data "
                   "(g_hat, E_hat), reporting the Gauss and divergence residual norms.",
    "input_schema": GluingToolInput.model_json_schema()
}


class GluingTool:
    def execute(self, tool_input: dict) -> dict:
        """
        Executes the gluing stage. Output keys: atlas, state, residuals, analytic.
        """
        try:
            validated_input = GluingToolInput.model_validate(tool_input)
            glue = GlueParams(m=validated_input.m, T=validated_input.T,
                              cutoff_profile=validated_input.cutoff_profile, separation=validated_input.separation)
            grid = GridSpec(exterior=validated_input.grid_exterior, neck=validated_input.grid_neck,
                            outer_radius=validated_input.r_out, r_match=validated_input.r_match,
                            r_hole=validated_input.r_hole, match_refinement=validated_input.match_refinement)
            atlas = build_atlas(glue, grid)
            state = evaluate_glued(glue, atlas)
            residuals = constraint_residuals(state).norms
            console.info(f"[GluingTool] Glued residuals: gauss={residuals.gauss_sup:.3e}, div={residuals.div_sup:.3e}")
            return {
                "status": "success",
                "atlas": atlas,
                "state": state,
                "residuals": residuals,
                "analytic": analytic_summary(glue.m),
                "h": max(c.spacing()[0] for c in atlas.necks),
            }
        except Exception as e:
            console.exception(f"[GluingTool] Error in glue_mp_data: {e}")
            return {"status": "failed", "error": str(e)}
