# app/services/tools/constraint_tool.py
# Stage tool "solve": barrier verification, divergence fix and Lichnerowicz solve on glued data.
# Date: 2026-10-19
# Version: 0.1.0

from app.core.logger import console
from app.schemas.tool_schemas import ConstraintToolInput
from app.services.background import constraint_residuals
from app.services.constraints.barrier import barrier_precondition, verify_barrier
from app.services.constraints.divergence_fix import solve_divergence_fix
from app.services.constraints.lichnerowicz import solve_lichnerowicz

# Description of the constraint tool
CONSTRAINT_TOOL_DEF = {
    "tool_name": "solve_constraints",
    "description": "Restores the Einstein-Maxwell constraints on glued data: checks the barrier w, removes "
                   "div E_hat with the odd potential phi, then solves the Lichnerowicz equation for psi.",
    "input_schema": ConstraintToolInput.model_json_schema()
}


class ConstraintTool:
    def execute(self, tool_input: dict) -> dict:
        """
        Executes the constraint stage. Output keys: state (solved), fixed, barrier,
        barrier_skipped, divergence_fix, lichnerowicz, residuals.
        """
        try:
            validated_input = ConstraintToolInput.model_validate(tool_input)
            glued = validated_input.state
            glued.require("glued")
            atlas = glued.require_atlas()
            m = glued.background.m

            barrier, skipped = None, barrier_precondition(m, atlas.T, validated_input.eps)
            if skipped is None:
                barrier = verify_barrier(m, atlas.T, atlas, validated_input.eps)
            else:
                console.warning(f"[ConstraintTool] Barrier skipped: {skipped}")

            fixed, fix_report = solve_divergence_fix(glued, validated_input.tol, validated_input.max_sweeps, barrier)
            solved, lich_report = solve_lichnerowicz(fixed, validated_input.mode, validated_input.lichnerowicz_tol,
                                                     schwarz_tol=validated_input.tol,
                                                     max_sweeps=validated_input.max_sweeps)
            residuals = constraint_residuals(solved).norms
            console.info(f"[ConstraintTool] Solved residuals: gauss={residuals.gauss_sup:.3e}, div={residuals.div_sup:.3e}")
            return {
                "status": "success",
                "state": solved,
                "fixed": fixed,
                "barrier": barrier,
                "barrier_skipped": skipped,
                "divergence_fix": fix_report,
                "lichnerowicz": lich_report,
                "residuals": residuals,
            }
        except Exception as e:
            console.exception(f"[ConstraintTool] Error in solve_constraints: {e}")
            return {"status": "failed", "error": str(e)}
