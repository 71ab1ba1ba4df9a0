# app/services/tools/horizon_tool.py
# Stage tool "horizon": neck minimal surfaces and the exterior exclusion certificate.
# Date: 2026-10-19
# Version: 0.1.0

from app.core.logger import console
from app.schemas.tool_schemas import HorizonToolInput
from app.services.horizon.outermost import outermost_report

# Description of the horizon tool
HORIZON_TOOL_DEF = {
    "tool_name": "find_outermost_horizon",
    "description": "Finds the minimal neck cross-sections by area descent, sums their areas into the area radius, "
                   "and certifies that no other closed minimal surface sits in B_0(3) outside D(eps).",
    "input_schema": HorizonToolInput.model_json_schema()
}


class HorizonTool:
    def execute(self, tool_input: dict) -> dict:
        """
        Executes the horizon stage. Output keys: horizon, components, outermost.
        """
        try:
            validated_input = HorizonToolInput.model_validate(tool_input)
            horizon = outermost_report(validated_input.state, validated_input.eps,
                                       max_steps=validated_input.max_steps, scan=validated_input.scan)
            return {
                "status": "success",
                "horizon": horizon,
                "components": len(horizon.components),
                "outermost": horizon.outermost,
            }
        except Exception as e:
            console.exception(f"[HorizonTool] Error in find_outermost_horizon: {e}")
            return {"status": "failed", "error": str(e)}
