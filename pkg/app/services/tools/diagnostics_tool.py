# app/services/tools/diagnostics_tool.py
# Stage tool "diagnostics": ADM mass, total charge, horizon area radius and the
# charged Penrose deficit of the solved data.
# Date: 2026-10-19
# Version: 0.1.0

import math

from app.core.logger import console
from app.schemas.tool_schemas import DiagnosticsToolInput
from app.services.diagnostics import charge_estimate, inequality_variants, mass_estimate

# Description of the diagnostics tool
DIAGNOSTICS_TOOL_DEF = {
    "tool_name": "measure_invariants",
    "description": "Measures the ADM mass and total charge of the solved data on spheres near R_out and, given a "
                   "horizon, the area radius and the deficit m - (R + Q^2/R)/2 with its inequality variants.",
    "input_schema": DiagnosticsToolInput.model_json_schema()
}


class DiagnosticsTool:
    def execute(self, tool_input: dict) -> dict:
        """
        Executes the diagnostics stage. Output keys: mass, charge, m_tilde, Q_tilde and,
        when a horizon is given, A_tilde, R_tilde, deficit, inequalities.
        """
        try:
            validated_input = DiagnosticsToolInput.model_validate(tool_input)
            state = validated_input.state
            mass = mass_estimate(state)
            charge = charge_estimate(state)
            result = {"status": "success", "mass": mass, "charge": charge,
                      "m_tilde": mass.value, "Q_tilde": charge.value}

            horizon = validated_input.horizon
            if horizon is not None and horizon.components:
                A = horizon.total_area
                R = math.sqrt(A / (4.0 * math.pi))
                m_tilde, Q_tilde = mass.value, charge.value
                result.update(
                    A_tilde=A, R_tilde=R,
                    deficit=m_tilde - 0.5 * (R + Q_tilde ** 2 / R),
                    inequalities=inequality_variants(m_tilde, [c.area_radius for c in horizon.components],
                                                     [c.charge for c in horizon.components], total=Q_tilde),
                )
                console.display_data_as_table(
                    {"m_tilde": m_tilde, "Q_tilde": Q_tilde, "A_tilde": A, "R_tilde": R, "deficit": result["deficit"]},
                    f"Penrose deficit (m={validated_input.m})",
                )
            else:
                console.warning("[DiagnosticsTool] No horizon components; deficit not evaluated.")
            return result
        except Exception as e:
            console.exception(f"[DiagnosticsTool] Error in measure_invariants: {e}")
            return {"status": "failed", "error": str(e)}
