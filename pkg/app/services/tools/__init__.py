from app.services.tools.constraint_tool import CONSTRAINT_TOOL_DEF, ConstraintTool
from app.services.tools.diagnostics_tool import DIAGNOSTICS_TOOL_DEF, DiagnosticsTool
from app.services.tools.gluing_tool import GLUING_TOOL_DEF, GluingTool
from app.services.tools.horizon_tool import HORIZON_TOOL_DEF, HorizonTool

# Define all tool definitions in a single list for easy management
ALL_TOOL_DEFS = [
    GLUING_TOOL_DEF,
    CONSTRAINT_TOOL_DEF,
    HORIZON_TOOL_DEF,
    DIAGNOSTICS_TOOL_DEF,
]

__all__ = [
    "ALL_TOOL_DEFS",
    "CONSTRAINT_TOOL_DEF", "ConstraintTool",
    "DIAGNOSTICS_TOOL_DEF", "DiagnosticsTool",
    "GLUING_TOOL_DEF", "GluingTool",
    "HORIZON_TOOL_DEF", "HorizonTool",
]
