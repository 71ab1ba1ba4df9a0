from app.services.horizon.exclusion import exterior_exclusion_scan
from app.services.horizon.finder import find_neck_horizon
from app.services.horizon.mean_curvature import level_set_mean_curvature, mean_curvature, schwarzschild_horizon
from app.services.horizon.outermost import export_profiles, outermost_report

__all__ = [
    "exterior_exclusion_scan", "find_neck_horizon",
    "level_set_mean_curvature", "mean_curvature", "schwarzschild_horizon",
    "export_profiles", "outermost_report",
]
