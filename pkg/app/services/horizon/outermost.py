# app/services/horizon/outermost.py
# Candidate outermost horizon: the two neck minimal surfaces, their total area and area
# radius, and the exterior exclusion certificate.
# Date: 2026-10-19
# Version: 0.1.0

import math
import os
from typing import List, Optional

from app.core.errors import HorizonNotFoundError
from app.core.logger import console
from app.schemas.horizon_schemas import HorizonSet
from app.services.background import ConformalData
from app.services.horizon.exclusion import exterior_exclusion_scan
from app.services.horizon.finder import find_neck_horizon
from app.services.horizon.flows import MAX_STEPS


def outermost_report(state: ConformalData, eps: float = 0.05, tol: Optional[float] = None,
                     max_steps: int = MAX_STEPS, scan: bool = True) -> HorizonSet:
    """
    Horizon set of `state`. Data with no neck minimal surface (exact MP) is reported as
    "no horizon"; otherwise `outermost` requires both components and a passing scan.
    """
    state.require("solved", "divergence-fixed", "glued", "exact-mp")
    atlas = state.require_atlas()
    console.rule("Horizon")
    components, notes = [], []
    for k in range(len(atlas.necks)):
        try:
            components.append(find_neck_horizon(state, k, tol=tol, max_steps=max_steps))
        except HorizonNotFoundError as e:
            notes.append(str(e))
            console.warning(f"[Horizon] {e}")

    if not components:
        console.warning("[Horizon] No horizon found.")
        return HorizonSet(no_horizon=True, notes=notes + ["no horizon"])

    total = sum(c.area for c in components)
    certificate = exterior_exclusion_scan(state, eps, tol, max_steps=max_steps) if scan else None
    if certificate is not None:
        notes += certificate.counter_observations
    horizon = HorizonSet(
        components=components, total_area=total, total_radius=math.sqrt(total / (4.0 * math.pi)),
        outermost_certificate=certificate,
        outermost=len(components) == len(atlas.necks) and certificate is not None and certificate.passed,
        notes=notes,
    )
    console.display_rows([c.model_dump() for c in components],
                         ["neck", "area", "area_radius", "residual", "distance_to_cut", "charge"], "Horizon components")
    log = console.success if horizon.outermost else console.warning
    log(f"[Horizon] A={total:.10f}, R={horizon.total_radius:.10f}, outermost={horizon.outermost}")
    return horizon


def export_profiles(horizon: HorizonSet, out_dir: str) -> List[str]:
    """CSV profile of every component as horizon_<chart>.csv."""
    return [c.surface.export_csv(os.path.join(out_dir, f"horizon_{c.chart}.csv"))
            for c in horizon.components if c.surface is not None]
