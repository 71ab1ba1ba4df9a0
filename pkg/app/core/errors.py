# app/core/errors.py
# Exception hierarchy shared by the numerical services, the stage tools and the CLI.
# Date: 2026-10-19
# Version: 0.1.0

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for every error raised by the lab."""


class AtlasError(LabError, ValueError):
    """Invalid gluing scale, resolution or overlap layout."""


class ProvenanceError(LabError, ValueError):
    """An operation received conformal data of the wrong provenance."""


class GluingError(LabError, RuntimeError):
    """The glued data violates a structural property (e.g. source outside the cutoff bands)."""


class SolverError(LabError, RuntimeError):
    """A linear or nonlinear solve did not converge."""

    def __init__(self, message: str, final_residual: Optional[float] = None):
        super().__init__(message)
        self.final_residual = final_residual


class PositivityError(LabError, RuntimeError):
    """The conformal factor 1 + psi became nonpositive."""


class SurfaceError(LabError, ValueError):
    """Degenerate profile or a profile leaving its chart."""


class HorizonNotFoundError(LabError, RuntimeError):
    """No closed minimal surface was found where one was searched for."""


class DiagnosticsError(LabError, RuntimeError):
    """An asymptotic integrand does not decay as expected."""


class ChargeFluxError(DiagnosticsError):
    """Charge fluxes through different spheres disagree beyond tolerance."""


class StageError(LabError, RuntimeError):
    """A pipeline stage failed; carries the stage name and the report assembled so far."""

    def __init__(self, stage: str, message: str, partial_report: Optional[Dict[str, Any]] = None):
        super().__init__(f"Stage '{stage}' failed: {message}")
        self.stage = stage
        self.partial_report = partial_report or {}
