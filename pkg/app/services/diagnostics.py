# app/services/diagnostics.py
# Asymptotic invariants of the exterior end (ADM mass, total charge), the flux charge
# through arbitrary surfaces, T-decay regressions and the inequality bookkeeping.
# Date: 2026-10-19
# Version: 0.1.0

import itertools
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import simpson

from app.core.errors import ChargeFluxError, DiagnosticsError
from app.core.logger import console
from app.schemas.background_schemas import GlueParams
from app.schemas.diagnostics_schemas import (
    ChargeEstimate, DecayModel, DecayStudy, ExtremeRNTrend, InequalityVariants, MassEstimate, NeckTrendPoint,
    TwoSidedCheck,
)
from app.schemas.grid_schemas import GridSpec
from app.services.background import (
    ConformalData, GluedBackground, constraint_residuals, evaluate_glued, single_puncture_data,
)
from app.services.constraints.divergence_fix import solve_divergence_fix
from app.services.geometry.atlas import EXTERIOR, build_atlas
from app.services.geometry.surfaces import Surface, coordinate_sphere, profile_geometry, surface_area

CHARGE_RTOL = 5e-3
MASS_RTOL = 1e-2
ABS_FLOOR = 1e-8
SPHERE_SAMPLES = 257
DEFAULT_R_OUT = 200.0


def _radii(state: ConformalData, r_out: Optional[float]) -> List[float]:
    if r_out is None:
        r_out = 0.95 * state.atlas.outer_radius if state.atlas is not None else DEFAULT_R_OUT
    if state.atlas is not None and r_out > state.atlas.outer_radius:
        raise DiagnosticsError(f"r_out={r_out} lies beyond the exterior chart (R_out={state.atlas.outer_radius}).")
    return [r_out / 2.0, 0.75 * r_out, r_out]


def _sphere_average(values: np.ndarray, theta: np.ndarray, r: float) -> float:
    """Flat integral 2 pi r^2 int f sin(theta) d theta over a coordinate sphere."""
    return float(2.0 * math.pi * r ** 2 * simpson(values * np.sin(theta), x=theta))


def _radial_scale(state: ConformalData, r: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta = np.linspace(0.0, math.pi, SPHERE_SAMPLES)
    rho, z = r * np.sin(theta), r * np.cos(theta)
    W, W_rho, W_z = state.metric.sample(EXTERIOR, rho, z)
    return theta, W, (rho * W_rho + z * W_z) / r


def _extrapolate(radii: Sequence[float], values: Sequence[float]) -> float:
    """Value at 1/r = 0 of the interpolating quadratic in 1/r."""
    return float(np.polyfit(1.0 / np.asarray(radii), np.asarray(values), len(radii) - 1)[-1])


def _shortcut_mass(state: ConformalData, radii: Sequence[float]) -> Optional[float]:
    if state.provenance != "solved" or not isinstance(state.background, GluedBackground):
        return None
    theta = np.linspace(0.0, math.pi, SPHERE_SAMPLES)
    values = []
    for r in radii:
        _, d_rho, d_z = state.factor.sample(EXTERIOR, r * np.sin(theta), r * np.cos(theta))
        values.append(-_sphere_average(np.sin(theta) * d_rho + np.cos(theta) * d_z, theta, r) / (2.0 * math.pi))
    return 2.0 * state.background.m + _extrapolate(radii, values)


def mass_estimate(state: ConformalData, r_out: Optional[float] = None) -> MassEstimate:
    """
    ADM mass of g = W^2 delta on coordinate spheres r in {R/2, 3R/4, R}:
      flux form      m = -(1/4 pi) int W d_r W dA_0
      monopole form  m = -(1/4 pi) int d_r W dA_0
    each extrapolated in 1/r. Raises DiagnosticsError when they disagree.
    """
    radii = _radii(state, r_out)
    flux, monopole = [], []
    for r in radii:
        theta, W, dW = _radial_scale(state, r)
        flux.append(-_sphere_average(W * dW, theta, r) / (4.0 * math.pi))
        monopole.append(-_sphere_average(dW, theta, r) / (4.0 * math.pi))
    value = _extrapolate(radii, flux)
    mono = _extrapolate(radii, monopole)
    agreement = abs(value - mono)
    if not (np.all(np.isfinite(flux)) and agreement <= MASS_RTOL * abs(value) + ABS_FLOOR):
        raise DiagnosticsError(f"Mass integrand does not decay: flux {flux} vs monopole {monopole}.")
    estimate = MassEstimate(value=value, radii=radii, flux=flux, monopole=monopole, monopole_value=mono,
                            agreement=agreement, shortcut_value=_shortcut_mass(state, radii))
    console.info(f"[Diagnostics] ADM mass = {value:.10f} (monopole {mono:.10f})")
    return estimate


def adm_mass(state: ConformalData, r_out: Optional[float] = None) -> float:
    return mass_estimate(state, r_out).value


def surface_charge(S: Surface, state: ConformalData) -> float:
    """Q = -(1/4 pi) int g(E, n) dA with n toward infinity: -1/2 int W a (E . N) |x'| dt."""
    geo = profile_geometry(S)
    W = state.metric.sample(S.chart, S.x1, S.x2)[0]
    E1, E2 = state.sample_electric(S.chart, S.x1, S.x2)
    a = np.abs(np.sin(S.x2)) if S.is_neck else S.x1
    flux = W * a * (E1 * geo.normal[:, 0] + E2 * geo.normal[:, 1]) * geo.speed
    return float(-0.5 * simpson(flux, x=np.linspace(0.0, 1.0, S.size)))


def charge_estimate(state: ConformalData, r_out: Optional[float] = None, rtol: float = CHARGE_RTOL) -> ChargeEstimate:
    """Charge flux through three exterior spheres; they must agree within `rtol`."""
    radii = _radii(state, r_out)
    fluxes = [surface_charge(coordinate_sphere(r, n=SPHERE_SAMPLES), state) for r in radii]
    scale = max(abs(f) for f in fluxes)
    spread = (max(fluxes) - min(fluxes)) / scale if scale > ABS_FLOOR else 0.0
    if spread > rtol:
        raise ChargeFluxError(f"Charge fluxes {fluxes} disagree by {spread:.3e} (tolerance {rtol:.1e}).")
    value = _extrapolate(radii, fluxes)
    console.info(f"[Diagnostics] Total charge = {value:.10f} (spread {spread:.2e})")
    return ChargeEstimate(value=value, radii=radii, fluxes=fluxes, spread=spread, tolerance=rtol)


def total_charge(state: ConformalData, r_out: Optional[float] = None) -> float:
    return charge_estimate(state, r_out).value


_MODELS: Dict[str, Tuple[str, ...]] = {
    "exponential": ("a", "b"),
    "power_exponential": ("a", "b", "c"),
    "barrier_rate": ("a", "c"),
}


def _design(model: str, T: np.ndarray) -> np.ndarray:
    one = np.ones_like(T)
    if model == "exponential":
        return np.column_stack([one, T])
    if model == "power_exponential":
        return np.column_stack([one, T, 2.0 * np.log(T)])
    if model == "barrier_rate":
        return np.column_stack([one, 2.0 * np.log(T) - T])
    raise ValueError(f"Unknown decay model '{model}'.")


def decay_fit(samples: Sequence[Tuple[float, float]], model: DecayModel = "exponential",
              quantity: str = "", confidence: float = 0.95) -> DecayStudy:
    """Least-squares fit of log q against the model regressors."""
    if len(samples) < 3:
        raise ValueError(f"A decay fit needs at least 3 samples, got {len(samples)}.")
    T = np.array([s[0] for s in samples], dtype=float)
    q = np.array([s[1] for s in samples], dtype=float)
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        raise ValueError(f"Decay fits need positive quantities, got {q.tolist()}.")
    X = _design(model, T)
    y = np.log(q)
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ coef
    dof = len(samples) - X.shape[1]
    if dof > 0:
        sigma2 = float(residuals @ residuals) / dof
        cov = sigma2 * np.linalg.pinv(X.T @ X)
        half = stats.t.ppf(0.5 + confidence / 2.0, dof) * np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        half = np.zeros_like(coef)
    names = _MODELS[model]
    slope_name = "c" if model == "barrier_rate" else "b"
    k = names.index(slope_name)
    return DecayStudy(
        quantity=quantity, model=model, samples=[(float(a), float(b)) for a, b in zip(T, q)],
        coefficients={n: float(c) for n, c in zip(names, coef)},
        half_widths={n: float(h) for n, h in zip(names, half)},
        slope=float(coef[k]), slope_half_width=float(half[k]),
        residuals=residuals.tolist(), dof=dof, confidence=confidence,
    )


def decay_study(m: float, T_values: Sequence[float], grid: Optional[GridSpec] = None,
                cutoff_profile: str = "quintic") -> List[DecayStudy]:
    """
    Glue and divergence-fix at each T; fit the glued Gauss and divergence residual sup
    norms (exponential) and sup |phi| (barrier_rate).
    """
    grid = grid or GridSpec()
    gauss, div, phi = [], [], []
    for T in T_values:
        glue = GlueParams(m=m, T=T, cutoff_profile=cutoff_profile)
        data = evaluate_glued(glue, build_atlas(glue, grid))
        norms = constraint_residuals(data).norms
        _, report = solve_divergence_fix(data)
        gauss.append((T, norms.gauss_sup))
        div.append((T, norms.div_sup))
        phi.append((T, report.sup_phi))
    studies = [
        decay_fit(gauss, "exponential", "gauss_residual"),
        decay_fit(div, "exponential", "div_residual"),
        decay_fit(phi, "barrier_rate", "sup_phi"),
    ]
    for study in studies:
        console.info(f"[Diagnostics] Decay of {study.quantity}: slope {study.slope:.4f} +/- {study.slope_half_width:.4f}")
    return studies


def _two_sided(m: float, Q: float, R: float) -> TwoSidedCheck:
    if m < abs(Q):
        return TwoSidedCheck(applicable=False)
    root = math.sqrt(m ** 2 - Q ** 2)
    lower, upper = m - root, m + root
    failing = "lower" if R < lower else "upper" if R > upper else None
    return TwoSidedCheck(applicable=True, lower=lower, upper=upper, holds=failing is None, failing_side=failing)


def inequality_variants(mass: float, radii: Sequence[float], charges: Sequence[float],
                        total: Optional[float] = None) -> InequalityVariants:
    """Penrose-type inequalities for horizon components with area radii R_i and charges Q_i."""
    if not radii or len(radii) != len(charges):
        raise ValueError("Need one charge per horizon component.")
    R = math.sqrt(sum(r ** 2 for r in radii))
    Q = sum(charges) if total is None else total
    q = min(
        abs(sum(subset))
        for k in range(1, len(charges) + 1)
        for subset in itertools.combinations(charges, k)
    )
    return InequalityVariants(
        mass=mass, charge=Q, area_radius=R, component_radii=list(radii), component_charges=list(charges),
        charged_penrose_deficit=mass - 0.5 * (R + Q ** 2 / R),
        additive_deficit=mass - 0.5 * sum(r + c ** 2 / r for r, c in zip(radii, charges)),
        multi_component_q=q,
        multi_component_deficit=mass - 0.5 * max(r + q ** 2 / r for r in radii),
        riemannian_margin=mass - 0.5 * R,
        two_sided=_two_sided(mass, Q, R),
    )


def extreme_rn_neck_trend(m: float, radii: Sequence[float] = (1.0, 0.5, 0.25, 0.1, 0.05, 0.02)) -> ExtremeRNTrend:
    """m - (R + Q^2/R)/2 on coordinate spheres down the neck of single-puncture MP data."""
    data = single_puncture_data(m)
    points = []
    for r in sorted(radii, reverse=True):
        S = coordinate_sphere(r, n=SPHERE_SAMPLES)
        R = math.sqrt(surface_area(S, data.metric) / (4.0 * math.pi))
        Q = surface_charge(S, data)
        points.append(NeckTrendPoint(radius=r, area_radius=R, charge=Q, deficit=m - 0.5 * (R + Q ** 2 / R),
                                     deficit_exact=-r ** 2 / (2.0 * (r + m))))
    magnitudes = [abs(p.deficit) for p in points]
    trend = ExtremeRNTrend(
        m=m, points=points,
        monotone=all(b < a for a, b in zip(magnitudes, magnitudes[1:])),
        max_error=max(abs(p.deficit - p.deficit_exact) for p in points),
    )
    console.info(f"[Diagnostics] Extreme RN neck trend: monotone={trend.monotone}, max error {trend.max_error:.3e}")
    return trend
