# app/services/constraints/barrier.py
# The comparison function w = psi(r_1) + psi(r_2),
#   psi(r) = -e^{-T} int_{e^{-T}}^r log(s) / (s (s + m)) ds,
# in closed form through the dilogarithm, and the grid checks of its three properties.
# Date: 2026-10-19
# Version: 0.1.0

import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import spence

from app.core.errors import GluingError
from app.core.logger import console
from app.schemas.background_schemas import GlueParams
from app.schemas.solver_schemas import BarrierReport
from app.services.background import GluedBackground
from app.services.geometry.atlas import Atlas
from app.services.geometry.fields import ScalarField

DEFAULT_EPS = 0.05
QUADRATURE_RTOL = 1e-8


def _antiderivative(s: np.ndarray, m: float) -> np.ndarray:
    """G with G' = log(s) / (s (s + m)); Li_2(-x) = spence(1 + x)."""
    log_s = np.log(s)
    return (0.5 * log_s ** 2 - log_s * np.log1p(s / m) - spence(1.0 + s / m)) / m


def barrier_profile(r, m: float, T: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return -math.exp(-T) * (_antiderivative(r, m) - _antiderivative(np.array(math.exp(-T)), m))


def barrier_quadrature(r: float, m: float, T: float) -> float:
    """psi(r) by adaptive quadrature in x = log s, where the integrand x / (e^x + m) is smooth."""
    value, _ = quad(lambda x: x / (math.exp(x) + m), -T, math.log(r), epsabs=0.0, epsrel=1e-13, limit=200)
    return -math.exp(-T) * value


def barrier_derivatives(r, m: float, T: float) -> Tuple[np.ndarray, np.ndarray]:
    """(psi'(r), Delta_delta psi) of the radial profile."""
    r = np.asarray(r, dtype=float)
    log_r = np.log(r)
    d1 = -math.exp(-T) * log_r / (r * (r + m))
    lap = -math.exp(-T) * (m * log_r + r + m) / (r ** 2 * (r + m) ** 2)
    return d1, lap


def single_mass_laplacian(r, m: float, T: float) -> np.ndarray:
    """Delta of psi(r) in the one-puncture MP metric (1 + m/r)^2 delta."""
    return -math.exp(-T) / (np.asarray(r, dtype=float) + m) ** 3


def barrier_precondition(m: float, T: float, eps: float = DEFAULT_EPS) -> Optional[str]:
    """Reason the barrier properties are not expected to hold, or None."""
    if m >= 1.0:
        return f"barrier needs m < 1, got m={m}"
    if T < -math.log(eps) + 2.0:
        return f"barrier needs T >= -log(eps) + 2 = {-math.log(eps) + 2.0:.4f}, got T={T}"
    return None


def barrier_field(glue: GlueParams, atlas: Atlas) -> Tuple[ScalarField, ScalarField]:
    """
    Node values of w and of Delta_ghat w = P^-3 (P Delta_delta w + grad P . grad w),
    both in closed form.
    """
    background = GluedBackground(glue)
    m, T = glue.m, glue.T
    w_values: Dict[str, np.ndarray] = {}
    lap_values: Dict[str, np.ndarray] = {}
    for chart in atlas.charts:
        rho, z = chart.rho, chart.z
        with np.errstate(divide="ignore", invalid="ignore"):
            p = background.potential(rho, z)
            w = np.zeros(chart.shape)
            lap_flat = np.zeros(chart.shape)
            grad_dot = np.zeros(chart.shape)
            for height in glue.heights:
                dz = z - height
                r = np.hypot(rho, dz)
                d1, lap = barrier_derivatives(r, m, T)
                w += barrier_profile(r, m, T)
                lap_flat += lap
                grad_dot += d1 * (p.P_rho * rho + p.P_z * dz) / r
            lap_w = (p.P * lap_flat + grad_dot) / p.P ** 3
        lap_w[chart.hole] = np.nan
        w_values[chart.name] = w
        lap_values[chart.name] = lap_w
    return ScalarField(atlas, w_values, "even"), ScalarField(atlas, lap_values, "even")


def _gamma_mask(atlas: Atlas, T: float) -> Dict[str, np.ndarray]:
    """Nodes of Gamma(e^{-T+2}) = {e^{-T} <= r_i < e^{-T+2}}."""
    upper = math.exp(-T + 2.0)
    masks = {}
    for chart in atlas.charts:
        mask = np.zeros(chart.shape, dtype=bool)
        for height in atlas.heights:
            mask |= np.hypot(chart.rho, chart.z - height) < upper
        masks[chart.name] = mask & chart.active
    return masks


def verify_barrier(m: float, T: float, atlas: Atlas, eps: float = DEFAULT_EPS,
                   rel_tol: float = 1e-12) -> BarrierReport:
    """
    Checks 0 < w <= m^-1 T^2 e^-T and Delta w <= tol on every node of M+, and
    Delta w <= -c e^-T with c > 0 on Gamma(e^{-T+2}). psi(1) is cross-checked against
    quadrature.
    """
    reason = barrier_precondition(m, T, eps)
    if reason is not None:
        raise ValueError(reason)
    glue = GlueParams(m=m, T=T, cutoff_profile=atlas.glue.cutoff_profile, separation=atlas.glue.separation)
    console.info(f"[Barrier] Verifying barrier properties: m={m}, T={T}, eps={eps}")

    psi_one = float(barrier_profile(1.0, m, T))
    psi_one_quad = barrier_quadrature(1.0, m, T)
    if abs(psi_one - psi_one_quad) > QUADRATURE_RTOL * abs(psi_one_quad):
        raise GluingError(f"Barrier closed form psi(1)={psi_one:.15e} disagrees with quadrature {psi_one_quad:.15e}.")
    scale = T ** 2 * math.exp(-T) / m
    bracket = (scale / 4.0, scale / 2.0)

    w, lap_w = barrier_field(glue, atlas)
    w_min = min(float(np.min(w[c.name][c.active])) for c in atlas.charts)
    w_max = w.sup()
    lap_max = max(float(np.nanmax(lap_w[c.name][c.active])) for c in atlas.charts)
    tolerance = rel_tol * lap_w.sup()

    gamma = _gamma_mask(atlas, T)
    c_measured = min(
        float(np.min(-lap_w[c.name][gamma[c.name]] * math.exp(T))) for c in atlas.charts if gamma[c.name].any()
    )

    bounded_ok = bool(w_min > 0.0 and w_max <= scale)
    superharmonic_ok = bool(lap_max <= tolerance)
    band_ok = bool(c_measured > 0.0)
    report = BarrierReport(
        m=m, T=T, eps=eps, psi_one=psi_one, psi_one_quadrature=psi_one_quad, psi_one_bracket=bracket,
        psi_one_in_bracket=bool(bracket[0] < psi_one <= bracket[1]),
        w_min=w_min, w_max=w_max, w_bound=scale, bounded_ok=bounded_ok,
        laplacian_max=lap_max, laplacian_tolerance=tolerance, superharmonic_ok=superharmonic_ok,
        c_measured=c_measured, band_ok=band_ok, deep_limit=-math.exp(-T) / m ** 3,
        passed=bounded_ok and superharmonic_ok and band_ok,
    )
    log = console.success if report.passed else console.warning
    log(f"[Barrier] bounded={bounded_ok} superharmonic={superharmonic_ok} band={band_ok}, c={c_measured:.6e}, psi(1)={psi_one:.6e}")
    return report
