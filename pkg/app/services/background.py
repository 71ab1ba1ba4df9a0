# app/services/background.py
# Closed-form conformally flat backgrounds g = P^2 delta with E = sign * dP / P:
#   exact Majumdar-Papapetrou   P = u^2 = 1 + sum m_k / r_k
#   glued                       P = chi_1 chi_2 + chi_2 m / r_1 + chi_1 m / r_2
#   Schwarzschild               P = (1 + m / 2r)^2, E = 0
# plus the ConformalData container shared by every later stage.
# Date: 2026-10-19
# Version: 0.1.0

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Literal, Optional, Tuple

import numpy as np

from app.core.errors import AtlasError, ProvenanceError
from app.core.logger import console
from app.schemas.background_schemas import AnalyticSummary, GlueParams, LAMBDA_CRIT, MPParams, ResidualNorms
from app.services.geometry.atlas import EXTERIOR, Atlas, Chart
from app.services.geometry.fields import MetricState, ScalarField, VectorField
from app.services.geometry.operators import (
    assemble_operator, chart_divergence, chart_gradient, divergence, laplace_beltrami, weighted_sup_norm,
)

Provenance = Literal["exact-mp", "glued", "divergence-fixed", "solved", "schwarzschild"]
MIRRORED: Tuple[str, ...] = ("glued", "divergence-fixed", "solved")
RESIDUAL_BETA = 3.0


# --- cutoff profiles --------------------------------------------------------------

def _quintic(x: np.ndarray):
    S = x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)
    S1 = 30.0 * x ** 2 * (1.0 - x) ** 2
    S2 = 60.0 * x * (1.0 - 3.0 * x + 2.0 * x ** 2)
    return S, S1, S2


def _septic(x: np.ndarray):
    S = x ** 4 * (35.0 - 84.0 * x + 70.0 * x ** 2 - 20.0 * x ** 3)
    S1 = 140.0 * x ** 3 * (1.0 - x) ** 3
    S2 = 420.0 * x ** 2 * (1.0 - x) ** 2 * (1.0 - 2.0 * x)
    return S, S1, S2


CUTOFF_PROFILES: Dict[str, Callable] = {"quintic": _quintic, "septic": _septic}


def cutoff(r: np.ndarray, T: float, profile: str = "quintic") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    chi(r) = S(log r + T - 1) clipped to the band e^{-T+1} <= r <= e^{-T+2}.
    Returns (chi, chi', Delta_delta chi) with chi' = d chi / dr.
    """
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.clip(np.log(r) + T - 1.0, 0.0, 1.0)
    S, S1, S2 = CUTOFF_PROFILES[profile](x)
    with np.errstate(divide="ignore", invalid="ignore"):
        dchi = np.where(S1 != 0.0, S1 / r, 0.0)
        lap = np.where((S1 != 0.0) | (S2 != 0.0), (S2 + S1) / r ** 2, 0.0)
    return S, dchi, lap


# --- closed-form backgrounds ------------------------------------------------------

@dataclass(frozen=True)
class PotentialSample:
    P: np.ndarray
    P_rho: np.ndarray
    P_z: np.ndarray
    lap: np.ndarray


@dataclass(frozen=True)
class Invariants:
    """Scalar curvature, |E|^2, div E and the Gauss residual R - 2|E|^2 at a set of points."""
    R: np.ndarray
    E2: np.ndarray
    div: np.ndarray
    gauss: np.ndarray


class ClosedFormBackground(ABC):
    """A metric P^2 delta with electric field sign * dP / P, known in closed form everywhere."""

    provenance: str = "exact-mp"
    field_sign: int = 1
    cylinder_scale: Optional[float] = None

    @abstractmethod
    def potential(self, rho: np.ndarray, z: np.ndarray) -> PotentialSample:
        ...

    def deep_region(self, s: np.ndarray) -> np.ndarray:
        """Neck points where the data is exactly the cylinder of scale `cylinder_scale`."""
        return np.zeros(np.shape(s), dtype=bool)

    # geometry-layer protocol
    def exterior_scale(self, rho, z):
        p = self.potential(np.asarray(rho, dtype=float), np.asarray(z, dtype=float))
        return p.P, p.P_rho, p.P_z

    def _neck_terms(self, height: float, rho: np.ndarray, dz: np.ndarray):
        p = self.potential(rho, height + dz)
        Ps = rho * p.P_rho + dz * p.P_z
        Pt = dz * p.P_rho - rho * p.P_z
        return p, Ps, Pt

    @staticmethod
    def _neck_point(T: float, s: np.ndarray, theta: np.ndarray):
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        r = np.exp(s - T)
        return s, r, np.abs(r * np.sin(theta)), r * np.cos(theta)

    def neck_scale(self, height: float, T: float, s, theta):
        s, r, rho, dz = self._neck_point(T, s, theta)
        p, Ps, Pt = self._neck_terms(height, rho, dz)
        W, Ws, Wt = p.P * r, r * (p.P + Ps), r * Pt
        deep = self.deep_region(s)
        if deep.any():
            W = np.where(deep, self.cylinder_scale, W)
            Ws = np.where(deep, 0.0, Ws)
            Wt = np.where(deep, 0.0, Wt)
        return W, Ws, Wt

    # electric field, covariant components in the chart frame
    def exterior_field(self, rho, z):
        p = self.potential(np.asarray(rho, dtype=float), np.asarray(z, dtype=float))
        return self.field_sign * p.P_rho / p.P, self.field_sign * p.P_z / p.P

    def neck_field(self, height: float, T: float, s, theta):
        s, r, rho, dz = self._neck_point(T, s, theta)
        p, Ps, Pt = self._neck_terms(height, rho, dz)
        Es, Et = self.field_sign * Ps / p.P, self.field_sign * Pt / p.P
        deep = self.deep_region(s)
        if deep.any():
            Es = np.where(deep, -float(self.field_sign), Es)
            Et = np.where(deep, 0.0, Et)
        return Es, Et

    def invariants(self, rho, z) -> Invariants:
        p = self.potential(np.asarray(rho, dtype=float), np.asarray(z, dtype=float))
        grad2 = p.P_rho ** 2 + p.P_z ** 2
        E2 = grad2 / p.P ** 4
        R = -4.0 * p.lap / p.P ** 3 + 2.0 * E2
        return Invariants(R=R, E2=E2, div=self.field_sign * p.lap / p.P ** 3, gauss=-4.0 * p.lap / p.P ** 3)

    # node evaluation on an atlas
    def chart_field(self, atlas: Atlas, chart: Chart) -> np.ndarray:
        if chart.name == EXTERIOR:
            with np.errstate(divide="ignore", invalid="ignore"):
                E1, E2 = self.exterior_field(chart.rho, chart.z)
            return np.stack([E1, E2], axis=-1)
        height = atlas.heights[chart.puncture]
        p, Ps, Pt = self._neck_terms(height, chart.rho, chart.z - height)
        Es, Et = self.field_sign * Ps / p.P, self.field_sign * Pt / p.P
        deep = self.deep_region(chart.x1)[:, None] & np.ones(chart.shape, dtype=bool)
        Es = np.where(deep, -float(self.field_sign), Es)
        Et = np.where(deep, 0.0, Et)
        Et[chart.axis] = 0.0
        return np.stack([Es, Et], axis=-1)

    def chart_invariants(self, atlas: Atlas, chart: Chart) -> Invariants:
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = self.invariants(chart.rho, chart.z)
        if chart.name == EXTERIOR or self.cylinder_scale is None:
            return inv
        deep = self.deep_region(chart.x1)[:, None] & np.ones(chart.shape, dtype=bool)
        m = self.cylinder_scale
        return Invariants(
            R=np.where(deep, 2.0 / m ** 2, inv.R),
            E2=np.where(deep, 1.0 / m ** 2, inv.E2),
            div=np.where(deep, 0.0, inv.div),
            gauss=np.where(deep, 0.0, inv.gauss),
        )


def _distances(rho: np.ndarray, z: np.ndarray, height: float) -> Tuple[np.ndarray, np.ndarray]:
    dz = z - height
    return np.hypot(rho, dz), dz


class MajumdarPapapetrou(ClosedFormBackground):
    provenance = "exact-mp"

    def __init__(self, params: MPParams):
        self.params = params
        self.field_sign = params.field_sign

    def potential(self, rho, z) -> PotentialSample:
        P = np.ones(np.broadcast(rho, z).shape)
        P_rho = np.zeros_like(P)
        P_z = np.zeros_like(P)
        for mass, height in zip(self.params.masses, self.params.heights):
            if mass == 0.0:
                continue
            r, dz = _distances(rho, z, height)
            P = P + mass / r
            P_rho = P_rho - mass * rho / r ** 3
            P_z = P_z - mass * dz / r ** 3
        return PotentialSample(P=P, P_rho=P_rho, P_z=P_z, lap=np.zeros_like(P))


class GluedBackground(ClosedFormBackground):
    """The surgered data P = u_hat^2 on M+; exactly the cylinder m^2 (ds^2 + d omega^2) for s <= 1."""
    provenance = "glued"

    def __init__(self, glue: GlueParams):
        self.glue = glue
        self.m = glue.m
        self.T = glue.T
        self.profile = glue.cutoff_profile
        self.heights = glue.heights
        self.cylinder_scale = glue.m
        self.field_sign = 1

    def deep_region(self, s) -> np.ndarray:
        return np.asarray(s, dtype=float) <= 1.0

    def potential(self, rho, z) -> PotentialSample:
        m = self.m
        r1, d1 = _distances(rho, z, self.heights[0])
        r2, d2 = _distances(rho, z, self.heights[1])
        c1, c1p, l1 = cutoff(r1, self.T, self.profile)
        c2, c2p, l2 = cutoff(r2, self.T, self.profile)
        e1 = (rho / r1, d1 / r1)
        e2 = (rho / r2, d2 / r2)
        dot = e1[0] * e2[0] + e1[1] * e2[1]

        P = c1 * c2 + c2 * m / r1 + c1 * m / r2
        grads = []
        for k in (0, 1):
            grads.append(
                c1p * e1[k] * c2 + c1 * c2p * e2[k]
                + (m / r1) * c2p * e2[k] - c2 * (m / r1 ** 2) * e1[k]
                + (m / r2) * c1p * e1[k] - c1 * (m / r2 ** 2) * e2[k]
            )
        lap = (l1 * c2 + c1 * l2 + 2.0 * c1p * c2p * dot
               + (m / r1) * l2 - 2.0 * (m / r1 ** 2) * c2p * dot
               + (m / r2) * l1 - 2.0 * (m / r2 ** 2) * c1p * dot)
        return PotentialSample(P=P, P_rho=grads[0], P_z=grads[1], lap=lap)


class SchwarzschildBackground(ClosedFormBackground):
    """Vacuum slice (1 + m/2r)^4 delta about the origin."""
    provenance = "schwarzschild"

    def __init__(self, m: float):
        self.m = m

    def potential(self, rho, z) -> PotentialSample:
        r = np.hypot(rho, z)
        u = 1.0 + self.m / (2.0 * r)
        dP = -u * self.m / r ** 2
        return PotentialSample(P=u ** 2, P_rho=dP * rho / r, P_z=dP * z / r, lap=self.m ** 2 / (2.0 * r ** 4))

    def exterior_field(self, rho, z):
        shape = np.broadcast(rho, z).shape
        return np.zeros(shape), np.zeros(shape)

    def neck_field(self, height, T, s, theta):
        shape = np.broadcast(s, theta).shape
        return np.zeros(shape), np.zeros(shape)

    def chart_field(self, atlas: Atlas, chart: Chart) -> np.ndarray:
        return np.zeros(chart.shape + (2,))

    def invariants(self, rho, z) -> Invariants:
        zero = np.zeros(np.broadcast(rho, z).shape)
        return Invariants(R=zero, E2=zero, div=zero, gauss=zero)


# --- conformal data ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConformalData:
    """
    Initial data (g, E) with B = 0. `metric` carries W (and the Lichnerowicz factor psi
    once solved), `electric` the node values of E in every chart frame, `potential` the
    divergence-fix potential phi with E = factor^-2 (E_background - d phi).
    """
    atlas: Optional[Atlas]
    metric: MetricState
    electric: Optional[VectorField]
    provenance: Provenance
    background: ClosedFormBackground
    potential: Optional[ScalarField] = None

    @property
    def magnetic(self) -> float:
        return 0.0

    @property
    def factor(self) -> Optional[ScalarField]:
        return self.metric.factor

    def require(self, *allowed: str):
        if self.provenance not in allowed:
            raise ProvenanceError(f"Expected provenance in {allowed}, got '{self.provenance}'.")

    def require_atlas(self) -> Atlas:
        if self.atlas is None:
            raise ProvenanceError("This operation needs data evaluated on an atlas.")
        return self.atlas

    @cached_property
    def hat_metric(self) -> MetricState:
        """The metric before the Lichnerowicz factor is applied."""
        if self.metric.factor is None:
            return self.metric
        return MetricState(self.atlas, self.background, None, self.metric.mirror)

    def sample_electric(self, chart_name: str, x1, x2) -> Tuple[np.ndarray, np.ndarray]:
        """E at arbitrary chart points: closed-form background, minus d phi, times (1 + psi)^-2."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        bg = self.background
        if chart_name == EXTERIOR:
            with np.errstate(divide="ignore", invalid="ignore"):
                E1, E2 = bg.exterior_field(x1, x2)
        else:
            atlas = self.require_atlas()
            chart = atlas.chart(chart_name)
            s = np.abs(x1) if self.metric.mirror else x1
            E1, E2 = bg.neck_field(atlas.heights[chart.puncture], atlas.T, s, x2)
            if self.metric.mirror:
                E2 = np.where(x1 < 0.0, -E2, E2)
        if self.potential is not None:
            _, p1, p2 = self.potential.sample(chart_name, x1, x2)
            E1, E2 = E1 - p1, E2 - p2
        if self.factor is not None:
            psi = self.factor.sample(chart_name, x1, x2)[0]
            scale = (1.0 + psi) ** -2
            E1, E2 = scale * E1, scale * E2
        return E1, E2


def _node_electric(background: ClosedFormBackground, atlas: Atlas) -> VectorField:
    return VectorField(atlas, {c.name: background.chart_field(atlas, c) for c in atlas.charts})


def _check_punctures(heights, atlas: Atlas):
    if len(heights) != 2 or sorted(heights) != sorted(atlas.heights):
        raise AtlasError(f"MP centers at z = {list(heights)} do not coincide with the atlas punctures {list(atlas.heights)}.")


def evaluate_mp(params: MPParams, atlas: Optional[Atlas] = None) -> ConformalData:
    """
    Exact MP data u^4 delta, E = sign * 2 d log u. Without an atlas only closed-form
    sampling on exterior surfaces is available (used for single-puncture data).
    """
    background = MajumdarPapapetrou(params)
    if atlas is not None:
        _check_punctures(params.heights, atlas)
    metric = MetricState(atlas, background)
    electric = _node_electric(background, atlas) if atlas is not None else None
    console.info(f"[Background] Exact MP data: masses={params.masses}, centers z={params.heights}, sign={params.field_sign}")
    return ConformalData(atlas, metric, electric, "exact-mp", background)


def single_puncture_data(m: float) -> ConformalData:
    """Extreme Reissner-Nordstrom data: MP with one puncture of mass m at the origin."""
    return evaluate_mp(MPParams(masses=[m], centers=[(0.0, 0.0, 0.0)]))


def evaluate_glued(glue: GlueParams, atlas: Atlas) -> ConformalData:
    """Glued data (g_hat, E_hat) on M+, reflection-symmetric across the cut s = 0."""
    if (atlas.glue.T, atlas.glue.separation) != (glue.T, glue.separation):
        raise AtlasError(f"Atlas was built for T={atlas.glue.T}, separation={atlas.glue.separation}; "
                         f"got T={glue.T}, separation={glue.separation}.")
    background = GluedBackground(glue)
    metric = MetricState(atlas, background, mirror=True)
    lo, hi = glue.band
    console.info(f"[Background] Glued data: m={glue.m}, T={glue.T}, profile={glue.cutoff_profile}, "
                 f"band=({lo:.4e}, {hi:.4e})")
    return ConformalData(atlas, metric, _node_electric(background, atlas), "glued", background)


def evaluate_schwarzschild(m: float, atlas: Optional[Atlas] = None) -> ConformalData:
    if m <= 0.0:
        raise ValueError(f"Schwarzschild mass must be positive, got {m}.")
    background = SchwarzschildBackground(m)
    metric = MetricState(atlas, background)
    electric = _node_electric(background, atlas) if atlas is not None else None
    return ConformalData(atlas, metric, electric, "schwarzschild", background)


def analytic_summary(m: float) -> AnalyticSummary:
    """Closed-form reference values of the symmetric MP pair."""
    if m <= 0.0:
        raise ValueError(f"Mass must be positive, got {m}.")
    return AnalyticSummary(
        m=m,
        mu=2.0 * m,
        Q=2.0 * m,
        A_necks=8.0 * math.pi * m ** 2,
        R=math.sqrt(2.0) * m,
        deficit=m * (2.0 - 3.0 / math.sqrt(2.0)),
        lambda_crit=LAMBDA_CRIT,
    )


# --- constraint residuals ---------------------------------------------------------

@dataclass(frozen=True)
class ConstraintResiduals:
    gauss: ScalarField
    div: ScalarField
    norms: ResidualNorms


def _mask_holes(atlas: Atlas, values: Dict[str, np.ndarray]) -> ScalarField:
    for chart in atlas.charts:
        values[chart.name] = np.where(chart.hole, np.nan, values[chart.name])
    return ScalarField(atlas, values)


def _closed_form_residuals(data: ConformalData) -> Tuple[ScalarField, ScalarField]:
    atlas = data.require_atlas()
    gauss, div = {}, {}
    for chart in atlas.charts:
        inv = data.background.chart_invariants(atlas, chart)
        gauss[chart.name], div[chart.name] = inv.gauss, inv.div
    return _mask_holes(atlas, gauss), _mask_holes(atlas, div)


def _semi_discrete_residuals(data: ConformalData) -> Tuple[ScalarField, ScalarField]:
    """
    Closed-form curvature of the background with the discrete phi and psi: the Gauss term
    uses R_hat in closed form, the divergence is the grid divergence of E_hat - d phi,
    rescaled by Phi^-6.
    """
    atlas = data.require_atlas()
    hat = data.hat_metric
    phi = data.potential if data.potential is not None else ScalarField.zeros(atlas, "odd")
    Phi = data.factor.map(lambda v: 1.0 + v, parity="even") if data.factor is not None else None
    lap_Phi = laplace_beltrami(Phi, hat, "even") if Phi is not None else None

    gauss, div = {}, {}
    for chart in atlas.charts:
        inv = data.background.chart_invariants(atlas, chart)
        E = data.background.chart_field(atlas, chart) - chart_gradient(chart, phi[chart.name])
        E2 = (E[..., 0] ** 2 + E[..., 1] ** 2) / hat.scale(chart) ** 2
        div_hat = chart_divergence(chart, hat.scale(chart), E)
        if Phi is None:
            gauss[chart.name] = inv.R - 2.0 * E2
            div[chart.name] = div_hat
        else:
            f = Phi[chart.name]
            N = lap_Phi[chart.name] - inv.R / 8.0 * f + E2 / (4.0 * f ** 3)
            gauss[chart.name] = -8.0 * f ** -5 * N
            div[chart.name] = f ** -6 * div_hat
    return _mask_holes(atlas, gauss), _mask_holes(atlas, div)


def _discrete_residuals(data: ConformalData) -> Tuple[ScalarField, ScalarField]:
    """
    Everything from grid operators: R = w^-5 (-8 Delta_ref w + R_ref w) with g = w^4 g_ref,
    g_ref flat on the exterior and the unit cylinder (R_ref = 2) on the necks.
    """
    atlas = data.require_atlas()
    metric = data.metric
    parity = "even" if metric.mirror else None
    div_field = divergence(data.electric, metric)
    gauss = {}
    for chart in atlas.charts:
        W = metric.scale(chart)
        w = np.sqrt(W)
        L, valid = metric.cached(("reference_laplacian", chart.name, parity),
                                 lambda: assemble_operator(chart, np.ones(chart.shape), parity, rows_mask=~chart.hole))
        lap_w = (L @ np.nan_to_num(w, posinf=0.0).ravel()).reshape(chart.shape)
        R_ref = 0.0 if chart.name == EXTERIOR else 2.0
        R = w ** -5 * (-8.0 * lap_w + R_ref * w)
        E = data.electric[chart.name]
        E2 = (E[..., 0] ** 2 + E[..., 1] ** 2) / W ** 2
        values = R - 2.0 * E2
        values[~valid] = np.nan
        gauss[chart.name] = values
    return _mask_holes(atlas, gauss), _mask_holes(atlas, dict(div_field.values))


def constraint_residuals(data: ConformalData, method: Optional[str] = None) -> ConstraintResiduals:
    """
    Gauss residual R - 2|E|^2 and div E with their sup and weighted (beta = 3) norms.

    Default method: closed_form for closed-form provenances, semi_discrete once phi or psi
    enter. `discrete` evaluates every term with grid operators (used for convergence studies).
    """
    if method is None:
        method = "semi_discrete" if data.provenance in ("divergence-fixed", "solved") else "closed_form"
    if method == "closed_form":
        if data.provenance in ("divergence-fixed", "solved"):
            raise ProvenanceError(f"No closed form for provenance '{data.provenance}'.")
        gauss, div = _closed_form_residuals(data)
    elif method == "semi_discrete":
        gauss, div = _semi_discrete_residuals(data)
    elif method == "discrete":
        gauss, div = _discrete_residuals(data)
    else:
        raise ValueError(f"Unknown residual method '{method}'.")

    norms = ResidualNorms(
        gauss_sup=gauss.sup(), div_sup=div.sup(),
        gauss_weighted=weighted_sup_norm(gauss, RESIDUAL_BETA), div_weighted=weighted_sup_norm(div, RESIDUAL_BETA),
        beta=RESIDUAL_BETA, method=method,
    )
    console.info(f"[Background] Residuals ({data.provenance}, {method}): "
                 f"gauss_sup={norms.gauss_sup:.6e}, div_sup={norms.div_sup:.6e}")
    return ConstraintResiduals(gauss=gauss, div=div, norms=norms)
