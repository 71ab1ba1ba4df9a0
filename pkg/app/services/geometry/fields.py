# app/services/geometry/fields.py
# Discrete scalar and vector fields on the atlas, the metric state g = W^2 (dx1^2 + dx2^2 + a^2 dphi^2)
# and the spline samplers used to evaluate both off the grid.
# Date: 2026-10-19
# Version: 0.1.0

import csv
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, Literal, Optional, Protocol, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline

from app.core.config import settings
from app.core.logger import console
from app.services.geometry.atlas import EXTERIOR, Atlas, Chart

Parity = Literal["even", "odd"]
Triple = Tuple[np.ndarray, np.ndarray, np.ndarray]


class ScaleSource(Protocol):
    """Closed-form metric scale W and its chart derivatives, as seen by the geometry layer."""

    def exterior_scale(self, rho: np.ndarray, z: np.ndarray) -> Triple: ...

    def neck_scale(self, height: float, T: float, s: np.ndarray, theta: np.ndarray) -> Triple: ...


def _spline_for(chart: Chart, values: np.ndarray, parity: Optional[Parity]) -> RectBivariateSpline:
    """Interpolating spline with the axis (and, for reflected fields, the cut) mirrored."""
    x1, x2, v = chart.x1, chart.x2, values
    if chart.axis_dim == 0:
        x1 = np.concatenate([-x1[:0:-1], x1])
        v = np.concatenate([v[:0:-1], v], axis=0)
    else:
        x2 = np.concatenate([-x2[:0:-1], x2, 2.0 * np.pi - x2[-2::-1]])
        v = np.concatenate([v[:, :0:-1], v, v[:, -2::-1]], axis=1)
        if parity is not None:
            sign = 1.0 if parity == "even" else -1.0
            x1 = np.concatenate([-x1[:0:-1], x1])
            v = np.concatenate([sign * v[:0:-1], v], axis=0)
    return RectBivariateSpline(x1, x2, v)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Per-chart node values. `parity` is the behaviour across the cut s = 0 (None when not reflected)."""
    atlas: Atlas
    values: Dict[str, np.ndarray]
    parity: Optional[Parity] = None
    _splines: Dict[str, RectBivariateSpline] = field(default_factory=dict, init=False, repr=False)

    @classmethod
    def zeros(cls, atlas: Atlas, parity: Optional[Parity] = None) -> "ScalarField":
        return cls(atlas, {c.name: np.zeros(c.shape) for c in atlas.charts}, parity)

    @classmethod
    def from_function(cls, atlas: Atlas, fn: Callable[[Chart], np.ndarray],
                      parity: Optional[Parity] = None) -> "ScalarField":
        return cls(atlas, {c.name: np.asarray(fn(c), dtype=float) for c in atlas.charts}, parity)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def map(self, fn: Callable[[np.ndarray], np.ndarray], parity: Optional[Parity] = None) -> "ScalarField":
        return ScalarField(self.atlas, {k: fn(v) for k, v in self.values.items()}, parity or self.parity)

    def filled(self) -> "ScalarField":
        return ScalarField(self.atlas, self.atlas.fill(self.values), self.parity)

    def sup(self, mask: Optional[Dict[str, np.ndarray]] = None) -> float:
        """max |f| over owned nodes (or the given masks), ignoring NaN."""
        best = 0.0
        for chart in self.atlas.charts:
            keep = chart.owned if mask is None else mask[chart.name]
            vals = np.abs(self.values[chart.name][keep])
            vals = vals[np.isfinite(vals)]
            if vals.size:
                best = max(best, float(vals.max()))
        return best

    def min(self) -> float:
        return min(float(np.nanmin(self.values[c.name][c.active])) for c in self.atlas.charts)

    def spline(self, chart_name: str) -> RectBivariateSpline:
        if chart_name not in self._splines:
            chart = self.atlas.chart(chart_name)
            self._splines[chart_name] = _spline_for(chart, self.values[chart_name], self.parity)
        return self._splines[chart_name]

    def sample(self, chart_name: str, x1: np.ndarray, x2: np.ndarray) -> Triple:
        """Value and first chart derivatives at arbitrary chart points."""
        chart = self.atlas.chart(chart_name)
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if chart.axis_dim == 1 and self.parity is None:
            x1 = np.maximum(x1, chart.x1[0])
        spl = self.spline(chart_name)
        return spl.ev(x1, x2), spl.ev(x1, x2, dx=1), spl.ev(x1, x2, dy=1)

    def export_csv(self, path: str) -> str:
        """Rows chart,coord1,coord2,value for every active node."""
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        digits = settings.FLOAT_DIGITS
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["chart", "coord1", "coord2", "value"])
            for chart in self.atlas.charts:
                x1, x2 = np.meshgrid(chart.x1, chart.x2, indexing="ij")
                vals = self.values[chart.name]
                for i, j in zip(*np.nonzero(chart.active)):
                    writer.writerow([chart.name, f"{x1[i, j]:.{digits}g}", f"{x2[i, j]:.{digits}g}",
                                     f"{vals[i, j]:.{digits}g}"])
        console.info(f"[Fields] Exported field to {path}")
        return path


@dataclass(frozen=True, eq=False)
class VectorField:
    """Covariant components (X_1, X_2) in each chart's coordinate frame, stored as (n1, n2, 2)."""
    atlas: Atlas
    values: Dict[str, np.ndarray]

    @classmethod
    def zeros(cls, atlas: Atlas) -> "VectorField":
        return cls(atlas, {c.name: np.zeros(c.shape + (2,)) for c in atlas.charts})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def component(self, name: str, k: int) -> np.ndarray:
        return self.values[name][..., k]


@dataclass(frozen=True, eq=False)
class MetricState:
    """
    Metric g = W^2 (dx1^2 + dx2^2 + a^2 dphi^2) on every chart.

    W comes from a closed-form source, optionally multiplied by (1 + psi)^2 where psi is a
    grid field. On the exterior W = v^2 with g = v^4 delta; on a neck W = v^2 r_i, which is the
    cylinder scale m wherever the data is exactly cylindrical. `mirror` marks states that are
    even under the reflection s -> -s across the cut.
    """
    atlas: Optional[Atlas]
    source: ScaleSource
    factor: Optional[ScalarField] = None
    mirror: bool = False
    _cache: Dict = field(default_factory=dict, init=False, repr=False)

    def cached(self, key, builder: Callable):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def kind(self, chart_name: str) -> str:
        return "conformally_flat" if chart_name == EXTERIOR else "cylinder"

    def _require_atlas(self) -> Atlas:
        if self.atlas is None:
            raise ValueError("This metric state carries no atlas; only exterior sampling is available.")
        return self.atlas

    def scale(self, chart: Chart) -> np.ndarray:
        """Node values of W on `chart`."""
        def build():
            x1, x2 = np.meshgrid(chart.x1, chart.x2, indexing="ij")
            W, _, _ = self._source_scale(chart.name, x1, x2)
            if self.factor is not None:
                W = W * (1.0 + self.factor[chart.name]) ** 2
            return W
        return self.cached(("scale", chart.name), build)

    def _source_scale(self, chart_name: str, x1: np.ndarray, x2: np.ndarray) -> Triple:
        if chart_name == EXTERIOR:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                return self.source.exterior_scale(x1, x2)
        atlas = self._require_atlas()
        index = atlas.chart(chart_name).puncture
        if not self.mirror:
            return self.source.neck_scale(atlas.heights[index], atlas.T, x1, x2)
        sign = np.where(x1 < 0.0, -1.0, 1.0)
        W, Ws, Wt = self.source.neck_scale(atlas.heights[index], atlas.T, np.abs(x1), x2)
        return W, sign * Ws, Wt

    def sample(self, chart_name: str, x1: np.ndarray, x2: np.ndarray) -> Triple:
        """W and its chart derivatives at arbitrary points of `chart_name`."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        W, W1, W2 = self._source_scale(chart_name, x1, x2)
        if self.factor is None:
            return W, W1, W2
        psi, psi1, psi2 = self.factor.sample(chart_name, x1, x2)
        phi = 1.0 + psi
        return phi ** 2 * W, phi ** 2 * W1 + 2 * phi * psi1 * W, phi ** 2 * W2 + 2 * phi * psi2 * W

    def conformal_factor(self) -> ScalarField:
        """v with g = v^4 delta on the exterior; on the necks v = (W / r_i)^{1/2}."""
        atlas = self._require_atlas()

        def v(chart: Chart) -> np.ndarray:
            W = self.scale(chart)
            if chart.name == EXTERIOR:
                return np.sqrt(W)
            return np.sqrt(W / np.exp(chart.x1[:, None] - atlas.T))
        return ScalarField.from_function(atlas, v)


def overlap_consistency(f: ScalarField) -> float:
    """
    Max |f_neck - f_exterior| over neck nodes in the overlap annulus r_hole <= r_i <= r_match,
    with the exterior values resampled by spline at the neck node positions.
    """
    atlas = f.atlas
    exterior = f.spline(EXTERIOR)
    worst = 0.0
    for neck in atlas.necks:
        r = np.exp(neck.x1[:, None] - atlas.T) * np.ones((1, neck.x2.size))
        band = r >= atlas.grid.r_hole
        if not band.any():
            continue
        predicted = exterior.ev(neck.rho[band], neck.z[band])
        worst = max(worst, float(np.max(np.abs(f[neck.name][band] - predicted))))
    return worst
