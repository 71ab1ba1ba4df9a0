# app/services/geometry/operators.py
# Second-order discrete calculus for g = W^2 (dx1^2 + dx2^2 + a^2 dphi^2):
#   Laplace-Beltrami  (W^3 a)^-1 [d_i (W a d_i f)]
#   divergence        (W^3 a)^-1 d_i (W a X_i)        (covariant X)
#   gradient          (d_1 f, d_2 f)
# Axis nodes (a = 0) use the even-reflection limits; the neck cut s = 0 uses a ghost node
# of the requested parity.
# Date: 2026-10-19
# Version: 0.1.0

from typing import Dict, Optional, Tuple

import numpy as np
from scipy import sparse

from app.services.geometry.atlas import Chart
from app.services.geometry.fields import MetricState, Parity, ScalarField, VectorField


def _moved(arr: np.ndarray, d: int) -> np.ndarray:
    return np.moveaxis(arr, d, 0)


def _direction_stencil(chart: Chart, W: np.ndarray, d: int, cut_parity: Optional[Parity]):
    """
    Triplets (row, col, value) of the d-direction part of the Laplacian, plus the mask of
    nodes where that part is defined.
    """
    n1, n2 = chart.shape
    x = chart.x1 if d == 0 else chart.x2
    n = x.size
    index = _moved(np.arange(n1 * n2).reshape(n1, n2), d)
    Wt = _moved(W, d)
    at = _moved(chart.warp, d)
    along_axis = d == chart.axis_dim
    K = Wt * at if along_axis else Wt
    weight = Wt ** 3 * at if along_axis else Wt ** 3
    shape_other = Wt.shape[1]
    rows, cols, vals = [], [], []
    defined = np.zeros((n, shape_other), dtype=bool)

    # interior positions along d
    hp = (x[2:] - x[1:-1])[:, None]
    hm = (x[1:-1] - x[:-2])[:, None]
    Kp = 0.5 * (K[1:-1] + K[2:])
    Km = 0.5 * (K[:-2] + K[1:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        cp = Kp / (hp * 0.5 * (hp + hm)) / weight[1:-1]
        cm = Km / (hm * 0.5 * (hp + hm)) / weight[1:-1]
    centre = index[1:-1]
    for col, c in ((index[2:], cp), (index[:-2], cm)):
        rows.append(centre.ravel())
        cols.append(col.ravel())
        vals.append(c.ravel())
    rows.append(centre.ravel())
    cols.append(centre.ravel())
    vals.append(-(cp + cm).ravel())
    defined[1:-1] = True

    for end, nb in ((0, 1), (n - 1, n - 2)):
        h = abs(x[nb] - x[end])
        on_axis = along_axis and np.all(at[end] == 0.0)
        if on_axis:
            # a^-1 d(W a df) -> 2 W f'' with the even ghost f(-h) = f(h)
            c = 4.0 / (Wt[end] ** 2 * h ** 2)
            rows += [index[end], index[end]]
            cols += [index[nb], index[end]]
            vals += [c, -c]
            defined[end] = True
        elif end == 0 and d == 0 and chart.cut.any() and cut_parity is not None:
            K_half = 0.5 * (K[0] + K[1])
            c = 2.0 * K_half / (h ** 2 * weight[0])
            if cut_parity == "even":
                rows += [index[0], index[0]]
                cols += [index[1], index[0]]
                vals += [c, -c]
            else:
                rows.append(index[0])
                cols.append(index[0])
                vals.append(-c)
            defined[0] = True

    rows = np.concatenate([np.ravel(r) for r in rows])
    cols = np.concatenate([np.ravel(c) for c in cols])
    vals = np.concatenate([np.ravel(v) for v in vals])
    return rows, cols, vals, np.moveaxis(defined, 0, d)


def assemble_operator(chart: Chart, W: np.ndarray, cut_parity: Optional[Parity] = None,
                      rows_mask: Optional[np.ndarray] = None) -> Tuple[sparse.csr_matrix, np.ndarray]:
    """
    Sparse Laplace-Beltrami matrix of `chart` for the scale W.

    Returns (L, valid) where valid marks the nodes with a complete stencil. Rows outside
    `rows_mask` (default: valid nodes) are left empty.
    """
    parts = [_direction_stencil(chart, W, d, cut_parity) for d in (0, 1)]
    valid = parts[0][3] & parts[1][3]
    keep_rows = valid if rows_mask is None else (rows_mask & valid)
    keep_flat = keep_rows.ravel()
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    sel = keep_flat[rows]
    size = chart.size
    L = sparse.csr_matrix((vals[sel], (rows[sel], cols[sel])), shape=(size, size))
    return L, valid


def chart_operator(metric: MetricState, chart: Chart, cut_parity: Optional[Parity] = None
                   ) -> Tuple[sparse.csr_matrix, np.ndarray]:
    """Cached assemble_operator over the non-hole nodes of `chart`."""
    def build():
        return assemble_operator(chart, metric.scale(chart), cut_parity, rows_mask=~chart.hole)
    return metric.cached(("laplacian", chart.name, cut_parity), build)


def laplace_beltrami(f: ScalarField, metric: MetricState, cut_parity: Optional[Parity] = None) -> ScalarField:
    """
    Discrete Delta_g f on every chart. Nodes without a complete stencil (outer edges, neck
    fringe, the cut unless a parity is given, holes) are NaN.
    """
    out: Dict[str, np.ndarray] = {}
    for chart in f.atlas.charts:
        L, valid = chart_operator(metric, chart, cut_parity)
        values = (L @ f[chart.name].ravel()).reshape(chart.shape)
        values[~valid | chart.hole] = np.nan
        out[chart.name] = values
    return ScalarField(f.atlas, out)


def chart_gradient(chart: Chart, values: np.ndarray) -> np.ndarray:
    """(d_1 f, d_2 f) on `chart`; axis components vanish by regularity."""
    d1, d2 = np.gradient(values, chart.x1, chart.x2, edge_order=2)
    grad = np.stack([d1, d2], axis=-1)
    grad[chart.axis, chart.axis_dim] = 0.0
    return grad


def gradient(f: ScalarField) -> VectorField:
    """Covariant differential df in each chart frame."""
    return VectorField(f.atlas, {c.name: chart_gradient(c, f[c.name]) for c in f.atlas.charts})


def chart_divergence(chart: Chart, W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """(W^3 a)^-1 d_i (W a X_i) with the axis limit 2 d_ax (W X_ax) / W^3."""
    d = chart.axis_dim
    a = chart.warp
    flux_axis = W * a * X[..., d]
    flux_other = W * X[..., 1 - d]
    coords = (chart.x1, chart.x2)
    d_axis = np.gradient(flux_axis, coords[d], axis=d, edge_order=2)
    d_other = np.gradient(flux_other, coords[1 - d], axis=1 - d, edge_order=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        div = d_axis / (W ** 3 * a) + d_other / W ** 3
    on_axis = a == 0.0
    if on_axis.any():
        limit = 2.0 * np.gradient(W * X[..., d], coords[d], axis=d, edge_order=2) / W ** 3
        div[on_axis] = limit[on_axis] + d_other[on_axis] / W[on_axis] ** 3
    return div


def divergence(X: VectorField, metric: MetricState) -> ScalarField:
    out = {}
    for chart in X.atlas.charts:
        values = chart_divergence(chart, metric.scale(chart), X[chart.name])
        values[chart.hole] = np.nan
        out[chart.name] = values
    return ScalarField(X.atlas, out)


def weight_sigma(r: np.ndarray) -> np.ndarray:
    """sigma = 1 for r <= 3, r for r >= 4, cubic smoothstep blend in between."""
    t = np.clip(np.asarray(r, dtype=float) - 3.0, 0.0, 1.0)
    blend = t * t * (3.0 - 2.0 * t)
    return 1.0 + blend * (r - 1.0)


def weighted_sup_norm(f: ScalarField, beta: float) -> float:
    """sup over owned nodes of sigma^beta |f|; sigma = 1 on the neck charts."""
    if not 0.0 <= beta <= 3.0:
        raise ValueError(f"Decay exponent must lie in [0, 3], got {beta}.")
    best = 0.0
    for chart in f.atlas.charts:
        sigma = weight_sigma(chart.radius) if chart.kind == "conformally_flat" else np.ones(chart.shape)
        vals = np.abs(f[chart.name]) * sigma ** beta
        vals = vals[chart.owned & np.isfinite(vals)]
        if vals.size:
            best = max(best, float(vals.max()))
    return best
