# app/services/constraints/elliptic.py
# Composite-grid solver for (Delta_g - q) u = rhs on the three-chart atlas:
# one sparse LU per chart, multiplicative Schwarz sweeps exterior -> neck_1 -> neck_2
# with bilinear fringe exchange.
# Date: 2026-10-19
# Version: 0.1.0

import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from app.core.errors import SolverError
from app.core.logger import console
from app.schemas.solver_schemas import SchwarzStats
from app.services.geometry.atlas import Atlas, Chart
from app.services.geometry.fields import MetricState, Parity, ScalarField
from app.services.geometry.grids import first_derivative_weights
from app.services.geometry.operators import assemble_operator

DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 400


def _robin_rows(chart: Chart):
    """Triplets of r d_r u + u = 0 on the outer rows of the exterior chart."""
    n1, n2 = chart.shape
    rows, cols, vals = [], [], []
    for i, j in zip(*np.nonzero(chart.outer)):
        k = i * n2 + j
        rows.append(k)
        cols.append(k)
        vals.append(1.0)
        rho, z = chart.x1[i], chart.x2[j]
        if rho > 0.0:
            stencil = (n1 - 3, n1 - 2, n1 - 1) if i == n1 - 1 else (i - 1, i, i + 1)
            for ii, w in zip(stencil, first_derivative_weights(chart.x1, i, stencil)):
                rows.append(k)
                cols.append(ii * n2 + j)
                vals.append(rho * w)
        if z != 0.0:
            if j == 0:
                stencil = (0, 1, 2)
            elif j == n2 - 1:
                stencil = (n2 - 3, n2 - 2, n2 - 1)
            else:
                stencil = (j - 1, j, j + 1)
            for jj, w in zip(stencil, first_derivative_weights(chart.x2, j, stencil)):
                rows.append(k)
                cols.append(i * n2 + jj)
                vals.append(z * w)
    return rows, cols, vals


def assemble_system(chart: Chart, W: np.ndarray, cut_parity: Parity, q: Optional[np.ndarray] = None
                    ) -> sparse.csc_matrix:
    """
    Matrix of one chart sub-problem: (L - q) on the equation rows, the Robin decay
    condition on the outer rows, identity on fringe, hole and (odd) cut rows.
    """
    pde = chart.pde_rows(cut_parity)
    L, valid = assemble_operator(chart, W, cut_parity, rows_mask=pde)
    missing = pde & ~valid
    if missing.any():
        raise SolverError(f"{chart.name}: {int(missing.sum())} equation rows have no complete stencil.")
    diag = np.zeros(chart.size)
    if q is not None:
        diag[pde.ravel()] = -np.asarray(q, dtype=float).ravel()[pde.ravel()]
    identity_rows = (chart.fringe | chart.hole | (chart.cut & ~pde)) & ~chart.outer
    diag[identity_rows.ravel()] = 1.0
    A = L + sparse.diags(diag)
    if chart.outer.any():
        rows, cols, vals = _robin_rows(chart)
        A = A + sparse.csr_matrix((vals, (rows, cols)), shape=(chart.size, chart.size))
    return A.tocsc()


@dataclass
class SchwarzSolution:
    field: ScalarField
    stats: SchwarzStats


class SchwarzSolver:
    """
    Factorizes the three chart systems once; `solve` may be called for many right-hand sides.
    `q` is an optional zeroth-order potential per chart (the operator is Delta_g - q).
    """

    def __init__(self, atlas: Atlas, metric: MetricState, cut_parity: Parity,
                 q: Optional[Dict[str, np.ndarray]] = None, tol: float = DEFAULT_TOL,
                 max_sweeps: int = DEFAULT_MAX_SWEEPS, label: str = "Schwarz"):
        self.atlas = atlas
        self.metric = metric
        self.cut_parity = cut_parity
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.label = label
        self._lu = {}
        for chart in atlas.charts:
            A = assemble_system(chart, metric.scale(chart), cut_parity, None if q is None else q[chart.name])
            try:
                self._lu[chart.name] = splu(A)
            except RuntimeError as e:
                raise SolverError(f"{chart.name}: sparse LU failed ({e}).") from e
        self._pde = {c.name: c.pde_rows(cut_parity).ravel() for c in atlas.charts}

    def _base_rhs(self, rhs: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        base = {}
        for chart in self.atlas.charts:
            b = np.zeros(chart.size)
            pde = self._pde[chart.name]
            b[pde] = np.asarray(rhs[chart.name], dtype=float).ravel()[pde]
            base[chart.name] = b
        return base

    def solve(self, rhs: Dict[str, np.ndarray], initial: Optional[Dict[str, np.ndarray]] = None) -> SchwarzSolution:
        base = self._base_rhs(rhs)
        values = {c.name: (np.zeros(c.shape) if initial is None else np.array(initial[c.name], dtype=float))
                  for c in self.atlas.charts}
        history: List[float] = []
        converged = False
        sweeps = 0
        for sweeps in range(1, self.max_sweeps + 1):
            for chart in self.atlas.charts:
                b = base[chart.name].copy()
                for o in self.atlas.overlaps_into(chart.name):
                    b[o.rows] = o.matrix @ values[o.donor].ravel()
                values[chart.name] = self._lu[chart.name].solve(b).reshape(chart.shape)
            scale = max(float(np.max(np.abs(v))) for v in values.values())
            mismatch = self.atlas.interface_mismatch(values)
            relative = mismatch / scale if scale > 0.0 else 0.0
            history.append(relative)
            if relative <= self.tol:
                converged = True
                break
            # algebraic floor: the mismatch stopped shrinking just above the tolerance
            if len(history) > 5 and relative <= 100.0 * self.tol and relative >= 0.9 * history[-2]:
                console.debug(f"[{self.label}] Interface mismatch stalled at {relative:.3e}; accepting.")
                converged = True
                break

        contraction = None
        ratios = [b / a for a, b in zip(history[:-1], history[1:]) if a > 0.0 and b > 0.0]
        if ratios:
            contraction = float(math.exp(np.mean(np.log(ratios))))
        stats = SchwarzStats(sweeps=sweeps, converged=converged, mismatch_history=history, contraction=contraction)
        if not converged:
            raise SolverError(f"[{self.label}] Schwarz sweeps did not converge in {self.max_sweeps} sweeps "
                              f"(relative mismatch {history[-1]:.3e}).", final_residual=history[-1])
        console.debug(f"[{self.label}] Converged in {sweeps} sweeps, mismatch {history[-1]:.3e}")
        field = ScalarField(self.atlas, self.atlas.fill(values), self.cut_parity)
        return SchwarzSolution(field=field, stats=stats)


def equation_sup(atlas: Atlas, values: Dict[str, np.ndarray], cut_parity: Parity) -> float:
    """max |values| over the equation rows each chart owns."""
    best = 0.0
    for chart in atlas.charts:
        sel = values[chart.name][chart.pde_rows(cut_parity) & chart.owned]
        sel = sel[np.isfinite(sel)]
        if sel.size:
            best = max(best, float(np.max(np.abs(sel))))
    return best

