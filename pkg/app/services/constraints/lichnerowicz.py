# app/services/constraints/lichnerowicz.py
# Gauss constraint: find 1 + psi > 0 with
#   N(1 + psi) = Delta psi - R/8 (1 + psi) + |E'|^2 / (4 (1 + psi)^3) = 0
# on M+ (psi even across the cut, Robin decay outside), by damped Newton or by the
# fixed-point map psi -> -dN^-1 (N(1) + Q(psi)).
# Date: 2026-10-19
# Version: 0.1.0

from typing import Dict, List, Literal, Tuple

import numpy as np

from app.core.errors import PositivityError, SolverError
from app.core.logger import console
from app.schemas.solver_schemas import LichnerowiczReport
from app.services.background import ConformalData
from app.services.constraints.elliptic import DEFAULT_MAX_SWEEPS, SchwarzSolver, equation_sup
from app.services.geometry.fields import MetricState, ScalarField, VectorField
from app.services.geometry.operators import chart_gradient, laplace_beltrami, weighted_sup_norm

Mode = Literal["newton", "fixed-point"]

DEFAULT_TOL = 1e-10
POSITIVITY_FLOOR = 0.1
MIN_STEP = 1.0 / 64.0
FLOOR_FACTOR = 100.0


class LichnerowiczProblem:
    """R_hat and |E'|^2_ghat at the nodes, with the discrete maps N, dN and Q built on them."""

    def __init__(self, data: ConformalData):
        self.data = data
        self.atlas = data.require_atlas()
        self.metric: MetricState = data.hat_metric
        phi = data.potential
        self.R: Dict[str, np.ndarray] = {}
        self.E2: Dict[str, np.ndarray] = {}
        for chart in self.atlas.charts:
            inv = data.background.chart_invariants(self.atlas, chart)
            E = data.background.chart_field(self.atlas, chart)
            if phi is not None:
                E = E - chart_gradient(chart, phi[chart.name])
            self.R[chart.name] = inv.R
            self.E2[chart.name] = (E[..., 0] ** 2 + E[..., 1] ** 2) / self.metric.scale(chart) ** 2

    def field(self, values: Dict[str, np.ndarray]) -> ScalarField:
        return ScalarField(self.atlas, values, "even")

    def _lap(self, psi: ScalarField) -> ScalarField:
        return laplace_beltrami(psi, self.metric, "even")

    def residual(self, psi: ScalarField) -> Dict[str, np.ndarray]:
        """N(1 + psi); Delta acts on psi alone since Delta 1 = 0."""
        lap = self._lap(psi)
        out = {}
        for name, R in self.R.items():
            phi = 1.0 + psi[name]
            out[name] = lap[name] - R / 8.0 * phi + self.E2[name] / (4.0 * phi ** 3)
        return out

    def linearized(self, psi: ScalarField) -> Dict[str, np.ndarray]:
        """dN(psi) = Delta psi - h psi with h = R/8 + 3/4 |E'|^2."""
        lap = self._lap(psi)
        return {name: lap[name] - self.h(name) * psi[name] for name in self.R}

    def h(self, name: str) -> np.ndarray:
        return self.R[name] / 8.0 + 0.75 * self.E2[name]

    def quadratic(self, psi: ScalarField) -> Dict[str, np.ndarray]:
        out = {}
        for name, E2 in self.E2.items():
            p = psi[name]
            if np.any(1.0 + p[self.atlas.chart(name).active] <= 0.0):
                raise PositivityError("Quadratic remainder needs 1 + psi > 0.")
            out[name] = E2 * (6.0 + 8.0 * p + 3.0 * p ** 2) / (4.0 * (1.0 + p) ** 3) * p ** 2
        return out

    def norm(self, values: Dict[str, np.ndarray]) -> float:
        return equation_sup(self.atlas, values, "even")


def quadratic_remainder(psi: ScalarField, data: ConformalData) -> ScalarField:
    """Q(psi) = |E'|^2 (6 + 8 psi + 3 psi^2) psi^2 / (4 (1 + psi)^3), so N(1+psi) = N(1) + dN(psi) + Q(psi)."""
    problem = LichnerowiczProblem(data)
    return problem.field(problem.quadratic(psi))


def _min_factor(psi: ScalarField) -> float:
    return min(float(np.min(1.0 + psi[c.name][c.active])) for c in psi.atlas.charts)


def _cut_derivative(psi: ScalarField) -> float:
    worst = 0.0
    for neck in psi.atlas.necks:
        ds = neck.x1[1] - neck.x1[0]
        v = psi[neck.name]
        worst = max(worst, float(np.max(np.abs(-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * ds))))
    return worst


def _newton(problem: LichnerowiczProblem, tol: float, max_iter: int, schwarz_tol: float, max_sweeps: int):
    psi = problem.field({c.name: np.zeros(c.shape) for c in problem.atlas.charts})
    residual = problem.residual(psi)
    norm = problem.norm(residual)
    history: List[float] = [norm]
    steps: List[float] = []
    for it in range(1, max_iter + 1):
        if norm <= tol:
            break
        q = {name: problem.R[name] / 8.0 + 0.75 * problem.E2[name] / (1.0 + psi[name]) ** 4 for name in problem.R}
        solver = SchwarzSolver(problem.atlas, problem.metric, "even", q=q, tol=schwarz_tol,
                               max_sweeps=max_sweeps, label="Lichnerowicz")
        delta = solver.solve({name: -v for name, v in residual.items()}).field
        alpha = 1.0
        while True:
            trial = problem.field({name: psi[name] + alpha * delta[name] for name in problem.R})
            positive = _min_factor(trial) >= POSITIVITY_FLOOR
            if positive:
                trial_residual = problem.residual(trial)
                trial_norm = problem.norm(trial_residual)
                if trial_norm < norm:
                    break
            alpha /= 2.0
            if alpha < MIN_STEP:
                if not positive:
                    raise PositivityError(f"Newton step would push 1 + psi below {POSITIVITY_FLOOR} "
                                          f"(iteration {it}); grid too coarse or T too small.")
                if norm <= FLOOR_FACTOR * tol:
                    console.debug(f"[Lichnerowicz] Residual floor reached at {norm:.3e}")
                    return psi, history, steps, it - 1
                raise SolverError(f"Newton line search exhausted at iteration {it}, residual {norm:.3e}.",
                                  final_residual=norm)
        psi, residual, norm = trial, trial_residual, trial_norm
        history.append(norm)
        steps.append(alpha)
        console.info(f"[Lichnerowicz] Newton {it}: |N| = {norm:.6e} (step {alpha:g})")
    else:
        if norm > tol:
            raise SolverError(f"Newton did not reach {tol:.1e} in {max_iter} iterations.", final_residual=norm)
    return psi, history, steps, len(steps)


def _fixed_point(problem: LichnerowiczProblem, tol: float, max_iter: int, schwarz_tol: float, max_sweeps: int):
    h = {name: problem.h(name) for name in problem.R}
    solver = SchwarzSolver(problem.atlas, problem.metric, "even", q=h, tol=schwarz_tol,
                           max_sweeps=max_sweeps, label="Lichnerowicz")
    zero = problem.field({c.name: np.zeros(c.shape) for c in problem.atlas.charts})
    N1 = problem.residual(zero)
    psi = zero
    increments: List[float] = []
    for it in range(1, max_iter + 1):
        Q = problem.quadratic(psi)
        new = solver.solve({name: -(N1[name] + Q[name]) for name in problem.R}).field
        new = problem.field(new.values)
        increment = max(float(np.max(np.abs(new[c.name] - psi[c.name])[c.active])) for c in problem.atlas.charts)
        increments.append(increment)
        psi = new
        if _min_factor(psi) <= 0.0:
            raise PositivityError("Fixed-point iterate lost positivity of 1 + psi.")
        console.debug(f"[Lichnerowicz] Fixed point {it}: |increment| = {increment:.3e}")
        if increment <= 0.1 * tol:
            return psi, increments, it
    raise SolverError(f"Fixed-point iteration did not converge in {max_iter} iterations.",
                      final_residual=increments[-1] if increments else None)


def solve_lichnerowicz(data: ConformalData, mode: Mode = "newton", tol: float = DEFAULT_TOL,
                       max_iter: int = 30, schwarz_tol: float = 1e-12,
                       max_sweeps: int = DEFAULT_MAX_SWEEPS) -> Tuple[ConformalData, LichnerowiczReport]:
    """
    Solve the Lichnerowicz equation about psi = 0. Returns the solved data
    (metric factor (1 + psi)^2 on W, E = (1 + psi)^-2 E') and the report.
    """
    data.require("divergence-fixed", "exact-mp")
    problem = LichnerowiczProblem(data)
    atlas = problem.atlas
    console.info(f"[Lichnerowicz] Solving ({mode}, tol={tol:.1e})")

    zero = problem.field({c.name: np.zeros(c.shape) for c in atlas.charts})
    initial = problem.norm(problem.residual(zero))
    newton_history: List[float] = []
    steps: List[float] = []
    increments: List[float] = []
    if mode == "newton":
        psi, newton_history, steps, iterations = _newton(problem, tol, max_iter, schwarz_tol, max_sweeps)
    elif mode == "fixed-point":
        if initial <= tol:
            psi, iterations = zero, 0
        else:
            psi, increments, iterations = _fixed_point(problem, tol, max(max_iter, 200), schwarz_tol, max_sweeps)
    else:
        raise ValueError(f"Unknown Lichnerowicz mode '{mode}'.")

    final = problem.norm(problem.residual(psi))
    eta = psi.sup()
    rates = [b / a ** 2 for a, b in zip(newton_history[:-1], newton_history[1:])
             if a > FLOOR_FACTOR * tol and b > 0.0]
    contraction = [b / a for a, b in zip(increments[:-1], increments[1:]) if a > 0.0]
    Q = problem.quadratic(psi)
    quad_sup = equation_sup(atlas, Q, "even")

    report = LichnerowiczReport(
        psi=psi,
        h_field=problem.field({name: problem.h(name) for name in problem.R}),
        mode=mode,
        iterations=iterations,
        tolerance=tol,
        initial_residual=initial,
        residual_norm=final,
        newton_residual_history=newton_history,
        newton_rate_constants=rates,
        step_lengths=steps,
        fixedpoint_residual_history=increments,
        contraction_factors=contraction,
        eta=eta,
        eta_weighted=weighted_sup_norm(psi, 1.0),
        min_factor=_min_factor(psi),
        cut_derivative=_cut_derivative(psi),
        h_min=min(float(np.nanmin(problem.h(c.name)[c.active])) for c in atlas.charts),
        quadratic_constant=quad_sup / eta ** 2 if eta > 0.0 else None,
    )

    metric = MetricState(atlas, data.background, factor=psi, mirror=data.metric.mirror)
    electric = VectorField(atlas, {
        c.name: data.electric[c.name] * ((1.0 + psi[c.name]) ** -2)[..., None] for c in atlas.charts
    })
    solved = ConformalData(atlas, metric, electric, "solved", data.background, potential=data.potential)
    console.success(f"[Lichnerowicz] eta = sup|psi| = {eta:.6e}, |N| = {final:.3e}, iterations = {iterations}")
    return solved, report
