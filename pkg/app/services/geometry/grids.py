# app/services/geometry/grids.py
# One-dimensional node generators for the chart grids.

from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from app.core.errors import AtlasError


def _match_term(t: np.ndarray) -> np.ndarray:
    """Antiderivative of (1 + t^2)^{-3/2}: flat for |t| < 1, decaying like t^-3 beyond."""
    return t / np.sqrt(1.0 + t * t)


def graded_nodes(lower: float, upper: float, n: int, anchors: Sequence[float],
                 core: float, floor: float = 0.25, match_radius: float = 0.0,
                 match_weight: float = 0.0) -> np.ndarray:
    """
    Nodes on [lower, upper] equally spaced in
        xi(x) = int (sum_k [((x - a_k)^2 + core^2)^{-1/2} + w c^{-1} (1 + (x - a_k)^2 / c^2)^{-3/2}] + floor) dx
    with c = match_radius and w = match_weight.

    Near an anchor the spacing is ~ core * dxi, at distance d >> core it grows like d * dxi
    (logarithmic grading). The match term adds density within ~ c of every anchor, falling
    off like d^-3. xi is analytic, so the node map is smooth and the nonuniform three-point
    stencils stay second order.
    """
    if n < 3:
        raise AtlasError(f"Need at least 3 nodes, got {n}.")
    if upper <= lower:
        raise AtlasError(f"Empty interval [{lower}, {upper}].")
    matched = match_weight > 0.0 and match_radius > 0.0

    def xi(x: float) -> float:
        total = floor * (x - lower)
        for a in anchors:
            total += np.arcsinh((x - a) / core) - np.arcsinh((lower - a) / core)
            if matched:
                total += match_weight * (_match_term((x - a) / match_radius) - _match_term((lower - a) / match_radius))
        return float(total)

    targets = np.linspace(0.0, xi(upper), n)
    nodes = np.empty(n)
    nodes[0], nodes[-1] = lower, upper
    for k in range(1, n - 1):
        nodes[k] = brentq(lambda x: xi(x) - targets[k], lower, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return nodes


def uniform_nodes(lower: float, upper: float, n: int) -> np.ndarray:
    if n < 3:
        raise AtlasError(f"Need at least 3 nodes, got {n}.")
    return np.linspace(lower, upper, n)


def first_derivative_weights(x: np.ndarray, at: int, stencil: Sequence[int]) -> np.ndarray:
    """Three-point Lagrange weights for f'(x[at]) using nodes x[stencil] (nonuniform allowed)."""
    i, j, k = stencil
    xi_, xj, xk = x[i], x[j], x[k]
    x0 = x[at]
    wi = ((x0 - xj) + (x0 - xk)) / ((xi_ - xj) * (xi_ - xk))
    wj = ((x0 - xi_) + (x0 - xk)) / ((xj - xi_) * (xj - xk))
    wk = ((x0 - xi_) + (x0 - xj)) / ((xk - xi_) * (xk - xj))
    return np.array([wi, wj, wk])
