# app/services/geometry/atlas.py
# The module builds the three-chart atlas of the half manifold M+: a meridian (rho, z)
# exterior chart with two excised puncture disks and two neck charts in (s, theta),
# s = log r_i + T, glued to the exterior by bilinear overlap stencils.
# Date: 2026-10-19
# Version: 0.1.0

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, List, Literal, Optional, Tuple

import numpy as np
from scipy import sparse

from app.core.errors import AtlasError
from app.core.logger import console
from app.schemas.background_schemas import GlueParams
from app.schemas.grid_schemas import GridSpec
from app.services.geometry.grids import graded_nodes, uniform_nodes

ChartKind = Literal["conformally_flat", "cylinder"]

EXTERIOR = "exterior"
MIN_SCALE = 3.0
MIN_OUTER_RADIUS = 20.0
# uniform share of the exterior node density (per unit length)
FAR_DENSITY = 1.0


def neck_name(index: int) -> str:
    return f"neck_{index + 1}"


@dataclass(frozen=True, eq=False)
class Chart:
    """
    A logically rectangular grid with metric g = W^2 (dx1^2 + dx2^2 + a^2 dphi^2).

    axis_dim is the coordinate along which the warp a vanishes: 0 for the exterior
    (a = rho, axis at i = 0) and 1 for the necks (a = sin theta, axes at j = 0 and j = n2 - 1).
    """
    name: str
    kind: ChartKind
    x1: np.ndarray
    x2: np.ndarray
    axis_dim: int
    rho: np.ndarray
    z: np.ndarray
    warp: np.ndarray
    hole: np.ndarray
    fringe: np.ndarray
    outer: np.ndarray
    cut: np.ndarray
    axis: np.ndarray
    puncture: Optional[int] = None
    deferred: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.x1.size, self.x2.size)

    @property
    def size(self) -> int:
        return self.x1.size * self.x2.size

    @property
    def active(self) -> np.ndarray:
        return ~self.hole

    @property
    def owned(self) -> np.ndarray:
        """
        Active nodes this chart answers for in norms. Necks drop their matching ring; the
        exterior defers its nodes with r_i < r_match to the necks.
        """
        owned = self.active
        if self.kind == "cylinder":
            owned = owned & ~self.fringe
        if self.deferred is not None:
            owned = owned & ~self.deferred
        return owned

    def pde_rows(self, cut_parity: Optional[str]) -> np.ndarray:
        """Nodes that carry the differential equation for the given parity at the cut s = 0."""
        rows = ~(self.hole | self.fringe | self.outer)
        if cut_parity != "even":
            rows &= ~self.cut
        return rows

    @cached_property
    def radius(self) -> np.ndarray:
        return np.hypot(self.rho, self.z)

    def spacing(self) -> Tuple[float, float]:
        return float(np.max(np.diff(self.x1))), float(np.max(np.diff(self.x2)))


@dataclass(frozen=True, eq=False)
class OverlapMap:
    """Bilinear stencil: values[target][rows] = matrix @ values[donor].ravel()."""
    target: str
    donor: str
    rows: np.ndarray
    matrix: sparse.csr_matrix


@dataclass(frozen=True, eq=False)
class Atlas:
    glue: GlueParams
    grid: GridSpec
    exterior: Chart
    necks: Tuple[Chart, Chart]
    overlaps: Tuple[OverlapMap, ...]
    hole_fill: Tuple[OverlapMap, ...]

    @property
    def charts(self) -> Tuple[Chart, Chart, Chart]:
        return (self.exterior, self.necks[0], self.necks[1])

    def chart(self, name: str) -> Chart:
        for chart in self.charts:
            if chart.name == name:
                return chart
        raise KeyError(f"No chart named '{name}'.")

    def __iter__(self) -> Iterator[Chart]:
        return iter(self.charts)

    @property
    def T(self) -> float:
        return self.glue.T

    @property
    def heights(self) -> Tuple[float, float]:
        return self.glue.heights

    @property
    def outer_radius(self) -> float:
        return self.grid.outer_radius

    @property
    def s_max(self) -> float:
        return self.glue.T + math.log(self.grid.r_match)

    def overlaps_into(self, target: str) -> List[OverlapMap]:
        return [o for o in self.overlaps if o.target == target]

    def neck_coordinates(self, index: int, rho: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Physical meridian point -> (s, theta) of neck `index`; exact, no interpolation."""
        return _neck_coords(np.asarray(rho, dtype=float), np.asarray(z, dtype=float), self.heights[index], self.T)

    def neck_to_physical(self, index: int, s: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(s, theta) of neck `index` -> meridian (rho, z); r_i = e^{s - T}."""
        r = np.exp(np.asarray(s, dtype=float) - self.T)
        return r * np.sin(theta), self.heights[index] + r * np.cos(theta)

    def fill(self, values: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Copy of `values` whose exterior hole nodes are resampled from the necks (s clamped to [0, s_max])."""
        filled = {name: np.array(arr, dtype=float, copy=True) for name, arr in values.items()}
        exterior = filled[EXTERIOR].reshape(-1)
        for stencil in self.hole_fill:
            exterior[stencil.rows] = stencil.matrix @ filled[stencil.donor].reshape(-1)
        return filled

    def interface_mismatch(self, values: Dict[str, np.ndarray]) -> float:
        """Max |f(target fringe) - stencil(f(donor))| over all overlap maps."""
        worst = 0.0
        for o in self.overlaps:
            target = values[o.target].reshape(-1)[o.rows]
            donor = o.matrix @ values[o.donor].reshape(-1)
            if target.size:
                worst = max(worst, float(np.max(np.abs(target - donor))))
        return worst


def _bilinear_stencil(x1: np.ndarray, x2: np.ndarray, p1: np.ndarray, p2: np.ndarray
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """Flat corner indices (k, 4) and weights (k, 4) on a tensor grid; points are clamped into the grid."""
    n1, n2 = x1.size, x2.size
    p1 = np.clip(p1, x1[0], x1[-1])
    p2 = np.clip(p2, x2[0], x2[-1])
    i = np.clip(np.searchsorted(x1, p1, side="right") - 1, 0, n1 - 2)
    j = np.clip(np.searchsorted(x2, p2, side="right") - 1, 0, n2 - 2)
    t = (p1 - x1[i]) / (x1[i + 1] - x1[i])
    u = (p2 - x2[j]) / (x2[j + 1] - x2[j])
    corners = np.stack([i * n2 + j, (i + 1) * n2 + j, i * n2 + j + 1, (i + 1) * n2 + j + 1], axis=1)
    weights = np.stack([(1 - t) * (1 - u), t * (1 - u), (1 - t) * u, t * u], axis=1)
    return corners, weights


def _stencil_matrix(corners: np.ndarray, weights: np.ndarray, donor_size: int) -> sparse.csr_matrix:
    k = corners.shape[0]
    rows = np.repeat(np.arange(k), 4)
    return sparse.csr_matrix((weights.ravel(), (rows, corners.ravel())), shape=(k, donor_size))


def _build_exterior(glue: GlueParams, grid: GridSpec) -> Chart:
    n_rho, n_z = grid.exterior
    core = 0.5 * grid.r_hole
    grading = dict(core=core, floor=FAR_DENSITY, match_radius=grid.r_match, match_weight=grid.match_refinement)
    rho_nodes = graded_nodes(0.0, grid.outer_radius, n_rho, anchors=[0.0], **grading)
    z_nodes = graded_nodes(-grid.outer_radius, grid.outer_radius, n_z, anchors=list(glue.heights), **grading)
    rho, z = np.meshgrid(rho_nodes, z_nodes, indexing="ij")

    hole = np.zeros(rho.shape, dtype=bool)
    deferred = np.zeros(rho.shape, dtype=bool)
    for height in glue.heights:
        r = np.hypot(rho, z - height)
        hole |= r < grid.r_hole
        deferred |= r < grid.r_match

    outer = np.zeros(rho.shape, dtype=bool)
    outer[-1, :] = True
    outer[:, 0] = True
    outer[:, -1] = True

    # fringe: active nodes whose five-point stencil reaches into a hole (the axis ghost mirrors i = 1)
    neighbour_hole = np.zeros(rho.shape, dtype=bool)
    neighbour_hole[1:, :] |= hole[:-1, :]
    neighbour_hole[:-1, :] |= hole[1:, :]
    neighbour_hole[:, 1:] |= hole[:, :-1]
    neighbour_hole[:, :-1] |= hole[:, 1:]
    fringe = neighbour_hole & ~hole & ~outer

    axis = np.zeros(rho.shape, dtype=bool)
    axis[0, :] = True

    return Chart(
        name=EXTERIOR, kind="conformally_flat", x1=rho_nodes, x2=z_nodes, axis_dim=0,
        rho=rho, z=z, warp=rho.copy(), hole=hole, fringe=fringe, outer=outer,
        cut=np.zeros(rho.shape, dtype=bool), axis=axis, deferred=deferred,
    )


def _build_neck(glue: GlueParams, grid: GridSpec, index: int, s_max: float) -> Chart:
    n_s, n_theta = grid.neck
    s_nodes = uniform_nodes(0.0, s_max, n_s)
    theta_nodes = uniform_nodes(0.0, math.pi, n_theta)
    s, theta = np.meshgrid(s_nodes, theta_nodes, indexing="ij")
    r = np.exp(s - glue.T)
    rho = r * np.sin(theta)
    rho[:, 0] = 0.0
    rho[:, -1] = 0.0
    z = glue.heights[index] + r * np.cos(theta)
    warp = np.sin(theta)
    warp[:, 0] = 0.0
    warp[:, -1] = 0.0

    empty = np.zeros(s.shape, dtype=bool)
    cut = empty.copy()
    cut[0, :] = True
    fringe = empty.copy()
    fringe[-1, :] = True
    axis = empty.copy()
    axis[:, 0] = True
    axis[:, -1] = True

    return Chart(
        name=neck_name(index), kind="cylinder", x1=s_nodes, x2=theta_nodes, axis_dim=1,
        rho=rho, z=z, warp=warp, hole=empty.copy(), fringe=fringe, outer=empty.copy(),
        cut=cut, axis=axis, puncture=index,
    )


def build_atlas(glue: GlueParams, grid: Optional[GridSpec] = None) -> Atlas:
    """
    Build the atlas of M+ for the given gluing parameters.

    Neck charts span s in [0, T + log r_match]; s = 0 is the cut r_i = e^{-T}.
    The exterior chart covers r_i >= r_hole, so the overlap annulus is r_hole <= r_i <= r_match.
    """
    grid = grid or GridSpec()
    if glue.T < MIN_SCALE:
        raise AtlasError(f"Gluing scale T must be >= {MIN_SCALE} (cutoff bands would reach the matching region), got {glue.T}.")
    if grid.outer_radius < MIN_OUTER_RADIUS:
        raise AtlasError(f"Outer radius must be >= {MIN_OUTER_RADIUS}, got {grid.outer_radius}.")
    if glue.separation <= grid.r_match:
        raise AtlasError("Punctures too close for disjoint neck charts.")

    s_max = glue.T + math.log(grid.r_match)
    console.info(f"[Atlas] Building atlas: T={glue.T}, s_max={s_max:.6f}, "
                 f"exterior={grid.exterior}, neck={grid.neck}, R_out={grid.outer_radius}")

    exterior = _build_exterior(glue, grid)
    necks = (_build_neck(glue, grid, 0, s_max), _build_neck(glue, grid, 1, s_max))

    overlaps: List[OverlapMap] = []
    hole_fill: List[OverlapMap] = []
    ext_flat_hole = exterior.hole.reshape(-1)

    for index, neck in enumerate(necks):
        height = glue.heights[index]

        # neck outer ring s = s_max <- exterior
        rows = np.flatnonzero(neck.fringe.reshape(-1))
        corners, weights = _bilinear_stencil(
            exterior.x1, exterior.x2, neck.rho.reshape(-1)[rows], neck.z.reshape(-1)[rows]
        )
        if np.any(ext_flat_hole[corners]):
            raise AtlasError(
                f"Exterior grid {grid.exterior} too coarse: overlap cells around puncture {index + 1} touch the excised disk."
            )
        overlaps.append(OverlapMap(neck.name, EXTERIOR, rows, _stencil_matrix(corners, weights, exterior.size)))

        # exterior fringe near this puncture <- neck
        near = np.hypot(exterior.rho, exterior.z - height) < grid.r_match
        rows = np.flatnonzero((exterior.fringe & near).reshape(-1))
        s, theta = _neck_coords(exterior.rho.reshape(-1)[rows], exterior.z.reshape(-1)[rows], height, glue.T)
        if rows.size and np.max(s) >= s_max:
            raise AtlasError("Exterior fringe lies outside the neck chart; refine the exterior grid near the punctures.")
        corners, weights = _bilinear_stencil(neck.x1, neck.x2, s, theta)
        overlaps.append(OverlapMap(EXTERIOR, neck.name, rows, _stencil_matrix(corners, weights, neck.size)))

        # exterior hole nodes near this puncture <- neck, clamped to the chart
        rows = np.flatnonzero((exterior.hole & near).reshape(-1))
        s, theta = _neck_coords(exterior.rho.reshape(-1)[rows], exterior.z.reshape(-1)[rows], height, glue.T)
        corners, weights = _bilinear_stencil(neck.x1, neck.x2, np.clip(s, 0.0, s_max), theta)
        hole_fill.append(OverlapMap(EXTERIOR, neck.name, rows, _stencil_matrix(corners, weights, neck.size)))

    atlas = Atlas(glue=glue, grid=grid, exterior=exterior, necks=necks,
                  overlaps=tuple(overlaps), hole_fill=tuple(hole_fill))
    console.info(f"[Atlas] Exterior: {int(exterior.active.sum())} active nodes, "
                 f"{int(exterior.fringe.sum())} fringe nodes; cut radius e^-T = {glue.cut_radius:.6e}")
    return atlas


def _neck_coords(rho: np.ndarray, z: np.ndarray, height: float, T: float) -> Tuple[np.ndarray, np.ndarray]:
    dz = z - height
    r = np.hypot(rho, dz)
    return np.log(np.maximum(r, np.finfo(float).tiny)) + T, np.arctan2(rho, dz)
