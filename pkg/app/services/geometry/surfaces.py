# app/services/geometry/surfaces.py
# Axisymmetric closed surfaces given by a meridian profile in one chart, their flat
# (chart-frame) curvature data and surface quadrature.
# Date: 2026-10-19
# Version: 0.1.0

import csv
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import interp1d

from app.core.config import settings
from app.core.errors import SurfaceError
from app.services.geometry.atlas import EXTERIOR, Atlas, neck_name
from app.services.geometry.fields import MetricState, ScalarField

DEFAULT_SAMPLES = 129


@dataclass(frozen=True)
class Surface:
    """
    Profile (x1(t), x2(t)), t in [0, 1] uniform, of a surface of revolution in `chart`.

    Exterior profiles are meridian curves (rho, z) running from the north to the south
    axis point. Neck profiles are graphs s = F(theta), theta in [0, pi]. `orientation`
    turns the left normal of the traversal into the normal pointing toward N+ infinity.
    """
    chart: str
    x1: np.ndarray
    x2: np.ndarray
    orientation: int

    def __post_init__(self):
        if self.x1.shape != self.x2.shape or self.x1.size < 5:
            raise SurfaceError(f"Profile needs at least 5 samples of matching shape, got {self.x1.shape}, {self.x2.shape}.")
        if not (np.all(np.isfinite(self.x1)) and np.all(np.isfinite(self.x2))):
            raise SurfaceError("Profile contains non-finite samples.")
        axis_values = (0.0, 0.0) if self.chart == EXTERIOR else (0.0, math.pi)
        ends = self.axis_coordinate[[0, -1]]
        if not np.allclose(ends, axis_values, atol=1e-12):
            raise SurfaceError(f"Profile endpoints must lie on the symmetry axis, got {ends}.")

    @property
    def axis_dim(self) -> int:
        return 0 if self.chart == EXTERIOR else 1

    @property
    def axis_coordinate(self) -> np.ndarray:
        return self.x1 if self.axis_dim == 0 else self.x2

    @property
    def is_neck(self) -> bool:
        return self.chart != EXTERIOR

    @property
    def puncture(self) -> Optional[int]:
        return None if not self.is_neck else int(self.chart.split("_")[1]) - 1

    @property
    def size(self) -> int:
        return self.x1.size

    @property
    def dt(self) -> float:
        return 1.0 / (self.size - 1)

    def with_profile(self, x1: np.ndarray, x2: np.ndarray) -> "Surface":
        return Surface(self.chart, np.asarray(x1, dtype=float), np.asarray(x2, dtype=float), self.orientation)

    def physical(self, atlas: Optional[Atlas] = None) -> tuple:
        """Meridian coordinates (rho, z) of the profile samples."""
        if not self.is_neck:
            return self.x1, self.x2
        if atlas is None:
            raise SurfaceError("Neck profiles need the atlas to be mapped to (rho, z).")
        rho, z = atlas.neck_to_physical(self.puncture, np.abs(self.x1), self.x2)
        return np.maximum(rho, 0.0), z

    def check_within(self, atlas: Atlas, mirrored: bool = False):
        """Raise SurfaceError when the profile leaves its chart."""
        if self.is_neck:
            lower = -atlas.s_max if mirrored else 0.0
            if self.x1.min() < lower - 1e-12 or self.x1.max() > atlas.s_max + 1e-12:
                raise SurfaceError(f"Neck profile left [{lower:.4g}, {atlas.s_max:.4g}] in {self.chart}.")
            return
        r = np.hypot(self.x1, self.x2)
        if self.x1.min() < -1e-12 or r.max() > atlas.outer_radius:
            raise SurfaceError("Exterior profile left the meridian half-plane chart.")
        for height in atlas.heights:
            if np.min(np.hypot(self.x1, self.x2 - height)) < atlas.grid.r_hole:
                raise SurfaceError("Exterior profile entered an excised puncture disk.")

    def export_csv(self, path: str) -> str:
        """Rows chart,coord1,coord2 of the profile samples."""
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        digits = settings.FLOAT_DIGITS
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["chart", "coord1", "coord2"])
            for a, b in zip(self.x1, self.x2):
                writer.writerow([self.chart, f"{a:.{digits}g}", f"{b:.{digits}g}"])
        return path


def coordinate_sphere(radius: float, center_z: float = 0.0, n: int = DEFAULT_SAMPLES) -> Surface:
    """Exterior coordinate sphere |x - (0, 0, center_z)| = radius."""
    return ellipsoid(radius, radius, center_z, n)


def ellipsoid(a_rho: float, a_z: float, center_z: float = 0.0, n: int = DEFAULT_SAMPLES) -> Surface:
    """Exterior axisymmetric ellipsoid with semi-axes a_rho (equatorial) and a_z."""
    if a_rho <= 0.0 or a_z <= 0.0:
        raise SurfaceError(f"Semi-axes must be positive, got {a_rho}, {a_z}.")
    angle = np.linspace(0.0, math.pi, n)
    rho = a_rho * np.sin(angle)
    rho[0] = rho[-1] = 0.0
    return Surface(EXTERIOR, rho, center_z + a_z * np.cos(angle), orientation=1)


def neck_graph(index: int, F: Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]] = 0.0,
               n: int = DEFAULT_SAMPLES) -> Surface:
    """Graph s = F(theta) in neck chart `index`."""
    theta = np.linspace(0.0, math.pi, n)
    if callable(F):
        s = np.asarray(F(theta), dtype=float)
    else:
        s = np.broadcast_to(np.asarray(F, dtype=float), theta.shape).astype(float)
    return Surface(neck_name(index), s, theta, orientation=-1)


@dataclass(frozen=True)
class ProfileGeometry:
    """Flat chart-frame data of a profile: speed |x'|, unit normal, curvature and rotational term."""
    speed: np.ndarray
    normal: np.ndarray
    kappa: np.ndarray
    rotation: np.ndarray

    @property
    def flat_mean_curvature(self) -> np.ndarray:
        """Mean curvature in dx1^2 + dx2^2 + a^2 dphi^2 (flat space on the exterior, R x S^2 on necks)."""
        return self.kappa + self.rotation


def _with_ghosts(S: Surface, width: int = 2) -> np.ndarray:
    """(n + 2 width, 2) profile padded by its reflections across the axis at both ends."""
    pts = np.stack([S.x1, S.x2], axis=1)
    d = S.axis_dim
    head = pts[width:0:-1].copy()
    head[:, d] = 2.0 * pts[0, d] - head[:, d]
    tail = pts[-2:-width - 2:-1].copy()
    tail[:, d] = 2.0 * pts[-1, d] - tail[:, d]
    return np.vstack([head, pts, tail])


def profile_geometry(S: Surface) -> ProfileGeometry:
    """Fourth-order central differences in t on the reflected profile."""
    p = _with_ghosts(S)
    dt = S.dt
    d1 = (-p[4:] + 8.0 * p[3:-1] - 8.0 * p[1:-3] + p[:-4]) / (12.0 * dt)
    d2 = (-p[4:] + 16.0 * p[3:-1] - 30.0 * p[2:-2] + 16.0 * p[1:-3] - p[:-4]) / (12.0 * dt ** 2)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if np.any(speed <= 1e-14):
        raise SurfaceError(f"Degenerate profile in {S.chart}: zero tangent.")
    normal = S.orientation * np.stack([-d1[:, 1], d1[:, 0]], axis=1) / speed[:, None]
    kappa = -np.sum(d2 * normal, axis=1) / speed ** 2

    rotation = np.empty_like(kappa)
    inner = slice(1, -1)
    if S.is_neck:
        theta = S.x2[inner]
        rotation[inner] = normal[inner, 1] * np.cos(theta) / np.sin(theta)
    else:
        rotation[inner] = normal[inner, 0] / S.x1[inner]
    rotation[0], rotation[-1] = kappa[0], kappa[-1]
    return ProfileGeometry(speed=speed, normal=normal, kappa=kappa, rotation=rotation)


def _warp(S: Surface) -> np.ndarray:
    a = np.sin(S.x2) if S.is_neck else S.x1.copy()
    a[0] = a[-1] = 0.0
    return np.abs(a)


def sample_on_profile(f: Union[ScalarField, np.ndarray, float, None], S: Surface) -> np.ndarray:
    if f is None:
        return np.ones(S.size)
    if isinstance(f, ScalarField):
        return f.sample(S.chart, S.x1, S.x2)[0]
    return np.broadcast_to(np.asarray(f, dtype=float), (S.size,))


def integrate_surface(S: Surface, f: Union[ScalarField, np.ndarray, float, None], metric: MetricState) -> float:
    """
    Integral of f over S in the metric W^2 (dx1^2 + dx2^2 + a^2 dphi^2):
    2 pi int_0^1 f W^2 a |x'| dt by composite Simpson quadrature.
    `f` may be a field (sampled by spline), profile values, a constant or None (area).
    """
    geo = profile_geometry(S)
    W, _, _ = metric.sample(S.chart, S.x1, S.x2)
    values = sample_on_profile(f, S)
    t = np.linspace(0.0, 1.0, S.size)
    return float(2.0 * math.pi * simpson(values * W ** 2 * _warp(S) * geo.speed, x=t))


def surface_area(S: Surface, metric: MetricState) -> float:
    return integrate_surface(S, None, metric)


def remesh_by_arclength(S: Surface, n: Optional[int] = None) -> Surface:
    """Resample the profile at `n` (default: the same number of) points of equal flat arc length, keeping the axis endpoints."""
    seg = np.hypot(np.diff(S.x1), np.diff(S.x2))
    ell = np.concatenate([[0.0], np.cumsum(seg)])
    if ell[-1] <= 0.0:
        raise SurfaceError("Profile has zero length.")
    target = np.linspace(0.0, ell[-1], n or S.size)
    kind = "cubic" if S.size >= 4 else "linear"
    x1 = interp1d(ell, S.x1, kind=kind)(target)
    x2 = interp1d(ell, S.x2, kind=kind)(target)
    if S.axis_dim == 0:
        x1[0] = x1[-1] = 0.0
    else:
        x2[0], x2[-1] = 0.0, math.pi
    return S.with_profile(x1, x2)
