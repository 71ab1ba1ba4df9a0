from app.services.geometry.atlas import EXTERIOR, Atlas, Chart, build_atlas, neck_name
from app.services.geometry.fields import MetricState, ScalarField, VectorField, overlap_consistency
from app.services.geometry.operators import divergence, gradient, laplace_beltrami, weighted_sup_norm
from app.services.geometry.surfaces import Surface, integrate_surface

__all__ = [
    "EXTERIOR", "Atlas", "Chart", "build_atlas", "neck_name",
    "MetricState", "ScalarField", "VectorField", "overlap_consistency",
    "divergence", "gradient", "laplace_beltrami", "weighted_sup_norm",
    "Surface", "integrate_surface",
]
