# tests/test_diagnostics.py

import math

import numpy as np
import pytest

from app.core.errors import DiagnosticsError
from app.services.background import single_puncture_data
from app.services.diagnostics import (
    adm_mass, decay_fit, decay_study, extreme_rn_neck_trend, inequality_variants, surface_charge, total_charge,
)
from app.services.geometry.surfaces import coordinate_sphere, ellipsoid

from tests.conftest import COARSE_GRID, MASS


def test_extreme_rn_neck_trend():
    trend = extreme_rn_neck_trend(1.0)
    assert trend.monotone
    assert trend.max_error < 1e-7
    assert all(p.deficit < 0.0 for p in trend.points)
    assert [p.radius for p in trend.points] == sorted((p.radius for p in trend.points), reverse=True)


def test_charge_flux_is_surface_independent():
    data = single_puncture_data(0.5)
    charges = [surface_charge(S, data) for S in (coordinate_sphere(0.3), coordinate_sphere(2.0), ellipsoid(1.5, 0.7))]
    np.testing.assert_allclose(np.abs(charges), 0.5, rtol=1e-6)


def test_mass_and_charge_on_the_analytic_end():
    data = single_puncture_data(0.5)
    assert adm_mass(data) == pytest.approx(0.5, rel=1e-5)
    assert abs(total_charge(data)) == pytest.approx(0.5, rel=1e-6)


def test_mass_radii_must_fit_the_chart(exact_mp):
    with pytest.raises(DiagnosticsError):
        adm_mass(exact_mp, r_out=2.0 * exact_mp.atlas.outer_radius)


def test_inequality_variants_bookkeeping():
    variants = inequality_variants(2.0, [1.0, 1.0], [1.0, 1.0])
    assert variants.area_radius == pytest.approx(math.sqrt(2.0))
    assert variants.charge == 2.0
    assert variants.charged_penrose_deficit == pytest.approx(2.0 - 0.5 * (math.sqrt(2.0) + 4.0 / math.sqrt(2.0)))
    assert variants.additive_deficit == pytest.approx(0.0)
    assert variants.multi_component_q == pytest.approx(1.0)
    assert variants.multi_component_deficit == pytest.approx(1.0)
    assert variants.riemannian_margin == pytest.approx(2.0 - math.sqrt(2.0) / 2.0)
    assert variants.two_sided.applicable
    assert not variants.two_sided.holds
    assert variants.two_sided.failing_side == "lower"


def test_inequality_variants_for_the_mp_pair():
    m = MASS
    variants = inequality_variants(2.0 * m, [m, m], [m, m])
    assert variants.charged_penrose_deficit == pytest.approx(m * (2.0 - 3.0 / math.sqrt(2.0)))


def test_opposite_charges_cancel_in_the_multi_component_charge():
    variants = inequality_variants(1.0, [0.5, 0.5], [0.4, -0.4])
    assert variants.charge == pytest.approx(0.0)
    assert variants.multi_component_q == pytest.approx(0.0)
    assert variants.two_sided.applicable


def test_inequality_variants_need_matching_charges():
    with pytest.raises(ValueError):
        inequality_variants(1.0, [0.5], [0.1, 0.2])


def test_exponential_decay_fit_recovers_the_rate():
    samples = [(T, 3.0 * math.exp(-1.5 * T)) for T in (4.0, 6.0, 8.0, 10.0)]
    study = decay_fit(samples, "exponential", "gauss_residual")
    assert study.slope == pytest.approx(-1.5, abs=1e-10)
    assert study.coefficients["a"] == pytest.approx(math.log(3.0), abs=1e-10)
    assert study.dof == 2
    assert study.slope_half_width == pytest.approx(0.0, abs=1e-8)


def test_barrier_rate_fit():
    samples = [(T, 0.2 * T ** 2 * math.exp(-T)) for T in (6.0, 8.0, 10.0, 12.0)]
    study = decay_fit(samples, "barrier_rate", "sup_phi")
    assert study.slope == pytest.approx(1.0, abs=1e-10)


def test_power_exponential_fit_needs_no_spare_samples():
    samples = [(T, T ** 2 * math.exp(-T)) for T in (4.0, 6.0, 8.0)]
    study = decay_fit(samples, "power_exponential")
    assert study.dof == 0
    assert study.slope == pytest.approx(-1.0, abs=1e-8)


@pytest.mark.parametrize("samples", [
    [(4.0, 1.0), (6.0, 0.5)],
    [(4.0, 1.0), (6.0, -0.5), (8.0, 0.1)],
])
def test_decay_fit_rejects_bad_samples(samples):
    with pytest.raises(ValueError):
        decay_fit(samples)


def test_decay_fit_rejects_unknown_model():
    with pytest.raises(ValueError):
        decay_fit([(4.0, 1.0), (6.0, 0.5), (8.0, 0.2)], "logistic")


@pytest.mark.slow
def test_decay_study_on_coarse_grids():
    studies = decay_study(MASS, [7.0, 8.0, 9.0], COARSE_GRID)
    assert [s.quantity for s in studies] == ["gauss_residual", "div_residual", "sup_phi"]
    assert studies[0].slope < 0.0
    assert studies[0].dof == 1
