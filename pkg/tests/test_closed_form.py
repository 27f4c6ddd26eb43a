import math

import numpy as np
import pytest

from sphereineq.closed_form import (
    TWO_THIRDS,
    aux_center_compact,
    aux_field,
    aux_integrals,
    bound_curves,
    find_mu,
    grad_energy_explicit,
    grad_energy_forms,
    mean_explicit,
    params,
    u_explicit,
    u_explicit_stereographic,
)
from sphereineq.functionals import eval_I, mass_moments
from sphereineq.harmonics import analyze, dirichlet_energy

# frozen reference values
GRAD_06 = 0.6986038541995899
MEAN_06 = -0.34443972705696807
LOWER_06_08 = -0.34055041584399404
UPPER_06_08 = -0.11197960825054112
ASYM_06_08 = -0.17027520792199702


def test_params():
    p = params(0.6)
    assert p.mu_sq == pytest.approx(4.0, abs=1e-14)


def test_grad_energy_frozen():
    mu_form, a_form = grad_energy_forms(0.6)
    assert abs(mu_form - a_form) < 1e-12
    assert abs(a_form - GRAD_06) < 1e-14
    assert abs(grad_energy_explicit(0.6) - 0.6986039) < 1e-7


@pytest.mark.parametrize("a", [1e-8, 1e-4, 1e-3, 0.01, 0.3, 0.9])
def test_grad_energy_forms_agree(a):
    mu_form, a_form = grad_energy_forms(a)
    assert abs(mu_form - a_form) < 1e-12 * max(1.0, a_form)
    # small a: the energy is 2 * (3/2 a)^2 / 3 to leading order
    if a < 1e-3:
        assert a_form == pytest.approx(1.5 * a * a, rel=1e-3)


def test_mean_frozen_and_sign_variant():
    assert abs(mean_explicit(0.6) - MEAN_06) < 1e-14
    assert abs(mean_explicit(0.6, sign_variant=True) - mean_explicit(0.6)) > 0.1


@pytest.mark.parametrize("a", [0.0, 0.3, 0.6, 0.9])
def test_family_matches_quadrature(basis, a):
    u = u_explicit(basis.grid, a)
    md = mass_moments(basis.grid, u)
    assert abs(md.M - 1.0) < 1e-12
    assert np.allclose(md.m, [0.0, 0.0, a], atol=1e-12)
    assert abs(basis.grid.weights @ u - mean_explicit(a)) < 1e-10
    assert abs(eval_I(TWO_THIRDS, basis, u).value) < 1e-7


def test_stereographic_form(basis):
    mask = basis.grid.x3 < 0.99
    diff = u_explicit_stereographic(basis.grid, 0.6) - u_explicit(basis.grid, 0.6)
    assert np.max(np.abs(diff[mask])) < 1e-12


def test_other_axis(basis):
    axis = np.array([1.0, 2.0, 2.0]) / 3.0
    u = u_explicit(basis.grid, 0.5, axis=axis)
    md = mass_moments(basis.grid, u)
    assert np.allclose(md.m, 0.5 * axis, atol=1e-12)


def test_aux_integrals_frozen():
    ai = aux_integrals(TWO_THIRDS, 2.0)
    assert ai.mass == pytest.approx(0.15625, abs=1e-14)
    assert ai.moment3 == pytest.approx(0.09375, abs=1e-14)
    assert ai.center == pytest.approx(0.6, abs=1e-14)
    assert find_mu(TWO_THIRDS, 0.6) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("alpha,mu", [(0.6, 1.5), (0.7, 3.0), (0.9, 1.2), (0.55, 5.0)])
def test_aux_integrals_vs_quadrature(basis, alpha, mu):
    u = aux_field(basis.grid, alpha, mu)
    ai = aux_integrals(alpha, mu)
    md = mass_moments(basis.grid, u)
    assert abs(md.M - ai.mass) < 1e-10 * ai.mass
    assert abs(md.m[2] - ai.moment3) < 1e-10 * ai.mass
    assert abs(basis.grid.weights @ u - ai.mean) < 1e-10
    assert abs(dirichlet_energy(basis, analyze(basis, u)) - ai.dirichlet) < 1e-7
    assert abs(aux_center_compact(alpha, mu) - ai.center) < 1e-12


@pytest.mark.parametrize("alpha,a", [(0.6, 0.2), (0.7, 0.5), (0.9, 0.95), (0.55, 0.01)])
def test_find_mu_roundtrip(alpha, a):
    mu = find_mu(alpha, a)
    assert abs(aux_integrals(alpha, mu).center - a) < 1e-10


def test_aux_rejects_alpha():
    with pytest.raises(ValueError):
        aux_integrals(0.4, 2.0)
    with pytest.raises(ValueError):
        aux_integrals(0.7, 1.0)


def test_bound_curves_frozen():
    bc = bound_curves(0.6, 0.8)
    assert abs(bc.lower - LOWER_06_08) < 1e-14
    assert abs(bc.upper - UPPER_06_08) < 1e-14
    assert abs(bc.upper_asym - ASYM_06_08) < 1e-14
    assert bound_curves(TWO_THIRDS, 0.5).lower == 0.0


@pytest.mark.parametrize("alpha", [0.55, 0.6, 0.7, 0.8, 0.95])
def test_bounds_ordered(alpha):
    for a in np.linspace(0.05, 0.95, 10):
        bc = bound_curves(alpha, a)
        assert bc.lower <= bc.upper + 1e-15


def test_upper_asymptotic_ratio():
    # the upper curve approaches (1/alpha - 3/2) ln(1 - a^2) as a -> 1
    bc = bound_curves(0.6, 1 - 1e-6)
    assert math.isfinite(bc.upper / bc.upper_asym)
