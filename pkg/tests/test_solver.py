import numpy as np
import pytest

from sphereineq.closed_form import TWO_THIRDS, bound_curves, u_explicit
from sphereineq.functionals import (
    kazdan_warner_residual,
    kw_identity_residual,
    multiplier_condition_residual,
    random_field,
    AffineCurvature,
)
from sphereineq.solver import (
    SolverOptions,
    axisym_deviation,
    continuation,
    fit_multipliers,
    m_sweep,
    minimize_constrained,
    newton_el,
)


def _check_invariants(sol):
    opts = SolverOptions()
    assert sol.converged, sol.message
    assert sol.el_residual_sup < opts.tol_el
    assert np.max(np.abs(sol.constraint_residual)) < opts.tol_c
    # rho = 1 + beta . a
    assert abs(sol.rho - 1.0 - sol.beta[2] * sol.a_target) < 1e-9


def test_extremal_at_two_thirds(basis):
    sol = minimize_constrained(TWO_THIRDS, 0.6, basis)
    _check_invariants(sol)
    assert abs(sol.I_value) < 1e-5
    assert np.max(np.abs(sol.u - u_explicit(basis.grid, 0.6))) < 1e-4
    assert abs(sol.beta[2] - 0.9375) < 1e-5


def test_constant_solution(basis):
    sol = minimize_constrained(0.8, 0.0, basis)
    _check_invariants(sol)
    assert abs(sol.I_value) < 1e-12
    assert np.max(np.abs(sol.u)) < 1e-10
    assert axisym_deviation(sol) < 1e-6


def test_bracket_and_identities(basis):
    sol = minimize_constrained(0.6, 0.8, basis)
    _check_invariants(sol)
    bc = bound_curves(0.6, 0.8)
    assert bc.lower - 1e-3 <= sol.I_value <= bc.upper + 1e-3
    assert np.max(np.abs(kw_identity_residual(0.6, basis, sol.u, sol.rho, sol.beta))) < 1e-5
    assert np.max(np.abs(multiplier_condition_residual(0.6, basis, sol.u, sol.rho, sol.beta))) < 1e-5


def test_newton_from_perturbed_extremal(basis):
    init = u_explicit(basis.grid, 0.6) + 1e-3 * random_field(1, basis)
    sol = newton_el(TWO_THIRDS, 0.6, basis, init=init)
    _check_invariants(sol)
    assert abs(sol.beta[2] - 0.6 / 0.64) < 1e-5


def test_newton_trivial(basis):
    sol = newton_el(TWO_THIRDS, 0.0, basis)
    _check_invariants(sol)
    assert abs(sol.rho - 1.0) < 1e-12
    assert np.max(np.abs(sol.beta)) < 1e-12


def test_beta_small_a_limit(basis):
    sol = minimize_constrained(0.55, 1e-3, basis)
    assert sol.converged
    assert abs(sol.beta[2] / 1e-3 - 3 * (1 - 0.55)) < 5e-3


@pytest.mark.parametrize("alpha,a", [(0.6, 0.5), (0.75, 0.3)])
def test_axisymmetry_from_random_start(basis, alpha, a):
    sol = minimize_constrained(alpha, a, basis, init=random_field(42, basis, amplitude=0.5))
    assert sol.converged
    assert axisym_deviation(sol) < 1e-6


def test_uniqueness_probe(basis):
    vals = [minimize_constrained(0.8, 0.5, basis, init=random_field(100 + s, basis, 0.5)).I_value
            for s in range(3)]
    assert max(vals) - min(vals) < 1e-4


def test_zonal_fast_path(zonal_basis):
    sol = minimize_constrained(0.7, 0.9, zonal_basis)
    assert sol.converged
    bc = bound_curves(0.7, 0.9)
    assert bc.lower - 1e-3 <= sol.I_value <= bc.upper + 1e-3


def test_continuation_two_thirds(basis):
    res = continuation(TWO_THIRDS, np.round(np.arange(0, 0.91, 0.05), 10), basis)
    assert res.complete
    assert max(abs(s.I_value) for s in res.solutions) < 1e-5
    assert np.max(np.abs(res.integrand)) < 1e-4


def test_continuation_energy_identity(basis):
    res = continuation(0.7, np.round(np.arange(0, 0.81, 0.05), 10), basis)
    assert res.complete
    assert res.identity_error < 2e-3
    # the doubled integrand does not integrate to the energy change
    assert res.identity_error_doubled > 10 * res.identity_error


def test_continuation_decreasing_below_two_thirds(basis):
    res = continuation(0.6, np.round(np.arange(0, 0.81, 0.1), 10), basis)
    I = [s.I_value for s in res.solutions]
    assert res.complete
    assert np.all(np.diff(I) < 0)


def test_sweep_rows(basis):
    rows = m_sweep([0.6], [0.8], basis)
    assert rows[0].converged
    assert rows[0].lower_bound - 1e-3 <= rows[0].m_value <= rows[0].upper_bound + 1e-3


def test_fit_multipliers_on_extremal(basis):
    rho, beta = fit_multipliers(TWO_THIRDS, basis, u_explicit(basis.grid, 0.3))
    assert abs(beta[2] - 0.3 / 0.91) < 1e-8
    assert abs(rho - 1 - 0.3 * beta[2]) < 1e-8


def test_rejects_bad_inputs(basis):
    with pytest.raises(ValueError):
        minimize_constrained(0.5, 0.3, basis)
    with pytest.raises(ValueError):
        minimize_constrained(0.7, 1.0, basis)
    with pytest.raises(ValueError):
        continuation(0.7, [0.3, 0.2], basis)
