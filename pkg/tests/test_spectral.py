import warnings

import numpy as np
import pytest

from sphereineq.closed_form import TWO_THIRDS, u_explicit
from sphereineq.functionals import eval_I, random_field
from sphereineq.harmonics import analyze, synthesize
from sphereineq.spectral import (
    conformal_eigenvalues,
    constrained_kernel_dim,
    constraint_vectors,
    hessian_diag_at_zero,
    hessian_form,
    hessian_matrix,
    kernel_dim,
    ladder,
    project_constraints,
    reduced_form_extremal,
)


def test_diag_values():
    d = hessian_diag_at_zero(TWO_THIRDS, 3)
    assert d[0] == 0.0
    assert np.allclose(d[1:4], 0.0, atol=1e-15)
    assert np.allclose(d[4:9], 4.0)
    assert hessian_diag_at_zero(0.7, 1)[1] == pytest.approx(0.1333333, abs=1e-7)
    assert hessian_diag_at_zero(0.5, 1)[1] == pytest.approx(-2 / 3, abs=1e-15)


def test_diag_matches_finite_differences(basis):
    eps = 1e-3
    d = hessian_diag_at_zero(0.7, basis.L)
    for k in range(16):
        phi = synthesize(basis, np.eye(basis.ncoef)[k])
        fd = (eval_I(0.7, basis, eps * phi).value + eval_I(0.7, basis, -eps * phi).value) / eps**2
        assert abs(fd - d[k]) <= 1e-4 * max(1.0, abs(d[k]))


def test_form_at_zero(basis):
    phi = np.sqrt(3.0) * basis.grid.x3
    assert hessian_form(0.7, basis, np.zeros(basis.grid.size), phi) == pytest.approx(0.1333333, abs=1e-7)


def test_matrix_matches_form(basis):
    u = u_explicit(basis.grid, 0.6)
    H = hessian_matrix(TWO_THIRDS, basis, u)
    phi = random_field(9, basis)
    c = analyze(basis, phi)
    assert abs(c @ H @ c - hessian_form(TWO_THIRDS, basis, u, phi)) < 1e-10


def test_form_matches_second_difference(basis):
    u = random_field(4, basis, amplitude=0.5)
    phi = random_field(5, basis)
    eps = 1e-4
    fd = (eval_I(0.8, basis, u + eps * phi).value + eval_I(0.8, basis, u - eps * phi).value
          - 2 * eval_I(0.8, basis, u).value) / eps**2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert abs(fd - hessian_form(0.8, basis, u, phi)) < 1e-5 * max(1.0, abs(fd))


def test_non_critical_warns(basis):
    with pytest.warns(RuntimeWarning):
        hessian_form(0.8, basis, random_field(4, basis), random_field(5, basis))


def test_nonnegative_at_extremal(basis):
    u = u_explicit(basis.grid, 0.6)
    vals = [hessian_form(TWO_THIRDS, basis, u, random_field(s, basis)) for s in range(50)]
    assert min(vals) >= -1e-6


def test_reduced_form(basis):
    u = u_explicit(basis.grid, 0.6)
    V = constraint_vectors(basis, 0.6)
    for s in range(5):
        phi = project_constraints(basis, 0.6, random_field(s, basis))
        assert np.max(np.abs(V @ analyze(basis, phi))) < 1e-12
        full = hessian_form(TWO_THIRDS, basis, u, phi)
        assert abs(full - reduced_form_extremal(basis, 0.6, phi)) < 1e-8


def test_constrained_kernel_reported(basis):
    dim, ev = constrained_kernel_dim(TWO_THIRDS, basis, u_explicit(basis.grid, 0.6), 0.6)
    assert dim >= 0
    assert ev.min() > -1e-8


@pytest.mark.parametrize("alpha,dim", [(0.6, 1), (TWO_THIRDS, 4), (0.9, 1)])
def test_kernel_dim(alpha, dim):
    assert kernel_dim(alpha, L=12) == dim


def test_ladder():
    assert list(ladder(2)) == [0, 2, 2, 2, 6, 6, 6, 6, 6]


@pytest.mark.parametrize("a", [0.0, 0.3, 0.5, 0.8])
def test_conformal_ladder(a):
    rep = conformal_eigenvalues(a, L=16)
    assert rep.passed
    assert abs(rep.eigenvalues[0]) < 1e-8
    assert rep.gap_to_three > 0.5


def test_conformal_degree_limited_is_coarser():
    assert conformal_eigenvalues(0.5, L=16, polar_extra=0).ladder_deviation > 1e-5
    assert conformal_eigenvalues(0.3, L=16, polar_extra=0).ladder_deviation < 1e-6


def test_conformal_large_a_warns():
    with pytest.warns(RuntimeWarning):
        conformal_eigenvalues(0.85, L=16)
