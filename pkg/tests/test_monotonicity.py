import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from sphereineq.closed_form import u_explicit
from sphereineq.functionals import eval_I, random_field, rotate_field
from sphereineq.grid import build_grid
from sphereineq.harmonics import build_basis
from sphereineq.monotonicity import (
    check_monotonicity,
    g_closed,
    g_curve,
    g_prime,
    g_quadrature,
    gram_data,
    mu_variational,
    szego_remark_check,
)

LOG_INT_HALF = -0.045228747557780766  # mean of ln(1 + x3/2)
_BASIS = build_basis(build_grid(32, 64), 12)


def test_uniform_density(grid):
    r = gram_data(grid, np.ones(grid.size))
    assert r.D0 == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(r.D0i, 1.0, atol=1e-13)
    assert r.D1 == pytest.approx(1.0, abs=1e-13)


def test_linear_density(grid):
    r = check_monotonicity(grid, 1 + grid.x3 / 2)
    assert np.allclose(r.D0i, [1.0, 1.0, 11 / 12], atol=1e-13)
    assert r.D1 == pytest.approx(35 / 36, abs=1e-13)
    assert r.int_log_f == pytest.approx(LOG_INT_HALF, abs=1e-13)
    assert r.margin_inequality == pytest.approx(0.0170578, abs=1e-7)


def test_extremal_density(grid):
    r = gram_data(grid, np.exp(2 * u_explicit(grid, 0.6)))
    assert r.D1 == pytest.approx(0.64, abs=1e-8)


def test_constant_equality(grid):
    r = check_monotonicity(grid, np.full(grid.size, 3.7))
    assert abs(r.margin_inequality) < 1e-13


def test_rejects_nonpositive(grid):
    f = np.ones(grid.size)
    f[3] = 0.0
    with pytest.raises(ValueError):
        gram_data(grid, f)


@given(st.integers(0, 10**6), st.floats(0.1, 2.0))
@settings(max_examples=40, deadline=None)
def test_fuzz_margins(seed, amp):
    b = _BASIS
    r = check_monotonicity(b.grid, np.exp(2 * random_field(seed, b, amp)))
    assert r.D1 >= -1e-12
    assert r.margin_inequality >= -1e-8
    assert r.identity_residual < 1e-10
    a, b2 = r.cauchy_schwarz_gaps
    assert a >= -1e-10 and b2 >= -1e-10


def test_mu_variational(grid, basis):
    for s in range(10):
        f = np.exp(2 * random_field(s, basis))
        r = gram_data(grid, f)
        for i in range(3):
            assert mu_variational(grid, f, i) == pytest.approx(r.mu[i], rel=1e-9)


def test_rotation_invariance_of_D1(basis):
    u = random_field(8, basis)
    R = Rotation.from_euler("xyz", [0.2, -0.7, 1.3]).as_matrix()
    d1 = gram_data(basis.grid, np.exp(2 * u)).D1
    d1r = gram_data(basis.grid, np.exp(2 * rotate_field(basis, u, R))).D1
    assert abs(d1 - d1r) < 1e-8 * d1


def test_g_values():
    assert g_closed(1.0) == 2 * math.log(2) - 1
    assert g_closed(2.0) == pytest.approx(2.25 * math.log(3) - 1, abs=1e-14)
    assert abs(g_closed(2.0) - 1.4718777) < 1e-7
    assert 0 < g_closed(1e-6) < 1e-6
    assert g_prime(1.0) == 1.0
    with pytest.raises(ValueError):
        g_closed(0.0)


def test_g_vs_quadrature():
    ts = np.geomspace(1e-3, 1e3, 201)
    assert max(abs(g_closed(t) - g_quadrature(t)) for t in ts) < 1e-10
    for t in [0.5, 1 - 1e-9, 1 + 1e-9, 2.0]:
        assert abs(g_closed(t) - g_quadrature(t)) < 1e-10


def test_g_positive_increasing():
    ts = np.geomspace(1e-4, 1e4, 161)
    g = np.array([g_closed(t) for t in ts])
    gp = np.array([g_prime(t) for t in ts])
    assert np.all(g > 0) and np.all(gp > 0) and np.all(np.diff(g) > 0)


def test_g_prime_finite_difference():
    for t in np.geomspace(1e-2, 1e2, 21):
        h = 1e-6 * t
        fd = (g_closed(t + h) - g_closed(t - h)) / (2 * h)
        assert g_prime(t) == pytest.approx(fd, rel=1e-6)


def test_g_reflection():
    for t in [0.1, 0.7, 3.0]:
        assert g_closed(t) == pytest.approx(2 * math.log(t) + g_closed(1 / t), abs=1e-13)
    assert g_curve(2.0).g_quadrature == pytest.approx(g_closed(2.0), abs=1e-12)


def test_szego(basis):
    assert abs(szego_remark_check(basis, np.zeros(basis.grid.size))) < 1e-14
    assert abs(szego_remark_check(basis, u_explicit(basis.grid, 0.6))) < 1e-6
    u = random_field(7, basis)
    assert abs(szego_remark_check(basis, u) - 2 * eval_I(2 / 3, basis, u).value) < 1e-10
