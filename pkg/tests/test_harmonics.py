import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphereineq.grid import build_grid
from sphereineq.harmonics import (
    analyze,
    build_basis,
    dirichlet_energy,
    evaluate,
    harmonic_index,
    laplacian,
    real_harmonics,
    synthesize,
)


def test_gram_identity(basis):
    G = basis.weighted.T @ basis.values
    assert np.max(np.abs(G - np.eye(basis.ncoef))) < 1e-12


def test_low_degree_convention(grid):
    Y = real_harmonics(1, grid.nodes)
    r3 = np.sqrt(3.0)
    assert np.allclose(Y[:, 0], 1.0)
    assert np.max(np.abs(Y[:, harmonic_index(1, -1)] - r3 * grid.x2)) < 1e-13
    assert np.max(np.abs(Y[:, harmonic_index(1, 0)] - r3 * grid.x3)) < 1e-13
    assert np.max(np.abs(Y[:, harmonic_index(1, 1)] - r3 * grid.x1)) < 1e-13


def test_laplacian_eigenfunctions(basis):
    # x3^2 - 1/3 is a degree-2 harmonic: Lap = -6 (x3^2 - 1/3)
    u = basis.grid.x3**2 - 1.0 / 3.0
    c = analyze(basis, u)
    # quadrature round-off in high degrees is amplified by L(L+1) = 600
    assert np.max(np.abs(synthesize(basis, laplacian(basis, c)) + 6.0 * u)) < 1e-11
    # int |grad x3|^2 = int (1 - x3^2) = 2/3
    assert abs(dirichlet_energy(basis, analyze(basis, basis.grid.x3)) - 2.0 / 3.0) < 1e-13


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_parseval_roundtrip(seed):
    b = build_basis(build_grid(16, 32), 8)
    c = np.random.default_rng(seed).standard_normal(b.ncoef)
    u = synthesize(b, c)
    assert np.max(np.abs(analyze(b, u) - c)) < 1e-10
    assert abs(b.grid.weights @ u**2 - c @ c) < 1e-10 * max(1.0, c @ c)


def test_zonal_matches_full(grid):
    full = build_basis(grid, 10)
    zonal = build_basis(grid, 10, zonal=True)
    cols = [harmonic_index(l, 0) for l in range(11)]
    assert np.max(np.abs(full.values[:, cols] - zonal.values)) < 1e-13


def test_zonal_needs_only_polar_exactness():
    g = build_grid(40, 4)
    build_basis(g, 39, zonal=True)
    with pytest.raises(ValueError):
        build_basis(g, 3)
    with pytest.raises(ValueError):
        build_basis(g, 41, zonal=True)


def test_evaluate_off_grid(small_basis):
    rng = np.random.default_rng(3)
    c = rng.standard_normal(small_basis.ncoef)
    pts = rng.standard_normal((20, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    direct = real_harmonics(8, pts) @ c
    assert np.allclose(evaluate(small_basis, c, pts), direct)


def test_rotation_invariance_of_degree_energy(small_basis):
    from sphereineq.functionals import rotate_field
    from scipy.spatial.transform import Rotation

    c = np.random.default_rng(5).standard_normal(small_basis.ncoef)
    u = synthesize(small_basis, c)
    R = Rotation.from_euler("zyz", [0.3, 1.1, -0.4]).as_matrix()
    c2 = analyze(small_basis, rotate_field(small_basis, u, R))
    for l in range(9):
        m = small_basis.degrees == l
        assert abs(c[m] @ c[m] - c2[m] @ c2[m]) < 1e-10


def test_shape_errors(small_basis):
    with pytest.raises(ValueError):
        analyze(small_basis, np.zeros(3))
    with pytest.raises(ValueError):
        synthesize(small_basis, np.zeros(3))
    with pytest.raises(ValueError):
        harmonic_index(1, 2)
