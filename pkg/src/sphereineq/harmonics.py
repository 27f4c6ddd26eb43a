"""Real spherical harmonics orthonormal under the normalized measure.

Column ``k = l*l + l + m`` of the table holds ``Y_{l,m}`` with

* ``Y_{l,0}  = Pbar_l^0(cos t)``
* ``Y_{l,m}  = sqrt(2) Pbar_l^m(cos t) cos(m phi)``  for ``m > 0``
* ``Y_{l,-m} = sqrt(2) Pbar_l^m(cos t) sin(m phi)``  for ``m > 0``

where ``Pbar_l^m = sqrt((2l+1)(l-m)!/(l+m)!) P_l^m`` carries no
Condon-Shortley phase. Hence ``Y_{0,0} = 1`` and
``(Y_{1,-1}, Y_{1,0}, Y_{1,1}) = sqrt(3) (x2, x3, x1)``.

A zonal basis keeps only the ``m = 0`` columns; it is used for
axisymmetric problems where a high band limit is needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import UnitSphereGrid

__all__ = [
    "SpectralBasis",
    "legendre_table",
    "harmonic_index",
    "real_harmonics",
    "build_basis",
    "analyze",
    "synthesize",
    "dirichlet_energy",
    "laplacian",
    "evaluate",
]


def harmonic_index(l: int, m: int) -> int:
    """Column of ``Y_{l,m}`` in the full (non-zonal) layout."""
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")
    return l * l + l + m


def legendre_table(lmax: int, t, mmax: int | None = None) -> np.ndarray:
    """Normalized associated Legendre functions ``Pbar_l^m(t)``.

    Returns an array of shape ``(lmax + 1, mmax + 1, len(t))`` with entries
    for ``m > l`` left at zero. Normalization: ``0.5 * int Pbar^2 dt = 1``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    mmax = lmax if mmax is None else mmax
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    P = np.zeros((lmax + 1, mmax + 1, t.size))
    pmm = np.ones_like(t)
    for m in range(mmax + 1):
        if m > 0:
            pmm = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        if m > lmax:
            break
        P[m, m] = pmm
        if m + 1 <= lmax:
            P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * t * pmm
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[l, m] = a * (t * P[l - 1, m] - b * P[l - 2, m])
    return P


def _layout(lmax: int, zonal: bool):
    if zonal:
        degrees = np.arange(lmax + 1)
        orders = np.zeros(lmax + 1, dtype=int)
    else:
        degrees = np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])
        orders = np.concatenate([np.arange(-l, l + 1) for l in range(lmax + 1)])
    return degrees.astype(int), orders.astype(int)


def real_harmonics(lmax: int, points, zonal: bool = False) -> np.ndarray:
    """Evaluate the basis at arbitrary unit vectors, shape ``(N, ncoef)``."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    x = x / np.linalg.norm(x, axis=1)[:, None]
    t = np.clip(x[:, 2], -1.0, 1.0)
    phi = np.arctan2(x[:, 1], x[:, 0])
    degrees, orders = _layout(lmax, zonal)
    P = legendre_table(lmax, t, mmax=0 if zonal else lmax)
    out = np.empty((x.shape[0], degrees.size))
    root2 = np.sqrt(2.0)
    for k, (l, m) in enumerate(zip(degrees, orders)):
        if m == 0:
            out[:, k] = P[l, 0]
        elif m > 0:
            out[:, k] = root2 * P[l, m] * np.cos(m * phi)
        else:
            out[:, k] = root2 * P[l, -m] * np.sin(-m * phi)
    return out


@dataclass(frozen=True)
class SpectralBasis:
    """Basis table ``Y[node, k]`` paired with its quadrature grid.

    Attributes
    ----------
    grid : UnitSphereGrid
    L : int
        Band limit.
    zonal : bool
        Only ``m = 0`` columns when true.
    values : ndarray, shape (grid.size, ncoef)
    degrees, orders : ndarray of int
        ``(l, m)`` for every column.
    eigenvalues : ndarray
        ``l(l+1)`` for every column.
    """

    grid: UnitSphereGrid
    L: int
    zonal: bool
    values: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)
    orders: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    # w[:, None] * Y, so weighted.T @ f is the discrete projection
    weighted: np.ndarray = field(repr=False)

    @property
    def ncoef(self) -> int:
        return self.degrees.size

    def index(self, l: int, m: int = 0) -> int:
        if self.zonal:
            if m != 0:
                raise ValueError("zonal basis has no m != 0 columns")
            return l
        return harmonic_index(l, m)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.ncoef)

    def unit(self, l: int, m: int = 0) -> np.ndarray:
        c = self.zeros()
        c[self.index(l, m)] = 1.0
        return c


def build_basis(grid: UnitSphereGrid, L: int = 24, zonal: bool = False) -> SpectralBasis:
    """Tabulate the real harmonics up to degree ``L`` on ``grid``.

    The grid must integrate products of two basis functions exactly, i.e.
    ``2L <= grid.exact_degree``. A zonal basis only needs the polar rule to
    be exact to ``2L``.
    """
    if L < 0:
        raise ValueError(f"band limit must be >= 0, got {L}")
    exact = 2 * grid.n_theta - 1 if zonal else grid.exact_degree
    if 2 * L > exact:
        raise ValueError(
            f"grid {grid.n_theta}x{grid.n_phi} is exact to degree "
            f"{exact}; band limit {L} needs {2 * L}"
        )
    values = real_harmonics(L, grid.nodes, zonal=zonal)
    degrees, orders = _layout(L, zonal)
    eig = (degrees * (degrees + 1)).astype(float)
    weighted = grid.weights[:, None] * values
    for arr in (values, degrees, orders, eig, weighted):
        arr.setflags(write=False)
    return SpectralBasis(grid, L, zonal, values, degrees, orders, eig, weighted)


def analyze(basis: SpectralBasis, values) -> np.ndarray:
    """Coefficients ``c_k = int u Y_k d(omega)`` by quadrature."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != basis.grid.size:
        raise ValueError(
            f"field has {values.shape[0]} nodes, basis grid has {basis.grid.size}"
        )
    return basis.weighted.T @ values


def synthesize(basis: SpectralBasis, coeffs) -> np.ndarray:
    """Nodal values ``sum_k c_k Y_k``."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != basis.ncoef:
        raise ValueError(f"expected {basis.ncoef} coefficients, got {coeffs.shape[0]}")
    return basis.values @ coeffs


def dirichlet_energy(basis: SpectralBasis, coeffs) -> float:
    """``int |grad u|^2 d(omega)`` via Parseval: ``sum l(l+1) c^2``."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != basis.ncoef:
        raise ValueError(f"expected {basis.ncoef} coefficients, got {coeffs.shape[0]}")
    return float(basis.eigenvalues @ (coeffs * coeffs))


def laplacian(basis: SpectralBasis, coeffs) -> np.ndarray:
    """Spectral Laplace-Beltrami: degree-l block times ``-l(l+1)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != basis.ncoef:
        raise ValueError(f"expected {basis.ncoef} coefficients, got {coeffs.shape[0]}")
    return -basis.eigenvalues * coeffs


def evaluate(basis: SpectralBasis, coeffs, points) -> np.ndarray:
    """Evaluate the band-limited field at arbitrary points on the sphere."""
    Y = real_harmonics(basis.L, points, zonal=basis.zonal)
    return Y @ np.asarray(coeffs, dtype=float)
