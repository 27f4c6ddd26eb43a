"""Quadrature on the unit sphere under the normalized measure (total mass one).

Nodes are Gauss-Legendre in ``x3 = cos(theta)`` crossed with a uniform
azimuthal ring, so the rule integrates every spherical harmonic of degree
``l <= min(2*n_theta - 1, n_phi - 1)`` to round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UnitSphereGrid",
    "gauss_legendre",
    "build_grid",
    "integrate",
    "stereographic",
    "inverse_stereographic",
]


def gauss_legendre(n: int, tol: float = 1e-15, max_iter: int = 100):
    """Gauss-Legendre nodes and weights on [-1, 1].

    Roots are polished by Newton's method on the three-term recurrence,
    started from the Tricomi approximation.

    Parameters
    ----------
    n : int
        Number of nodes.

    Returns
    -------
    nodes, weights : ndarray
        Ascending nodes and the matching weights (summing to 2).
    """
    if n < 1:
        raise ValueError(f"need at least one node, got {n}")
    k = np.arange(1, n + 1)
    x = (1.0 - (n - 1) / (8.0 * n**3)) * np.cos(np.pi * (4 * k - 1) / (4 * n + 2))
    for _ in range(max_iter):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    # derivative at the converged roots
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


@dataclass(frozen=True)
class UnitSphereGrid:
    """Tensor quadrature on S^2 with weights summing to one.

    Attributes
    ----------
    n_theta, n_phi : int
        Ring count (Gauss-Legendre in ``x3``) and points per ring.
    nodes : ndarray, shape (n_theta * n_phi, 3)
        Unit vectors; ring-major ordering.
    weights : ndarray, shape (n_theta * n_phi,)
        Positive weights, ``weights.sum() == 1``.
    """

    n_theta: int
    n_phi: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    cos_theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def exact_degree(self) -> int:
        """Largest harmonic degree integrated exactly."""
        return min(2 * self.n_theta - 1, self.n_phi - 1)

    @property
    def x1(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def x2(self) -> np.ndarray:
        return self.nodes[:, 1]

    @property
    def x3(self) -> np.ndarray:
        return self.nodes[:, 2]


def build_grid(n_theta: int = 48, n_phi: int = 96) -> UnitSphereGrid:
    """Build the Gauss-Legendre x trapezoid grid on the unit sphere.

    >>> g = build_grid(8, 16)
    >>> round(float(g.weights.sum()), 14)
    1.0
    """
    if int(n_theta) != n_theta or n_theta < 2:
        raise ValueError(f"n_theta must be an integer >= 2, got {n_theta}")
    if int(n_phi) != n_phi or n_phi < 4:
        raise ValueError(f"n_phi must be an integer >= 4, got {n_phi}")
    n_theta, n_phi = int(n_theta), int(n_phi)
    t, wt = gauss_legendre(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))

    tt = np.repeat(t, n_phi)
    ss = np.repeat(s, n_phi)
    pp = np.tile(phi, n_theta)
    nodes = np.column_stack([ss * np.cos(pp), ss * np.sin(pp), tt])
    # renormalize to kill the last ulp of drift in |x|
    nodes /= np.linalg.norm(nodes, axis=1)[:, None]
    # (1/4pi) * w_k * (2pi/n_phi)
    weights = np.repeat(wt, n_phi) / (2.0 * n_phi)
    weights /= weights.sum()
    for arr in (nodes, weights, tt, pp):
        arr.setflags(write=False)
    return UnitSphereGrid(n_theta, n_phi, nodes, weights, tt, pp)


def integrate(grid: UnitSphereGrid, values) -> float:
    """Discrete ``\\int f d(omega)`` under the normalized measure."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(
            f"expected {grid.size} nodal values, got shape {values.shape}"
        )
    return float(grid.weights @ values)


def stereographic(x) -> np.ndarray:
    """Project from the north pole: ``y = (x1, x2) / (1 - x3)``.

    Accepts a single 3-vector or an (N, 3) array.
    """
    x = np.asarray(x, dtype=float)
    denom = 1.0 - x[..., 2]
    if np.any(np.abs(denom) < 1e-15):
        raise ValueError("the north pole (0, 0, 1) maps to infinity")
    return np.stack([x[..., 0] / denom, x[..., 1] / denom], axis=-1)


def inverse_stereographic(y) -> np.ndarray:
    """Lift plane points back to the sphere; ``x3 = (|y|^2 - 1)/(|y|^2 + 1)``."""
    y = np.asarray(y, dtype=float)
    r2 = y[..., 0] ** 2 + y[..., 1] ** 2
    d = r2 + 1.0
    return np.stack([2.0 * y[..., 0] / d, 2.0 * y[..., 1] / d, (r2 - 1.0) / d], axis=-1)
