"""Functionals, moments and Euler-Lagrange residuals for fields on S^2.

A field is a plain array of nodal values on the grid of a
:class:`~sphereineq.harmonics.SpectralBasis`. Dirichlet energies are always
taken from the analyzed coefficients (Parseval), so a field that is not
band-limited is silently truncated; ``projection_residual`` reports by how
much.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import UnitSphereGrid
from .harmonics import SpectralBasis, analyze, dirichlet_energy, evaluate, laplacian, synthesize

__all__ = [
    "FieldOverflowError",
    "QuadratureBreakdownError",
    "MassData",
    "FunctionalValue",
    "AffineCurvature",
    "ELResidual",
    "mass_moments",
    "second_moments",
    "eval_F",
    "eval_I",
    "el_residual",
    "el_residual_multiplier",
    "kazdan_warner_residual",
    "kw_identity_residual",
    "multiplier_condition_residual",
    "normalize",
    "random_coefficients",
    "random_field",
    "rotate_field",
]

MAX_EXPONENT = 300.0


class FieldOverflowError(ValueError):
    """``exp(2u)`` would overflow (``max 2u > 300``)."""


class QuadratureBreakdownError(ArithmeticError):
    """``M^2 - |m|^2 <= 0`` on the grid; cannot happen with exact integrals."""


@dataclass(frozen=True)
class MassData:
    M: float
    m: np.ndarray
    a: np.ndarray
    a_norm: float


@dataclass(frozen=True)
class FunctionalValue:
    """One evaluation of ``alpha*D + 2*mean - log_term``.

    ``decomposition`` is ``F_alpha(u) - 0.5*log(1 - |a|^2)``, filled in by
    :func:`eval_I` only; it must agree with ``value``.
    """

    alpha: float
    dirichlet: float
    mean: float
    log_term: float
    value: float
    projection_residual: float
    decomposition: float | None = None


@dataclass(frozen=True)
class AffineCurvature:
    """``K(x) = c0 + c . x``."""

    c0: float
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).reshape(3))

    @property
    def positive(self) -> bool:
        return self.c0 > np.linalg.norm(self.c)

    def __call__(self, x) -> np.ndarray:
        return self.c0 + np.asarray(x) @ self.c


@dataclass(frozen=True)
class ELResidual:
    """Euler-Lagrange residual of a field.

    ``field``/``sup``/``l2`` describe the residual of the discrete equation
    (projected onto the band limit). ``pointwise`` is the raw nodal residual,
    which also contains the truncation error of a non band-limited field.
    """

    field: np.ndarray
    sup: float
    l2: float
    pointwise: np.ndarray
    pointwise_sup: float
    pointwise_l2: float


def _exp2u(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("field has non-finite values")
    if 2.0 * u.max() > MAX_EXPONENT:
        raise FieldOverflowError(f"max 2u = {2.0 * u.max():.3g} exceeds {MAX_EXPONENT}")
    return np.exp(2.0 * u)


def _grid(obj) -> UnitSphereGrid:
    return obj.grid if isinstance(obj, SpectralBasis) else obj


def mass_moments(grid, u) -> MassData:
    """Total mass ``M = int e^{2u}`` and first moments ``m_i = int e^{2u} x_i``."""
    grid = _grid(grid)
    E = grid.weights * _exp2u(u)
    M = float(E.sum())
    m = E @ grid.nodes
    a = m / M
    return MassData(M, m, a, float(np.linalg.norm(a)))


def second_moments(grid, u) -> np.ndarray:
    """``S_ij = int x_i x_j e^{2u} d(omega)``."""
    grid = _grid(grid)
    E = grid.weights * _exp2u(u)
    return (grid.nodes * E[:, None]).T @ grid.nodes


def _projection(basis: SpectralBasis, u):
    c = analyze(basis, u)
    resid = float(np.max(np.abs(np.asarray(u) - synthesize(basis, c))))
    return c, resid


def eval_F(alpha: float, basis: SpectralBasis, u) -> FunctionalValue:
    """Moser-Trudinger-Onofri functional ``alpha*D + 2*mean - log M``."""
    c, resid = _projection(basis, u)
    D = dirichlet_energy(basis, c)
    mean = float(basis.grid.weights @ np.asarray(u, dtype=float))
    log_term = float(np.log(mass_moments(basis.grid, u).M))
    return FunctionalValue(alpha, D, mean, log_term, alpha * D + 2.0 * mean - log_term, resid)


def eval_I(alpha: float, basis: SpectralBasis, u) -> FunctionalValue:
    """Center-of-mass corrected functional.

    ``log_term = 0.5*log(M^2 - |m|^2)``; also reports the decomposition
    ``F_alpha(u) - 0.5*log(1 - |a|^2)``, which equals the value for every u.
    """
    md = mass_moments(basis.grid, u)
    arg = md.M * md.M - float(md.m @ md.m)
    if not arg > 0.0:
        raise QuadratureBreakdownError(f"M^2 - |m|^2 = {arg:.3g} is not positive")
    F = eval_F(alpha, basis, u)
    log_term = 0.5 * float(np.log(arg))
    one_minus = (1.0 - md.a_norm) * (1.0 + md.a_norm)
    return FunctionalValue(
        alpha,
        F.dirichlet,
        F.mean,
        log_term,
        alpha * F.dirichlet + 2.0 * F.mean - log_term,
        F.projection_residual,
        decomposition=F.value - 0.5 * float(np.log(one_minus)),
    )


def _residual(basis: SpectralBasis, alpha: float, u, weight: np.ndarray, E: np.ndarray) -> ELResidual:
    c = analyze(basis, u)
    lap_u = synthesize(basis, laplacian(basis, c))
    raw = alpha * lap_u + E * weight - 1.0
    proj = synthesize(basis, analyze(basis, raw))
    w = basis.grid.weights
    return ELResidual(
        field=proj,
        sup=float(np.max(np.abs(proj))),
        l2=float(np.sqrt(w @ proj**2)),
        pointwise=raw,
        pointwise_sup=float(np.max(np.abs(raw))),
        pointwise_l2=float(np.sqrt(w @ raw**2)),
    )


def el_residual(alpha: float, basis: SpectralBasis, u) -> ELResidual:
    """Residual of ``alpha*Lap u + e^{2u}(1 - a.x)/(1 - |a|^2) - 1``.

    Written for mass-one fields. For general M the scale-correct form
    ``e^{2u}(M - m.x)/(M^2 - |m|^2)`` is used, which coincides at M = 1.
    """
    md = mass_moments(basis.grid, u)
    if md.a_norm >= 1.0 - 1e-12:
        raise ValueError(f"|a| = {md.a_norm} too close to 1")
    E = _exp2u(u)
    weight = (md.M - basis.grid.nodes @ md.m) / (md.M**2 - float(md.m @ md.m))
    return _residual(basis, alpha, u, weight, E)


def el_residual_multiplier(alpha: float, basis: SpectralBasis, u, rho: float, beta) -> ELResidual:
    """Residual of ``alpha*Lap u + e^{2u}(rho - beta.x) - 1``."""
    beta = np.asarray(beta, dtype=float).reshape(3)
    E = _exp2u(u)
    weight = rho - basis.grid.nodes @ beta
    return _residual(basis, alpha, u, weight, E)


def kazdan_warner_residual(grid, u, K: AffineCurvature) -> np.ndarray:
    """``int (grad K . grad x_j) e^{2u} d(omega)`` for affine K.

    Uses ``grad x_i . grad x_j = delta_ij - x_i x_j`` on the unit sphere, so
    only the moments of ``e^{2u}`` against 1 and ``x_i x_j`` are needed.
    """
    grid = _grid(grid)
    M = mass_moments(grid, u).M
    S = second_moments(grid, u)
    return K.c * M - S @ K.c


def kw_identity_residual(alpha: float, basis: SpectralBasis, u, rho: float, beta) -> np.ndarray:
    """Full Kazdan-Warner identity for ``alpha*Lap u + e^{2u}(rho - beta.x) = 1``.

    Rewritten as ``Lap u + K e^{2u} = 1`` with
    ``K = (rho - beta.x)/alpha + (1 - 1/alpha) e^{-2u}``. The affine part goes
    through :func:`kazdan_warner_residual`; the ``e^{-2u}`` part integrates
    by parts to ``-4(1 - 1/alpha) int u x_j``.
    """
    beta = np.asarray(beta, dtype=float).reshape(3)
    K = AffineCurvature(rho / alpha, -beta / alpha)
    affine = kazdan_warner_residual(basis.grid, u, K)
    u_x = basis.grid.nodes.T @ (basis.grid.weights * np.asarray(u, dtype=float))
    return affine - 4.0 * (1.0 - 1.0 / alpha) * u_x


def multiplier_condition_residual(alpha: float, grid, u, rho: float, beta) -> np.ndarray:
    """``2(1/alpha - 3/2) sum_i beta_i S_ij - (2(1/alpha - 1) rho a_j - beta_j)``."""
    grid = _grid(grid)
    beta = np.asarray(beta, dtype=float).reshape(3)
    md = mass_moments(grid, u)
    S = second_moments(grid, u) / md.M
    lhs = 2.0 * (1.0 / alpha - 1.5) * (S @ beta)
    rhs = 2.0 * (1.0 / alpha - 1.0) * rho * md.a - beta
    return lhs - rhs


def normalize(grid, u) -> np.ndarray:
    """Shift u by a constant so that ``int e^{2u} = 1``."""
    u = np.asarray(u, dtype=float)
    # factor out the max so e^{2u} cannot overflow for large constant shifts
    top = float(u.max())
    M = float(_grid(grid).weights @ np.exp(2.0 * (u - top)))
    return u - top - 0.5 * np.log(M)


def random_coefficients(seed: int, basis: SpectralBasis, amplitude: float = 1.0,
                        decay_power: float = 2.0) -> np.ndarray:
    """Seeded coefficients ``c_{l,m} ~ N(0, amplitude^2 / (1 + l(l+1))^decay_power)``.

    The degree-0 coefficient is zero.
    """
    if decay_power < 1:
        raise ValueError(f"decay_power must be >= 1, got {decay_power}")
    rng = np.random.default_rng(seed)
    sd = amplitude / (1.0 + basis.eigenvalues) ** (decay_power / 2.0)
    c = rng.standard_normal(basis.ncoef) * sd
    c[basis.degrees == 0] = 0.0
    return c


def random_field(seed: int, basis: SpectralBasis, amplitude: float = 1.0,
                 decay_power: float = 2.0) -> np.ndarray:
    """Nodal values of :func:`random_coefficients`."""
    return synthesize(basis, random_coefficients(seed, basis, amplitude, decay_power))


def rotate_field(basis: SpectralBasis, u, rotation) -> np.ndarray:
    """Nodal values of ``u(R x)`` for a band-limited u and a 3x3 rotation R."""
    R = np.asarray(rotation, dtype=float)
    return evaluate(basis, analyze(basis, u), basis.grid.nodes @ R.T)
