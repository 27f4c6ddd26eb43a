"""Gram-determinant data of a positive density and the g(t) curve.

For a density f > 0 on the sphere, take ``f0 = 1`` and ``f_i = sqrt(3) x_i``
under the inner product ``<p, q> = int p q f d(omega)``. Then

    D0 = <f0, f0>,  D0i = <f0, f0><f_i, f_i> - <f0, f_i>^2,  D1 = (1/3) sum_i D0i,

and since ``sum x_i^2 = 1`` also ``D1 = (int f)^2 - sum_i (int f x_i)^2``.
The monotonicity inequality checked here is ``ln(D1/D0) >= int ln f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from .functionals import eval_I, mass_moments
from .harmonics import SpectralBasis, analyze, dirichlet_energy

__all__ = [
    "MonotonicityReport",
    "GValue",
    "gram_data",
    "check_monotonicity",
    "mu_variational",
    "g_closed",
    "g_prime",
    "g_quadrature",
    "g_curve",
    "szego_remark_check",
]

LN2 = math.log(2.0)
_SERIES_T = 0.5
_SERIES_TERMS = 40


@dataclass(frozen=True)
class MonotonicityReport:
    """Gram data of one density.

    ``margin_positivity`` is D1 itself; ``margin_inequality`` is
    ``ln(D1/D0) - int ln f``. ``margin_linear`` is the variant with
    ``int f`` in place of ``int ln f``, kept for comparison. ``mu`` holds
    ``D0i / D0``. ``identity_residual`` is ``|D1 - (int f)^2 + sum (int f x_i)^2|``
    divided by ``D0^2``, since both sides scale like ``f^2``.
    """

    D0: float
    D0i: np.ndarray
    D1: float
    int_log_f: float
    margin_positivity: float
    margin_inequality: float
    margin_linear: float
    identity_residual: float
    mu: np.ndarray
    cauchy_schwarz_gaps: tuple


@dataclass(frozen=True)
class GValue:
    t: float
    g: float
    g_prime: float
    g_quadrature: float


def gram_data(grid, f) -> MonotonicityReport:
    """Gram determinants of ``{1, sqrt(3) x_i}`` under the measure ``f d(omega)``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} nodal values, got shape {f.shape}")
    if not np.all(f > 0):
        raise ValueError("density must be positive at every node")
    wf = grid.weights * f
    X = grid.nodes
    D0 = float(wf.sum())
    first = X.T @ wf                    # int f x_i
    second = (X * X).T @ wf             # int f x_i^2
    fi_fi = 3.0 * second
    f0_fi = math.sqrt(3.0) * first
    D0i = D0 * fi_fi - f0_fi**2
    D1 = float(D0i.sum() / 3.0)
    closed = D0 * D0 - float(first @ first)
    int_log_f = float(grid.weights @ np.log(f))
    ratio = D1 / D0 if D1 > 0 else math.nan
    # sum (int f x_i)^2 <= int f * sum int f x_i^2 <= (int f)^2
    cs = (D0 * float(second.sum()) - float(first @ first), D0 * D0 - D0 * float(second.sum()))
    return MonotonicityReport(
        D0=D0,
        D0i=D0i,
        D1=D1,
        int_log_f=int_log_f,
        margin_positivity=D1,
        margin_inequality=math.log(ratio) - int_log_f,
        margin_linear=math.log(ratio) - D0,
        identity_residual=abs(D1 - closed) / (D0 * D0),
        mu=D0i / D0,
        cauchy_schwarz_gaps=cs,
    )


def check_monotonicity(grid, f, tol: float = 1e-10) -> MonotonicityReport:
    """:func:`gram_data` plus a check of ``ln(D1/D0) >= int ln f`` and ``D1 >= 0``.

    Raises ``ArithmeticError`` when a margin is below ``-tol``.
    """
    rep = gram_data(grid, f)
    if rep.margin_positivity < -1e-12:
        raise ArithmeticError(f"D1 = {rep.D1:.3e} is negative")
    if rep.margin_inequality < -tol:
        raise ArithmeticError(f"ln(D1/D0) - int ln f = {rep.margin_inequality:.3e}")
    return rep


def mu_variational(grid, f, i: int) -> float:
    """``inf_c int (c + sqrt(3) x_i)^2 f d(omega)`` by a 1D minimization over c."""
    wf = grid.weights * np.asarray(f, dtype=float)
    fi = math.sqrt(3.0) * grid.nodes[:, i]
    res = minimize_scalar(lambda c: float(wf @ (c + fi) ** 2), bracket=(-2.0, 2.0),
                          options={"xtol": 1e-12})
    return float(res.fun)


def _g_series(t: float) -> float:
    # g(t) = sum_k t^{2k} / (k (4k^2 - 1)) for t <= 1
    k = np.arange(1, _SERIES_TERMS + 1)
    return float(np.sum(t ** (2 * k) / (k * (4.0 * k * k - 1.0))))


def _gp_series(t: float) -> float:
    k = np.arange(1, _SERIES_TERMS + 1)
    return float(np.sum(2.0 * t ** (2 * k - 1) / (4.0 * k * k - 1.0)))


def g_closed(t: float) -> float:
    """Mean of ``ln(1 + t^2 + 2 t x3)`` over the sphere.

    ``g(t) = (1+t)^2 ln(1+t)/(2t) - (1-t)^2 ln|1-t|/(2t) - 1``. A power
    series is used for ``t < 1/2`` and ``g(t) = 2 ln t + g(1/t)`` for
    ``t > 2``; at ``t = 1`` the second term vanishes and ``g = 2 ln 2 - 1``.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if t < _SERIES_T:
        return _g_series(t)
    if t > 1.0 / _SERIES_T:
        return 2.0 * math.log(t) + _g_series(1.0 / t)
    if t == 1.0:
        return 2.0 * LN2 - 1.0
    return ((1.0 + t) ** 2 * math.log1p(t) - float(xlogy((1.0 - t) ** 2, abs(1.0 - t)))) / (2.0 * t) - 1.0


def g_prime(t: float) -> float:
    """``g'(t) = (4t + (t^2 - 1) ln(((1+t)/(1-t))^2)) / (4 t^2)``, with ``g'(1) = 1``."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if t < _SERIES_T:
        return _gp_series(t)
    if t > 1.0 / _SERIES_T:
        return 2.0 / t - _gp_series(1.0 / t) / (t * t)
    if t == 1.0:
        return 1.0
    return (4.0 * t + (t * t - 1.0) * 2.0 * math.log((1.0 + t) / abs(1.0 - t))) / (4.0 * t * t)


def g_quadrature(t: float) -> float:
    """``(1/2) int_{-1}^{1} ln(1 + t^2 + 2 t s) ds`` by adaptive quadrature."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    val, _ = quad(lambda s: math.log(1.0 + t * t + 2.0 * t * s), -1.0, 1.0,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return 0.5 * val


def g_curve(t: float) -> GValue:
    return GValue(float(t), g_closed(t), g_prime(t), g_quadrature(t))


def szego_remark_check(basis: SpectralBasis, u, tol: float = 1e-10) -> float:
    """``(4/3) int |grad u|^2 - (ln D1 - 4 int u)`` with ``f = e^{2u}``.

    This equals ``2 I_{2/3}(u)``; the identity is checked to ``tol`` and an
    ``ArithmeticError`` raised if it fails.
    """
    u = np.asarray(u, dtype=float)
    md = mass_moments(basis.grid, u)
    D1 = md.M**2 - float(md.m @ md.m)
    mean = float(basis.grid.weights @ u)
    margin = (4.0 / 3.0) * dirichlet_energy(basis, analyze(basis, u)) - (math.log(D1) - 4.0 * mean)
    twice_I = 2.0 * eval_I(2.0 / 3.0, basis, u).value
    if abs(margin - twice_I) > tol * max(1.0, abs(twice_I)):
        raise ArithmeticError(f"margin {margin!r} differs from 2 I_2/3 = {twice_I!r}")
    return margin
