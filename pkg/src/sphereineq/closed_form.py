"""Explicit critical family at alpha = 2/3, the auxiliary test family, and
the closed-form integrals and energy bounds built from them.

Both families are axisymmetric. With ``s = log(mu^2)`` and
``mu^2 = (1 + a)/(1 - a)`` the formulas below are rewritten in terms of
``expm1`` and Bernoulli series so that they stay accurate as ``mu -> 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import bernoulli

from .grid import UnitSphereGrid, stereographic

__all__ = [
    "ClosedFormParams",
    "AuxIntegrals",
    "BoundCurves",
    "params",
    "u_explicit",
    "u_explicit_stereographic",
    "grad_energy_explicit",
    "grad_energy_forms",
    "mean_explicit",
    "aux_field",
    "aux_integrals",
    "aux_center_compact",
    "find_mu",
    "mu_sq_asymptotic",
    "bound_curves",
    "upper_branch",
]

TWO_THIRDS = 2.0 / 3.0
_SERIES_S = 0.1
# B_2, B_4, ..., B_20
_B_EVEN = bernoulli(20)[2::2]
_FACT_EVEN = np.array([math.factorial(2 * n) for n in range(1, _B_EVEN.size + 1)], dtype=float)


@dataclass(frozen=True)
class ClosedFormParams:
    a: float
    mu_sq: float
    axis: np.ndarray


@dataclass(frozen=True)
class AuxIntegrals:
    dirichlet: float
    mean: float
    mass: float
    moment3: float
    center: float


@dataclass(frozen=True)
class BoundCurves:
    lower: float
    upper: float
    upper_asym: float


def params(a: float, axis=(0.0, 0.0, 1.0)) -> ClosedFormParams:
    if not 0.0 <= a < 1.0:
        raise ValueError(f"need 0 <= a < 1, got {a}")
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return ClosedFormParams(a, (1.0 + a) / (1.0 - a), axis)


def _s_of_a(a: float) -> float:
    return math.log1p(a) - math.log1p(-a)


def _even_series(s: float) -> float:
    """``sum_{n>=1} B_{2n} s^{2n} / (2n)!``."""
    powers = s ** (2 * np.arange(1, _B_EVEN.size + 1))
    return float(np.sum(_B_EVEN * powers / _FACT_EVEN))


def _s_coth_half_minus_two(s: float) -> float:
    """``s*coth(s/2) - 2``; equals ``(mu^2+1)s/(mu^2-1) - 2``."""
    if abs(s) < _SERIES_S:
        return 2.0 * _even_series(s)
    return s / math.tanh(0.5 * s) - 2.0


def _one_minus_s_over_one_minus_exp(s: float) -> float:
    """``1 - s/(1 - e^{-s})``; equals ``1 - mu^2 s/(mu^2 - 1)``."""
    if abs(s) < _SERIES_S:
        return -(0.5 * s + _even_series(s))
    return 1.0 - s / (-math.expm1(-s))


def u_explicit(grid: UnitSphereGrid, a: float, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """``-(3/2) log(1 - a axis.x) + log(1 - a^2)``: mass one, center ``a*axis``."""
    p = params(a, axis)
    return -1.5 * np.log1p(-a * (grid.nodes @ p.axis)) + math.log1p(-a * a)


def u_explicit_stereographic(grid: UnitSphereGrid, a: float) -> np.ndarray:
    """Same field built in the plane through the north-pole projection:
    ``(3/2) log((1+|y|^2)/(mu^2+|y|^2)) + 2 log mu + (1/2) log(2/(1+mu^2))``.
    """
    mu2 = params(a).mu_sq
    y = stereographic(grid.nodes)
    r2 = np.sum(y * y, axis=1)
    return 1.5 * np.log((1.0 + r2) / (mu2 + r2)) + math.log(mu2) + 0.5 * math.log(2.0 / (1.0 + mu2))


def grad_energy_forms(a: float) -> tuple[float, float]:
    """Dirichlet energy of ``u_explicit(a)`` in its two closed forms.

    Returns ``(mu_form, a_form)`` with
    ``mu_form = (9/4)[(mu^2+1) log mu^2 - 2(mu^2-1)]/(mu^2-1)`` and
    ``a_form = (9/(4a)) (log((1+a)/(1-a)) - 2a)``.
    """
    params(a)
    if a == 0.0:
        return 0.0, 0.0
    mu2 = (1.0 + a) / (1.0 - a)
    s = _s_of_a(a)
    if abs(mu2 - 1.0) < 1e-6:
        mu_form = 2.25 * _s_coth_half_minus_two(s)
    else:
        mu_form = 2.25 * ((mu2 + 1.0) * math.log(mu2) - 2.0 * (mu2 - 1.0)) / (mu2 - 1.0)
    if a < 1e-3:
        # artanh(a) - a = sum_{k>=1} a^{2k+1}/(2k+1)
        k = np.arange(1, 8)
        a_form = 4.5 * float(np.sum(a ** (2 * k) / (2 * k + 1)))
    else:
        a_form = 9.0 / (4.0 * a) * (s - 2.0 * a)
    return mu_form, a_form


def grad_energy_explicit(a: float) -> float:
    return grad_energy_forms(a)[1]


def mean_explicit(a: float, sign_variant: bool = False) -> float:
    """``int u_explicit(a) d(omega)``.

    The default is
    ``-(3/2)(mu^2 log mu^2 - (mu^2 - 1))/(mu^2 - 1) + log mu^2 + (1/2) log(2/(1+mu^2))``.
    ``sign_variant=True`` returns the variant with ``+ (mu^2 - 1)`` in the first
    numerator, which is off by exactly 3 and fails the ``a -> 0`` limit; kept
    for the regression test that documents the sign.
    """
    params(a)
    if a == 0.0 and not sign_variant:
        return 0.0
    s = _s_of_a(a)
    value = 1.5 * _one_minus_s_over_one_minus_exp(s) + s + 0.5 * math.log1p(-a)
    return value - 3.0 if sign_variant else value


def _check_alpha(alpha: float) -> None:
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (1/2, 1), got {alpha}")


def aux_field(grid: UnitSphereGrid, alpha: float, mu: float) -> np.ndarray:
    """``(1/alpha) log((1 + |y|^2)/(mu^2 + |y|^2))`` with ``y`` the projection of x."""
    _check_alpha(alpha)
    if mu < 1.0:
        raise ValueError(f"mu must be >= 1, got {mu}")
    y = stereographic(grid.nodes)
    r2 = np.sum(y * y, axis=1)
    return np.log((1.0 + r2) / (mu * mu + r2)) / alpha


def _moment3_numerator(s: float, p: float) -> float:
    """``p(mu^{4-2p} - 1) + (p-2)(mu^2 - mu^{2-2p})`` with ``mu^2 = e^s``.

    Vanishes to third order in s; summed as a Taylor series for small s.
    """
    if s < 1.0:
        total = 0.0
        term = 1.0
        for k in range(1, 60):
            term *= s / k
            total += (p * (2.0 - p) ** k + (p - 2.0) * (1.0 - (1.0 - p) ** k)) * term
        return total
    return p * math.expm1((2.0 - p) * s) + (p - 2.0) * (math.expm1(s) - math.expm1((1.0 - p) * s))


def aux_integrals(alpha: float, mu: float) -> AuxIntegrals:
    """Closed forms for ``int |grad u~|^2``, ``int u~``, ``int e^{2u~}``,
    ``int e^{2u~} x3`` and the center ``a_{alpha,mu}`` of the auxiliary field.
    """
    _check_alpha(alpha)
    if not mu > 1.0:
        raise ValueError(f"mu must be > 1, got {mu}")
    s = 2.0 * math.log(mu)
    p = 2.0 / alpha
    dirichlet = _s_coth_half_minus_two(s) / alpha**2
    mean = _one_minus_s_over_one_minus_exp(s) / alpha
    mass = -math.expm1((1.0 - p) * s) / ((p - 1.0) * math.expm1(s))
    moment3 = _moment3_numerator(s, p) / ((p - 1.0) * (p - 2.0) * math.expm1(s) ** 2)
    return AuxIntegrals(dirichlet, mean, mass, moment3, moment3 / mass)


def aux_center_compact(alpha: float, mu: float) -> float:
    """Center of mass of the auxiliary field in its compact one-line form:
    ``1 - [2(p-1)(1-mu^2) + 2(mu^{2p-2} - 1)] / [(p-2)(mu^2-1)(mu^{2p-2}-1)]``
    with ``p = 2/alpha``. Loses digits as ``mu -> 1``.
    """
    _check_alpha(alpha)
    p = 2.0 / alpha
    mu2 = mu * mu
    q = mu ** (2.0 * p - 2.0)
    return 1.0 - (2.0 * (p - 1.0) * (1.0 - mu2) + 2.0 * (q - 1.0)) / ((p - 2.0) * (mu2 - 1.0) * (q - 1.0))


def mu_sq_asymptotic(alpha: float, a: float) -> float:
    """Leading behaviour ``alpha / ((1 - alpha)(1 - a))`` of ``mu(a)^2`` as a -> 1."""
    return alpha / ((1.0 - alpha) * (1.0 - a))


def find_mu(alpha: float, a: float, tol: float = 1e-12) -> float:
    """Smallest ``mu > 1`` whose auxiliary field has center ``a``.

    Works in ``s = log(mu^2)``: expands the upper end until the center
    exceeds ``a``, scans for the first sign change, then refines with Brent.
    """
    _check_alpha(alpha)
    if not 0.0 < a < 1.0:
        raise ValueError(f"need 0 < a < 1, got {a}")

    def g(s):
        return aux_integrals(alpha, math.exp(0.5 * s)).center - a

    s_lo, s_hi = 1e-8, 1.0
    while g(s_hi) <= 0.0:
        s_hi *= 2.0
        if s_hi > 700.0:
            raise RuntimeError(
                f"no bracket for a={a}, alpha={alpha} on s in [{s_lo}, {s_hi}]"
            )
    grid = np.geomspace(s_lo, s_hi, 64)
    vals = np.array([g(s) for s in grid])
    idx = int(np.argmax(vals > 0.0))
    lo, hi = (grid[idx - 1], grid[idx]) if idx > 0 else (s_lo, grid[0])
    s = brentq(g, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    mu = math.exp(0.5 * s)
    err = abs(aux_integrals(alpha, mu).center - a)
    if err > tol:
        raise RuntimeError(f"root refinement stalled: |center - a| = {err:.3g}")
    return mu


def upper_branch(alpha: float, a: float) -> float:
    """``(3 alpha/(2a))(1/alpha - 3/2)(log(1-a^2) - 2(log(1+a) - a))``."""
    if a == 0.0:
        return 0.0
    return (3.0 * alpha / (2.0 * a)) * (1.0 / alpha - 1.5) * (
        math.log1p(-a * a) - 2.0 * (math.log1p(a) - a)
    )


def bound_curves(alpha: float, a: float) -> BoundCurves:
    """Pointwise lower/upper bounds on the constrained minimum ``m(alpha, a)``.

    ``lower``: ``(2/alpha - 3) log(1-a^2)`` below 2/3 and
    ``alpha (1/alpha - 3/2) log(1-a^2)`` above; 0 at 2/3.
    ``upper``: ``(alpha - 2/3) * grad_energy_explicit(a)`` (the value on the
    explicit family), tightened by ``(2/alpha - 3) log(1-a^2)`` above 2/3.
    ``upper_asym``: ``(1/alpha - 3/2) log(1-a^2)``, the a -> 1 profile.
    """
    _check_alpha(alpha)
    params(a)
    log1ma2 = math.log1p(-a * a)
    if abs(alpha - TWO_THIRDS) < 1e-14:
        return BoundCurves(0.0, 0.0, 0.0)
    family = (alpha - TWO_THIRDS) * grad_energy_explicit(a)
    if alpha < TWO_THIRDS:
        lower = (2.0 / alpha - 3.0) * log1ma2
        upper = family
    else:
        lower = (1.0 - 1.5 * alpha) * log1ma2
        upper = min(family, (2.0 / alpha - 3.0) * log1ma2)
    return BoundCurves(lower, upper, (1.0 / alpha - 1.5) * log1ma2)
