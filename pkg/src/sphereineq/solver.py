"""Constrained minimization of I_alpha at fixed mass and center of mass.

Unknowns are the spectral coefficients of u. The outer augmented
Lagrangian loop handles the constraints ``int e^{2u} = 1`` and
``int e^{2u} x = (0, 0, a)`` far from a solution; once the Euler-Lagrange
residual is small the iterate is handed to a Newton solve of

    alpha*Lap u + e^{2u}(rho - beta.x) = 1,  constraints as above,

in the unknowns (coefficients, rho, beta). With a zonal basis only
``beta_3`` and the ``x3`` moment are active.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .closed_form import find_mu, aux_field, u_explicit, bound_curves
from .functionals import (
    MAX_EXPONENT,
    FieldOverflowError,
    el_residual_multiplier,
    eval_I,
    normalize,
)
from .harmonics import SpectralBasis, analyze, synthesize

__all__ = [
    "SolverOptions",
    "ELSolution",
    "SweepRow",
    "ContinuationResult",
    "minimize_constrained",
    "newton_el",
    "continuation",
    "axisym_deviation",
    "fit_multipliers",
    "m_sweep",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tol_el: float = 1e-8
    tol_c: float = 1e-10
    max_newton: int = 50
    max_halvings: int = 20
    max_outer: int = 8
    penalty0: float = 10.0
    penalty_growth: float = 10.0
    switch_residual: float = 1e-2
    inner_maxiter: int = 3000


@dataclass
class ELSolution:
    """A converged (or best-effort) constrained critical point.

    ``el_residual_sup`` is the sup of the band-limited residual of the
    multiplier equation; ``truncation_residual_sup`` is the raw nodal one.
    ``constraint_residual`` is ``(M - 1, m1, m2, m3 - a)``.
    """

    u: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    alpha: float
    a_target: float
    rho: float
    beta: np.ndarray
    I_value: float
    dirichlet: float
    el_residual_sup: float
    truncation_residual_sup: float
    constraint_residual: np.ndarray
    iterations: int
    converged: bool
    axisym_deviation: float = 0.0
    message: str = ""
    degrees: np.ndarray | None = field(default=None, repr=False)
    orders: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    a: float
    m_value: float
    lower_bound: float
    upper_bound: float
    dirichlet: float
    beta3: float
    converged: bool


@dataclass
class ContinuationResult:
    """Solutions along a chain of centers plus the energy-derivative check.

    ``integrand[k] = -(beta_k - a_k/(1 - a_k^2))`` is ``dI/da`` along the
    branch: differentiating the constraints gives ``int e^{2u} du/da = 0``
    and ``int e^{2u} x3 du/da = 1/2``. ``identity_error`` is
    ``max_k |I_k - I_0 - trapz(integrand)|``; ``identity_error_doubled``
    is the same with the integrand doubled, for comparison.
    """

    solutions: list
    integrand: np.ndarray
    identity_error: float
    identity_error_doubled: float
    complete: bool
    message: str = ""


class _System:
    """Residual and Jacobian of the multiplier equation plus constraints."""

    def __init__(self, basis: SpectralBasis, alpha: float, a_target: float):
        self.basis = basis
        self.alpha = alpha
        self.a_vec = np.array([0.0, 0.0, a_target])
        self.active = [2] if basis.zonal else [0, 1, 2]
        self.n = basis.ncoef
        self.k = len(self.active)
        self.X = basis.grid.nodes
        self.w = basis.grid.weights
        self.e0 = (basis.degrees == 0).astype(float)

    def split(self, z):
        c = z[: self.n]
        rho = z[self.n]
        beta = np.zeros(3)
        beta[self.active] = z[self.n + 1:]
        return c, rho, beta

    def pack(self, c, rho, beta):
        return np.concatenate([c, [rho], np.asarray(beta)[self.active]])

    def _exp(self, c):
        u = synthesize(self.basis, c)
        if 2.0 * u.max() > MAX_EXPONENT:
            raise FieldOverflowError("iterate overflowed")
        return u, np.exp(2.0 * u)

    def residual(self, z):
        c, rho, beta = self.split(z)
        _, E = self._exp(c)
        lin = rho - self.X @ beta
        F = -self.alpha * self.basis.eigenvalues * c + self.basis.weighted.T @ (E * lin) - self.e0
        wE = self.w * E
        G = np.concatenate([[wE.sum() - 1.0], (wE @ self.X - self.a_vec)[self.active]])
        return F, G

    def jacobian(self, z):
        c, rho, beta = self.split(z)
        _, E = self._exp(c)
        Y = self.basis.values
        Yw = self.basis.weighted
        lin = rho - self.X @ beta
        n, k = self.n, self.k
        J = np.zeros((n + 1 + k, n + 1 + k))
        J[:n, :n] = 2.0 * (Yw * (E * lin)[:, None]).T @ Y
        J[:n, :n][np.diag_indices(n)] -= self.alpha * self.basis.eigenvalues
        EX = E[:, None] * self.X[:, self.active]
        J[:n, n] = Yw.T @ E
        J[:n, n + 1:] = -(Yw.T @ EX)
        J[n, :n] = 2.0 * (Yw.T @ E)
        J[n + 1:, :n] = 2.0 * (Yw.T @ EX).T
        return J

    def fit_multipliers(self, c):
        """Least-squares ``(rho, beta)`` for a given field."""
        _, E = self._exp(c)
        Yw = self.basis.weighted
        A = np.column_stack([Yw.T @ E, -(Yw.T @ (E[:, None] * self.X))])
        r0 = -self.alpha * self.basis.eigenvalues * c - self.e0
        theta, *_ = np.linalg.lstsq(A, -r0, rcond=None)
        beta = np.zeros(3)
        beta[self.active] = theta[1:][self.active]
        return float(theta[0]), beta


def fit_multipliers(alpha: float, basis: SpectralBasis, u, a_target: float = 0.0):
    """Best-fit ``(rho, beta)`` in ``alpha*Lap u + e^{2u}(rho - beta.x) = 1``."""
    return _System(basis, alpha, a_target).fit_multipliers(analyze(basis, u))


def _check_inputs(alpha: float, a_target: float) -> None:
    if not alpha > 0.5:
        raise ValueError(f"alpha must exceed 1/2, got {alpha}")
    if not 0.0 <= a_target < 1.0:
        raise ValueError(f"need 0 <= a < 1, got {a_target}")


def _finish(system: _System, z, iterations: int, converged: bool, message: str) -> ELSolution:
    basis = system.basis
    c, rho, beta = system.split(z)
    u = synthesize(basis, c)
    F, G = system.residual(z)
    md_res = np.zeros(4)
    wE = system.w * np.exp(2.0 * u)
    md_res[0] = wE.sum() - 1.0
    md_res[1:] = wE @ system.X - system.a_vec
    raw = el_residual_multiplier(system.alpha, basis, u, rho, beta)
    Ival = eval_I(system.alpha, basis, u)
    sol = ELSolution(
        u=u,
        coeffs=c.copy(),
        alpha=system.alpha,
        a_target=float(system.a_vec[2]),
        rho=float(rho),
        beta=beta,
        I_value=Ival.value,
        dirichlet=Ival.dirichlet,
        el_residual_sup=float(np.max(np.abs(synthesize(basis, F)))),
        truncation_residual_sup=raw.pointwise_sup,
        constraint_residual=md_res,
        iterations=iterations,
        converged=converged,
        message=message,
        degrees=basis.degrees,
        orders=basis.orders,
    )
    sol.axisym_deviation = axisym_deviation(sol)
    return sol


def _newton(system: _System, z, opts: SolverOptions):
    """Damped Newton on the bordered system; returns (z, iterations, ok, msg)."""
    n = system.n
    basis = system.basis

    def measure(F, G):
        return float(np.max(np.abs(synthesize(basis, F)))), float(np.max(np.abs(G)))

    F, G = system.residual(z)
    merit = float(F @ F + G @ G)
    for it in range(opts.max_newton + 1):
        el_sup, c_sup = measure(F, G)
        log.debug("newton %d: el=%.3e c=%.3e", it, el_sup, c_sup)
        if el_sup < opts.tol_el and c_sup < opts.tol_c:
            return z, it, True, "converged"
        if it == opts.max_newton:
            break
        J = system.jacobian(z)
        rhs = -np.concatenate([F, G])
        try:
            step = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, rhs, rcond=None)[0]
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = z + t * step
            try:
                Ft, Gt = system.residual(trial)
                m_t = float(Ft @ Ft + Gt @ Gt)
            except FieldOverflowError:
                m_t = math.inf
            if m_t < merit or (t == 1.0 and m_t <= merit * (1 + 1e-12) and merit < 1e-20):
                break
            t *= 0.5
        else:
            return z, it, False, f"line search failed at iteration {it} (merit {merit:.3e})"
        z, F, G, merit = trial, Ft, Gt, m_t
        if n and not np.all(np.isfinite(z)):
            return z, it, False, "non-finite iterate"
    el_sup, c_sup = measure(F, G)
    return z, opts.max_newton, False, f"no convergence: el={el_sup:.3e} c={c_sup:.3e}"


def newton_el(alpha: float, a_target: float, basis: SpectralBasis, init=None,
              rho: float | None = None, beta=None, opts: SolverOptions | None = None) -> ELSolution:
    """Newton iteration for the multiplier equation with mass and center fixed.

    ``init`` is a nodal field (zero when omitted); missing multipliers are
    fitted by least squares to ``init``.
    """
    _check_inputs(alpha, a_target)
    opts = opts or SolverOptions()
    system = _System(basis, alpha, a_target)
    c = np.zeros(basis.ncoef) if init is None else analyze(basis, init)
    if rho is None or beta is None:
        rho_fit, beta_fit = system.fit_multipliers(c)
        rho = rho_fit if rho is None else rho
        beta = beta_fit if beta is None else beta
    z = system.pack(c, rho, np.asarray(beta, dtype=float))
    z, its, ok, msg = _newton(system, z, opts)
    return _finish(system, z, its, ok, msg)


def _default_init(alpha: float, a_target: float, basis: SpectralBasis):
    """Feasible starting field: the better of the explicit and auxiliary families."""
    grid = basis.grid
    if a_target == 0.0:
        return np.zeros(grid.size)
    candidates = [u_explicit(grid, a_target)]
    if 0.5 < alpha < 1.0:
        mu = find_mu(alpha, a_target)
        candidates.append(normalize(grid, aux_field(grid, alpha, mu)))
    values = [eval_I(alpha, basis, synthesize(basis, analyze(basis, v))).value for v in candidates]
    return candidates[int(np.argmin(values))]


def _augmented_lagrangian(system: _System, c0, opts: SolverOptions):
    basis = system.basis
    alpha = system.alpha
    lam_eig = basis.eigenvalues
    scale = np.sqrt(1.0 + alpha * lam_eig)
    X = system.X
    w = system.w
    rows = [0] + [1 + i for i in system.active]
    lagr = np.zeros(len(rows))
    penalty = opts.penalty0

    def parts(c):
        u = synthesize(basis, c)
        if 2.0 * u.max() > MAX_EXPONENT:
            return None
        E = np.exp(2.0 * u)
        wE = w * E
        M = wE.sum()
        m = wE @ X
        B = 2.0 * (basis.weighted.T @ (E[:, None] * np.column_stack([np.ones_like(E), X])))
        return M, m, B

    def constraints(M, m):
        g = np.concatenate([[M - 1.0], m - system.a_vec])
        return g[rows]

    def objective(z):
        c = z / scale
        p = parts(c)
        if p is None:
            return math.inf, np.zeros_like(z)
        M, m, B = p
        Q = M * M - m @ m
        if not Q > 0:
            return math.inf, np.zeros_like(z)
        val = alpha * lam_eig @ (c * c) + 2.0 * c[basis.degrees == 0].sum() - 0.5 * math.log(Q)
        grad = 2.0 * alpha * lam_eig * c + 2.0 * system.e0 - (M * B[:, 0] - B[:, 1:] @ m) / Q
        g = constraints(M, m)
        val += lagr @ g + 0.5 * penalty * (g @ g)
        grad = grad + B[:, rows] @ (lagr + penalty * g)
        return val, grad / scale

    c = c0.copy()
    outer = 0
    for outer in range(1, opts.max_outer + 1):
        res = minimize(objective, c * scale, jac=True, method="L-BFGS-B",
                       options={"maxiter": opts.inner_maxiter, "ftol": 1e-15, "gtol": 1e-10})
        c = res.x / scale
        p = parts(c)
        if p is None:
            break
        g = constraints(p[0], p[1])
        lagr = lagr + penalty * g
        rho, beta = system.fit_multipliers(c)
        F, _ = system.residual(system.pack(c, rho, beta))
        el_sup = float(np.max(np.abs(synthesize(basis, F))))
        log.debug("AL outer %d: el=%.3e |g|=%.3e", outer, el_sup, np.max(np.abs(g)))
        if el_sup < opts.switch_residual and np.max(np.abs(g)) < opts.switch_residual:
            break
        penalty *= opts.penalty_growth
    return c, outer


def minimize_constrained(alpha: float, a_target: float, basis: SpectralBasis, init=None,
                         opts: SolverOptions | None = None) -> ELSolution:
    """Minimize ``I_alpha`` over fields of mass one centered at ``(0, 0, a_target)``.

    Without ``init`` the solve starts from whichever of the explicit family
    and the auxiliary family (shifted to mass one) has the lower energy; both
    are feasible. A non-converged result is returned with ``converged=False``.
    """
    _check_inputs(alpha, a_target)
    opts = opts or SolverOptions()
    system = _System(basis, alpha, a_target)
    if init is None:
        init = _default_init(alpha, a_target, basis)
    c = analyze(basis, normalize(basis.grid, init))
    c, outer = _augmented_lagrangian(system, c, opts)
    rho, beta = system.fit_multipliers(c)
    z, its, ok, msg = _newton(system, system.pack(c, rho, beta), opts)
    sol = _finish(system, z, outer + its, ok, f"{msg} after {outer} AL rounds")
    if not ok:
        log.warning("alpha=%.4g a=%.4g: %s", alpha, a_target, sol.message)
    return sol


def axisym_deviation(sol: ELSolution) -> float:
    """Dirichlet-energy fraction carried by the ``m != 0`` harmonics about x3."""
    c = sol.coeffs
    if sol.orders is None or sol.degrees is None:
        raise ValueError("solution carries no basis layout")
    energy = sol.degrees * (sol.degrees + 1.0) * c * c
    total = float(energy.sum())
    # energy at round-off level means u is constant; the ratio would be noise
    if total < 1e-20:
        return 0.0
    return float(energy[sol.orders != 0].sum() / total)


def continuation(alpha: float, a_list, basis: SpectralBasis,
                 opts: SolverOptions | None = None) -> ContinuationResult:
    """Warm-started Newton solves along an increasing list of centers.

    Each step starts from a secant extrapolation of the previous two
    solutions. The chain stops at the first failed step.
    """
    a_list = [float(a) for a in a_list]
    if any(b <= a for a, b in zip(a_list, a_list[1:])):
        raise ValueError("a_list must be strictly increasing")
    opts = opts or SolverOptions()
    sols: list[ELSolution] = []
    message = ""
    for k, a in enumerate(a_list):
        if k == 0:
            sol = newton_el(alpha, a, basis, init=None if a == 0.0 else _default_init(alpha, a, basis), opts=opts)
        else:
            prev = sols[-1]
            c, rho, beta = prev.coeffs, prev.rho, prev.beta
            if k >= 2:
                pp = sols[-2]
                t = (a - prev.a_target) / (prev.a_target - pp.a_target)
                c = c + t * (c - pp.coeffs)
                rho = rho + t * (rho - pp.rho)
                beta = beta + t * (beta - pp.beta)
            sol = newton_el(alpha, a, basis, init=synthesize(basis, c), rho=rho, beta=beta, opts=opts)
        if not sol.converged:
            message = f"stopped at a={a}: {sol.message}"
            log.warning(message)
            break
        sols.append(sol)

    a_arr = np.array([s.a_target for s in sols])
    beta3 = np.array([s.beta[2] for s in sols])
    integrand = -(beta3 - a_arr / (1.0 - a_arr**2))
    err = err_doubled = 0.0
    if len(sols) > 1:
        I = np.array([s.I_value for s in sols])
        dI = I - I[0]
        steps = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(a_arr)
        trap = np.concatenate([[0.0], np.cumsum(steps)])
        err = float(np.max(np.abs(dI - trap)))
        err_doubled = float(np.max(np.abs(dI - 2.0 * trap)))
    return ContinuationResult(sols, integrand, err, err_doubled, len(sols) == len(a_list), message)


def m_sweep(alpha_list, a_list, basis: SpectralBasis, opts: SolverOptions | None = None) -> list[SweepRow]:
    """Table of constrained minima joined with their bound curves."""
    rows = []
    for alpha in alpha_list:
        for a in a_list:
            try:
                sol = minimize_constrained(alpha, a, basis, opts=opts)
                value, dirichlet, beta3, ok = sol.I_value, sol.dirichlet, float(sol.beta[2]), sol.converged
            except (FieldOverflowError, RuntimeError, np.linalg.LinAlgError) as exc:
                log.warning("sweep row alpha=%g a=%g failed: %s", alpha, a, exc)
                value = dirichlet = beta3 = math.nan
                ok = False
            if 0.5 < alpha < 1.0:
                bc = bound_curves(alpha, a)
                lower, upper = bc.lower, bc.upper
            else:
                lower = upper = math.nan
            rows.append(SweepRow(alpha, a, value, lower, upper, dirichlet, beta3, ok))
    return rows
