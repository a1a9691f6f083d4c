"""
Confluent Heun series and the exact interior solution.

Convention
----------
H_C(alpha, beta, gamma, delta, eta, z) is the solution, regular at z = 0 with
H_C(0) = 1, of

    y'' + (alpha + (beta+1)/z + (gamma+1)/(z-1)) y'
        + (mu/z + nu/(z-1)) y = 0,

    mu = (alpha - beta - gamma + alpha*beta - beta*gamma)/2 - eta,
    nu = (alpha + beta + gamma + alpha*gamma + beta*gamma)/2 + delta + eta,

(the parameterisation used by Maple's HeunC). Writing y = sum c_n z^n and
multiplying the equation by z(z-1) gives the three-term recurrence

    (n+1)(n+beta+1) c_{n+1} = [n(n-1) + (beta+gamma+2-alpha) n - mu] c_n
                              + [alpha (n-1) + mu + nu] c_{n-1},

with c_0 = 1, c_{-1} = 0. This is the convention under which the interior
solution below satisfies the radial equation; `ode_residual` checks it.

Interior solution
-----------------
For |r| < b0 and z = -r^2/b0^2,

    psi(r) = c1 sqrt(r^2+b0^2) H_C(0, -1/2, 0, delta, eta, z)
           + c2 r sqrt(r^2+b0^2) H_C(0, +1/2, 0, delta, eta, z),

    delta = -k^2 b0^2 / 4,   eta = k^2 b0^2/4 - L(L+1)/4 + 1/4.

The first branch is even in r, the second odd. Only the power series about
z = 0 is implemented, so evaluation is restricted to |z| <= 0.95^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericalError
from .potential import ScatterContext, WormholeGeometry, v_eff

__all__ = [
    "HeunParams",
    "HeunSeries",
    "HeunValue",
    "ExactInteriorSolution",
    "ResidualReport",
    "ResidualRow",
    "heun_c",
    "interior_params",
    "psi_interior",
    "psi_interior_derivatives",
    "ode_residual",
    "fd_residual",
    "integrate_interior",
    "residual_report",
    "R_MAX_FRACTION",
]

R_MAX_FRACTION = 0.95
DEFAULT_MARGIN = 0.05
DEFAULT_TOL = 1e-16
MAX_TERMS = 20000


@dataclass(frozen=True)
class HeunParams:
    alpha: float
    beta: float
    gamma: float
    delta: float
    eta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "eta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        # (n+1)(n+beta+1) must not vanish
        if self.beta < 0 and float(self.beta).is_integer():
            raise DomainError("beta must not be a negative integer")

    @property
    def mu(self) -> float:
        a, b, g = self.alpha, self.beta, self.gamma
        return (a - b - g + a * b - b * g) / 2 - self.eta

    @property
    def nu(self) -> float:
        a, b, g = self.alpha, self.beta, self.gamma
        return (a + b + g + a * g + b * g) / 2 + self.delta + self.eta


@dataclass(frozen=True)
class HeunValue:
    """H_C and its first two z-derivatives from a truncated series."""

    value: float
    derivative: float
    second_derivative: float
    order: int
    tail_bound: float


def _coefficients(params: HeunParams, n_terms: int) -> np.ndarray:
    a, b, g = params.alpha, params.beta, params.gamma
    mu, nu = params.mu, params.nu
    c = np.zeros(n_terms)
    c[0] = 1.0
    prev = 0.0
    for n in range(n_terms - 1):
        c[n + 1] = (
            (n * (n - 1) + (b + g + 2 - a) * n - mu) * c[n] + (a * (n - 1) + mu + nu) * prev
        ) / ((n + 1) * (n + b + 1))
        prev = c[n]
    return c


def _truncation(coeffs: np.ndarray, z: float, tol: float):
    """Smallest order whose tail is bounded below tol, and that bound.

    The tail is bounded geometrically from the largest term ratio seen in the
    last few terms; the factor 2 absorbs the non-monotone start of a
    three-term recurrence.
    """
    az = abs(z)
    if az == 0.0:
        return 1, 0.0
    terms = np.abs(coeffs) * az ** np.arange(len(coeffs))
    scale = max(1.0, float(np.max(terms[:50])))
    window = 8
    for n in range(window + 2, len(coeffs)):
        recent = terms[n - window:n + 1]
        prev = terms[n - window - 1:n]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(prev > 0, recent / prev, 0.0)
        rho = float(np.max(ratios))
        if rho >= 1.0:
            continue
        tail = 2.0 * (terms[n] + terms[n - 1]) * rho / (1.0 - rho)
        if tail < tol * scale:
            return n + 1, tail
    return None, None


@dataclass(frozen=True)
class HeunSeries:
    """Power-series coefficients of H_C, truncated for a target |z|.

    The coefficient array is read-only, so a series can be shared freely.
    """

    params: HeunParams
    coefficients: np.ndarray
    order: int
    z_max: float
    tail_bound: float

    @classmethod
    def build(cls, params: HeunParams, z_max: float, tol: float = DEFAULT_TOL,
              max_terms: int = MAX_TERMS) -> "HeunSeries":
        if not 0 <= abs(z_max) < 1:
            raise DomainError("series needs |z| < 1")
        n_terms = 64
        while True:
            coeffs = _coefficients(params, n_terms)
            order, tail = _truncation(coeffs, z_max, tol)
            if order is not None:
                break
            if n_terms >= max_terms:
                raise NumericalError(
                    f"confluent Heun series did not converge within {max_terms} terms at |z|={abs(z_max)}"
                )
            n_terms = min(2 * n_terms, max_terms)
        coeffs = coeffs[:order].copy()
        coeffs.setflags(write=False)
        return cls(params=params, coefficients=coeffs, order=order, z_max=abs(z_max), tail_bound=tail)

    def evaluate(self, z: float) -> HeunValue:
        if abs(z) > self.z_max * (1 + 1e-12):
            raise DomainError(f"|z|={abs(z)} beyond the range {self.z_max} this series was built for")
        c = self.coefficients
        n = np.arange(len(c))
        # Horner on the three series
        val = np.polynomial.polynomial.polyval(z, c)
        d1 = np.polynomial.polynomial.polyval(z, (c * n)[1:])
        d2 = np.polynomial.polynomial.polyval(z, (c * n * (n - 1))[2:])
        return HeunValue(float(val), float(d1), float(d2), self.order, self.tail_bound)


def heun_c(params: HeunParams, z: float, tol: float = DEFAULT_TOL,
           margin: float = DEFAULT_MARGIN, max_terms: int = MAX_TERMS) -> HeunValue:
    """Evaluate H_C(params, z) by its power series about z = 0.

    Parameters
    ----------
    params : HeunParams
    z : float
        |z| < 1 - margin.
    tol : float
        Bound on the truncated tail, relative to the largest term (at least 1).
    margin : float
        Distance kept from the singular point z = 1.

    Raises
    ------
    DomainError
        If |z| >= 1 - margin or tol <= 0.
    NumericalError
        If the tail bound is not reached within ``max_terms`` terms.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if not (math.isfinite(z) and abs(z) < 1 - margin):
        raise DomainError(f"|z| must be below {1 - margin}, got {z!r}")
    if z == 0:
        c = _coefficients(params, 3)
        return HeunValue(1.0, float(c[1]), 2.0 * float(c[2]), 1, 0.0)
    return HeunSeries.build(params, z, tol, max_terms).evaluate(z)


# -----------------------------------------------------------------------------
# Interior solution of the radial equation
# -----------------------------------------------------------------------------

def interior_params(ctx: ScatterContext, geom: WormholeGeometry, branch: str,
                    eta_shift: float = 0.0) -> HeunParams:
    """H_C parameters of the even or odd interior branch.

    ``eta_shift`` perturbs eta; used for negative controls only.
    """
    if branch not in ("even", "odd"):
        raise DomainError(f"branch must be 'even' or 'odd', got {branch!r}")
    kb2 = (ctx.k * geom.b0) ** 2
    L = ctx.L
    return HeunParams(
        alpha=0.0,
        beta=-0.5 if branch == "even" else 0.5,
        gamma=0.0,
        delta=-kb2 / 4.0,
        eta=kb2 / 4.0 - L * (L + 1) / 4.0 + 0.25 + eta_shift,
    )


@dataclass(frozen=True)
class ExactInteriorSolution:
    """c1 * (even branch) + c2 * (odd branch) for given (k, L, b0)."""

    geom: WormholeGeometry
    ctx: ScatterContext
    c1: float
    c2: float
    series_even: HeunSeries
    series_odd: HeunSeries
    eta_shift: float = 0.0

    @classmethod
    def build(cls, geom: WormholeGeometry, ctx: ScatterContext, c1: float = 1.0, c2: float = 0.0,
              eta_shift: float = 0.0, tol: float = DEFAULT_TOL) -> "ExactInteriorSolution":
        z_max = R_MAX_FRACTION**2
        return cls(
            geom=geom, ctx=ctx, c1=float(c1), c2=float(c2),
            series_even=HeunSeries.build(interior_params(ctx, geom, "even", eta_shift), z_max, tol),
            series_odd=HeunSeries.build(interior_params(ctx, geom, "odd", eta_shift), z_max, tol),
            eta_shift=eta_shift,
        )

    @property
    def truncation_order(self) -> int:
        return max(self.series_even.order, self.series_odd.order)


def _check_r(r: float, b0: float):
    if not (math.isfinite(r) and abs(r) < R_MAX_FRACTION * b0 * (1 + 1e-12)):
        raise DomainError(f"|r| must be below {R_MAX_FRACTION} b0 = {R_MAX_FRACTION * b0}, got {r!r}")


def psi_interior_derivatives(r: float, sol: ExactInteriorSolution) -> tuple[float, float, float]:
    """psi, psi' and psi'' at r from term-wise differentiated series."""
    b0 = sol.geom.b0
    _check_r(r, b0)
    z = -r * r / b0**2
    dz = -2.0 * r / b0**2
    d2z = -2.0 / b0**2

    s = math.sqrt(r * r + b0 * b0)
    ds = r / s
    d2s = b0 * b0 / s**3

    psi = d1 = d2 = 0.0
    if sol.c1 != 0.0:
        h = sol.series_even.evaluate(z)
        psi += sol.c1 * s * h.value
        d1 += sol.c1 * (ds * h.value + s * h.derivative * dz)
        d2 += sol.c1 * (d2s * h.value + 2 * ds * h.derivative * dz
                        + s * (h.second_derivative * dz * dz + h.derivative * d2z))
    if sol.c2 != 0.0:
        h = sol.series_odd.evaluate(z)
        # prefactor r * sqrt(r^2 + b0^2)
        p, dp, d2p = r * s, s + r * ds, 2 * ds + r * d2s
        psi += sol.c2 * p * h.value
        d1 += sol.c2 * (dp * h.value + p * h.derivative * dz)
        d2 += sol.c2 * (d2p * h.value + 2 * dp * h.derivative * dz
                        + p * (h.second_derivative * dz * dz + h.derivative * d2z))
    return psi, d1, d2


def psi_interior(r: float, sol: ExactInteriorSolution) -> float:
    """Interior wavefunction at r, |r| < 0.95 b0."""
    return psi_interior_derivatives(r, sol)[0]


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    scale: float
    truncation_order: int
    degenerate: bool = False


def ode_residual(sol: ExactInteriorSolution, r_grid: Sequence[float], floor: float = 1e-300) -> ResidualReport:
    """Largest |psi'' + k^2 psi - V psi| on the grid, relative to max |psi|.

    Derivatives come from the differentiated series, so the result reflects
    the series and parameters, not a finite-difference stencil. The zero
    solution (c1 = c2 = 0) returns 0 with ``degenerate=True``.
    """
    if sol.c1 == 0.0 and sol.c2 == 0.0:
        return ResidualReport(0.0, 0.0, sol.truncation_order, degenerate=True)
    k2 = sol.ctx.k**2
    raw = []
    scale = 0.0
    for r in r_grid:
        psi, _, d2 = psi_interior_derivatives(float(r), sol)
        raw.append(abs(d2 + k2 * psi - v_eff(float(r), sol.geom, sol.ctx.L) * psi))
        scale = max(scale, abs(psi))
    denom = max(scale, floor)
    return ResidualReport(max(raw) / denom, scale, sol.truncation_order)


def fd_residual(sol: ExactInteriorSolution, r_grid: Sequence[float], step: float | None = None) -> float:
    """Residual with psi'' from a sixth-order central difference of `psi_interior`.

    Coarser than `ode_residual` (truncation and round-off of the stencil),
    but independent of the series derivatives.
    """
    b0 = sol.geom.b0
    h = step or 1e-2 * b0
    w = (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90)
    k2 = sol.ctx.k**2
    worst = scale = 0.0
    for r in r_grid:
        r = float(r)
        vals = [psi_interior(r + j * h, sol) for j in range(-3, 4)]
        d2 = sum(wi * vi for wi, vi in zip(w, vals)) / (h * h)
        psi = vals[3]
        worst = max(worst, abs(d2 + k2 * psi - v_eff(r, sol.geom, sol.ctx.L) * psi))
        scale = max(scale, abs(psi))
    return worst / scale if scale else 0.0


def integrate_interior(ctx: ScatterContext, geom: WormholeGeometry, branch: str,
                       r_grid: Sequence[float], rtol: float = 1e-13) -> np.ndarray:
    """Direct numerical solution of the radial equation from r = 0.

    Initial data match the series branches: even psi(0)=b0, psi'(0)=0; odd
    psi(0)=0, psi'(0)=b0. Integration runs outward from 0 separately for
    r > 0 and r < 0 with DOP853.
    """
    if branch not in ("even", "odd"):
        raise DomainError(f"branch must be 'even' or 'odd', got {branch!r}")
    b0, k2, L = geom.b0, ctx.k**2, ctx.L
    y0 = [b0, 0.0] if branch == "even" else [0.0, b0]

    def rhs(r, y):
        return [y[1], (v_eff(r, geom, L) - k2) * y[0]]

    r_arr = np.asarray(r_grid, dtype=float)
    out = np.empty_like(r_arr)
    for sign in (1.0, -1.0):
        mask = (r_arr > 0) if sign > 0 else (r_arr < 0)
        if not np.any(mask):
            continue
        targets = r_arr[mask]
        order = np.argsort(sign * targets)
        t_eval = targets[order]
        sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), y0, method="DOP853",
                        t_eval=t_eval, rtol=rtol, atol=rtol * b0 * 1e-3)
        if not sol.success:
            raise NumericalError(f"interior integration failed: {sol.message}")
        vals = np.empty_like(targets)
        vals[order] = sol.y[0]
        out[mask] = vals
    out[r_arr == 0] = y0[0]
    return out


@dataclass(frozen=True)
class ResidualRow:
    k: float
    L: int
    branch: str
    max_residual: float
    truncation_order: int


def residual_report(geom: WormholeGeometry, kb0_values: Sequence[float], L_values: Sequence[int],
                    r_grid: Sequence[float] | None = None, eta_shift: float = 0.0) -> list[ResidualRow]:
    """ode_residual for both branches over a (k b0, L) grid.

    The default r grid is 181 points on [-0.9 b0, 0.9 b0].
    """
    if r_grid is None:
        r_grid = np.linspace(-0.9 * geom.b0, 0.9 * geom.b0, 181)
    rows = []
    for kb0 in kb0_values:
        for L in L_values:
            ctx = ScatterContext(kb0 / geom.b0, L)
            for branch, (c1, c2) in (("even", (1.0, 0.0)), ("odd", (0.0, 1.0))):
                sol = ExactInteriorSolution.build(geom, ctx, c1, c2, eta_shift=eta_shift)
                rep = ode_residual(sol, r_grid)
                order = sol.series_even.order if branch == "even" else sol.series_odd.order
                rows.append(ResidualRow(ctx.k, ctx.L, branch, rep.max_residual, order))
    return rows
