"""
First Born approximation for the wormhole potential.

The amplitude is A(theta) = -V(q) / (4 pi) with q = 2 k sin(theta/2) and V(q)
the one-dimensional transform from :mod:`wormhole_waveguide.potential`, i.e.

    A = -(2L(L+1) + 2 b0 k s + 1) exp(-2 b0 k s) / (8 b0),   s = sin(theta/2).

The factor 1/(4 pi) is m0 / (2 pi hbar^2) times hbar^2 / (2 m0). Pairing a 1D
transform with a 3D momentum transfer is a convention carried over as is;
sigma below is therefore not a conventional 3D Born cross-section.

Total cross-section
-------------------
Quadrature of 2 pi int_0^pi |A|^2 sin(theta) dtheta is the reference value.
The closed form for sigma / (2 pi), written with E = exp(-4 b0 k), is

    - E k / (16 b0)
    - (64 L^2 + 64 L + 56) b0^2 E / (512 b0^4)
    - (32 L^4 + 64 L^3 + 96 L^2 + 64 L + 36) b0 E / (512 b0^4 k)
    + (8 L^4 + 16 L^3 + 24 L^2 + C1 + 9) (1 - E) / (512 b0^4 k^2)

Symbolic integration of |A|^2 gives C1 = 16 L. A variant with the constant
C1 = 16 is kept behind ``as_printed=True`` for comparison only; it agrees at
L = 1 and nowhere else.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import bisect

from .errors import DomainError, NumericalError
from .potential import ScatterContext, WormholeGeometry, check_angular_momentum, v_fourier_closed

__all__ = [
    "BornResult",
    "CrossSection",
    "Figure2Row",
    "born_amplitude",
    "born_amplitude_from_transform",
    "born_result",
    "dcs_zero_energy",
    "sigma_quadrature",
    "sigma_closed",
    "cross_section",
    "eq15_function",
    "eq15_roots",
    "bracket_roots",
    "figure2_data",
    "momentum_transfer",
]


@dataclass(frozen=True)
class BornResult:
    k: float
    L: int
    theta: float
    amplitude: float

    @property
    def dcs(self) -> float:
        return self.amplitude**2


@dataclass(frozen=True)
class CrossSection:
    """Total cross-section by quadrature and by closed form.

    ``discrepancy`` is |sigma_closed - sigma_quad| / sigma_quad.
    """

    k: float
    L: int
    x: float
    sigma_quad: float
    sigma_quad_err: float
    sigma_closed: float
    discrepancy: float
    as_printed: bool = False


def _check_theta(theta):
    if not (0.0 <= theta <= math.pi):
        raise DomainError(f"theta must lie in [0, pi], got {theta!r}")


def momentum_transfer(theta: float, k: float) -> float:
    """q = 2 k sin(theta/2), the non-negative root of q^2 = 4 k^2 sin^2(theta/2)."""
    _check_theta(theta)
    return 2.0 * k * abs(math.sin(theta / 2.0))


def born_amplitude(theta: float, ctx: ScatterContext, geom: WormholeGeometry) -> float:
    """Born scattering amplitude A(theta); real and never positive."""
    _check_theta(theta)
    b0 = geom.b0
    bq = 2.0 * b0 * ctx.k * abs(math.sin(theta / 2.0))
    L = ctx.L
    return -(2 * L * (L + 1) + bq + 1) * math.exp(-bq) / (8.0 * b0)


def born_result(theta: float, ctx: ScatterContext, geom: WormholeGeometry) -> BornResult:
    return BornResult(k=ctx.k, L=ctx.L, theta=theta, amplitude=born_amplitude(theta, ctx, geom))


def born_amplitude_from_transform(theta: float, ctx: ScatterContext, geom: WormholeGeometry) -> float:
    """-V(q)/(4 pi); same value as `born_amplitude` by a different route."""
    q = momentum_transfer(theta, ctx.k)
    return -v_fourier_closed(q, geom, ctx.L) / (4.0 * math.pi)


def dcs_zero_energy(L: int, geom: WormholeGeometry) -> float:
    """Isotropic k = 0 differential cross-section (2L^2 + 2L + 1)^2 / (64 b0^2)."""
    L = check_angular_momentum(L)
    return (2 * L * L + 2 * L + 1) ** 2 / (64.0 * geom.b0**2)


def sigma_quadrature(ctx: ScatterContext, geom: WormholeGeometry, tol: float = 1e-10) -> tuple[float, float]:
    """Total cross-section 2 pi int_0^pi |A|^2 sin(theta) dtheta.

    Returns
    -------
    (sigma, error) : tuple of float

    Raises
    ------
    NumericalError
        If the error estimate exceeds tol * sigma.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    b0, k, L = geom.b0, ctx.k, ctx.L
    c = 2 * L * (L + 1) + 1

    def integrand(theta):
        bq = 2.0 * b0 * k * math.sin(theta / 2.0)
        amp = (c + bq) * math.exp(-bq) / (8.0 * b0)
        return amp * amp * math.sin(theta)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(integrand, 0.0, math.pi, epsabs=0.0, epsrel=max(min(tol, 1e-12) / 10, 1e-13), limit=500)
    sigma, sigma_err = 2.0 * math.pi * val, 2.0 * math.pi * err
    if not sigma_err <= tol * sigma:
        raise NumericalError(
            f"cross-section quadrature error {sigma_err:.3g} above tolerance at k={k}",
            estimate=sigma, error=sigma_err,
        )
    return sigma, sigma_err


def _sigma_zero_limit(L: int, b0: float) -> float:
    # sigma/(2 pi) at k = 0: 4 pi |A(k=0)|^2 / (2 pi)
    return 2.0 * dcs_zero_energy(L, WormholeGeometry(b0))


def sigma_closed(ctx: ScatterContext, geom: WormholeGeometry, as_printed: bool = False) -> float:
    """Closed-form total cross-section sigma (not divided by 2 pi).

    At k = 0 the expression is singular term by term; the analytic limit
    sigma = 2 pi (2L^2+2L+1)^2 / (32 b0^2) is returned instead.
    """
    b0, k, L = geom.b0, ctx.k, ctx.L
    if k == 0:
        return 2.0 * math.pi * _sigma_zero_limit(L, b0)
    E = math.exp(-4.0 * b0 * k)
    linear = 16 if as_printed else 16 * L
    t1 = -E * k / (16.0 * b0)
    t2 = (-64 * L**2 * b0**2 - 64 * L * b0**2 - 56 * b0**2) * E / (512.0 * b0**4)
    t3 = (-32 * L**4 * b0 - 64 * L**3 * b0 - 96 * L**2 * b0 - 64 * L * b0 - 36 * b0) * E / (512.0 * b0**4 * k)
    # (e^{4 b0 k} - 1) e^{-4 b0 k} = -expm1(-4 b0 k)
    t4 = (8 * L**4 + 16 * L**3 + 24 * L**2 + linear + 9) * (-math.expm1(-4.0 * b0 * k)) / (512.0 * b0**4 * k**2)
    return 2.0 * math.pi * (t1 + t2 + t3 + t4)


def cross_section(
    ctx: ScatterContext, geom: WormholeGeometry, tol: float = 1e-10, as_printed: bool = False
) -> CrossSection:
    sq, err = sigma_quadrature(ctx, geom, tol)
    sc = sigma_closed(ctx, geom, as_printed=as_printed)
    return CrossSection(
        k=ctx.k, L=ctx.L, x=geom.b0 * ctx.k, sigma_quad=sq, sigma_quad_err=err,
        sigma_closed=sc, discrepancy=abs(sc - sq) / sq, as_printed=as_printed,
    )


def _eq15_numerator(x: float) -> float:
    # 9 e^{4x} - 9 - 36x - 56x^2 - 32x^3; the x^0 and x^1 terms cancel
    if x < 0.1:
        total = 16.0 * x**2 + 64.0 * x**3
        term = 9.0 * 64.0 * x**3 / 6.0
        n = 3
        while True:
            n += 1
            term *= 4.0 * x / n
            total += term
            if term < 1e-18 * total:
                return total
    return 9.0 * math.expm1(4.0 * x) - 36.0 * x - 56.0 * x**2 - 32.0 * x**3


def eq15_function(x: float, geom: WormholeGeometry) -> float:
    """sigma/(2 pi) for L = 0 as a function of x = b0 k.

    (9 e^{4x} - 9 - 36x - 56x^2 - 32x^3) e^{-4x} / (512 x^2 b0^2). The numerator
    is summed as a series for small x to avoid cancellation.
    """
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"x must be positive and finite, got {x!r}")
    return _eq15_numerator(x) * math.exp(-4.0 * x) / (512.0 * x * x * geom.b0**2)


def bracket_roots(func, xs: Sequence[float], xtol: float = 1e-14) -> list[float]:
    """Roots of ``func`` found by bisection on every sign change over ``xs``."""
    xs = [float(x) for x in xs]
    vals = [func(x) for x in xs]
    roots = []
    for (xa, fa), (xb, fb) in zip(zip(xs, vals), zip(xs[1:], vals[1:])):
        if fa == 0.0:
            roots.append(xa)
        elif fa * fb < 0:
            roots.append(bisect(func, xa, xb, xtol=xtol))
    if vals and vals[-1] == 0.0:
        roots.append(xs[-1])
    return roots


def eq15_roots(
    geom: WormholeGeometry, x_min: float = 1e-3, x_max: float = 50.0, n_scan: int = 1000
) -> list[float]:
    """Roots of `eq15_function` on [x_min, x_max] (log-spaced pre-scan, then bisection)."""
    return bracket_roots(lambda x: eq15_function(x, geom), np.geomspace(x_min, x_max, n_scan))


@dataclass(frozen=True)
class Figure2Row:
    x: float
    sigma_quad: float
    sigma_quad_err: float
    sigma_closed: float
    rel_discrepancy: float
    ok: bool = True
    message: str = ""


def figure2_data(geom: WormholeGeometry, x_grid: Sequence[float], tol: float = 1e-10) -> list[Figure2Row]:
    """L = 0 total cross-section over a grid of x = b0 k.

    Numerical failures are flagged per row rather than raised.
    """
    xs = [float(x) for x in x_grid]
    if any(not (math.isfinite(x) and x > 0) for x in xs):
        raise DomainError("x_grid must be positive and finite")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise DomainError("x_grid must be ascending")
    rows = []
    for x in xs:
        ctx = ScatterContext(x / geom.b0, 0)
        try:
            cs = cross_section(ctx, geom, tol)
        except NumericalError as exc:
            est = exc.estimate if exc.estimate is not None else float("nan")
            sc = sigma_closed(ctx, geom)
            rows.append(Figure2Row(x, est, exc.error or float("nan"), sc,
                                   abs(sc - est) / est, ok=False, message=str(exc)))
            continue
        rows.append(Figure2Row(x, cs.sigma_quad, cs.sigma_quad_err, cs.sigma_closed, cs.discrepancy))
    return rows
