"""
Effective potential of the static wormhole and its Fourier transform.

Units
-----
Everything is expressed in natural units with hbar = 2 m0 = 1, so the
kinetic prefactor hbar^2 / (2 m0) is unity and an energy is a squared
wavenumber, E = k^2.

The reduced radial problem for angular momentum L is

    -psi''(r) + V(r) psi(r) = k^2 psi(r),
    V(r) = L(L+1) / (r^2 + b0^2) + b0^2 / (r^2 + b0^2)^2,

where r runs over the whole real line (r = 0 is the throat, r -> +-inf are
the two asymptotically flat sheets).

Fourier convention
------------------
The transform used throughout is the one-dimensional one,

    V(q) = int_{-inf}^{inf} exp(-i q r) V(r) dr = 2 int_0^inf cos(q r) V(r) dr,

which gives the closed form

    V(q) = pi exp(-b0 q) (2 L(L+1) + b0 q + 1) / (2 b0).

A three-dimensional radial transform does *not* reproduce this expression
and is not provided.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import sici

from .errors import DomainError, NumericalError

__all__ = [
    "WormholeGeometry",
    "ScatterContext",
    "FourierEstimate",
    "v_eff",
    "v_fourier_closed",
    "v_fourier_numeric",
]


@dataclass(frozen=True)
class WormholeGeometry:
    """Throat geometry of a static wormhole.

    Parameters
    ----------
    b0 : float
        Throat radius, strictly positive and finite.
    """

    b0: float

    def __post_init__(self):
        b0 = self.b0
        if isinstance(b0, bool) or not isinstance(b0, (int, float, np.floating, np.integer)):
            raise DomainError(f"b0 must be a real number, got {b0!r}")
        if not math.isfinite(b0) or b0 <= 0:
            raise DomainError(f"b0 must be positive and finite, got {b0!r}")
        object.__setattr__(self, "b0", float(b0))

    @property
    def diameter(self) -> float:
        """Throat diameter d = 2 b0."""
        return 2.0 * self.b0

    @property
    def barrier_height(self) -> float:
        """Maximum of the L = 0 potential, reached at the throat: 1 / b0^2."""
        return 1.0 / self.b0**2


@dataclass(frozen=True)
class ScatterContext:
    """Wavenumber and angular-momentum quantum number of the incoming particle."""

    k: float
    L: int = 0

    def __post_init__(self):
        if not math.isfinite(self.k) or self.k < 0:
            raise DomainError(f"k must be finite and non-negative, got {self.k!r}")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "L", check_angular_momentum(self.L))

    @property
    def energy(self) -> float:
        """E = k^2 in natural units."""
        return self.k**2

    @property
    def wavelength(self) -> float:
        """de Broglie wavelength 2 pi / k (infinite at k = 0)."""
        return math.inf if self.k == 0 else 2.0 * math.pi / self.k


@dataclass(frozen=True)
class FourierEstimate:
    value: float
    error: float
    r_cut: float


def check_angular_momentum(L) -> int:
    if isinstance(L, bool) or int(L) != L or L < 0:
        raise DomainError(f"L must be a non-negative integer, got {L!r}")
    return int(L)


def v_eff(r, geom: WormholeGeometry, L: int = 0):
    """Effective potential V(r) for angular momentum L.

    Parameters
    ----------
    r : float or array_like
        Signed distance from the throat.
    geom : WormholeGeometry
    L : int

    Returns
    -------
    float or ndarray
        L(L+1)/(r^2 + b0^2) + b0^2/(r^2 + b0^2)^2. A scalar input gives a
        Python float.

    Raises
    ------
    DomainError
        If any r is not finite or L is invalid.
    """
    L = check_angular_momentum(L)
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)):
        raise DomainError("r must be finite")
    b2 = geom.b0**2
    s = r_arr * r_arr + b2
    out = L * (L + 1) / s + b2 / (s * s)
    return float(out) if out.ndim == 0 else out


def v_fourier_closed(q: float, geom: WormholeGeometry, L: int = 0) -> float:
    """Closed-form 1D Fourier transform of `v_eff` at momentum transfer q >= 0."""
    L = check_angular_momentum(L)
    if not q >= 0:
        raise DomainError(f"q must be non-negative, got {q!r}")
    b0 = geom.b0
    if math.isinf(q):
        return 0.0
    return math.pi * math.exp(-b0 * q) * (2 * L * (L + 1) + b0 * q + 1) / (2 * b0)


def _quad(func, a, b, **kw):
    # IntegrationWarning is folded into the returned error estimate instead.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, err = quad(func, a, b, **kw)[:2]
    return value, err


def v_fourier_numeric(q: float, geom: WormholeGeometry, L: int = 0, tol: float = 1e-10) -> FourierEstimate:
    """Fourier transform of `v_eff` by adaptive quadrature.

    Independent of `v_fourier_closed`: evaluates 2 int_0^inf cos(qr) V(r) dr
    numerically. The range is split at

        R = max(50 b0, 50 / max(q, 1/b0)).

    On [0, R] the full potential is integrated with QUADPACK's cosine-weighted
    rule. On [R, inf) the slowly decaying L(L+1)/r^2 piece is integrated
    exactly through the sine integral,

        int_R^inf cos(qr)/r^2 dr = cos(qR)/R - q (pi/2 - Si(qR)),

    and the 1/r^4 remainder is integrated numerically, with the Fourier rule
    for semi-infinite intervals once q R exceeds one period.

    Returns
    -------
    FourierEstimate
        Transform value, summed absolute error estimate, and the split point.

    Raises
    ------
    DomainError
        If q < 0 or tol <= 0.
    NumericalError
        If the summed error estimate exceeds tol * |value|.
    """
    L = check_angular_momentum(L)
    if not (math.isfinite(q) and q >= 0):
        raise DomainError(f"q must be finite and non-negative, got {q!r}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")

    b0 = geom.b0
    b2 = b0 * b0
    ll = L * (L + 1)
    r_cut = max(50.0 * b0, 50.0 / max(q, 1.0 / b0))
    inner_tol = max(min(tol, 1e-12) / 10, 1e-13)

    def full(r):
        s = r * r + b2
        return ll / s + b2 / (s * s)

    def remainder(r):
        # V(r) - L(L+1)/r^2, which decays like 1/r^4
        s = r * r + b2
        return -ll * b2 / (r * r * s) + b2 / (s * s)

    if q == 0:
        head, e_head = _quad(full, 0.0, r_cut, epsabs=0.0, epsrel=inner_tol, limit=500)
        tail_exact = ll / r_cut
        tail_rem, e_rem = _quad(remainder, r_cut, np.inf, epsabs=0.0, epsrel=inner_tol, limit=500)
    else:
        head, e_head = _quad(full, 0.0, r_cut, weight="cos", wvar=q,
                             epsabs=0.0, epsrel=inner_tol, limit=2000)
        si, _ = sici(q * r_cut)
        tail_exact = ll * (math.cos(q * r_cut) / r_cut - q * (math.pi / 2 - si))
        if q * r_cut < 2 * math.pi:
            # too few oscillations past the cut for the Fourier rule
            tail_rem, e_rem = _quad(lambda r: math.cos(q * r) * remainder(r), r_cut, np.inf,
                                    epsabs=0.0, epsrel=inner_tol, limit=500)
        else:
            tail_rem, e_rem = _quad(remainder, r_cut, np.inf, weight="cos", wvar=q,
                                    epsabs=1e-16, limlst=100)

    value = 2.0 * (head + tail_exact + tail_rem)
    error = 2.0 * (e_head + e_rem)
    if not error <= tol * abs(value):
        raise NumericalError(
            f"Fourier quadrature reached error {error:.3g} > tol*|value| at q={q}, L={L}",
            estimate=value,
            error=error,
        )
    return FourierEstimate(value=value, error=error, r_cut=r_cut)
