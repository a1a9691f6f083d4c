"""
Transmission through the wormhole potential.

Exact numerical scattering
--------------------------
The stationary problem psi'' + k^2 psi = V(r) psi is solved on the truncated
line [-R, R] with a purely outgoing wave psi = exp(ikr) at the right edge.
Integrating leftwards and splitting the solution at the left edge into
a exp(ikr) + b exp(-ikr) gives the amplitudes t = 1/a and r = b/a.

Two independent integrators are provided:

* `solve_transmission` uses the fixed-step Numerov scheme. The three-term
  recurrence is rewritten as a product of 2x2 transfer matrices acting on
  (w_j, (w_{j+1} - w_j)/h), with w = (1 - h^2 f/12) psi. Each matrix is
  stored as its (small) deviation from the identity and the product is
  formed by pairwise reduction, which keeps round-off relative to the
  deviation instead of to the identity. The recurrence has real
  coefficients, so the discrete Wronskian (and hence flux) is conserved
  exactly; edge waves use the discrete dispersion relation
  2 cos(k_h h) = 2 + h^2 f / (1 - h^2 f / 12).
* `solve_transmission_rk` integrates the same equation with an adaptive
  8th-order Runge-Kutta scheme (DOP853) and matches psi and psi' at the
  left edge. It is the cross-validation oracle.

Semiclassical phase
-------------------
For p0 much larger than the barrier scale (b0 p0 >> 1) the local wavenumber
deficit inside the throat is Delta p(r) = b0^2 / (p0 (b0^2 + r^2)^2). Its
half-line integral has the closed form

    int_0^inf Delta p dr = pi / (4 b0 p0),

which is what `WkbReport.delta_phi` holds; the full-line integral is twice
that. With Planck's constant h = 2 pi (hbar = 1) the accumulated phase
h * delta_phi equals n pi exactly when the de Broglie wavelength is
lambda = 4 n b0, i.e. k_n = pi / (2 n b0).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp

from .errors import DomainError, NonConvergenceError, NumericalError
from .potential import ScatterContext, WormholeGeometry, check_angular_momentum, v_eff

__all__ = [
    "SolverOptions",
    "TransmissionResult",
    "ScanPeak",
    "ResonanceComparison",
    "ScanResult",
    "WkbReport",
    "Resonance",
    "default_domain_halfwidth",
    "solve_transmission",
    "solve_transmission_rk",
    "transmission_scan",
    "find_peaks",
    "resonance_comparison",
    "wkb_delta_p",
    "wkb_phase",
    "resonance_wavelengths",
    "PLANCK_H",
    "VALIDITY_WARNING_RATIO",
]

PLANCK_H = 2.0 * math.pi
VALIDITY_WARNING_RATIO = 0.1
PEAK_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the scattering solvers.

    Attributes
    ----------
    domain_halfwidth : float, optional
        Truncation radius R. Defaults to ``max(200 b0, 40 / k)``.
    n_steps : int, optional
        Numerov steps across [-R, R]. Defaults to a step of
        ``min(b0 / 50, 0.05 / k)``.
    unitarity_threshold : float
        Largest acceptable |T + R - 1|.
    max_refinements : int
        How many times the step count is doubled before giving up.
    incidence : {"left", "right"}
        Side the incident wave comes from.
    experimental : bool
        Allow L >= 1. The 1/r^2 tail makes plane-wave asymptotics only
        approximate there, so results are not validated.
    potential : callable, optional
        Replaces the wormhole potential; maps an array of r to V(r).
    potential_scale : float
        Multiplies the potential (0 gives free propagation).
    rtol : float
        Relative tolerance of the Runge-Kutta oracle.
    """

    domain_halfwidth: Optional[float] = None
    n_steps: Optional[int] = None
    unitarity_threshold: float = 1e-8
    max_refinements: int = 3
    incidence: str = "left"
    experimental: bool = False
    potential: Optional[Callable[[np.ndarray], np.ndarray]] = None
    potential_scale: float = 1.0
    rtol: float = 1e-12

    def __post_init__(self):
        if self.domain_halfwidth is not None and not (
            math.isfinite(self.domain_halfwidth) and self.domain_halfwidth > 0
        ):
            raise DomainError("domain_halfwidth must be positive and finite")
        if self.n_steps is not None and self.n_steps < 4:
            raise DomainError("n_steps must be at least 4")
        if not self.unitarity_threshold > 0:
            raise DomainError("unitarity_threshold must be positive")
        if self.max_refinements < 0:
            raise DomainError("max_refinements must be non-negative")
        if self.incidence not in ("left", "right"):
            raise DomainError(f"incidence must be 'left' or 'right', got {self.incidence!r}")
        if not self.rtol > 0:
            raise DomainError("rtol must be positive")


@dataclass(frozen=True)
class TransmissionResult:
    """Outcome of one scattering solve, normalised to unit incident flux."""

    k: float
    L: int
    t_amp: complex
    r_amp: complex
    T: float
    R: float
    unitarity_defect: float
    domain_halfwidth: float
    solver_steps: int
    converged: bool = True
    condition_number: float = float("nan")
    method: str = "numerov"
    message: str = ""

    def as_row(self) -> dict:
        return {
            "k": self.k,
            "L": self.L,
            "T": self.T,
            "R": self.R,
            "unitarity_defect": self.unitarity_defect,
            "domain_halfwidth": self.domain_halfwidth,
        }


def default_domain_halfwidth(k: float, geom: WormholeGeometry) -> float:
    return max(200.0 * geom.b0, 40.0 / k)


def _default_step(k: float, geom: WormholeGeometry) -> float:
    return min(geom.b0 / 50.0, 0.05 / k)


def _prepare(ctx: ScatterContext, geom: WormholeGeometry, opts: SolverOptions):
    if not ctx.k > 0:
        raise DomainError(f"transmission needs k > 0, got {ctx.k!r}")
    if ctx.L != 0 and not opts.experimental:
        raise DomainError(
            "L >= 1 transmission is experimental (1/r^2 tail); pass experimental=True"
        )
    base = opts.potential
    if base is None:
        def base(r, _L=ctx.L):
            return v_eff(r, geom, _L)

    scale = opts.potential_scale
    if opts.incidence == "right":
        def potential(r):
            return scale * np.asarray(base(-np.asarray(r)), dtype=float)
    else:
        def potential(r):
            return scale * np.asarray(base(np.asarray(r)), dtype=float)

    R_dom = opts.domain_halfwidth or default_domain_halfwidth(ctx.k, geom)
    return potential, R_dom


def _plane_wave_matrix(kl: float, x0: float, x1: float) -> np.ndarray:
    return np.array(
        [
            [np.exp(1j * kl * x0), np.exp(-1j * kl * x0)],
            [np.exp(1j * kl * x1), np.exp(-1j * kl * x1)],
        ]
    )


def _transfer_product(dev: np.ndarray) -> np.ndarray:
    """Ordered product of (I + dev[0]) (I + dev[1]) ... as a deviation from I."""
    zero = np.zeros((1, 2, 2))
    while len(dev) > 1:
        if len(dev) % 2:
            dev = np.concatenate([dev, zero])
        a, b = dev[0::2], dev[1::2]
        dev = a + b + a @ b
    return dev[0]


def _numerov_once(k: float, potential, R_dom: float, n_steps: int):
    h = 2.0 * R_dom / n_steps
    r = -R_dom + h * np.arange(n_steps + 1)
    f = potential(r) - k * k
    hf = h * h * f
    if np.any(hf >= 12.0):
        raise NumericalError("step too large for the Numerov recurrence")
    # c_j - 2, where w_{j-1} = c_j w_j - w_{j+1}
    e = hf / (1.0 - hf / 12.0)

    if np.any(np.abs(e[[0, 1, -2, -1]] + 2.0) >= 2.0) or np.any(e[[0, -1]] >= 0):
        raise NumericalError("edges are not in a propagating region; enlarge the domain")

    # u_j = (w_j, (w_{j+1} - w_j)/h) and u_{j-1} = (I + X_j) u_j
    ej = e[1:n_steps]
    dev = np.zeros((n_steps - 1, 2, 2))
    dev[:, 0, 0] = ej
    dev[:, 0, 1] = -h
    dev[:, 1, 0] = -ej / h
    P = np.eye(2) + _transfer_product(dev)

    k_right = math.acos(1.0 + e[-1] / 2.0) / h
    k_left = math.acos(1.0 + e[0] / 2.0) / h
    w_prev = np.exp(1j * k_right * r[-2])
    w_last = np.exp(1j * k_right * r[-1])
    u0 = P @ np.array([w_prev, (w_last - w_prev) / h])
    w0, w1 = u0[0], u0[0] + h * u0[1]

    M = _plane_wave_matrix(k_left, r[0], r[1])
    a, b = np.linalg.solve(M, np.array([w0, w1]))
    # w = g psi with g equal at both edges only for symmetric potentials
    g_left = 1.0 - hf[0] / 12.0
    g_right = 1.0 - hf[-1] / 12.0
    t_amp = (g_left / g_right) / a
    r_amp = b / a
    flux_ratio = math.sin(k_right * h) / math.sin(k_left * h)
    T = float(abs(t_amp) ** 2 * flux_ratio * (g_right / g_left) ** 2)
    R = float(abs(r_amp) ** 2)
    return t_amp, r_amp, T, R, float(np.linalg.cond(M))


def solve_transmission(
    ctx: ScatterContext, geom: WormholeGeometry, opts: SolverOptions | None = None
) -> TransmissionResult:
    """Transmission and reflection amplitudes by the Numerov method.

    Parameters
    ----------
    ctx : ScatterContext
        k > 0; L = 0 unless ``opts.experimental`` is set.
    geom : WormholeGeometry
    opts : SolverOptions, optional

    Returns
    -------
    TransmissionResult

    Raises
    ------
    DomainError
        For k <= 0 or an ungated L >= 1.
    NonConvergenceError
        If |T + R - 1| stays above ``opts.unitarity_threshold`` after the
        refinement schedule; the best result is attached.
    """
    opts = opts or SolverOptions()
    potential, R_dom = _prepare(ctx, geom, opts)
    k = ctx.k
    n_steps = opts.n_steps or int(math.ceil(2.0 * R_dom / _default_step(k, geom)))

    best = None
    for _ in range(opts.max_refinements + 1):
        t_amp, r_amp, T, R, cond = _numerov_once(k, potential, R_dom, n_steps)
        defect = abs(T + R - 1.0)
        result = TransmissionResult(
            k=k, L=ctx.L, t_amp=complex(t_amp), r_amp=complex(r_amp), T=T, R=R,
            unitarity_defect=defect, domain_halfwidth=R_dom, solver_steps=n_steps,
            condition_number=cond, method="numerov",
        )
        if best is None or defect < best.unitarity_defect:
            best = result
        if defect <= opts.unitarity_threshold:
            return result
        n_steps *= 2

    best = replace(best, converged=False, message="unitarity threshold not met")
    raise NonConvergenceError(
        f"|T+R-1| = {best.unitarity_defect:.3g} above {opts.unitarity_threshold:g} at k={k}",
        result=best,
    )


def solve_transmission_rk(
    ctx: ScatterContext, geom: WormholeGeometry, opts: SolverOptions | None = None
) -> TransmissionResult:
    """Transmission by adaptive Runge-Kutta integration (DOP853).

    Same boundary-value problem as `solve_transmission`, solved with an
    unrelated scheme; intended as its oracle. psi and psi' are matched at the
    left edge to a exp(ikr) + b exp(-ikr) using the local wavenumber there.
    """
    opts = opts or SolverOptions()
    potential, R_dom = _prepare(ctx, geom, opts)
    k = ctx.k

    def local_k(x):
        kk = k * k - float(potential(np.array([x]))[0])
        if kk <= 0:
            raise NumericalError("edges are not in a propagating region; enlarge the domain")
        return math.sqrt(kk)

    k_right, k_left = local_k(R_dom), local_k(-R_dom)

    def rhs(r, y):
        v = float(potential(np.array([r]))[0]) - k * k
        return [y[2], y[3], v * y[0], v * y[1]]

    psi0 = np.exp(1j * k_right * R_dom)
    dpsi0 = 1j * k_right * psi0
    sol = solve_ivp(
        rhs, (R_dom, -R_dom), [psi0.real, psi0.imag, dpsi0.real, dpsi0.imag],
        method="DOP853", rtol=opts.rtol, atol=opts.rtol * 1e-2,
    )
    if not sol.success:
        raise NumericalError(f"Runge-Kutta integration failed: {sol.message}")
    y = sol.y[:, -1]
    psi, dpsi = y[0] + 1j * y[1], y[2] + 1j * y[3]
    x = -R_dom
    M = np.array(
        [
            [np.exp(1j * k_left * x), np.exp(-1j * k_left * x)],
            [1j * k_left * np.exp(1j * k_left * x), -1j * k_left * np.exp(-1j * k_left * x)],
        ]
    )
    a, b = np.linalg.solve(M, np.array([psi, dpsi]))
    t_amp, r_amp = 1.0 / a, b / a
    T = float(abs(t_amp) ** 2 * k_right / k_left)
    R = float(abs(r_amp) ** 2)
    defect = abs(T + R - 1.0)
    return TransmissionResult(
        k=k, L=ctx.L, t_amp=complex(t_amp), r_amp=complex(r_amp), T=T, R=R,
        unitarity_defect=defect, domain_halfwidth=R_dom, solver_steps=int(sol.t.size - 1),
        converged=defect <= opts.unitarity_threshold,
        condition_number=float(np.linalg.cond(M)), method="rk",
    )


# -----------------------------------------------------------------------------
# Scans and resonance comparison
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanPeak:
    """A local maximum of T(k) and the nearest predicted resonance."""

    index: int
    k: float
    T: float
    nearest_n: int
    k_predicted: float
    offset: float


@dataclass(frozen=True)
class ResonanceComparison:
    n: int
    wavelength: float
    k_predicted: float
    T_at_prediction: float
    validity_ratio: float
    validity_warning: bool
    nearest_peak_k: Optional[float]
    peak_offset: Optional[float]


@dataclass
class ScanResult:
    results: list
    peaks: list = field(default_factory=list)

    @property
    def failed(self) -> list:
        return [res for res in self.results if not res.converged]

    def __len__(self):
        return len(self.results)


def find_peaks(values: Sequence[float], tolerance: float = 0.0) -> list[int]:
    """Indices of strict local maxima.

    A point (or a plateau of points within ``tolerance`` of each other) is a
    peak when it exceeds the neighbours on both sides by more than
    ``tolerance``; plateaus report their leftmost index. End points never
    qualify. ``tolerance=0`` is plain strict comparison.
    """
    vals = list(values)
    peaks = []
    i = 1
    n = len(vals)
    while i < n - 1:
        j = i
        while j + 1 < n and abs(vals[j + 1] - vals[i]) <= tolerance:
            j += 1
        if vals[i] - vals[i - 1] > tolerance and j + 1 < n and vals[j] - vals[j + 1] > tolerance:
            peaks.append(i)
        i = j + 1
    return peaks


def _resonance_k(n: int, b0: float) -> float:
    return math.pi / (2.0 * n * b0)


def _nearest_n(k: float, b0: float) -> int:
    return max(1, int(round(math.pi / (2.0 * b0 * k))))


def transmission_scan(
    geom: WormholeGeometry,
    L: int,
    k_grid: Sequence[float],
    opts: SolverOptions | None = None,
    max_workers: int | None = None,
    peak_tolerance: float = PEAK_TOLERANCE,
) -> ScanResult:
    """Solve for T(k) over a grid and locate local maxima.

    Per-point non-convergence does not abort the scan: the best attempt is
    kept with ``converged=False``. Results follow the order of ``k_grid``.
    Each peak is paired with the nearest predicted resonance
    k_n = pi / (2 n b0). Maxima smaller than ``peak_tolerance`` are treated
    as solver jitter (T is reproducible to ~1e-11 across grid points).
    """
    L = check_angular_momentum(L)
    ks = [float(k) for k in k_grid]
    if any(not (math.isfinite(k) and k > 0) for k in ks):
        raise DomainError("k_grid must be strictly positive and finite")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("k_grid must be sorted strictly ascending")
    opts = opts or SolverOptions()

    def one(k):
        try:
            return solve_transmission(ScatterContext(k, L), geom, opts)
        except NonConvergenceError as exc:
            return exc.result
        except NumericalError as exc:
            nan = float("nan")
            return TransmissionResult(
                k=k, L=L, t_amp=complex(nan, nan), r_amp=complex(nan, nan), T=nan, R=nan,
                unitarity_defect=nan, domain_halfwidth=nan, solver_steps=0,
                converged=False, message=str(exc),
            )

    if max_workers and max_workers > 1 and len(ks) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, ks))
    else:
        results = [one(k) for k in ks]

    peaks = []
    for i in find_peaks([res.T for res in results], peak_tolerance):
        k = results[i].k
        n = _nearest_n(k, geom.b0)
        k_pred = _resonance_k(n, geom.b0)
        peaks.append(ScanPeak(index=i, k=k, T=results[i].T, nearest_n=n,
                              k_predicted=k_pred, offset=k - k_pred))
    return ScanResult(results=results, peaks=peaks)


def resonance_comparison(
    geom: WormholeGeometry, n_max: int, scan: ScanResult | None = None,
    opts: SolverOptions | None = None,
) -> list[ResonanceComparison]:
    """Exact T at each predicted resonance, next to the nearest scan peak.

    Only reports; no claim is made that T(k_n) = 1. ``validity_ratio`` is
    (1/b0^2)/k_n^2, and exceeds 0.1 for every n (k_n b0 <= pi/2).
    """
    rows = []
    peaks = scan.peaks if scan is not None else []
    for res in resonance_wavelengths(geom, n_max):
        T = solve_transmission(ScatterContext(res.k, 0), geom, opts).T
        nearest_k = offset = None
        if peaks:
            nearest = min(peaks, key=lambda p: abs(p.k - res.k))
            nearest_k, offset = nearest.k, nearest.k - res.k
        rows.append(ResonanceComparison(
            n=res.n, wavelength=res.wavelength, k_predicted=res.k, T_at_prediction=T,
            validity_ratio=res.validity_ratio,
            validity_warning=res.validity_ratio > VALIDITY_WARNING_RATIO,
            nearest_peak_k=nearest_k, peak_offset=offset,
        ))
    return rows


# -----------------------------------------------------------------------------
# Semiclassical phase accumulation
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class WkbReport:
    """Phase picked up by a fast particle crossing the throat.

    Attributes
    ----------
    p0 : float
        Asymptotic wavenumber.
    delta_phi : float
        Closed form pi / (4 b0 p0), the half-line integral of Delta p.
    delta_phi_quad : float
        int_0^inf Delta p dr by quadrature.
    full_line_quad : float
        int_{-inf}^{inf} Delta p dr = 2 int_0^inf Delta p dr by quadrature.
    quad_error : float
        Quadrature error estimate of ``delta_phi_quad``.
    accumulated_phase : float
        h * delta_phi with h = 2 pi; equals n pi at the resonances.
    resonance_index : int or None
        n when ``accumulated_phase`` is an integer multiple of pi.
    validity_ratio : float
        (1/b0^2) / p0^2; the expansion needs this to be << 1.
    validity_warning : bool
        Set when ``validity_ratio`` > 0.1.
    """

    p0: float
    b0: float
    delta_phi: float
    delta_phi_quad: float
    full_line_quad: float
    quad_error: float
    accumulated_phase: float
    resonance_index: Optional[int]
    validity_ratio: float
    validity_warning: bool

    @property
    def closed_vs_quad(self) -> float:
        return self.delta_phi - self.delta_phi_quad


def _check_p0(p0):
    if not (math.isfinite(p0) and p0 > 0):
        raise DomainError(f"p0 must be positive and finite, got {p0!r}")


def wkb_delta_p(r, p0: float, geom: WormholeGeometry):
    """Wavenumber deficit b0^2 / (p0 (b0^2 + r^2)^2) at position r."""
    _check_p0(p0)
    return v_eff(r, geom, 0) / p0


def wkb_phase(p0: float, geom: WormholeGeometry) -> WkbReport:
    """Closed-form throat phase with an independent quadrature cross-check."""
    _check_p0(p0)
    b0 = geom.b0
    closed = math.pi / (4.0 * b0 * p0)

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            half, err = quad(lambda r: wkb_delta_p(r, p0, geom), 0.0, np.inf,
                             epsabs=0.0, epsrel=1e-13, limit=200)
        except IntegrationWarning as exc:
            raise NumericalError(f"phase quadrature failed at p0={p0}: {exc}") from exc

    phase = PLANCK_H * closed
    n_float = phase / math.pi
    n = int(round(n_float))
    index = n if n >= 1 and abs(n_float - n) <= 1e-9 * max(1.0, n_float) else None
    ratio = 1.0 / (b0 * p0) ** 2
    return WkbReport(
        p0=p0, b0=b0, delta_phi=closed, delta_phi_quad=half, full_line_quad=2.0 * half,
        quad_error=err, accumulated_phase=phase, resonance_index=index,
        validity_ratio=ratio, validity_warning=ratio > VALIDITY_WARNING_RATIO,
    )


@dataclass(frozen=True)
class Resonance:
    n: int
    wavelength: float
    k: float
    accumulated_phase: float
    validity_ratio: float


def resonance_wavelengths(geom: WormholeGeometry, n_max: int) -> list[Resonance]:
    """Predicted transparent wavelengths lambda_n = 4 n b0, n = 1..n_max."""
    if isinstance(n_max, bool) or int(n_max) != n_max or n_max < 1:
        raise DomainError(f"n_max must be an integer >= 1, got {n_max!r}")
    b0 = geom.b0
    out = []
    for n in range(1, int(n_max) + 1):
        lam = 4.0 * n * b0
        k = 2.0 * math.pi / lam
        out.append(Resonance(
            n=n, wavelength=lam, k=k,
            accumulated_phase=PLANCK_H * math.pi / (4.0 * b0 * k),
            validity_ratio=1.0 / (b0 * k) ** 2,
        ))
    return out
