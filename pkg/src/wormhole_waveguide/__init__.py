"""Quantum scattering of zero-angular-momentum particles through a static wormhole throat."""

from .errors import DomainError, NonConvergenceError, NumericalError
from .potential import (
    ScatterContext,
    WormholeGeometry,
    v_eff,
    v_fourier_closed,
    v_fourier_numeric,
)
from .transmission import (
    SolverOptions,
    TransmissionResult,
    resonance_wavelengths,
    solve_transmission,
    solve_transmission_rk,
    transmission_scan,
    wkb_delta_p,
    wkb_phase,
)
from .born import (
    born_amplitude,
    cross_section,
    dcs_zero_energy,
    eq15_function,
    eq15_roots,
    figure2_data,
    sigma_closed,
    sigma_quadrature,
)
from .heun import (
    ExactInteriorSolution,
    HeunParams,
    heun_c,
    ode_residual,
    psi_interior,
)

__version__ = "0.1.0"
