"""Simulation and design toolkit for amplitude-modulated Rydberg-blockade
phase gates driven by zero-pulse-area fields."""

from .analytic import (
    DressedSpectrum,
    ResonantCase,
    alpha_adiabatic,
    alpha_ae_limit,
    adiabaticity_margin_triple,
    beta_adiabatic,
    beta_ae_expanded,
    beta_ae_limit,
    branch_index,
    dressed_energies_single,
    dressed_energies_three,
    magnus_effective_phase,
    rabi_case_alpha,
    resonant_case,
)
from .design import (
    DesignPoint,
    SweepGrid,
    analytic_optimum,
    solve_omega0_for_alpha,
    solve_v_for_beta,
    sweep_fidelity_vs_v_omega,
    sweep_gate_metrics,
    sweep_phase_maps,
)
from .gate import (
    GateReport,
    assemble,
    cartan_factors,
    cartan_reassemble,
    cz_fidelity,
    entangling_power,
    gate_from_dynamics,
    gate_metrics,
)
from .model import (
    HamiltonianKind,
    PulseParams,
    SystemParams,
    adiabaticity_margin_single,
    envelope,
    envelope_rate,
    hamiltonian,
    nonadiabatic_boundaries,
    pulse_area,
    quadratures,
    system,
)
from .noise import (
    FidelityCurve,
    MonteCarloResult,
    NoiseSpec,
    SensitivityCoeffs,
    fidelity_vs_detuning,
    fidelity_vs_relative_error,
    fit_quadratic_loss,
    monte_carlo_fidelity,
    sensitivity_coeffs,
)
from .propagator import (
    PhaseResult,
    StateVector,
    SubspaceReport,
    Trace,
    basis_state,
    phase_of,
    propagate,
    subspace_consistency,
)

__version__ = "0.1.0"
