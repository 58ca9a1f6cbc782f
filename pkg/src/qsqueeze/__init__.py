"""Simulation and analysis of feedback-stabilized mechanical squeezing.

A damped harmonic oscillator couples transversely to a strongly detuned
qubit. With the qubit held in its excited state the oscillator's x1
quadrature stiffens and its steady-state variance drops below the thermal
value; a stroboscopic measure-and-reset feedback loop keeps the qubit there.
The package provides closed-form steady-state moments, a Gaussian moment
integrator for the frozen-qubit model, a truncated-Fock master-equation
solver for the full model, the feedback protocol, phase-space and decibel
observables, and a scenario-driven CLI that writes CSV/grid files.
"""
from .config import ConfigError, ExperimentConfig, parse_config
from .feedback import (
    FeedbackSchedule,
    ProtocolRecord,
    ProtocolRun,
    detect_steady_state,
    measure_and_reset,
    optimal_dt,
    run_protocol,
    sweep_dt,
)
from .fock import (
    CutoffError,
    FockSpace,
    OperatorSet,
    build_h1,
    build_h_eff,
    coherent_state,
    displacement,
    evolve,
    iter_evolve,
    lindblad_rhs,
    number_state,
    operators,
    thermal_state,
    vacuum_state,
)
from .gaussian import (
    DriftDiffusion,
    GaussianState,
    IntegrationError,
    StabilityError,
    build_drift_diffusion,
    build_effective_hamiltonian_matrix,
    evolve_moments,
    is_stable,
    solve_lyapunov_steady,
)
from .model import (
    DetuningWarning,
    ParameterError,
    SteadyStateMoments,
    SystemParams,
    renormalized_variance,
    steady_state_moments,
    validate,
)
from .observables import (
    QuadratureMoments,
    WignerGrid,
    gaussian_purity,
    purity,
    quadrature_moments,
    reduce_to_oscillator,
    renormalize,
    to_db,
    wigner_grid,
)
from .runner import ExperimentResult, TimeSeries, run_experiment, run_sweep

__version__ = "0.1.0"
