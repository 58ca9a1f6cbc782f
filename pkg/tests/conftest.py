"""Shared fixtures.

The expensive protocol and trajectory runs are session-scoped and lazy: test
files that never request them do not pay for them. Everything here is
deterministic (fixed-step integrators, no randomness), so sharing runs
between tests cannot couple them.
"""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qsqueeze import feedback, fock, gaussian, model

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# the working point shared by the protocol figures: omega_m = gamma = 0.1,
# omega_a = 8, everything in units of g
PROTOCOL8 = model.SystemParams(omega_m=0.1, omega_a=8.0, g=1.0, gamma=0.1, n_th=0.0)
N_CYCLES = 191  # ~ horizon 150 at dt_measure = 2 pi / 8


def protocol_run(
    n_th: float,
    enabled: bool,
    cutoff: int,
    snapshot_times: tuple = (),
) -> feedback.ProtocolRun:
    params = model.SystemParams(omega_m=0.1, omega_a=8.0, g=1.0, gamma=0.1, n_th=n_th)
    space = fock.FockSpace(cutoff)
    schedule = feedback.FeedbackSchedule(
        dt_measure=feedback.optimal_dt(params),
        n_intervals=N_CYCLES,
        enabled=enabled,
    )
    return feedback.run_protocol(params, space, schedule, snapshot_times=snapshot_times)


@pytest.fixture(scope="session")
def fb_run():
    """Feedback protocol at the n_th = 0 working point, with phase-space
    snapshots at the times the squeezing story is told: start, first
    variance minimum, developed squeezing."""
    return protocol_run(0.0, True, 40, snapshot_times=(0.0, 7.0, 70.0))


@pytest.fixture(scope="session")
def nofb_run():
    """Same clock, measurements without the corrective flip. The outcome
    mixture runs hotter than the fed-back state, hence the larger cutoff."""
    return protocol_run(0.0, False, 80)


@pytest.fixture(scope="session")
def thermal_fb_runs():
    """Feedback runs against thermal baths around the squeezing threshold."""
    return {n_th: protocol_run(n_th, True, 48) for n_th in (0.2, 0.3, 0.4)}


@pytest.fixture(scope="session")
def fig2a_traj():
    """Transverse-coupling evolution at large detuning from |e> (x) vacuum."""
    params = model.SystemParams(omega_m=0.1, omega_a=50.0, g=1.0, gamma=0.1, n_th=0.0)
    space = fock.FockSpace(40)
    rho0 = np.kron(np.diag([1.0, 0.0]), fock.vacuum_state(space)).astype(complex)
    h = fock.build_h1(params, space)
    traj = fock.evolve(rho0, h, params, space, t_final=50.0, sample_cadence=5.0)
    return params, space, traj


@pytest.fixture(scope="session")
def heff_pair():
    """Frozen-qubit quadratic model run twice: truncated Fock vs Gaussian
    moments, on matched sample times."""
    params = PROTOCOL8
    space = fock.FockSpace(40)
    rho0 = np.kron(np.diag([1.0, 0.0]), fock.vacuum_state(space)).astype(complex)
    h = fock.build_h_eff(params, space)
    ftraj = fock.evolve(rho0, h, params, space, t_final=100.0, dt=0.02, sample_cadence=1.0)
    hmat = gaussian.build_effective_hamiltonian_matrix(params)
    dd = gaussian.build_drift_diffusion(params, hmat)
    gtraj = gaussian.evolve_moments(gaussian.vacuum(), dd, 100.0, 0.001, 1.0)
    return params, space, ftraj, gtraj


@pytest.fixture(scope="session")
def dt_sweep():
    """Steady squeezing over a 40-point measurement-spacing grid spanning
    (0, 2.5 T_a]. The slowest fixture here by far."""
    period = 2.0 * math.pi / PROTOCOL8.omega_a
    values = tuple((k + 1) * 2.5 * period / 40.0 for k in range(40))
    space = fock.FockSpace(40)
    points = feedback.sweep_dt(PROTOCOL8, space, values, horizon=150.0)
    return period, values, points
