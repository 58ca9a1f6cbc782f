"""Gaussian moment dynamics for the frozen-qubit quadratic model.

The oscillator state is summarized by the quadrature mean vector
r = (<x1>, <x2>) and the symmetrized covariance matrix sigma. Under a
quadratic Hamiltonian H_osc = (1/2) r^T H r plus thermal damping the moments
close on themselves:

    d<r>/dt  = A <r>
    dsigma/dt = A sigma + sigma A^T + D

with A = 2 Omega H - (gamma/2) I, D = gamma (2 n_th + 1) I and the
symplectic form Omega = [[0, 1], [-1, 0]] fixed by [x1, x2] = 2i.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import ParameterError, SystemParams, validate

__all__ = [
    "GaussianState",
    "DriftDiffusion",
    "MomentTrajectory",
    "StabilityError",
    "IntegrationError",
    "OMEGA",
    "vacuum",
    "thermal",
    "build_effective_hamiltonian_matrix",
    "build_drift_diffusion",
    "is_stable",
    "solve_lyapunov_steady",
    "evolve_moments",
]

# Symplectic form for the convention [x1, x2] = 2i.
OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])

# A physical covariance obeys det sigma >= 1 (uncertainty bound in these
# units); allow this much slack for accumulated roundoff.
_DET_TOL = 1e-9


class StabilityError(RuntimeError):
    """The drift matrix is not Hurwitz; no stable stationary state exists."""


class IntegrationError(RuntimeError):
    """Fixed-step integration was run outside its accuracy envelope."""


@dataclass(frozen=True)
class GaussianState:
    """First and second quadrature moments (mean vector, covariance matrix)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2).copy()
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2).copy()
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance matrix must be symmetric")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def var_x1(self) -> float:
        return float(self.cov[0, 0])

    @property
    def var_x2(self) -> float:
        return float(self.cov[1, 1])

    @property
    def cov_x1x2(self) -> float:
        return float(self.cov[0, 1])

    @property
    def purity(self) -> float:
        return 1.0 / math.sqrt(float(np.linalg.det(self.cov)))

    def is_physical(self, tol: float = _DET_TOL) -> bool:
        return float(np.linalg.det(self.cov)) >= 1.0 - tol


def vacuum() -> GaussianState:
    return GaussianState(mean=np.zeros(2), cov=np.eye(2))


def thermal(n_th: float) -> GaussianState:
    if n_th < 0.0:
        raise ParameterError(f"n_th must be non-negative, got {n_th}")
    return GaussianState(mean=np.zeros(2), cov=(1.0 + 2.0 * n_th) * np.eye(2))


@dataclass(frozen=True)
class DriftDiffusion:
    """Drift matrix A and diffusion matrix D of the moment flow."""

    drift: np.ndarray
    diffusion: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.drift, dtype=float).reshape(2, 2).copy()
        d = np.asarray(self.diffusion, dtype=float).reshape(2, 2).copy()
        a.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "diffusion", d)


def build_effective_hamiltonian_matrix(params: SystemParams, qubit_sign: int = +1) -> np.ndarray:
    """Quadratic-form matrix H of the frozen-qubit oscillator Hamiltonian.

    H_osc = (1/2) r^T H r up to a constant. The qubit contributes a
    state-dependent x1^2 term: sign +1 for the excited state (stiffens x1,
    squeezes it in steady state), -1 for the ground state (softens x1 and can
    destabilize the oscillator).
    """
    validate(params)
    if qubit_sign not in (+1, -1):
        raise ParameterError(f"qubit_sign must be +1 or -1, got {qubit_sign}")
    h11 = params.omega_m / 2.0 + 2.0 * qubit_sign * params.g**2 / params.omega_a
    return np.array([[h11, 0.0], [0.0, params.omega_m / 2.0]])


def build_drift_diffusion(params: SystemParams, h: np.ndarray) -> DriftDiffusion:
    """Assemble A = 2 Omega H - (gamma/2) I and D = gamma (2 n_th + 1) I."""
    h = np.asarray(h, dtype=float)
    if h.shape != (2, 2) or not np.allclose(h, h.T, atol=1e-12):
        raise ParameterError("h must be a symmetric 2x2 matrix")
    drift = 2.0 * OMEGA @ h - 0.5 * params.gamma * np.eye(2)
    diffusion = params.gamma * (2.0 * params.n_th + 1.0) * np.eye(2)
    return DriftDiffusion(drift=drift, diffusion=diffusion)


def is_stable(dd: DriftDiffusion) -> bool:
    """True when every drift eigenvalue has a strictly negative real part."""
    return bool(np.all(np.linalg.eigvals(dd.drift).real < 0.0))


def solve_lyapunov_steady(dd: DriftDiffusion) -> np.ndarray:
    """Stationary covariance: the unique symmetric solution of A s + s A^T = -D.

    The 2x2 symmetric unknown (a, b, c) = (s11, s22, s12) satisfies a 3x3
    linear system assembled below; solved directly rather than through a
    general Lyapunov routine so the result is bit-reproducible.

    Raises StabilityError when the drift is not Hurwitz, and warns if the
    solution violates the uncertainty bound det s >= 1 (possible only for
    unphysical diffusion input).
    """
    if not is_stable(dd):
        raise StabilityError(
            "drift matrix is not Hurwitz: no stable steady state "
            f"(eigenvalues {np.linalg.eigvals(dd.drift)})"
        )
    a11, a12 = dd.drift[0]
    a21, a22 = dd.drift[1]
    # Rows: d(s11), d(s22), d(s12) of A s + s A^T, unknowns (s11, s22, s12).
    m = np.array(
        [
            [2.0 * a11, 0.0, 2.0 * a12],
            [0.0, 2.0 * a22, 2.0 * a21],
            [a21, a12, a11 + a22],
        ]
    )
    rhs = -np.array([dd.diffusion[0, 0], dd.diffusion[1, 1], dd.diffusion[0, 1]])
    s11, s22, s12 = np.linalg.solve(m, rhs)
    cov = np.array([[s11, s12], [s12, s22]])
    if np.linalg.det(cov) < 1.0 - _DET_TOL:
        warnings.warn(
            f"stationary covariance violates the uncertainty bound (det = {np.linalg.det(cov):g}); "
            "check the diffusion input",
            stacklevel=2,
        )
    return cov


@dataclass
class MomentTrajectory:
    """Sampled moment history: times[k] goes with means[k] and covs[k]."""

    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def final(self) -> GaussianState:
        return GaussianState(mean=self.means[-1], cov=self.covs[-1])


def _moment_rhs(mean, cov, a, d):
    return a @ mean, a @ cov + cov @ a.T + d


def evolve_moments(
    state: GaussianState,
    dd: DriftDiffusion,
    t_final: float,
    dt: float,
    sample_cadence: float | None = None,
) -> MomentTrajectory:
    """Integrate the moment ODEs with fixed-step RK4.

    The step is shrunk to land exactly on t_final. sample_cadence sets the
    approximate spacing of recorded samples (None records only the endpoints);
    the initial and final states are always recorded.

    Raises IntegrationError when dt resolves the drift poorly
    (dt * max|eig(A)| > 0.1) and when a sampled covariance stops being
    physical, which points at an unphysical input state.
    """
    if t_final < 0.0:
        raise ParameterError(f"t_final must be non-negative, got {t_final}")
    if dt <= 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if not state.is_physical():
        raise IntegrationError(
            f"initial covariance is unphysical (det = {np.linalg.det(state.cov):g} < 1)"
        )
    a, d = dd.drift, dd.diffusion
    rate = float(np.max(np.abs(np.linalg.eigvals(a))))
    if dt * rate > 0.1:
        raise IntegrationError(
            f"dt = {dt:g} too coarse for drift scale {rate:g} (need dt <= {0.1 / rate:g})"
        )
    if t_final == 0.0:
        return MomentTrajectory(
            times=np.zeros(1), means=state.mean[None, :].copy(), covs=state.cov[None, :, :].copy()
        )
    n_steps = max(1, math.ceil(t_final / dt - 1e-12))
    dt = t_final / n_steps
    stride = 1 if sample_cadence is None else max(1, round(sample_cadence / dt))
    if sample_cadence is None:
        stride = n_steps  # endpoints only

    mean = state.mean.copy()
    cov = state.cov.copy()
    times = [0.0]
    means = [mean.copy()]
    covs = [cov.copy()]
    for k in range(1, n_steps + 1):
        km1, kc1 = _moment_rhs(mean, cov, a, d)
        km2, kc2 = _moment_rhs(mean + 0.5 * dt * km1, cov + 0.5 * dt * kc1, a, d)
        km3, kc3 = _moment_rhs(mean + 0.5 * dt * km2, cov + 0.5 * dt * kc2, a, d)
        km4, kc4 = _moment_rhs(mean + dt * km3, cov + dt * kc3, a, d)
        mean = mean + (dt / 6.0) * (km1 + 2.0 * km2 + 2.0 * km3 + km4)
        cov = cov + (dt / 6.0) * (kc1 + 2.0 * kc2 + 2.0 * kc3 + kc4)
        if k % stride == 0 or k == n_steps:
            cov = 0.5 * (cov + cov.T)  # shed antisymmetric roundoff
            if np.linalg.det(cov) < 1.0 - _DET_TOL:
                raise IntegrationError(
                    f"covariance turned unphysical at t = {k * dt:g} (det = {np.linalg.det(cov):g})"
                )
            times.append(k * dt)
            means.append(mean.copy())
            covs.append(cov.copy())
    return MomentTrajectory(times=np.array(times), means=np.array(means), covs=np.array(covs))
