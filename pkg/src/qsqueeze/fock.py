"""Truncated-Fock simulation of the damped qubit-oscillator system.

States are plain complex ndarrays: density matrices of shape (N, N) for the
oscillator alone or (2N, 2N) for qubit (x) oscillator, with the qubit factor
first and qubit index 0 meaning the excited state (sigma_z = diag(+1, -1)).
The oscillator basis is the number basis |0>, ..., |N-1> with cutoff N.

Dissipation acts on the oscillator only, with downward rate gamma (n_th + 1)
through the annihilation operator and upward rate gamma n_th through the
creation operator. The master equation right-hand side is linear and
trace-free, so fixed-step RK4 preserves the trace to roundoff; the cutoff is
the one approximation that needs watching, and evolve guards it by checking
the top Fock level population at every sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .gaussian import IntegrationError
from .model import ParameterError, SystemParams, validate

__all__ = [
    "FockSpace",
    "OperatorSet",
    "FockTrajectory",
    "CutoffError",
    "operators",
    "number_state",
    "vacuum_state",
    "thermal_state",
    "coherent_state",
    "displacement",
    "displacement_diagonals",
    "build_h1",
    "build_h_eff",
    "lindblad_rhs",
    "assert_density_matrix",
    "iter_evolve",
    "evolve",
]

# Thermal tail mass above the cutoff must stay below this for a truncated
# thermal state to be trustworthy.
THERMAL_TAIL_TOL = 1e-6

# Population threshold at the top Fock level beyond which truncation error
# is assumed to contaminate the run.
TOP_LEVEL_TOL = 1e-6

# Trace is an exact invariant of the flow; drift beyond this over a run
# means the integration left its accuracy envelope.
TRACE_DRIFT_TOL = 1e-8


class CutoffError(RuntimeError):
    """The Fock cutoff is too small for the requested state or evolution."""


@dataclass(frozen=True)
class FockSpace:
    """Truncated oscillator Hilbert space with levels |0> ... |cutoff-1>."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 2:
            raise ParameterError(f"cutoff must be at least 2, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff

    @property
    def joint_dim(self) -> int:
        return 2 * self.cutoff


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class OperatorSet:
    """Frequently used operators on one Fock space, all read-only arrays.

    Oscillator operators are (N, N); qubit operators are (2, 2). Joint-space
    embeddings come from lift_osc / lift_qubit, with the qubit factor first.
    """

    space: FockSpace
    a: np.ndarray
    adag: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    number: np.ndarray
    eye_osc: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray
    eye_qubit: np.ndarray

    def lift_osc(self, op: np.ndarray) -> np.ndarray:
        """Embed an oscillator operator into the joint space."""
        return np.kron(self.eye_qubit, op)

    def lift_qubit(self, op: np.ndarray) -> np.ndarray:
        """Embed a qubit operator into the joint space."""
        return np.kron(op, self.eye_osc)


def operators(space: FockSpace) -> OperatorSet:
    n = space.cutoff
    a = np.zeros((n, n), dtype=complex)
    a[np.arange(n - 1), np.arange(1, n)] = np.sqrt(np.arange(1, n))
    adag = a.conj().T.copy()
    x1 = a + adag
    x2 = 1j * (adag - a)
    return OperatorSet(
        space=space,
        a=_readonly(a),
        adag=_readonly(adag),
        x1=_readonly(x1),
        x2=_readonly(x2),
        number=_readonly(adag @ a),
        eye_osc=_readonly(np.eye(n, dtype=complex)),
        sx=_readonly(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)),
        sy=_readonly(np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)),
        sz=_readonly(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)),
        sp=_readonly(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)),
        sm=_readonly(np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)),
        eye_qubit=_readonly(np.eye(2, dtype=complex)),
    )


def number_state(k: int, space: FockSpace) -> np.ndarray:
    """Density matrix |k><k|."""
    if not 0 <= k < space.cutoff:
        raise ParameterError(f"level {k} outside the cutoff {space.cutoff}")
    rho = np.zeros((space.cutoff, space.cutoff), dtype=complex)
    rho[k, k] = 1.0
    return rho


def vacuum_state(space: FockSpace) -> np.ndarray:
    return number_state(0, space)


def suggested_cutoff(n_th: float, tail_tol: float = THERMAL_TAIL_TOL) -> int:
    """Smallest cutoff whose truncated thermal tail mass stays below tail_tol."""
    if n_th <= 0.0:
        return 2
    q = n_th / (1.0 + n_th)
    return max(2, math.ceil(math.log(tail_tol) / math.log(q)))


def thermal_state(n_th: float, space: FockSpace) -> np.ndarray:
    """Truncated thermal density matrix, renormalized to unit trace.

    Diagonal entries follow the geometric law p_n proportional to
    (n_th/(1+n_th))^n. The mass the truncation discards is (n_th/(1+n_th))^N
    exactly; if that reaches THERMAL_TAIL_TOL the state is not representable
    at this cutoff and a CutoffError suggests a sufficient one.
    """
    if n_th < 0.0:
        raise ParameterError(f"n_th must be non-negative, got {n_th}")
    n = space.cutoff
    if n_th == 0.0:
        return vacuum_state(space)
    q = n_th / (1.0 + n_th)
    tail = q**n
    if tail >= THERMAL_TAIL_TOL:
        raise CutoffError(
            f"cutoff {n} leaves thermal tail mass {tail:.3g} at n_th = {n_th:g}; "
            f"use cutoff >= {suggested_cutoff(n_th)}"
        )
    p = (1.0 - q) * q ** np.arange(n)
    p /= p.sum()  # exact unit trace after truncation
    return np.diag(p).astype(complex)


def _log_factorials(n: int) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, n)))))  # [k] = ln k!


def displacement_diagonals(beta: complex, n: int) -> np.ndarray:
    """Magnitude table G of the displacement operator along Fock diagonals.

    G[k, d] together with the phase factors exp(+- i d arg(beta)) gives the
    exact matrix elements <k+d| D(beta) |k> = G[k, d] e^{i d arg(beta)} and
    <k| D(beta) |k+d> = G[k, d] (-e^{-i arg(beta)})^d for all k + d < n;
    entries with k + d >= n are filler. Built by the three-term recurrence of
    the factorial-scaled associated Laguerre functions, which tracks the
    dominant solution upward in k and is numerically stable where the entries
    are non-negligible (absolute errors stay at roundoff everywhere).
    """
    x = abs(beta) ** 2
    d = np.arange(n, dtype=float)
    lf = _log_factorials(n)
    g = np.empty((n, n))
    # seeds <d| D |0>: |beta|^d e^{-x/2} / sqrt(d!), all in one exp
    g[0] = np.exp(d * math.log(abs(beta)) - 0.5 * lf - 0.5 * x) if x > 0.0 else (d == 0.0)
    if n > 1:
        g[1] = (d + 1.0 - x) / np.sqrt(d + 1.0) * g[0]
        for k in range(1, n - 1):
            g[k + 1] = (
                (2.0 * k + 1.0 + d - x) * g[k] - math.sqrt(k) * np.sqrt(k + d) * g[k - 1]
            ) / (math.sqrt(k + 1.0) * np.sqrt(k + 1.0 + d))
    return g


def displacement(alpha: complex, space: FockSpace) -> np.ndarray:
    """Displacement operator in the truncated number basis.

    Every entry equals the exact infinite-dimensional matrix element
    <m| D(alpha) |n| (the truncation does not perturb entries, it only drops
    rows/columns), so columns of low-occupancy states are exact; unitarity
    still degrades near the cutoff for large |alpha|, since the displaced
    top levels leave the retained space.
    """
    n = space.cutoff
    alpha = complex(alpha)
    if alpha == 0.0:
        return np.eye(n, dtype=complex)
    g = displacement_diagonals(alpha, n)
    phase = alpha / abs(alpha)
    out = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    out[rows, rows] = g[:, 0]
    for dd in range(1, n):
        length = n - dd
        vals = g[:length, dd]
        out[rows[dd:], rows[:length]] = vals * phase**dd
        out[rows[:length], rows[dd:]] = vals * (-np.conj(phase)) ** dd
    return out


def coherent_state(alpha: complex, space: FockSpace) -> np.ndarray:
    """Density matrix of the coherent state D(alpha)|0>."""
    psi = displacement(alpha, space)[:, 0]
    norm = float(np.vdot(psi, psi).real)
    if norm < 1.0 - THERMAL_TAIL_TOL:
        raise CutoffError(
            f"cutoff {space.cutoff} truncates coherent amplitude |alpha| = {abs(alpha):g} "
            f"(captured norm {norm:.8f})"
        )
    psi = psi / math.sqrt(norm)
    return np.outer(psi, psi.conj())


def build_h1(params: SystemParams, space: FockSpace) -> np.ndarray:
    """Full transverse-coupling Hamiltonian on the joint space.

    (omega_a/2) sigma_z + omega_m (a^dag a + 1/2) + g sigma_x (a + a^dag).
    """
    validate(params)
    ops = operators(space)
    return (
        0.5 * params.omega_a * ops.lift_qubit(ops.sz)
        + params.omega_m * ops.lift_osc(ops.number + 0.5 * ops.eye_osc)
        + params.g * np.kron(ops.sx, ops.x1)
    )


def build_h_eff(params: SystemParams, space: FockSpace) -> np.ndarray:
    """Dispersive-regime Hamiltonian on the joint space.

    omega_m a^dag a + (g^2/omega_a) sigma_z x1^2; commutes with sigma_z, so
    the qubit populations are conserved and each qubit branch sees a
    quadratic oscillator Hamiltonian with opposite x1^2 shifts.
    """
    validate(params)
    ops = operators(space)
    return params.omega_m * ops.lift_osc(ops.number) + (params.g**2 / params.omega_a) * np.kron(
        ops.sz, ops.x1 @ ops.x1
    )


def _osc_collapse(rho_dim: int, ops: OperatorSet) -> np.ndarray:
    if rho_dim == ops.space.joint_dim:
        return ops.lift_osc(ops.a)
    if rho_dim == ops.space.dim:
        return np.asarray(ops.a)
    raise ParameterError(
        f"state dimension {rho_dim} matches neither the oscillator ({ops.space.dim}) "
        f"nor the joint space ({ops.space.joint_dim})"
    )


def lindblad_rhs(
    rho: np.ndarray, h: np.ndarray, params: SystemParams, ops: OperatorSet
) -> np.ndarray:
    """Master-equation right-hand side in its textbook form.

    Works on oscillator-only or joint states, chosen by dimension; h must
    match rho. Thermal damping enters through the oscillator annihilation
    operator at rate gamma (n_th + 1) and the creation operator at rate
    gamma n_th. This is the readable reference implementation; evolve uses
    an algebraically identical rearrangement tuned for the inner loop.
    """
    if rho.shape != h.shape:
        raise ParameterError(f"state shape {rho.shape} and Hamiltonian shape {h.shape} differ")
    c = _osc_collapse(rho.shape[0], ops)
    out = -1j * (h @ rho - rho @ h)
    if params.gamma > 0.0:
        for rate, op in (
            (params.gamma * (params.n_th + 1.0), c),
            (params.gamma * params.n_th, c.conj().T),
        ):
            if rate == 0.0:
                continue
            opd = op.conj().T
            opd_op = opd @ op
            out += rate * (op @ rho @ opd - 0.5 * (opd_op @ rho + rho @ opd_op))
    return out


def assert_density_matrix(
    rho: np.ndarray,
    atol_herm: float = 1e-10,
    atol_trace: float = 1e-12,
    atol_psd: float = 1e-10,
    check_psd: bool = True,
) -> None:
    """Raise if rho is not Hermitian, unit-trace, and positive semidefinite."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ParameterError(f"density matrix must be square, got shape {rho.shape}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > atol_herm:
        raise ParameterError(f"state is not Hermitian (max deviation {herm:.3g})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > atol_trace:
        raise ParameterError(f"state trace is {tr:.15g}, expected 1")
    if check_psd:
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if float(lam.min()) < -atol_psd:
            raise ParameterError(f"state has negative eigenvalue {lam.min():.3g}")


class _FastRHS:
    """Precomputed master-equation RHS for the RK4 loop.

    Folds the anticommutator halves into a non-Hermitian Hamiltonian
    H_nh = H - (i/2)(gamma (n_th+1) a^dag a + gamma n_th a a^dag) so each
    evaluation is one matmul plus O(N^2) sliced jump terms; assumes rho is
    Hermitian, which holds for every RK4 stage input up to roundoff because
    the flow preserves Hermiticity.
    """

    def __init__(self, h: np.ndarray, params: SystemParams, ops: OperatorSet):
        n = ops.space.dim
        dim = h.shape[0]
        self.blocks = dim // n  # 1 oscillator-only, 2 joint
        self.n = n
        gam, nth = params.gamma, params.n_th
        self.rate_down = gam * (nth + 1.0)
        self.rate_up = gam * nth
        adag_a = ops.adag @ ops.a
        a_adag = ops.a @ ops.adag
        damp = 0.5j * (self.rate_down * adag_a + self.rate_up * a_adag)
        if self.blocks == 2:
            damp = ops.lift_osc(damp)
        self.h_nh = h - damp
        # jump-term weights sqrt((m+1)(n+1)), shared by both ladder directions
        w = np.sqrt(np.arange(1.0, n))
        self.w_outer = (w[:, None] * w[None, :])[None, :, None, :]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        m = self.h_nh @ rho
        out = -1j * (m - m.conj().T)
        if self.rate_down > 0.0 or self.rate_up > 0.0:
            q, n = self.blocks, self.n
            r4 = rho.reshape(q, n, q, n)
            o4 = out.reshape(q, n, q, n)
            if self.rate_down > 0.0:
                o4[:, :-1, :, :-1] += (self.rate_down * self.w_outer) * r4[:, 1:, :, 1:]
            if self.rate_up > 0.0:
                o4[:, 1:, :, 1:] += (self.rate_up * self.w_outer) * r4[:, :-1, :, :-1]
        return out

    def stability_scale(self) -> float:
        # max row sum bounds the spectral radius of H_nh
        return float(np.max(np.sum(np.abs(self.h_nh), axis=1)))


def _top_population(rho: np.ndarray, blocks: int, n: int) -> float:
    r4 = rho.reshape(blocks, n, blocks, n)
    return float(sum(r4[q, n - 1, q, n - 1].real for q in range(blocks)))


def default_step(params: SystemParams) -> float:
    """Default integrator step: one hundredth of the qubit period."""
    return (2.0 * math.pi / params.omega_a) / 100.0


def iter_evolve(
    rho: np.ndarray,
    h: np.ndarray,
    params: SystemParams,
    space: FockSpace,
    t_final: float,
    dt: float | None = None,
    sample_cadence: float | None = None,
) -> Iterator[tuple[float, np.ndarray]]:
    """Integrate the master equation, yielding (t, rho) at sample times.

    Fixed-step RK4; the step is shrunk to land exactly on t_final and
    defaults to a hundredth of the qubit period. Yields the initial state,
    one sample roughly every sample_cadence (None: endpoints only), and the
    final state. The yielded array is the live integration buffer; copy it
    to keep it. Re-Hermitizes after every step.

    Raises CutoffError when the top Fock level holds more than 1e-6
    population at a sample, and IntegrationError for a stability-violating
    step or trace drift beyond 1e-8 over the run.
    """
    validate(params)
    if t_final < 0.0:
        raise ParameterError(f"t_final must be non-negative, got {t_final}")
    if dt is None:
        dt = default_step(params)
    if dt <= 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if rho.shape != h.shape:
        raise ParameterError(f"state shape {rho.shape} and Hamiltonian shape {h.shape} differ")
    assert_density_matrix(rho, atol_trace=1e-9)
    rhs = _FastRHS(h, params, ops=operators(space))
    if rho.shape[0] != rhs.blocks * space.dim:
        raise ParameterError(
            f"state dimension {rho.shape[0]} does not match cutoff {space.cutoff}"
        )
    if dt * rhs.stability_scale() > 1.0:
        raise IntegrationError(
            f"dt = {dt:g} is outside the stable-step envelope for this Hamiltonian "
            f"(need dt <= {1.0 / rhs.stability_scale():g})"
        )
    return _evolve_gen(rho.astype(complex).copy(), rhs, space, t_final, dt, sample_cadence)


def _evolve_gen(
    rho: np.ndarray,
    rhs: _FastRHS,
    space: FockSpace,
    t_final: float,
    dt: float,
    sample_cadence: float | None,
) -> Iterator[tuple[float, np.ndarray]]:
    trace0 = float(np.trace(rho).real)

    def checked(t: float, state: np.ndarray) -> tuple[float, np.ndarray]:
        top = _top_population(state, rhs.blocks, space.dim)
        if top > TOP_LEVEL_TOL:
            raise CutoffError(
                f"top Fock level population {top:.3g} at t = {t:g} exceeds {TOP_LEVEL_TOL:g}; "
                "increase the cutoff"
            )
        return t, state

    yield checked(0.0, rho)
    if t_final > 0.0:
        n_steps = max(1, math.ceil(t_final / dt - 1e-12))
        dt = t_final / n_steps
        stride = n_steps if sample_cadence is None else max(1, round(sample_cadence / dt))
        for k in range(1, n_steps + 1):
            k1 = rhs(rho)
            k2 = rhs(rho + (0.5 * dt) * k1)
            k3 = rhs(rho + (0.5 * dt) * k2)
            k4 = rhs(rho + dt * k3)
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            rho = 0.5 * (rho + rho.conj().T)
            if k % stride == 0 or k == n_steps:
                yield checked(k * dt, rho)
    drift = abs(float(np.trace(rho).real) - trace0)
    if drift > TRACE_DRIFT_TOL:
        raise IntegrationError(
            f"trace drifted by {drift:.3g} over the run (tolerance {TRACE_DRIFT_TOL:g}); "
            "the step is too coarse for this system"
        )


@dataclass
class FockTrajectory:
    """Sampled density-matrix history; states[k] is the state at times[k]."""

    times: np.ndarray
    states: list

    def final(self) -> np.ndarray:
        return self.states[-1]


def evolve(
    rho: np.ndarray,
    h: np.ndarray,
    params: SystemParams,
    space: FockSpace,
    t_final: float,
    dt: float | None = None,
    sample_cadence: float | None = None,
) -> FockTrajectory:
    """Integrate the master equation and keep copies of the sampled states.

    Same contract as iter_evolve; use iter_evolve directly for long runs
    where storing every sample would be wasteful.
    """
    times = []
    states = []
    for t, state in iter_evolve(rho, h, params, space, t_final, dt, sample_cadence):
        times.append(t)
        states.append(state.copy())
    return FockTrajectory(times=np.array(times), states=states)
