"""Measurement-and-reset feedback protocol on the joint qubit-oscillator state.

One protocol cycle is: evolve the joint state under the full transverse
Hamiltonian for an interval dt_measure, projectively measure the qubit in its
energy basis, and flip it back to the excited state whenever the ground state
was found. Averaged over outcomes the cycle acts as

    rho -> (P_e rho P_e + flip P_g rho P_g flip) = rho_osc' (x) |e><e|

which leaves the reduced oscillator state untouched while pinning the qubit
back onto the branch whose effective potential stiffens x1. Measuring at
multiples of the qubit period (dt_measure = 2 pi p / omega_a) disturbs the
oscillator least and gives the strongest steady-state squeezing.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fock
from .fock import FockSpace, operators
from .model import ParameterError, SystemParams, validate
from .observables import QuadratureMoments, purity, quadrature_moments, reduce_to_oscillator

__all__ = [
    "FeedbackSchedule",
    "ProtocolRecord",
    "ProtocolRun",
    "SweepPoint",
    "measure_and_reset",
    "run_protocol",
    "optimal_dt",
    "detect_steady_state",
    "sweep_dt",
]

# Measurement branches with probability below this are dropped (with a
# warning when not exactly zero); they carry no usable state.
BRANCH_TOL = 1e-14


@dataclass(frozen=True)
class FeedbackSchedule:
    """Measurement cadence: n_intervals evenly spaced measurements, one every
    dt_measure. enabled=False keeps the measurement clock but skips the
    corrective flip, giving an aligned no-feedback reference."""

    dt_measure: float
    n_intervals: int
    enabled: bool = True

    def __post_init__(self):
        if not self.dt_measure > 0.0:
            raise ParameterError(f"dt_measure must be positive, got {self.dt_measure}")
        if self.n_intervals < 1:
            raise ParameterError(f"n_intervals must be at least 1, got {self.n_intervals}")

    @property
    def horizon(self) -> float:
        return self.dt_measure * self.n_intervals


@dataclass(frozen=True)
class ProtocolRecord:
    """State summary at one measurement time (post-reset when feedback is on).

    p_e is the excited-state population found by the measurement; moments and
    osc_purity describe the reduced oscillator state, which the averaged
    measure-and-reset map does not change.
    """

    time: float
    p_e: float
    moments: QuadratureMoments
    osc_purity: float


@dataclass
class ProtocolRun:
    """Protocol output: per-measurement records, the final joint state, and
    reduced-oscillator snapshots at the requested times (keyed by the actual
    cycle-boundary time they were taken at)."""

    records: list
    final_joint: np.ndarray
    snapshots: dict

    def times(self) -> np.ndarray:
        return np.array([rec.time for rec in self.records])

    def series(self, field: str) -> np.ndarray:
        if field == "p_e":
            return np.array([rec.p_e for rec in self.records])
        if field == "purity":
            return np.array([rec.osc_purity for rec in self.records])
        return np.array([getattr(rec.moments, field) for rec in self.records])


def measure_and_reset(rho: np.ndarray, space: FockSpace) -> tuple[np.ndarray, float, float]:
    """Projective qubit measurement averaged over outcomes, then reset to |e>.

    Returns (post-reset joint state, p_e, p_g). The output is exactly
    (oscillator marginal) (x) |e><e| built from the unnormalized qubit blocks,
    so the oscillator reduced state and the total trace are preserved without
    ever dividing by an outcome probability. Branches with probability at or
    below 1e-14 are dropped, with a warning unless exactly zero.
    """
    n = space.dim
    if rho.shape != (2 * n, 2 * n):
        raise ParameterError(
            f"measure_and_reset needs a joint state of shape {(2 * n, 2 * n)}, got {rho.shape}"
        )
    r4 = rho.reshape(2, n, 2, n)
    blocks = {"excited": r4[0, :, 0, :], "ground": r4[1, :, 1, :]}
    probs = {}
    osc_sum = np.zeros((n, n), dtype=complex)
    for name, block in blocks.items():
        p = float(np.trace(block).real)
        if p < 0.0:
            p = 0.0  # roundoff from a PSD block
        probs[name] = p
        if p > BRANCH_TOL:
            osc_sum += block
        elif p > 0.0:
            warnings.warn(
                f"dropping {name} measurement branch with probability {p:.3g}",
                stacklevel=2,
            )
    out = np.zeros_like(rho)
    out.reshape(2, n, 2, n)[0, :, 0, :] = osc_sum
    return out, probs["excited"], probs["ground"]


def optimal_dt(params: SystemParams, p: int = 1) -> float:
    """Measurement spacing that least disturbs the oscillator: p qubit periods."""
    validate(params)
    if not (isinstance(p, int) and p >= 1):
        raise ParameterError(f"p must be a positive integer, got {p}")
    return 2.0 * math.pi * p / params.omega_a


def run_protocol(
    params: SystemParams,
    space: FockSpace,
    schedule: FeedbackSchedule,
    initial_osc: np.ndarray | None = None,
    dt: float | None = None,
    snapshot_times: tuple[float, ...] = (),
) -> ProtocolRun:
    """Run the feedback protocol from |e><e| (x) initial oscillator state.

    Free evolution between measurements uses the full transverse Hamiltonian
    and the damped master equation. initial_osc defaults to the thermal state
    at params.n_th. Records start with a time-zero entry (p_e = 1 by
    preparation) followed by one entry per measurement. snapshot_times are
    rounded to the nearest cycle boundary and the reduced oscillator state is
    stored there.

    With schedule.enabled False the qubit is still measured on the same
    clock (projectively, averaged over outcomes) but the corrective flip is
    skipped. That is the physically comparable reference: the measurement
    record exists either way, only the conditioning is dropped. The |g>
    branch then squeezes the opposite quadrature and the outcome mixture
    washes the squeezing out into a bounded, steady, high-variance state.
    (Leaving the qubit completely unmeasured is a different experiment: the
    coherent dressing pumps the oscillator without saturating on these
    timescales, so no fixed cutoff stays valid to the default horizon.)
    """
    validate(params)
    ops = operators(space)
    if initial_osc is None:
        initial_osc = fock.thermal_state(params.n_th, space)
    fock.assert_density_matrix(initial_osc, atol_trace=1e-9)
    if initial_osc.shape != (space.dim, space.dim):
        raise ParameterError(
            f"initial_osc must be oscillator-only of shape {(space.dim, space.dim)}, "
            f"got {initial_osc.shape}"
        )
    h = fock.build_h1(params, space)
    excited = np.zeros((2, 2), dtype=complex)
    excited[0, 0] = 1.0
    rho = np.kron(excited, initial_osc)

    snap_index = {}
    for t_req in snapshot_times:
        k = int(np.clip(round(t_req / schedule.dt_measure), 0, schedule.n_intervals))
        snap_index.setdefault(k, t_req)

    def snapshot(k: int, state: np.ndarray) -> None:
        if k in snap_index:
            run.snapshots[k * schedule.dt_measure] = reduce_to_oscillator(state, space).copy()

    run = ProtocolRun(records=[], final_joint=rho, snapshots={})
    osc0 = reduce_to_oscillator(rho, space)
    run.records.append(
        ProtocolRecord(
            time=0.0,
            p_e=1.0,
            moments=quadrature_moments(osc0, ops),
            osc_purity=purity(osc0),
        )
    )
    snapshot(0, rho)

    for k in range(1, schedule.n_intervals + 1):
        for _, state in fock.iter_evolve(
            rho, h, params, space, schedule.dt_measure, dt=dt, sample_cadence=None
        ):
            rho = state
        if schedule.enabled:
            rho, p_e, _ = measure_and_reset(rho, space)
        else:
            # measurement without the flip: drop qubit coherences, keep blocks
            r4 = rho.reshape(2, space.dim, 2, space.dim).copy()
            p_e = float(np.trace(r4[0, :, 0, :]).real)
            r4[0, :, 1, :] = 0.0
            r4[1, :, 0, :] = 0.0
            rho = r4.reshape(2 * space.dim, 2 * space.dim)
        osc = reduce_to_oscillator(rho, space)
        run.records.append(
            ProtocolRecord(
                time=k * schedule.dt_measure,
                p_e=p_e,
                moments=quadrature_moments(osc, ops),
                osc_purity=purity(osc),
            )
        )
        snapshot(k, rho)
    run.final_joint = rho
    return run


def detect_steady_state(
    values: np.ndarray, window: int = 20, rel_tol: float = 1e-3
) -> tuple[bool, float]:
    """Trailing-window convergence check.

    Returns (converged, mean of the trailing window). Converged means the
    window's spread (max - min) is below rel_tol times the window mean's
    magnitude. Raises on windows shorter than 2 or series shorter than the
    window; too little data is an error, not a verdict.
    """
    values = np.asarray(values, dtype=float)
    if window < 2:
        raise ParameterError(f"window must be at least 2, got {window}")
    if values.ndim != 1 or values.size < window:
        raise ParameterError(
            f"need at least window = {window} samples to judge convergence, got {values.size}"
        )
    tail = values[-window:]
    mean = float(tail.mean())
    spread = float(tail.max() - tail.min())
    return spread <= rel_tol * abs(mean), mean


@dataclass(frozen=True)
class SweepPoint:
    """Steady-state summary at one measurement spacing; unconverged points
    keep their flag and carry NaN observables rather than a fabricated value."""

    dt_measure: float
    converged: bool
    var_x1: float
    var_x2: float
    cov_x1x2: float
    osc_purity: float
    p_e: float


def _steady_value(run: ProtocolRun, field: str, window: int, rel_tol: float) -> tuple[bool, float]:
    series = run.series(field)[1:]  # drop the preparation entry
    ok, value = detect_steady_state(series, window=window, rel_tol=rel_tol)
    return ok, value


def _sweep_one(args) -> SweepPoint:
    params, space, dtm, horizon, window, rel_tol, dt = args
    n_intervals = max(window, math.ceil(horizon / dtm - 1e-12))
    run = run_protocol(
        params, space, FeedbackSchedule(dt_measure=dtm, n_intervals=n_intervals), dt=dt
    )
    ok, var1 = _steady_value(run, "var_x1", window, rel_tol)
    if not ok:
        return SweepPoint(
            dt_measure=dtm,
            converged=False,
            var_x1=math.nan,
            var_x2=math.nan,
            cov_x1x2=math.nan,
            osc_purity=math.nan,
            p_e=math.nan,
        )
    return SweepPoint(
        dt_measure=dtm,
        converged=True,
        var_x1=var1,
        var_x2=_steady_value(run, "var_x2", window, rel_tol)[1],
        cov_x1x2=_steady_value(run, "cov_x1x2", window, rel_tol)[1],
        osc_purity=_steady_value(run, "purity", window, rel_tol)[1],
        p_e=_steady_value(run, "p_e", window, rel_tol)[1],
    )


def sweep_dt(
    params: SystemParams,
    space: FockSpace,
    dt_values,
    horizon: float,
    window: int = 20,
    rel_tol: float = 1e-3,
    dt: float | None = None,
    n_workers: int = 1,
) -> list[SweepPoint]:
    """Steady-state squeezing versus measurement spacing.

    Each spacing runs the full protocol to the given horizon (at least
    `window` intervals) and reports trailing-window steady values. Results
    come back in the order of dt_values regardless of n_workers, and a
    parallel run produces bit-identical numbers to a sequential one.
    """
    validate(params)
    jobs = [(params, space, float(dtm), horizon, window, rel_tol, dt) for dtm in dt_values]
    for _, _, dtm, *_ in jobs:
        if dtm <= 0.0:
            raise ParameterError(f"dt_measure values must be positive, got {dtm}")
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(job) for job in jobs]
