"""Engine dispatch, time-series assembly, and deterministic file output.

Every engine reduces to the same TimeSeries shape so the CSV schema is
uniform: t, var_x1, var_x2, cov, var_x1_db, var_x1_renorm_db, purity, p_e.
The p_e field carries values only for the feedback engines and stays blank
otherwise. All numeric formatting is %.12g and nothing in any output depends
on wall-clock time, so reruns of the same config are byte-identical.
"""
from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import fock, gaussian
from .config import FEEDBACK_ENGINES, ConfigError, ExperimentConfig
from .feedback import FeedbackSchedule, detect_steady_state, run_protocol
from .fock import FockSpace, operators
from .model import SystemParams
from .observables import (
    WignerGrid,
    gaussian_purity,
    purity,
    quadrature_moments,
    reduce_to_oscillator,
    renormalize,
    to_db,
    wigner_grid,
)

__all__ = [
    "TimeSeries",
    "SteadySummary",
    "ExperimentResult",
    "run_experiment",
    "run_many",
    "run_sweep",
    "sweep_axis_values",
    "write_timeseries_csv",
    "write_wigner_file",
    "read_wigner_file",
    "write_sweep_csv",
    "write_manifest",
    "TIMESERIES_COLUMNS",
    "SWEEP_COLUMNS",
]

TIMESERIES_COLUMNS = (
    "t",
    "var_x1",
    "var_x2",
    "cov",
    "var_x1_db",
    "var_x1_renorm_db",
    "purity",
    "p_e",
)

SWEEP_COLUMNS = (
    "axis",
    "value",
    "converged",
    "var_x1",
    "var_x2",
    "cov",
    "purity",
    "p_e",
    "var_x1_db",
    "var_x1_renorm_db",
    "error",
)


@dataclass
class TimeSeries:
    """Uniform sampled output of any engine; p_e is None except for feedback runs."""

    label: str
    engine: str
    n_th: float
    t: np.ndarray
    var_x1: np.ndarray
    var_x2: np.ndarray
    cov_x1x2: np.ndarray
    purity: np.ndarray
    p_e: np.ndarray | None = None

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("time samples must be strictly increasing")


@dataclass(frozen=True)
class SteadySummary:
    """Trailing-window steady values of every column; converged follows var_x1."""

    converged: bool
    var_x1: float
    var_x2: float
    cov_x1x2: float
    purity: float
    p_e: float  # NaN for engines without measurements
    var_x1_db: float
    var_x1_renorm_db: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    timeseries: TimeSeries
    steady: SteadySummary | None
    wigners: dict


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _run_gaussian(cfg: ExperimentConfig) -> TimeSeries:
    params = cfg.params
    h = gaussian.build_effective_hamiltonian_matrix(params, qubit_sign=cfg.qubit_sign)
    dd = gaussian.build_drift_diffusion(params, h)
    dt = cfg.dt if cfg.dt is not None else (2.0 * math.pi / params.omega_a) / 200.0
    traj = gaussian.evolve_moments(
        gaussian.thermal(params.n_th), dd, cfg.horizon, dt, cfg.sample_cadence
    )
    covs = traj.covs
    return TimeSeries(
        label=cfg.label,
        engine=cfg.engine,
        n_th=params.n_th,
        t=traj.times,
        var_x1=covs[:, 0, 0].copy(),
        var_x2=covs[:, 1, 1].copy(),
        cov_x1x2=covs[:, 0, 1].copy(),
        purity=np.array([gaussian_purity(c) for c in covs]),
    )


def _run_fock_full(cfg: ExperimentConfig) -> TimeSeries:
    params = cfg.params
    space = FockSpace(cfg.resolved_cutoff)
    ops = operators(space)
    rho0 = np.kron(np.diag([1.0, 0.0]).astype(complex), fock.thermal_state(params.n_th, space))
    h = fock.build_h1(params, space)
    rows = []
    for t, state in fock.iter_evolve(
        rho0, h, params, space, cfg.horizon, dt=cfg.dt, sample_cadence=cfg.sample_cadence
    ):
        osc = reduce_to_oscillator(state, space)
        mom = quadrature_moments(osc, ops)
        rows.append((t, mom.var_x1, mom.var_x2, mom.cov_x1x2, purity(osc)))
    arr = np.array(rows)
    return TimeSeries(
        label=cfg.label,
        engine=cfg.engine,
        n_th=params.n_th,
        t=arr[:, 0],
        var_x1=arr[:, 1],
        var_x2=arr[:, 2],
        cov_x1x2=arr[:, 3],
        purity=arr[:, 4],
    )


def _run_feedback(cfg: ExperimentConfig) -> tuple[TimeSeries, dict]:
    params = cfg.params
    space = FockSpace(cfg.resolved_cutoff)
    dtm = cfg.resolved_dt_measure
    schedule = FeedbackSchedule(
        dt_measure=dtm,
        n_intervals=max(1, math.ceil(cfg.horizon / dtm - 1e-12)),
        enabled=cfg.engine == "fock_feedback",
    )
    snapshot_times = cfg.wigner.times if (cfg.wigner and "wigner" in cfg.outputs) else ()
    run = run_protocol(params, space, schedule, dt=cfg.dt, snapshot_times=snapshot_times)
    ts = TimeSeries(
        label=cfg.label,
        engine=cfg.engine,
        n_th=params.n_th,
        t=run.times(),
        var_x1=run.series("var_x1"),
        var_x2=run.series("var_x2"),
        cov_x1x2=run.series("cov_x1x2"),
        purity=run.series("purity"),
        p_e=run.series("p_e"),
    )
    wigners = {}
    if snapshot_times:
        half = cfg.wigner.extent
        axis = np.linspace(-half, half, cfg.wigner.points)
        for t_snap in sorted(run.snapshots):
            wigners[t_snap] = wigner_grid(run.snapshots[t_snap], axis, axis, space)
    return ts, wigners


def _steady_summary(ts: TimeSeries, window: int, rel_tol: float) -> SteadySummary:
    converged, var1 = detect_steady_state(ts.var_x1, window=window, rel_tol=rel_tol)

    def tail_mean(arr: np.ndarray) -> float:
        return float(arr[-window:].mean())

    return SteadySummary(
        converged=converged,
        var_x1=var1,
        var_x2=tail_mean(ts.var_x2),
        cov_x1x2=tail_mean(ts.cov_x1x2),
        purity=tail_mean(ts.purity),
        p_e=tail_mean(ts.p_e) if ts.p_e is not None else math.nan,
        var_x1_db=to_db(var1),
        var_x1_renorm_db=to_db(renormalize(var1, ts.n_th)),
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute one config and derive whatever outputs it requested."""
    if cfg.engine == "gaussian_effective":
        ts, wigners = _run_gaussian(cfg), {}
    elif cfg.engine == "fock_full":
        ts, wigners = _run_fock_full(cfg), {}
    elif cfg.engine in FEEDBACK_ENGINES:
        ts, wigners = _run_feedback(cfg)
    else:  # unreachable: ExperimentConfig validates the engine
        raise ConfigError(f"unknown engine {cfg.engine!r}")
    steady = None
    if "steady" in cfg.outputs:
        steady = _steady_summary(ts, cfg.steady.window, cfg.steady.rel_tol)
    return ExperimentResult(config=cfg, timeseries=ts, steady=steady, wigners=wigners)


def _run_worker(cfg: ExperimentConfig):
    try:
        return "ok", run_experiment(cfg)
    except Exception as exc:  # collected into the manifest, not fatal
        return "error", f"{type(exc).__name__}: {exc}"


def run_many(configs, threads: int = 1) -> list:
    """Run several configs, optionally on a process pool.

    Returns a list aligned with configs holding ("ok", ExperimentResult) or
    ("error", message). Results are collected in submission order, so the
    output is independent of worker count.
    """
    configs = list(configs)
    if threads > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_worker, configs))
    return [_run_worker(cfg) for cfg in configs]


# ---------------------------------------------------------------- file output


def write_timeseries_csv(path, ts: TimeSeries) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMESERIES_COLUMNS)
        for k in range(ts.t.size):
            var1 = float(ts.var_x1[k])
            writer.writerow(
                [
                    _fmt(float(ts.t[k])),
                    _fmt(var1),
                    _fmt(float(ts.var_x2[k])),
                    _fmt(float(ts.cov_x1x2[k])),
                    _fmt(to_db(var1)),
                    _fmt(to_db(renormalize(var1, ts.n_th))),
                    _fmt(float(ts.purity[k])),
                    _fmt(float(ts.p_e[k])) if ts.p_e is not None else "",
                ]
            )


def write_steady_csv(path, steady: SteadySummary, ts: TimeSeries) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "label",
                "engine",
                "converged",
                "var_x1",
                "var_x2",
                "cov",
                "purity",
                "p_e",
                "var_x1_db",
                "var_x1_renorm_db",
            ]
        )
        writer.writerow(
            [
                ts.label,
                ts.engine,
                str(steady.converged).lower(),
                _fmt(steady.var_x1),
                _fmt(steady.var_x2),
                _fmt(steady.cov_x1x2),
                _fmt(steady.purity),
                _fmt(steady.p_e) if not math.isnan(steady.p_e) else "",
                _fmt(steady.var_x1_db),
                _fmt(steady.var_x1_renorm_db),
            ]
        )


def write_wigner_file(path, grid: WignerGrid) -> None:
    """Grid file: one header line `nx ny xmin xmax ymin ymax`, then one
    row of the grid per line (values along x), %.12g, space-separated."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            f"{grid.xs.size} {grid.ys.size} "
            f"{_fmt(float(grid.xs[0]))} {_fmt(float(grid.xs[-1]))} "
            f"{_fmt(float(grid.ys[0]))} {_fmt(float(grid.ys[-1]))}\n"
        )
        for row in grid.values:
            fh.write(" ".join(_fmt(float(v)) for v in row) + "\n")


def read_wigner_file(path) -> WignerGrid:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 6:
            raise ValueError(f"{path}: malformed Wigner grid header {header}")
        nx, ny = int(header[0]), int(header[1])
        xmin, xmax, ymin, ymax = map(float, header[2:])
        values = np.loadtxt(fh, ndmin=2)
    if values.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny}x{nx} values, got {values.shape}")
    return WignerGrid(
        xs=np.linspace(xmin, xmax, nx), ys=np.linspace(ymin, ymax, ny), values=values
    )


def _params_tokens(cfg: ExperimentConfig) -> str:
    p = cfg.params
    tokens = [
        f"engine={cfg.engine}",
        f"omega_m={_fmt(p.omega_m)}",
        f"omega_a={_fmt(p.omega_a)}",
        f"g={_fmt(p.g)}",
        f"gamma={_fmt(p.gamma)}",
        f"n_th={_fmt(p.n_th)}",
        f"horizon={_fmt(cfg.horizon)}",
        f"sample_cadence={_fmt(cfg.sample_cadence)}",
    ]
    if cfg.engine != "gaussian_effective":
        tokens.append(f"cutoff={cfg.resolved_cutoff}")
    if cfg.engine in FEEDBACK_ENGINES:
        tokens.append(f"dt_measure={_fmt(cfg.resolved_dt_measure)}")
    if cfg.dt is not None:
        tokens.append(f"dt={_fmt(cfg.dt)}")
    if cfg.engine == "gaussian_effective":
        tokens.append(f"qubit_sign={cfg.qubit_sign:+d}")
    return " ".join(tokens)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_result_files(out_dir: Path, result: ExperimentResult) -> list[Path]:
    """Write every file one result asks for; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    written = []
    if "timeseries" in cfg.outputs:
        path = out_dir / f"{cfg.label}.csv"
        write_timeseries_csv(path, result.timeseries)
        written.append(path)
    if "steady" in cfg.outputs and result.steady is not None:
        path = out_dir / f"{cfg.label}_steady.csv"
        write_steady_csv(path, result.steady, result.timeseries)
        written.append(path)
    for t_snap in sorted(result.wigners):
        path = out_dir / f"{cfg.label}_wigner_t{_fmt(t_snap)}.dat"
        write_wigner_file(path, result.wigners[t_snap])
        written.append(path)
    return written


def write_manifest(out_dir: Path, scenario: str, entries, failures) -> Path:
    """Plain-text manifest: one `file=` line per output with the resolved
    parameters and a sha256, then one `failure=` line per failed curve."""
    out_dir = Path(out_dir)
    lines = [f"scenario={scenario}"]
    for path, cfg in entries:
        lines.append(f"file={path.name} sha256={_sha256(path)} {_params_tokens(cfg)}")
    for label, message in failures:
        lines.append(f"failure={label} error={message!r}")
    lines.append(f"status={'partial' if failures else 'ok'}")
    manifest = out_dir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


# --------------------------------------------------------------------- sweeps


def sweep_axis_values(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """Clone a config with one swept field replaced."""
    param_fields = ("omega_m", "omega_a", "g", "gamma", "n_th")
    if axis in param_fields:
        return replace(cfg, params=replace(cfg.params, **{axis: value}))
    if axis == "dt_measure":
        if cfg.engine not in FEEDBACK_ENGINES:
            raise ConfigError(f"axis dt_measure needs a feedback engine, not {cfg.engine}")
        return replace(cfg, dt_measure=value)
    if axis == "n_intervals":
        if cfg.engine not in FEEDBACK_ENGINES:
            raise ConfigError(f"axis n_intervals needs a feedback engine, not {cfg.engine}")
        return replace(cfg, horizon=value * cfg.resolved_dt_measure)
    raise ConfigError(
        f"axis {axis!r} is not sweepable; use one of {param_fields + ('dt_measure', 'n_intervals')}"
    )


def run_sweep(cfg: ExperimentConfig, axis: str, values, threads: int = 1):
    """Run one experiment per axis value and summarize steady-state results.

    Returns rows aligned with values: (value, SteadySummary | None, error | None).
    Per-point failures (including configs that fail validation at that value)
    are recorded in their row, never fatal. An empty value list returns no rows.
    """
    values = [float(v) for v in values]
    point_cfgs = []
    precheck_errors = {}
    for idx, value in enumerate(values):
        try:
            point = sweep_axis_values(cfg, axis, value)
            point_cfgs.append(replace(point, outputs=("steady",), wigner=None))
        except Exception as exc:
            precheck_errors[idx] = f"{type(exc).__name__}: {exc}"
            point_cfgs.append(None)
    outcomes = run_many([c for c in point_cfgs if c is not None], threads=threads)
    outcomes_iter = iter(outcomes)
    rows = []
    for idx, value in enumerate(values):
        if idx in precheck_errors:
            rows.append((value, None, precheck_errors[idx]))
            continue
        status, payload = next(outcomes_iter)
        if status == "ok":
            rows.append((value, payload.steady, None))
        else:
            rows.append((value, None, payload))
    return rows


def write_sweep_csv(path, axis: str, rows) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for value, steady, error in rows:
            if steady is None:
                writer.writerow([axis, _fmt(value), "", "", "", "", "", "", "", "", error or ""])
                continue
            writer.writerow(
                [
                    axis,
                    _fmt(value),
                    str(steady.converged).lower(),
                    _fmt(steady.var_x1),
                    _fmt(steady.var_x2),
                    _fmt(steady.cov_x1x2),
                    _fmt(steady.purity),
                    _fmt(steady.p_e) if not math.isnan(steady.p_e) else "",
                    _fmt(steady.var_x1_db),
                    _fmt(steady.var_x1_renorm_db),
                    "",
                ]
            )
