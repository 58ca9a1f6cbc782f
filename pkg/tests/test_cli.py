import math
from dataclasses import replace

import numpy as np
import pytest

from qsqueeze import runner
from qsqueeze.cli import main
from qsqueeze.config import ConfigError, ExperimentConfig, parse_config
from qsqueeze.model import SystemParams
from qsqueeze.observables import WignerGrid
from qsqueeze.runner import TIMESERIES_COLUMNS, read_wigner_file, write_wigner_file
from qsqueeze.scenarios import SCENARIO_NAMES, build_scenario, preset_cutoff

FEEDBACK_YAML = """\
label: squeeze_run
engine: fock_feedback
params:
  omega_m: 0.1
  omega_a: 8.0
  g: 1.0
  gamma: 0.1
  n_th: 0.0
run:
  horizon: 150.0
outputs: [timeseries, steady]
"""

GAUSSIAN_YAML = """\
engine: gaussian_effective
params:
  omega_m: 0.1
  omega_a: 8.0
  g: 1.0
  gamma: 0.1
  n_th: 0.0
run:
  horizon: 20.0
  sample_cadence: 1.0
outputs: [timeseries, steady]
steady:
  window: 4
  rel_tol: 0.5
"""

WIGNER_YAML = """\
label: tiny_wigner
engine: fock_feedback
params:
  omega_m: 0.1
  omega_a: 8.0
  g: 1.0
  gamma: 0.1
  n_th: 0.0
run:
  horizon: 2.4
  cutoff: 24
outputs: [timeseries, wigner]
wigner:
  times: [0.0]
  extent: 2.0
  points: 9
"""


class TestParseConfig:
    def test_minimal_feedback_config(self, tmp_path):
        path = tmp_path / "fb.yaml"
        path.write_text(FEEDBACK_YAML)
        cfg = parse_config(path)
        assert cfg.label == "squeeze_run"
        assert cfg.engine == "fock_feedback"
        assert cfg.params == SystemParams(0.1, 8.0, 1.0, 0.1, 0.0)
        assert cfg.resolved_dt_measure == pytest.approx(2 * math.pi / 8)
        assert cfg.resolved_cutoff == 40
        assert cfg.outputs == ("timeseries", "steady")

    def test_label_defaults_to_stem(self, tmp_path):
        path = tmp_path / "my_experiment.yaml"
        path.write_text(GAUSSIAN_YAML)
        assert parse_config(path).label == "my_experiment"

    def test_unknown_key_is_named(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(FEEDBACK_YAML.replace("omega_a: 8.0", "omega_a: 8.0\n  omega_q: 3.0"))
        with pytest.raises(ConfigError, match="omega_q"):
            parse_config(path)

    def test_undamped_steady_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(FEEDBACK_YAML.replace("gamma: 0.1", "gamma: 0.0"))
        with pytest.raises(ConfigError, match="no dissipative steady state"):
            parse_config(path)

    def test_yaml_syntax_error_carries_context(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("engine: [unclosed\nparams:\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(tmp_path / "nope.yaml")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        with pytest.raises(ConfigError, match="empty"):
            parse_config(path)

    def test_feedback_section_needs_feedback_engine(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(
            GAUSSIAN_YAML + "feedback:\n  dt_measure: 0.5\n"
        )
        with pytest.raises(ConfigError, match="feedback"):
            parse_config(path)

    def test_wigner_output_needs_section(self):
        with pytest.raises(ConfigError, match="wigner"):
            ExperimentConfig(
                label="x",
                engine="fock_feedback",
                params=SystemParams(0.1, 8.0, 1.0, 0.1, 0.0),
                outputs=("wigner",),
            )

    def test_wigner_output_rejects_gaussian_engine(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(
            WIGNER_YAML.replace("engine: fock_feedback", "engine: gaussian_effective").replace(
                "  cutoff: 24\n", ""
            )
        )
        with pytest.raises(ConfigError, match="gaussian_effective"):
            parse_config(path)

    def test_default_cutoff_scales_with_occupancy(self, tmp_path):
        path = tmp_path / "hot.yaml"
        path.write_text(FEEDBACK_YAML.replace("n_th: 0.0", "n_th: 2.0"))
        assert parse_config(path).resolved_cutoff == 60


class TestCliSimulate:
    def test_gaussian_custom_run_end_to_end(self, tmp_path, capsys):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        out = tmp_path / "out"
        assert main(["simulate", "custom", str(cfg_path), "--out", str(out)]) == 0
        csv_path = out / "small.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == ",".join(TIMESERIES_COLUMNS)
        assert len(lines) == 22  # header + t = 0..20 at cadence 1
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(1.0)  # vacuum variance at t = 0
        assert first[-1] == ""  # p_e blank outside feedback engines
        assert (out / "small_steady.csv").exists()
        manifest = (out / "manifest.txt").read_text()
        assert "sha256=" in manifest
        assert manifest.strip().endswith("status=ok")
        assert "wrote" in capsys.readouterr().out

    def test_custom_colon_form(self, tmp_path):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        out = tmp_path / "out"
        assert main(["simulate", f"custom:{cfg_path}", "--out", str(out)]) == 0
        assert (out / "small.csv").exists()

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "custom", str(cfg_path), "--out", str(out1)]) == 0
        assert main(["simulate", "custom", str(cfg_path), "--out", str(out2)]) == 0
        for name in ("small.csv", "small_steady.csv", "manifest.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_feedback_run_writes_wigner_and_p_e(self, tmp_path):
        cfg_path = tmp_path / "wig.yaml"
        cfg_path.write_text(WIGNER_YAML)
        out = tmp_path / "out"
        assert main(["simulate", "custom", str(cfg_path), "--out", str(out)]) == 0
        lines = (out / "tiny_wigner.csv").read_text().splitlines()
        assert lines[1].split(",")[-1] != ""  # p_e populated
        wig_path = out / "tiny_wigner_wigner_t0.dat"
        grid = read_wigner_file(wig_path)
        assert grid.values.shape == (9, 9)
        # t = 0 snapshot is the vacuum
        assert grid.values[4, 4] == pytest.approx(2 / math.pi, abs=1e-9)

    def test_unknown_scenario_exits_1(self, tmp_path, capsys):
        assert main(["simulate", "fig99", "--out", str(tmp_path)]) == 1
        assert "unknown scenario" in capsys.readouterr().err

    def test_bad_config_exits_1(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.yaml"
        cfg_path.write_text("engine: warp_drive\n")
        assert main(["simulate", "custom", str(cfg_path), "--out", str(tmp_path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_usage_error_exits_1(self, capsys):
        assert main([]) == 1
        capsys.readouterr()

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        capsys.readouterr()

    def test_cutoff_override(self, tmp_path):
        cfg_path = tmp_path / "wig.yaml"
        cfg_path.write_text(WIGNER_YAML)
        out = tmp_path / "out"
        assert main(
            ["simulate", "custom", str(cfg_path), "--out", str(out), "--cutoff", "28"]
        ) == 0
        assert "cutoff=28" in (out / "manifest.txt").read_text()


class TestCliSweep:
    def test_empty_values_gives_header_only(self, tmp_path):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        out = tmp_path / "out"
        code = main(
            ["sweep", str(cfg_path), "--axis", "n_th", "--values", "", "--out", str(out)]
        )
        assert code == 0
        lines = (out / "small_sweep_n_th.csv").read_text().splitlines()
        assert len(lines) == 1
        assert lines[0] == ",".join(runner.SWEEP_COLUMNS)

    def test_sweep_rows_and_failure_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        out = tmp_path / "out"
        code = main(
            ["sweep", str(cfg_path), "--axis", "gamma", "--values", "0.1,-1", "--out", str(out)]
        )
        assert code == 2  # the negative point fails, the run still writes
        lines = (out / "small_sweep_gamma.csv").read_text().splitlines()
        assert len(lines) == 3
        good, bad = lines[1].split(","), lines[2].split(",")
        assert good[0] == "gamma" and good[2] == "true" or good[2] == "false"
        assert bad[-1] != ""  # error message recorded on the failed row
        assert "FAILED" in capsys.readouterr().err
        manifest = (out / "manifest.txt").read_text()
        assert "status=partial" in manifest

    def test_non_numeric_values_exit_1(self, tmp_path, capsys):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        assert (
            main(["sweep", str(cfg_path), "--axis", "n_th", "--values", "a,b", "--out", str(tmp_path)])
            == 1
        )
        assert "numeric" in capsys.readouterr().err

    def test_sweep_point_matches_direct_run(self, tmp_path):
        cfg_path = tmp_path / "small.yaml"
        cfg_path.write_text(GAUSSIAN_YAML)
        cfg = parse_config(cfg_path)
        rows = runner.run_sweep(cfg, "n_th", [0.5])
        direct = runner.run_experiment(
            replace(cfg, params=replace(cfg.params, n_th=0.5), outputs=("steady",), wigner=None)
        )
        assert rows[0][1] == direct.steady  # same dataclass, same floats


class TestWignerFileRoundTrip:
    def test_round_trip_preserves_grid(self, tmp_path):
        xs = np.linspace(-2.0, 2.0, 7)
        ys = np.linspace(-1.0, 1.0, 5)
        rng = np.random.default_rng(0)
        grid = WignerGrid(xs=xs, ys=ys, values=rng.normal(size=(5, 7)))
        path = tmp_path / "grid.dat"
        write_wigner_file(path, grid)
        back = read_wigner_file(path)
        assert back.xs == pytest.approx(grid.xs)
        assert back.ys == pytest.approx(grid.ys)
        # %.12g round-trips doubles to ~1e-12 relative
        assert back.values == pytest.approx(grid.values, rel=1e-11, abs=1e-14)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.dat"
        path.write_text("3 3 0 1\n")
        with pytest.raises(ValueError, match="header"):
            read_wigner_file(path)


class TestScenarios:
    def test_names_are_sorted_and_stable(self):
        assert SCENARIO_NAMES == tuple(sorted(SCENARIO_NAMES))
        assert "fig3b" in SCENARIO_NAMES

    def test_fig3b_engine_triple(self):
        spec = build_scenario("fig3b")
        assert [c.engine for c in spec.configs] == [
            "fock_feedback",
            "fock_no_feedback",
            "gaussian_effective",
        ]

    def test_fig3a_is_a_sweep(self):
        spec = build_scenario("fig3a")
        assert spec.sweep is not None
        assert spec.sweep.axis == "dt_measure"
        assert len(spec.sweep.values) == 40
        period = 2 * math.pi / 8
        assert max(spec.sweep.values) == pytest.approx(2.5 * period)

    def test_no_feedback_cutoffs_run_hotter(self):
        for n_th in (0.0, 0.2, 1.0, 3.0):
            assert preset_cutoff(n_th, feedback=False) > preset_cutoff(n_th, feedback=True)

    def test_unknown_scenario_raises(self):
        with pytest.raises(KeyError, match="fig99"):
            build_scenario("fig99")

    def test_every_config_validates(self):
        # building a scenario constructs every ExperimentConfig, which
        # validates engine, params, outputs, and wigner settings
        for name in SCENARIO_NAMES:
            spec = build_scenario(name)
            for cfg in spec.configs:
                assert cfg.resolved_cutoff >= 2 or cfg.engine == "gaussian_effective"
