import json
import subprocess
import sys

import numpy as np
import pytest

from aqec import config as cf
from aqec import presets as pr

TWO_PI = 2 * np.pi

MINIMAL = """\
[model]
kind = single_qubit
delta = 350 MHz
gamma_q = 0.2 per_us
gamma_r = 0.2 per_us
"""


class TestParsing:
    def test_unit_conversion_mhz(self):
        cfg = cf.parse_config(MINIMAL)
        assert dict(cfg.model_params)["delta"] == pytest.approx(
            TWO_PI * 0.350)

    def test_unit_conversion_per_us(self):
        text = MINIMAL.replace("kind = single_qubit", "kind = vslq").replace(
            "delta = 350 MHz", "w = 35 MHz\ndelta = 350 MHz").replace(
            "gamma_q = 0.2 per_us", "gamma_p = 0.2 per_us").replace(
            "gamma_r = 0.2 per_us", "gamma_s = 35 per_us")
        cfg = cf.parse_config(text)
        assert dict(cfg.model_params)["gamma_s"] == pytest.approx(0.035)

    def test_time_units(self):
        cfg = cf.parse_config(MINIMAL + "\n[pulse]\nt_p = 0.04 us\n")
        assert cfg.t_p == pytest.approx(40.0)

    def test_missing_model_section(self):
        with pytest.raises(cf.ConfigError, match="model"):
            cf.parse_config("[pulse]\nn_modes = 20\n")

    def test_unknown_key_with_line_number(self):
        bad = MINIMAL + "quux = 3 MHz\n"
        with pytest.raises(cf.ConfigError, match="line 6"):
            cf.parse_config(bad)

    def test_missing_unit_suffix(self):
        bad = MINIMAL.replace("350 MHz", "350")
        with pytest.raises(cf.ConfigError, match="unit"):
            cf.parse_config(bad)

    def test_wrong_unit_kind(self):
        bad = MINIMAL.replace("350 MHz", "350 ns")
        with pytest.raises(cf.ConfigError, match="expected afreq"):
            cf.parse_config(bad)

    def test_out_of_range_value(self):
        bad = MINIMAL + "\n[optimizer]\ntarget_fidelity = 1.5\n"
        with pytest.raises(cf.ConfigError):
            cf.parse_config(bad)

    def test_duplicate_key(self):
        bad = MINIMAL + "delta = 100 MHz\n"
        with pytest.raises(cf.ConfigError, match="duplicate"):
            cf.parse_config(bad)

    def test_comments_and_blank_lines(self):
        text = "# header\n\n" + MINIMAL + "   # trailing section comment\n"
        assert cf.parse_config(text).model_kind == "single_qubit"

    def test_sweep_list(self):
        cfg = cf.parse_config(MINIMAL + "\n[sweep]\nt1 = 5 10 20 us\n")
        assert cfg.sweep_t1 == (5e3, 10e3, 20e3)


class TestRoundTrip:
    @pytest.mark.parametrize("name", pr.list_presets())
    def test_presets_round_trip(self, name):
        cfg = pr.preset_config(name)
        assert cf.parse_config(cf.write_config(cfg)) == cfg

    def test_hash_stability(self):
        cfg = cf.parse_config(MINIMAL)
        assert cf.config_hash(cfg) == cf.config_hash(
            cf.parse_config(cf.write_config(cfg)))

    def test_hash_sensitivity(self):
        a = cf.parse_config(MINIMAL)
        b = cf.parse_config(MINIMAL.replace("350", "349"))
        assert cf.config_hash(a) != cf.config_hash(b)


class TestWorkers:
    def test_env_fallback(self, monkeypatch):
        cfg = cf.parse_config(MINIMAL)
        monkeypatch.setenv("AQEC_WORKERS", "3")
        assert cfg.resolved_workers() == 3
        monkeypatch.setenv("AQEC_WORKERS", "zero")
        with pytest.raises(cf.ConfigError):
            cfg.resolved_workers()
        monkeypatch.delenv("AQEC_WORKERS")
        assert cfg.resolved_workers() == 1

    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("AQEC_WORKERS", "7")
        cfg = cf.with_overrides(cf.parse_config(MINIMAL), workers=2)
        assert cfg.resolved_workers() == 2


TINY_RUN = MINIMAL + """
[pulse]
n_modes = 6
t_p = 40 ns

[optimizer]
learning_rate = 0.02
max_iters = 30
target_fidelity = 0.98

[schedule]
t_r_grid = 20 60 ns
reset_rate = 30 per_us

[sweep]
t1 = 8 20 us
mode = residual

[run]
workers = 1
"""


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    from aqec import runner
    out = tmp_path_factory.mktemp("run1")
    cfg = cf.parse_config(TINY_RUN)
    result = runner.cmd_sweep(cfg, out, workers=1)
    return cfg, out, result


class TestRunnerOutputs:
    def test_manifest_lists_every_output(self, tiny_run):
        cfg, out, _ = tiny_run
        manifest = json.loads((out / "manifest.json").read_text())
        listed = {e["path"] for e in manifest["outputs"]}
        on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert listed == on_disk
        assert manifest["config_hash"] == cf.config_hash(cfg)

    def test_sweep_rows_sorted(self, tiny_run):
        _, out, result = tiny_run
        t1s = [r["t1_us"] for r in result["rows"]]
        assert t1s == sorted(t1s)

    def test_residuals_csv_schema(self, tiny_run):
        _, out, _ = tiny_run
        lines = (out / "residuals.csv").read_text().splitlines()
        assert lines[0].startswith("t1_us,pulse_reset_residual")
        assert len(lines) == 3

    def test_worker_count_does_not_change_bytes(self, tiny_run,
                                                tmp_path_factory):
        from aqec import runner
        cfg, out, _ = tiny_run
        out2 = tmp_path_factory.mktemp("run2")
        runner.cmd_sweep(cfg, out2, workers=2)
        assert (out / "residuals.csv").read_bytes() == \
            (out2 / "residuals.csv").read_bytes()

    def test_rerun_identical_numeric_outputs(self, tiny_run,
                                             tmp_path_factory):
        from aqec import runner
        cfg, out, _ = tiny_run
        out3 = tmp_path_factory.mktemp("run3")
        runner.cmd_sweep(cfg, out3, workers=1)
        assert (out / "residuals.csv").read_bytes() == \
            (out3 / "residuals.csv").read_bytes()
        assert (out / "exponents.json").read_bytes() == \
            (out3 / "exponents.json").read_bytes()

    def test_empty_sweep_axis_rejected(self, tmp_path):
        from aqec import runner
        cfg = cf.parse_config(MINIMAL)
        with pytest.raises(ValueError, match="non-empty"):
            runner.cmd_sweep(cfg, tmp_path)


class TestScanResetCommand:
    def test_writes_scan_curve(self, tmp_path):
        from aqec import runner
        cfg = cf.parse_config(TINY_RUN)
        cfg = cf.with_overrides(cfg, sweep_t1=(10e3,), sweep_mode="default")
        res = runner.cmd_scan_reset(cfg, tmp_path)
        lines = (tmp_path / "scan.csv").read_text().splitlines()
        assert len(lines) == 1 + 2          # header + 2 grid points
        assert len(res["best"]) == 1


class TestFitCommand:
    def test_fit_exp_from_csv(self, tmp_path):
        from aqec import runner
        t = np.linspace(0, 30, 16)
        csv = tmp_path / "data.csv"
        csv.write_text("t_us,signal\n" + "\n".join(
            f"{ti},{np.exp(-ti / 9.0)}" for ti in t) + "\n")
        payload = runner.cmd_fit(csv, "t_us", "signal", "exp", tmp_path)
        assert payload["lifetime"] == pytest.approx(9.0, rel=1e-6)
        assert (tmp_path / "fit.json").exists()

    def test_fit_power_from_csv(self, tmp_path):
        from aqec import runner
        x = np.linspace(5, 60, 10)
        csv = tmp_path / "data.csv"
        csv.write_text("x,y\n" + "\n".join(
            f"{xi},{0.05 * xi ** -0.7}" for xi in x) + "\n")
        payload = runner.cmd_fit(csv, "x", "y", "power", tmp_path)
        assert payload["exponent"] == pytest.approx(-0.7, abs=1e-9)


class TestCli:
    def _run(self, *args):
        return subprocess.run([sys.executable, "-m", "aqec.cli", *args],
                              capture_output=True, text=True)

    def test_optimize_roundtrip(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(TINY_RUN.replace("max_iters = 30",
                                             "max_iters = 60"))
        out = tmp_path / "out"
        proc = self._run("optimize", "--config", str(cfg_file),
                         "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert (out / "pulse.json").exists()
        assert (out / "manifest.json").exists()
        summary = json.loads((out / "optimize_summary.json").read_text())
        assert summary["fidelity"] >= 0.98

    def test_validation_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(MINIMAL.replace("350 MHz", "350"))
        proc = self._run("optimize", "--config", str(bad),
                         "--out", str(tmp_path / "o"))
        assert proc.returncode == 2
        assert "unit" in proc.stderr

    def test_convergence_exit_code(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(TINY_RUN.replace("max_iters = 30",
                                             "max_iters = 0").replace(
            "target_fidelity = 0.98", "target_fidelity = 0.999999"))
        proc = self._run("optimize", "--config", str(cfg_file),
                         "--out", str(tmp_path / "o"))
        assert proc.returncode == 3

    def test_missing_config_and_preset(self):
        proc = self._run("optimize")
        assert proc.returncode == 2

    def test_fit_subcommand(self, tmp_path):
        t = np.linspace(0, 20, 12)
        csv = tmp_path / "d.csv"
        csv.write_text("t,y\n" + "\n".join(
            f"{ti},{0.5 * np.exp(-ti / 4.0)}" for ti in t) + "\n")
        proc = self._run("fit", "--csv", str(csv), "--xcol", "t",
                         "--ycol", "y", "--kind", "exp",
                         "--out", str(tmp_path / "fo"))
        assert proc.returncode == 0
        assert "lifetime: 4" in proc.stdout
