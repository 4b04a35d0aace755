import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from capops import cli
from capops.harness import ConfigError, load_config, load_report, parse_config_text, run_experiment
from capops.harness.plotting import emit_plots, render_plots
from capops.harness.report import ExperimentReport

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def cfg(text):
    return parse_config_text("[experiment]\n" + text)


class TestConfig:
    def test_defaults_and_types(self):
        c = cfg("kind = kara\nname = k\n")
        assert c["symbol"] == "diag:0.5,0.3" and c["n_max"] == 60 and c.seed > 0
        c = cfg("kind = mata\nsigma = 1, 2\nA = 12\n")
        assert c["sigma"] == (1.0, 2.0) and c["A"] == 12.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError) as exc:
            cfg("kind = kara\nn_maks = 60\n")
        assert exc.value.key == "n_maks"

    def test_range_and_parse_errors(self):
        with pytest.raises(ConfigError, match="n_max"):
            cfg("kind = kara\nn_max = 3\n")
        with pytest.raises(ConfigError, match="radius"):
            cfg("kind = widths\nradius = 1.5\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            cfg("kind = tails\nm_max = many\n")
        with pytest.raises(ConfigError, match="kind"):
            cfg("kind = fourier\n")
        with pytest.raises(ConfigError):
            parse_config_text("[experiment]\nkind = kara\n[other]\nx = 1\n")
        with pytest.raises(ConfigError):
            parse_config_text("[experiment]\nkind = kara\nkind = mata\n")

    def test_bundled_configs_valid(self):
        files = sorted(CONFIGS.glob("*.ini"))
        assert len(files) >= 12
        for f in files:
            load_config(f)


class TestRun:
    def test_report_and_reproducibility(self, tmp_path):
        c = cfg("kind = kara\nname = k\nn_max = 20\n")
        r1 = run_experiment(c, tmp_path / "a", plots=False)
        r2 = run_experiment(c, tmp_path / "b", plots=False)
        for name in ("spectrum.csv", "beta.csv"):
            assert (tmp_path / "a/k" / name).read_bytes() == (tmp_path / "b/k" / name).read_bytes()
        data = json.loads((tmp_path / "a/k/report.json").read_text())
        assert data["passed"] == r1.passed
        assert data["config"]["seed"] == c.seed
        assert {v["name"] for v in data["verdicts"]} == {v.name for v in r2.verdicts}
        assert all(v["oracle"] for v in data["verdicts"])

    def test_seeded_randomness_reproducible(self, tmp_path):
        c = cfg("kind = good_reinhardt\nname = g\ndomain = ball:2\npoints = 300\n")
        run_experiment(c, tmp_path / "a", plots=False)
        run_experiment(c, tmp_path / "b", plots=False)
        assert (tmp_path / "a/g/good_reinhardt.csv").read_bytes() == \
            (tmp_path / "b/g/good_reinhardt.csv").read_bytes()
        c.seed += 1
        run_experiment(c, tmp_path / "c", plots=False)
        assert (tmp_path / "a/g/good_reinhardt.csv").read_bytes() != \
            (tmp_path / "c/g/good_reinhardt.csv").read_bytes()

    def test_failure_is_reported(self, tmp_path):
        c = cfg("kind = widths\nname = w\nsamples = 4\nD = 40\n")
        r = run_experiment(c, tmp_path, plots=False)
        assert not r.passed and "SamplingError" in r.error
        assert load_report(tmp_path / "w/report.json").error == r.error

    @pytest.mark.parametrize("kind,extra", [
        ("mata", "A = 50\ntol = 0.1\n"), ("tails", "l_max = 20\nD = 5,10\n"),
        ("dilation", "n_max = 50\nsymbol = poly:(0,1)->0.5|(1,0)->0.5\n"),
        ("capacity", "mode = upper_bound\ndomain = ball:2\n"),
        ("capacity", "mode = toric_2d\nregion = sublevel:0.4\nresolution = 20\n"),
        ("capacity", "mode = grid_1d\nregion = annulus:0:0.3:0.5\nresolution = 64\n"),
        ("widths", "radius = 0.4\nsamples = 128\nD = 40\n"),
        ("good_reinhardt", "domain = pob:2,1\npoints = 200\n"),
    ])
    def test_kinds_pass(self, tmp_path, kind, extra):
        r = run_experiment(cfg(f"kind = {kind}\nname = x\n" + extra), tmp_path, plots=False)
        assert r.passed, (r.error, r.verdicts)


class TestPlots:
    def test_kara_and_widths_scripts(self, tmp_path):
        for text in ("kind = kara\nname = k\nn_max = 20\n",
                     "kind = widths\nname = w\nsamples = 128\nD = 40\n"):
            r = run_experiment(cfg(text), tmp_path, plots=False)
            scripts = emit_plots(r)
            assert scripts
            for s in scripts:
                src = s.read_text()
                assert "capops" not in src and ".csv" in src
            for png in render_plots(scripts):
                assert png.stat().st_size > 1000
        assert (tmp_path / "k/plot_beta.py").exists()
        assert "fill_between" in (tmp_path / "w/plot_widths.py").read_text()

    def test_empty_report(self, tmp_path):
        r = ExperimentReport("e", "kara", {}, 0, directory=str(tmp_path))
        assert emit_plots(r) == []
        assert render_plots([]) == []


class TestCLI:
    def test_run_and_plot(self, tmp_path, capsys):
        ini = tmp_path / "m.ini"
        ini.write_text("[experiment]\nkind = mata\nA = 60\ntol = 0.1\n")
        assert cli.main(["--out", str(tmp_path / "out"), "run", str(ini)]) == 0
        assert "[PASS] m" in capsys.readouterr().out
        rep = tmp_path / "out/m/report.json"
        assert (tmp_path / "out/m/plot_mata.png").exists()
        assert cli.main(["plot", str(rep)]) == 0

    def test_exit_code_reflects_verdicts(self, tmp_path):
        ini = tmp_path / "bad.ini"
        # an absurd tolerance makes the asymptotic ratio check fail
        ini.write_text("[experiment]\nkind = mata\nA = 5\ntol = 0.0001\n")
        assert cli.main(["--out", str(tmp_path), "--no-plots", "run", str(ini)]) == 1

    def test_config_error_exit(self, tmp_path, capsys):
        ini = tmp_path / "x.ini"
        ini.write_text("[experiment]\nkind = mata\nbogus = 1\n")
        assert cli.main(["--out", str(tmp_path), "run", str(ini)]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_suite_parallel_env_out(self, tmp_path):
        d = tmp_path / "cfg"
        d.mkdir()
        (d / "a.ini").write_text("[experiment]\nkind = mata\nA = 40\ntol = 0.1\n")
        (d / "b.ini").write_text("[experiment]\nkind = tails\nl_max = 10\nD = 5\n")
        env = dict(os.environ, CAPOPS_OUT=str(tmp_path / "envout"))
        p = subprocess.run([sys.executable, "-m", "capops.cli", "--no-plots", "--seed", "7",
                            "suite", str(d), "--workers", "2"], env=env, capture_output=True, text=True)
        assert p.returncode == 0, p.stderr
        assert json.loads((tmp_path / "envout/a/report.json").read_text())["seed"] == 7
        assert (tmp_path / "envout/b/tails.csv").exists()
