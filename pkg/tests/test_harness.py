import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from spectral_invariance import config as cfgmod
from spectral_invariance.cli import main
from spectral_invariance.errors import ConfigError
from spectral_invariance.fig1 import ordering_checks, reproduce_fig1
from spectral_invariance.harness import (
    CURVE_CSV_HEADER,
    MetricSpec,
    curves_to_csv,
    fit_slope,
    predicted_exponent,
    run_convergence,
)
from spectral_invariance.plotting import plot_curves

TINY = {
    "name": "tiny",
    "distribution": {"preset": "uniform", "dim": 1},
    "group": {"kind": "trivial", "dim": 1},
    "metric": {"kind": "l2"},
    "n_grid": [16, 64, 256],
    "repetitions": 3,
    "master_seed": 1,
    "slice": {"m_max": 16},
    "estimators": [{"name": "empirical", "kind": "empirical"}],
}


def tiny(**overrides):
    return cfgmod.build({**TINY, **overrides})


class TestFitSlope:
    def test_examples(self):
        ns = np.array([64, 256, 1024, 4096])
        assert fit_slope(ns, 3.0 * ns ** -0.5)[0] == pytest.approx(-0.5, abs=1e-12)
        assert fit_slope(ns, np.full(4, 2.0))[0] == pytest.approx(0.0, abs=1e-12)
        noise = 1 + 0.01 * np.random.default_rng(0).uniform(-1, 1, 4)
        assert fit_slope(ns, 2.0 * ns ** -0.37 * noise)[0] == pytest.approx(-0.37, abs=0.02)

    def test_burn_in_and_errors(self):
        ns = np.array([1, 10, 100, 1000, 10000])
        means = np.array([5.0, 1.0, 0.1, 0.01, 0.001])
        assert fit_slope(ns, means, burn_in=1)[0] == pytest.approx(-1.0)
        with pytest.raises(ValueError):
            fit_slope(ns, means, burn_in=3)


class TestRun:
    def test_uniform_l2_pattern(self):
        curves = run_convergence(tiny(n_grid=[16]))
        # E[L2^2] = (#nonconstant elements) / n for uniform samples; 8 elements have |k| <= 4
        assert curves[0].means[0] == pytest.approx(math.sqrt(8 / 16), rel=0.3)
        assert math.isnan(curves[0].slope)

    def test_bit_reproducible(self):
        a = curves_to_csv(run_convergence(tiny(), 1))
        b = curves_to_csv(run_convergence(tiny(), 1))
        c = curves_to_csv(run_convergence(tiny(), 2))
        assert a == b == c
        assert a.splitlines()[0] == ",".join(CURVE_CSV_HEADER)

    def test_seed_changes_values(self):
        a = run_convergence(tiny(repetitions=50))[0]
        b = run_convergence(tiny(repetitions=50, master_seed=2))[0]
        assert not np.array_equal(a.trials, b.trials)
        assert abs(a.slope - b.slope) < 2 * math.hypot(a.slope_stderr, b.slope_stderr) + 0.05

    def test_invariance_dominance(self):
        raw = cfgmod.preset_raw("cyclic-gain", repetitions=20, n_grid=[32, 128])
        inv, emp = run_convergence(cfgmod.build(raw))
        assert np.all(inv.means <= emp.means - 2 * np.hypot(inv.stderrs, emp.stderrs))


class TestConfig:
    @pytest.mark.parametrize("override", [
        {"n_grid": [64, 16]},
        {"repetitions": 2},
        {"metric": {"kind": "hellinger"}},
        {"metric": {"kind": "sobolev"}},
        {"estimators": []},
        {"estimators": [{"name": "a", "kind": "empirical"}, {"name": "a", "kind": "empirical"}]},
        {"estimators": [{"name": "h", "kind": "heat_smoothed", "sigma": "rule_of_thumb"}]},
        {"group": {"kind": "continuous_shift", "dim": 1, "axes": [3]}},
        {"distribution": {"preset": "nope"}},
    ])
    def test_rejects(self, override):
        with pytest.raises(ConfigError):
            tiny(**override)

    def test_yaml_round_trip(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text(cfgmod.dump(TINY))
        cfg = cfgmod.load(str(p))
        assert cfg.n_grid == (16, 64, 256) and cfg.slice_m_max == 16

    def test_presets_build(self):
        for name in cfgmod.PRESETS:
            cfg = cfgmod.preset(name)
            assert cfg.repetitions >= 3

    def test_predicted_exponent(self):
        assert predicted_exponent(MetricSpec("sobolev", 1.0), 2.0, 3) == pytest.approx(3 / 7)
        assert predicted_exponent(MetricSpec("mmd", 1.0), 2.0, 3) == 0.5
        assert predicted_exponent(MetricSpec("l2"), 2.0, 4) == pytest.approx(0.25)


class TestPlot:
    def test_valid_svg_with_legend(self, tmp_path):
        curves = run_convergence(tiny())
        path = plot_curves(curves, str(tmp_path / "t.svg"), title="tiny")
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
        text = " ".join(t.text or "" for t in root.iter() if t.tag.endswith("text"))
        assert "empirical" in text
        again = plot_curves(curves, str(tmp_path / "u.svg"), title="tiny")
        assert open(path, "rb").read() == open(again, "rb").read()

    def test_small_fig1(self, tmp_path):
        res = reproduce_fig1(str(tmp_path), repetitions=3, n_grid=[64, 256, 1024])
        rows = open(res.csv_path).read().splitlines()
        assert len(rows) == 1 + 9
        text = open(res.svg_path).read()
        for name in ("invariant-truncated", "augmented", "non-invariant"):
            assert name in text
        assert res.checks == ordering_checks(res.curves)
        assert res.checks["ordered_every_n"]


class TestCli:
    def run(self, *args, env=None):
        return CliRunner().invoke(main, list(args), env=env)

    def test_spectrum(self):
        r = self.run("spectrum", "--dim", "2", "--lambda-max", str(4 * math.pi ** 2))
        assert r.exit_code == 0
        assert len(r.output.strip().splitlines()) == 6
        r = self.run("spectrum", "--dim", "1", "--lambda-max", str(4 * math.pi ** 2 * 100), "--count",
                     "--group", "cyclic_shift", "--axes", "0", "--orders", "4")
        assert r.output.strip().splitlines()[1].endswith(",5")

    def test_spectral(self):
        r = self.run("spectral", "--dim", "1", "--alpha", "1", "--beta", "1")
        assert r.exit_code == 0
        rows = [line.split(",") for line in r.output.strip().splitlines()]
        assert float(rows[1][2]) == pytest.approx(1 / 12)
        assert float(rows[2][2]) == pytest.approx(1.7726372048)

    def test_exit_codes(self, tmp_path):
        assert self.run("spectral", "--dim", "2", "--alpha", "1").exit_code == 3
        assert self.run("spectrum", "--dim", "2", "--lambda-max", "1", "--group", "continuous_shift",
                        "--axes", "5").exit_code == 2
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump({**TINY, "repetitions": 1}))
        assert self.run("convergence", str(bad)).exit_code == 2
        assert self.run("convergence").exit_code == 2

    def test_estimate(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(cfgmod.dump(TINY))
        coef = tmp_path / "coef.csv"
        r = self.run("estimate", str(cfg), "--n", "100", "--seed", "3", "--coefficients-out", str(coef))
        assert r.exit_code == 0, r.output
        assert r.output.splitlines()[1].startswith("empirical,100,l2,")
        assert coef.read_text().startswith("kind,freq_0,lambda,value")

    def test_convergence_env_output(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(cfgmod.dump(TINY))
        out = tmp_path / "out"
        r = self.run("convergence", str(cfg), env={cfgmod.ENV_OUTPUT_DIR: str(out), cfgmod.ENV_THREADS: "2"})
        assert r.exit_code == 0, r.output
        assert (out / "tiny.csv").read_text().startswith(",".join(CURVE_CSV_HEADER))
        assert (out / "tiny.svg").exists()
