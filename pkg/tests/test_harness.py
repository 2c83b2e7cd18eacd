import hashlib
import json

import numpy as np
import pytest

from moderr import cli
from moderr.bounds import BETA, COV, MEAN
from moderr.dynamics import ModelStep
from moderr.errors import ConfigError
from moderr.estimation import MomentEstimate, moment_error_report, residual_sequence
from moderr.harness import (OUTPUT_FILES, ExperimentConfig, check_manifest, compare, load_csv,
                            parse_config, parse_config_text, run_twin_experiment, write_outputs)

SMALL = dict(N=12, steps=200, spinup_steps=200)


@pytest.fixture(scope="module")
def small_run():
    return run_twin_experiment(ExperimentConfig(R_variance=1e-3, seed=5, **SMALL))


@pytest.fixture(scope="module")
def small_out(small_run, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    manifest = write_outputs(small_run, out)
    return out, manifest


class TestConfig:
    def test_empty_gives_defaults(self):
        cfg = parse_config_text("")
        assert (cfg.N, cfg.steps, cfg.B_variance, cfg.spinup_steps, cfg.dt) == (40, 3000, 1e12, 1000, 0.05)
        assert cfg.epsilons == (0.1, 0.01, 0.001)
        assert not cfg.cyclic_cov

    def test_single_override(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("# observation error\nR_variance = 1e-3\n")
        cfg = parse_config(path)
        assert cfg.R_variance == 1e-3
        assert cfg.N == 40 and cfg.steps == 3000

    def test_all_keys(self):
        cfg = parse_config_text(
            "N = 8\nsteps = 10\ndt = 0.01\nseed = 18446744073709551615\nR_variance = 2e-4\n"
            "B_variance = 5\nspinup_steps = 0\ncyclic_cov = true\nmodel_error = no\n"
            "epsilons = 0.5, 0.25\ncov_entry = 2, 3\noutput_dir = somewhere\n")
        assert cfg.seed == 2 ** 64 - 1 and cfg.cyclic_cov and not cfg.model_error
        assert cfg.epsilons == (0.5, 0.25) and cfg.entry == (2, 3)

    def test_invariant_violation_names_field(self):
        with pytest.raises(ConfigError, match="N ≥ 5") as info:
            parse_config_text("N = 2\n")
        assert info.value.field == "N"

    @pytest.mark.parametrize("text, line", [
        ("N = 40\nthis is not a pair\n", 2),
        ("\n\nbogus_key = 3\n", 3),
        ("steps = many\n", 1),
        ("N = 40\nN = 41\n", 2),
        ("dt =\n", 1),
    ])
    def test_parse_errors_carry_line(self, text, line):
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    @pytest.mark.parametrize("text", ["steps = 2", "dt = 0", "R_variance = -1", "B_variance = 0",
                                      "epsilons = 0.1, 0", "cov_entry = 1, 41", "seed = -1"])
    def test_validation(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)


class TestRun:
    def test_shapes(self, small_run):
        r = small_run
        assert r.truth.shape == r.analysis.shape == (200, 12)
        assert len(r.beta) == len(r.beta_tilde) == 199
        assert r.hovmoller.shape == (200, 12) and np.all(r.hovmoller >= 0)

    def test_truth_reconstruction(self, small_run):
        model = ModelStep(small_run.config.dt)
        rebuilt = small_run.truth[1:] - model(small_run.truth[:-1])
        assert np.array_equal(rebuilt, small_run.beta.samples)

    def test_scale_sanity(self, small_run):
        err = small_run.hovmoller.max()
        noise = np.sqrt(small_run.config.R_variance)
        assert noise / 6 <= err <= 6 * noise

    def test_certificate_families(self, small_run):
        n_eps = len(small_run.config.epsilons)
        count = {t: sum(c.theorem == t for c in small_run.certificates) for t in (BETA, MEAN, COV)}
        assert count == {BETA: n_eps + 1, MEAN: n_eps + 1, COV: n_eps}
        assert all(c.passed for c in small_run.certificates)

    def test_no_model_error_limit(self):
        r = run_twin_experiment(ExperimentConfig(model_error=False, R_variance=1e-8, seed=3))
        assert np.array_equal(r.beta.samples, np.zeros_like(r.beta.samples))
        assert np.abs(r.beta_tilde.samples).max() < 1e-3
        assert np.abs(r.estimated.mean).max() < 1e-5
        assert np.abs(r.estimated.cov).max() < 1e-6

    def test_replaced_observation_changes_later_analyses(self):
        cfg = ExperimentConfig(B_variance=1.0, R_variance=1.0, seed=2, **SMALL)
        base = run_twin_experiment(cfg)
        ys = base.observations.copy()
        ys[50, 0] += 0.1
        alt = run_twin_experiment(cfg, observations=ys)
        assert np.array_equal(alt.analysis[:50], base.analysis[:50])
        # each analysis halves the difference, so it reaches rounding level after a few dozen steps
        assert np.all(np.any(alt.analysis[50:60] != base.analysis[50:60], axis=1))

    def test_cyclic_cov_option(self):
        r = run_twin_experiment(ExperimentConfig(cyclic_cov=True, **SMALL))
        assert r.prescribed_cov[0, -1] == pytest.approx(0.01)


class TestOutputs:
    def test_files(self, small_out):
        out, manifest = small_out
        names = {f["path"] for f in manifest["files"]}
        assert names == set(OUTPUT_FILES) | {"summary.json"}
        assert load_csv(out / "hovmoller.csv").shape == (200, 12)
        assert load_csv(out / "mu_true.csv").shape == (12, 1)

    def test_round_trip_exact(self, small_run, small_out):
        out, _ = small_out
        assert np.array_equal(load_csv(out / "Q_estimated.csv"), small_run.estimated.cov)
        assert np.array_equal(load_csv(out / "beta_tilde.csv"), small_run.beta_tilde.samples)
        assert np.array_equal(load_csv(out / "mu_sampled.csv").ravel(), small_run.sampled.mean)

    def test_manifest_hashes(self, small_out):
        out, manifest = small_out
        for f in manifest["files"]:
            assert hashlib.sha256((out / f["path"]).read_bytes()).hexdigest() == f["sha256"]
        assert check_manifest(out) == []

    def test_summary_certificate_count(self, small_run, small_out):
        out, _ = small_out
        summary = json.loads((out / "summary.json").read_text())
        n_eps = len(small_run.config.epsilons)
        assert len(summary["certificates"]) == 3 * n_eps + 2
        assert sum(c["tight"] for c in summary["certificates"]) == 2
        assert summary["config"]["seed"] == 5
        assert "output_dir" not in summary["config"]
        assert summary["lipschitz"]["method"] == "jacobian-supremum"

    def test_report_recomputed_from_files(self, small_out):
        out, _ = small_out
        model = ModelStep(0.05)
        truth, analysis = load_csv(out / "truth.csv"), load_csv(out / "analysis.csv")
        sampled = MomentEstimate.from_sequence(residual_sequence(truth, model))
        estimated = MomentEstimate.from_sequence(residual_sequence(analysis, model))
        rep = moment_error_report(sampled, estimated, load_csv(out / "mu_true.csv").ravel(),
                                  load_csv(out / "Q_true.csv"))
        assert np.array_equal(rep.cov_sampled_vs_estimated, load_csv(out / "Q_estimate_error.csv"))
        assert np.array_equal(rep.cov_sampled_vs_prescribed, load_csv(out / "Q_sampling_error.csv"))
        assert np.array_equal(rep.cov_prescribed_vs_estimated, load_csv(out / "Q_total_error.csv"))
        summary = json.loads((out / "summary.json").read_text())
        assert summary["max_abs"] == rep.max_abs()

    def test_determinism(self, tmp_path):
        cfg = ExperimentConfig(seed=42, **SMALL)
        write_outputs(run_twin_experiment(cfg), tmp_path / "a")
        write_outputs(run_twin_experiment(cfg), tmp_path / "b")
        for name in list(OUTPUT_FILES) + ["summary.json", "manifest.json"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_tampering_detected(self, small_run, tmp_path):
        write_outputs(small_run, tmp_path)
        with open(tmp_path / "Q_true.csv", "a") as fh:
            fh.write("0\n")
        assert check_manifest(tmp_path) == ["Q_true.csv"]


class TestCLI:
    def _config(self, tmp_path, text):
        path = tmp_path / "exp.cfg"
        path.write_text(text)
        return str(path)

    def test_run_and_compare(self, tmp_path, capsys):
        small = "N = 12\nsteps = 150\nspinup_steps = 100\n"
        c3 = self._config(tmp_path, small + "R_variance = 1e-3\n")
        assert cli.main(["run", "--config", c3, "--out", str(tmp_path / "r3"), "--seed", "7"]) == 0
        c8 = self._config(tmp_path, small)
        assert cli.main(["run", "--config", c8, "--out", str(tmp_path / "r8")]) == 0
        capsys.readouterr()
        assert cli.main(["compare", "--a", str(tmp_path / "r3"), "--b", str(tmp_path / "r8"),
                         "--out", str(tmp_path / "ratios.json")]) == 0
        ratios = json.loads(capsys.readouterr().out)
        assert ratios["rms_analysis_error"]["ratio"] > 50
        assert json.loads((tmp_path / "ratios.json").read_text()) == ratios
        summary = json.loads((tmp_path / "r3" / "summary.json").read_text())
        assert summary["config"]["seed"] == 7

    def test_config_error_exit(self, tmp_path, capsys):
        assert cli.main(["run", "--config", self._config(tmp_path, "N = 2\n")]) == 2
        assert "N ≥ 5" in capsys.readouterr().err
        assert cli.main(["run", "--config", self._config(tmp_path, "nonsense\n")]) == 2

    def test_numerical_failure_exit(self, tmp_path):
        cfg = self._config(tmp_path, "N = 12\nsteps = 50\ndt = 5\nspinup_steps = 50\n")
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "x")]) == 3

    def test_missing_config_is_io_error(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "absent.cfg")]) == 1

    def test_bad_seed(self):
        with pytest.raises(SystemExit):
            cli.main(["run", "--seed", "-4"])

    def test_plot(self, small_out, tmp_path, capsys):
        out, _ = small_out
        assert cli.main(["plot", "--run", str(out), "--out", str(tmp_path / "figs")]) == 0
        written = capsys.readouterr().out.split()
        assert len(written) == 4
        assert all((tmp_path / "figs" / n).stat().st_size > 0
                   for n in ("hovmoller.png", "mean.png", "covariance.png", "covariance_error.png"))
        assert cli.main(["compare", "--a", str(out), "--b", str(out),
                         "--plot", str(tmp_path / "cmp.png")]) == 0
        assert (tmp_path / "cmp.png").stat().st_size > 0


def test_compare_ratios(small_out):
    out, _ = small_out
    ratios = compare(out, out)
    assert all(v["ratio"] == 1.0 for v in ratios.values() if v["b"] != 0)
