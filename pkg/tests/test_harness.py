import json

import numpy as np
import pytest

from adamlab.cli import main as cli_main
from adamlab.harness.config import ExperimentConfig, canonical_hash, default_k_grid
from adamlab.harness.diagnostics import as_rate_diagnostic, nonergodic_diagnostic
from adamlab.harness.experiment import ScheduleGateError, load_run, run_experiment
from adamlab.harness.reporting import rate_table, report


def small_config(tmp_path, **overrides):
    base = {
        "problem": {"id": "bounded-nonconvex", "dim": 3},
        "noise": {"kind": "uniform-ball", "sigma": 0.1},
        "hyperparams": {
            "eta": {"kind": "power_eta", "scale": 1.0, "exponent": 0.5},
            "theta": {"kind": "power_theta", "exponent": 1.0},
            "beta": {"kind": "constant_beta", "value": 0.9},
            "epsilon": 1.0,
            "beta_cap": 0.9,
        },
        "iterations": 400,
        "seeds": [1, 2, 3],
        "statistics": ["min_output", "uniform_output", "last_iterate", "f_gap"],
        "bound_checks": ["min_output", "uniform_output"],
        "k_grid": [4, 40, 400],
        "output_dir": str(tmp_path / "run"),
    }
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


class TestConfig:
    def test_hash_stable_under_reordering(self, tmp_path):
        cfg = small_config(tmp_path)
        d = cfg.to_dict()
        shuffled = {k: d[k] for k in reversed(list(d))}
        assert canonical_hash(d) == canonical_hash(shuffled)

    def test_hash_ignores_output_dir(self, tmp_path):
        a = small_config(tmp_path)
        b = small_config(tmp_path, output_dir=str(tmp_path / "elsewhere"))
        assert a.config_hash() == b.config_hash()

    def test_duplicate_seeds_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, seeds=[1, 1, 2])

    def test_grid_must_fit(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, k_grid=[10, 1000])

    def test_unknown_statistic(self, tmp_path):
        with pytest.raises(ValueError):
            small_config(tmp_path, statistics=["median_output"])

    def test_default_grid_contains_decades(self):
        grid = default_k_grid(100_000)
        assert 100_000 in grid and 10_000 in grid and 1000 in grid


class TestRunExperiment:
    def test_outputs_exist(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        out = result.output_dir
        assert (out / "manifest.json").exists()
        assert (out / "summary.json").exists()
        for name in ("min_output", "uniform_output", "last_iterate", "f_gap"):
            assert (out / "stats" / f"{name}.csv").exists()
        for seed in (1, 2, 3):
            assert (out / "trajectories" / f"seed_{seed}.csv").exists()
            assert (out / "probes" / f"seed_{seed}.json").exists()

    def test_stats_header(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        text = (result.output_dir / "stats" / "min_output.csv").read_text()
        assert text.splitlines()[0] == "K,mean,ci_halfwidth,bound,verdict"

    def test_rerun_byte_identical(self, tmp_path):
        r1 = run_experiment(small_config(tmp_path, output_dir=str(tmp_path / "a")))
        r2 = run_experiment(small_config(tmp_path, output_dir=str(tmp_path / "b")))
        for rel in (["summary.json"]
                    + [f"stats/{n}.csv" for n in r1.series]
                    + [f"trajectories/seed_{s}.csv" for s in (1, 2, 3)]
                    + [f"probes/seed_{s}.json" for s in (1, 2, 3)]):
            a = (r1.output_dir / rel).read_bytes()
            b = (r2.output_dir / rel).read_bytes()
            assert a == b, rel

    def test_min_output_non_increasing(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        mins = result.series["min_output"].mean
        assert all(b <= a + 1e-15 for a, b in zip(mins, mins[1:]))

    def test_uniform_output_is_prefix_average(self, tmp_path):
        # with thinning 1 the statistic equals the uniform ergodic average
        # of the per-step squared gradient norms, averaged over seeds
        from adamlab.ergodic import Uniform, ergodic_average, series_from_trajectory_csv
        cfg = small_config(tmp_path)
        result = run_experiment(cfg)
        per_seed = []
        for s in cfg.seeds:
            gradsq = series_from_trajectory_csv(
                result.output_dir / "trajectories" / f"seed_{s}.csv",
                "grad_norm") ** 2
            per_seed.append([ergodic_average(gradsq, Uniform(), n)
                             for n in cfg.k_grid])
        expect = np.mean(per_seed, axis=0)
        got = result.series["uniform_output"].mean
        assert np.allclose(got, expect, rtol=1e-9)

    def test_frozen_iterates_constant_statistics(self, tmp_path):
        cfg = small_config(
            tmp_path,
            hyperparams={
                "eta": {"kind": "tabulated", "values": [0.0] * 400},
                "theta": {"kind": "power_theta", "exponent": 1.0},
                "beta": {"kind": "constant_beta", "value": 0.9},
                "epsilon": 1.0,
                "beta_cap": 0.9,
            },
            noise={"kind": "none", "sigma": 0.0},
            allow_nonconvergent=True,
            bound_checks=[],
        )
        result = run_experiment(cfg)
        last = result.series["last_iterate"].mean
        assert max(last) == pytest.approx(min(last))
        gap = result.series["f_gap"].mean
        assert max(gap) == pytest.approx(min(gap))

    def test_schedule_gate(self, tmp_path):
        bad = small_config(
            tmp_path,
            hyperparams={
                "eta": {"kind": "power_eta", "scale": 1.0, "exponent": 0.5},
                "theta": {"kind": "constant_theta", "value": 0.19},
                "beta": {"kind": "constant_beta", "value": 0.9},
                "epsilon": 1.0,
                "beta_cap": 0.9,
            })
        with pytest.raises(ScheduleGateError):
            run_experiment(bad)
        ok = small_config(
            tmp_path,
            hyperparams=bad.hyperparams_raw,
            allow_nonconvergent=True,
            bound_checks=[])
        run_experiment(ok)

    def test_worker_pool_matches_sequential(self, tmp_path):
        r1 = run_experiment(small_config(tmp_path, output_dir=str(tmp_path / "seq")))
        r2 = run_experiment(small_config(tmp_path, output_dir=str(tmp_path / "par"),
                                         workers=2))
        for rel in (["summary.json"]
                    + [f"stats/{n}.csv" for n in r1.series]
                    + [f"trajectories/seed_{s}.csv" for s in (1, 2, 3)]):
            assert ((r1.output_dir / rel).read_bytes()
                    == (r2.output_dir / rel).read_bytes()), rel

    def test_inline_audit_reports(self, tmp_path):
        result = run_experiment(small_config(tmp_path, audit=True))
        assert set(result.audit_reports) == {1, 2, 3}
        assert all(r["passed"] for r in result.audit_reports.values())
        loaded = load_run(result.output_dir)
        assert set(loaded.audit_reports) == {"1", "2", "3"}

    def test_load_run_round_trip(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        loaded = load_run(result.output_dir)
        assert loaded.config.config_hash() == result.config.config_hash()
        assert loaded.series["min_output"].mean == result.series["min_output"].mean

    def test_dominance_verdicts_recomputable(self, tmp_path):
        from adamlab.bounds import GradBoundConstants, min_output_bound
        from adamlab.harness.experiment import _build_problem
        cfg = small_config(tmp_path)
        result = run_experiment(cfg)
        s = result.series["min_output"]
        consts = GradBoundConstants(**result.bound_constants["min_output"])
        hp = cfg.resolve_hyperparams(_build_problem(cfg))
        recomputed = min_output_bound(consts, hp.eta, hp.theta,
                                      np.array(cfg.k_grid))
        assert np.allclose(recomputed, s.bound, rtol=1e-12)
        for m, h, b, v in zip(s.mean, s.ci_halfwidth, s.bound, s.verdict):
            assert v == (m + h <= b)


class TestDiagnostics:
    def as_rate_config(self, tmp_path, **overrides):
        return small_config(
            tmp_path,
            hyperparams={
                "eta": {"kind": "power_eta", "scale": 1.0, "exponent": 0.6},
                "theta": {"kind": "power_theta", "exponent": 0.5},
                "beta": {"kind": "constant_beta", "value": 0.9},
                "epsilon": 1.0,
                "beta_cap": 0.9,
            },
            iterations=2000,
            k_grid=[20, 200, 2000],
            bound_checks=[],
            **overrides)

    def test_as_rate_runs(self, tmp_path):
        result = run_experiment(self.as_rate_config(tmp_path))
        rep = as_rate_diagnostic(result)
        assert rep.q == 0.6 and rep.p == 0.5
        assert rep.seeds_total == 3
        assert 0.0 <= rep.decreasing_fraction <= 1.0

    def test_as_rate_refuses_constant_eta(self, tmp_path):
        cfg = small_config(
            tmp_path,
            hyperparams={
                "eta": {"kind": "power_eta", "scale": 0.5, "exponent": 0.0},
                "theta": {"kind": "power_theta", "exponent": 1.0},
                "beta": {"kind": "constant_beta", "value": 0.9},
                "epsilon": 1.0,
                "beta_cap": 0.9,
            },
            allow_nonconvergent=True,
            bound_checks=[])
        result = run_experiment(cfg)
        with pytest.raises(ValueError):
            as_rate_diagnostic(result)

    def test_as_rate_refuses_q_half(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        with pytest.raises(ValueError):
            as_rate_diagnostic(result)  # q = 0.5 violates sum eta^2 < inf

    def test_nonergodic_refuses_constant_theta(self, tmp_path):
        cfg = small_config(
            tmp_path,
            hyperparams={
                "eta": {"kind": "power_eta", "scale": 1.0, "exponent": 0.6},
                "theta": {"kind": "constant_theta", "value": 0.19},
                "beta": {"kind": "constant_beta", "value": 0.9},
                "epsilon": 1.0,
                "beta_cap": 0.9,
            },
            allow_nonconvergent=True,
            bound_checks=[])
        result = run_experiment(cfg)
        with pytest.raises(ValueError) as err:
            nonergodic_diagnostic(result)
        assert "1 - theta" in str(err.value)

    def test_nonergodic_report_shape(self, tmp_path):
        result = run_experiment(self.as_rate_config(tmp_path))
        rep = nonergodic_diagnostic(result, rho=0.99)
        assert rep.k_grid[-1] == 2000
        assert len(rep.grad_norm_mean) == 3


class TestReporting:
    def test_rate_table_regimes(self):
        rows = rate_table(dict(m_bound=1.0, epsilon=1.0, beta=0.9, dim=1,
                               smoothness=1.0, c0=1.0, c0_tilde=1.0,
                               f1_gap=1.0))
        assert [r["q"] for r in rows] == [0.3, 0.5, 0.7, 1.0]
        assert all(r["ok"] for r in rows)

    def test_report_formats(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        for fmt in ("csv", "json", "table"):
            written = report(result, fmt)
            assert written and all(p.exists() for p in written)
        with pytest.raises(ValueError):
            report(result, "pdf")

    def test_json_report_contains_verdicts(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        (path,) = report(result, "json")
        payload = json.loads(path.read_text())
        assert [v["condition_id"] for v in payload["sc_adam"]] == [
            "1", "2", "3", "4", "5"]
        assert "min_output" in payload["statistics"]


class TestCli:
    def write_config(self, tmp_path, cfg):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg.to_dict(), indent=1))
        return path

    def test_run_and_report(self, tmp_path, capsys):
        cfg = small_config(tmp_path)
        path = self.write_config(tmp_path, cfg)
        assert cli_main(["run", str(path)]) == 0
        out = capsys.readouterr().out
        assert "SC-Adam" in out
        assert cli_main(["report", str(tmp_path / "run"), "--format", "table"]) == 0
        assert cli_main(["audit", str(tmp_path / "run"), "--max-seeds", "2"]) == 0
        assert cli_main(["rates", str(tmp_path / "run")]) in (0, 1)

    def test_check_schedule_exit_codes(self, tmp_path):
        good = self.write_config(tmp_path, small_config(tmp_path))
        assert cli_main(["check-schedule", str(good)]) == 0
        bad_cfg = small_config(
            tmp_path,
            hyperparams={
                "eta": {"kind": "power_eta", "scale": 1.0, "exponent": 0.5},
                "theta": {"kind": "constant_theta", "value": 0.19},
                "beta": {"kind": "constant_beta", "value": 0.9},
                "epsilon": 1.0,
                "beta_cap": 0.9,
            })
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(bad_cfg.to_dict()))
        assert cli_main(["check-schedule", str(bad)]) == 1

    def test_validation_error_exit_code(self, tmp_path):
        missing = tmp_path / "nope.json"
        assert cli_main(["run", str(missing)]) == 2
        broken = tmp_path / "broken.json"
        broken.write_text("{\"problem\": {\"id\": \"unknown-problem\"}}")
        assert cli_main(["run", str(broken)]) == 2

    def test_lemmas_quick(self):
        assert cli_main(["lemmas", "--instances", "200", "--gamma-k", "1000"]) == 0
