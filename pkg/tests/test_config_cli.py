import hashlib
import json
import os

import numpy as np
import pytest

import driftlab as dl
from driftlab.cli import main as cli_main
from driftlab.config import config_from_dict, load_config
from driftlab.experiments import compare_noise_study, run_experiment
from driftlab.io import canonical_json, read_trace_csv


def base_config(tmp_path, **overrides):
    data = {
        "field": "example1",
        "x0": [0.0, 1.0],
        "schedule": {"kind": "power", "a0": 1.0, "gamma": 0.75},
        "noise": {"kind": "gaussian", "scale": 0.1},
        "n_steps": 3000,
        "seeds": [1, 2],
        "tracking": {"T": 1.0, "n_windows": 3, "dt": 1e-3},
        "measures": {"checkpoints": [500, 3000], "eps": [0.01, 0.05]},
        "integrate": {"t_end": 3.0, "dt": 1e-3},
        "output_dir": str(tmp_path / "out"),
    }
    data.update(overrides)
    return data


class TestConfigValidation:
    def test_valid_roundtrip(self, tmp_path):
        cfg = config_from_dict(base_config(tmp_path))
        assert cfg.build_field().name == "example1"
        assert cfg.noise.density_flag

    def test_unknown_field_name(self, tmp_path):
        with pytest.raises(dl.ConfigInvalid, match="field"):
            config_from_dict(base_config(tmp_path, field="mystery"))

    def test_dimension_mismatch(self, tmp_path):
        with pytest.raises(dl.ConfigInvalid, match="x0"):
            config_from_dict(base_config(tmp_path, x0=[1.0]))

    def test_bad_noise_kind_path_in_message(self, tmp_path):
        with pytest.raises(dl.ConfigInvalid, match="noise"):
            config_from_dict(base_config(tmp_path, noise={"kind": "purple"}))

    def test_empty_seeds(self, tmp_path):
        with pytest.raises(dl.ConfigInvalid, match="seeds"):
            config_from_dict(base_config(tmp_path, seeds=[]))

    def test_checkpoints_beyond_steps(self, tmp_path):
        with pytest.raises(dl.ConfigInvalid, match="checkpoints"):
            config_from_dict(
                base_config(tmp_path, measures={"checkpoints": [500, 4000], "eps": [0.05]})
            )

    def test_inline_field_definition(self, tmp_path):
        inline = {
            "dimension": 1,
            "guards": [{"type": "coordinate", "index": 0}],
            "pieces": {
                "+": {"type": "constant", "value": [-1.0]},
                "-": {"type": "constant", "value": [1.0]},
            },
            "boundary_values": {"0": [0.0]},
        }
        cfg = config_from_dict(base_config(tmp_path, field=inline, x0=[0.5]))
        fld = cfg.build_field()
        assert np.array_equal(dl.evaluate_field(fld, [0.25]), [-1.0])

    def test_hash_matches_recomputation(self, tmp_path):
        cfg = config_from_dict(base_config(tmp_path))
        recomputed = hashlib.sha256(canonical_json(cfg.effective_dict()).encode()).hexdigest()
        assert cfg.content_hash() == recomputed


class TestRunExperiment:
    def test_bundle_writes_all_csvs_and_summary(self, tmp_path):
        cfg = config_from_dict(
            base_config(tmp_path, n_steps=2000, seeds=[3],
                        measures={"checkpoints": [500, 2000], "eps": [0.05]})
        )
        bundle = run_experiment(cfg, quiet=True)
        for stem in ("trace", "tracking", "residuals", "support"):
            assert os.path.exists(os.path.join(bundle.out_dir, f"{stem}_seed3.csv"))
        summary = json.load(open(os.path.join(bundle.out_dir, "summary.json")))
        assert summary["config_sha256"] == cfg.content_hash()
        assert not bundle.any_diverged
        # atomic writes leave no temp files behind
        assert not [n for n in os.listdir(bundle.out_dir) if n.startswith(".tmp-")]

    def test_schedule_warning_flag(self, tmp_path):
        cfg = config_from_dict(
            base_config(
                tmp_path,
                schedule={"kind": "power", "a0": 1.0, "gamma": 0.4},
                n_steps=500,
                seeds=[1],
                tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                measures={"checkpoints": [500], "eps": [0.05]},
            )
        )
        bundle = run_experiment(cfg, quiet=True)
        diag = bundle.summary["schedule_diagnostics"]
        assert diag["square_sum_finite"] is False
        assert bundle.summary["schedule_warning"] is True

    def test_example1_flag_present(self, tmp_path):
        cfg = config_from_dict(base_config(tmp_path, n_steps=500, seeds=[1],
                                           tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                                           measures={"checkpoints": [500], "eps": [0.05]}))
        bundle = run_experiment(cfg, quiet=True)
        flags = " ".join(bundle.summary["interpretation_flags"])
        assert "1/sqrt(2)" in flags
        assert "smallest k" in flags

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = config_from_dict(
            base_config(tmp_path, n_steps=1500, seeds=[1, 2],
                        measures={"checkpoints": [500, 1500], "eps": [0.05]})
        )
        b1 = run_experiment(cfg, out_dir=str(tmp_path / "a"), quiet=True)
        b2 = run_experiment(cfg, out_dir=str(tmp_path / "b"), quiet=True)
        for name in sorted(os.listdir(b1.out_dir)):
            if name.endswith(".csv"):
                one = open(os.path.join(b1.out_dir, name), "rb").read()
                two = open(os.path.join(b2.out_dir, name), "rb").read()
                assert one == two, name

    def test_trace_csv_roundtrip(self, tmp_path):
        cfg = config_from_dict(base_config(tmp_path, n_steps=300, seeds=[5],
                                           tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                                           measures={"checkpoints": [300], "eps": [0.05]}))
        bundle = run_experiment(cfg, quiet=True)
        path = os.path.join(bundle.out_dir, "trace_seed5.csv")
        trace = read_trace_csv(path, seed=5)
        fresh = dl.run_sa(cfg.build_field(), cfg.x0, cfg.schedule, cfg.noise, 300, seed=5)
        assert np.array_equal(trace.states, fresh.states)
        assert np.array_equal(trace.noises, fresh.noises)
        assert trace.replay_residual() == 0.0

    def test_diverged_seed_is_flagged(self, tmp_path):
        inline = {
            "dimension": 1,
            "guards": [],
            "pieces": {"": {"type": "affine", "A": [[2.0]], "b": [0.0]}},
        }
        cfg = config_from_dict(
            base_config(
                tmp_path, field=inline, x0=[1.0],
                schedule={"kind": "constant", "a0": 1.0},
                n_steps=100, seeds=[1], blowup_bound=1e3,
                tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                measures={"checkpoints": [100], "eps": [0.05]},
            )
        )
        bundle = run_experiment(cfg, quiet=True)
        assert bundle.any_diverged
        assert bundle.summary["seeds"][0]["diverged"] is True


class TestCompareNoiseStudy:
    def test_spurious_dichotomy(self, tmp_path):
        cfg = config_from_dict(
            base_config(
                tmp_path, field="spurious_equilibrium", x0=[0.0],
                n_steps=8000, seeds=[1, 2, 3],
                tracking={"T": 1.0, "n_windows": 2, "dt": 1e-3},
                measures={"checkpoints": [8000], "eps": [0.05]},
            )
        )
        result = compare_noise_study(cfg, quiet=True)
        by_arm = {row["arm"]: row for row in result.table}
        assert by_arm["density"]["escape_fraction"] == 1.0
        assert by_arm["atomic"]["escape_fraction"] == 0.0
        assert by_arm["atomic"]["final_norm_median"] == 0.0
        for row in result.table:
            assert row["krasovskii_fraction_median"] >= row["filippov_fraction_median"]
        assert os.path.exists(os.path.join(result.out_dir, "study_comparison.csv"))

    def test_example1_boundary_start_filippov_fraction(self, tmp_path):
        # gamma = 0.6 reaches t ~ 129 in 2e4 steps, so the one off-graph
        # initial atom weighs under 1%
        cfg = config_from_dict(
            base_config(
                tmp_path, x0=[0.0, 0.0],
                schedule={"kind": "power", "a0": 1.0, "gamma": 0.6},
                n_steps=20000, seeds=[1, 2],
                tracking={"T": 1.0, "n_windows": 2, "dt": 1e-2},
                measures={"checkpoints": [20000], "eps": [0.05]},
            )
        )
        result = compare_noise_study(cfg, quiet=True)
        by_arm = {row["arm"]: row for row in result.table}
        assert by_arm["density"]["filippov_fraction_median"] >= 0.99
        for row in result.table:
            assert row["krasovskii_fraction_median"] >= row["filippov_fraction_median"]

    def test_smooth_field_flag(self, tmp_path):
        cfg = config_from_dict(
            base_config(
                tmp_path, field="linear", x0=[1.0],
                noise={"kind": "zero", "scale": 0.0},
                n_steps=2000, seeds=[1],
                tracking={"T": 0.5, "n_windows": 2, "dt": 1e-3},
                measures={"checkpoints": [2000], "eps": [0.05]},
            )
        )
        result = compare_noise_study(cfg, quiet=True)
        assert "no dichotomy (smooth field)" in result.flags
        by_arm = {row["arm"]: row for row in result.table}
        for row in result.table:
            # smooth field: F = K, both fractions identical in each arm
            assert row["filippov_fraction_median"] == row["krasovskii_fraction_median"]
        assert by_arm["atomic"]["noise_kind"] == "zero"


class TestShippedConfigs:
    def test_example1_demo_config_smoke(self, tmp_path):
        # the demo config in the repo produces all four CSVs per seed + summary
        repo_cfg = os.path.join(os.path.dirname(__file__), "..", "configs", "example1.json")
        cfg = load_config(repo_cfg)
        out = str(tmp_path / "demo")
        bundle = run_experiment(cfg, out_dir=out, seeds=[1], quiet=True)
        for stem in ("trace", "tracking", "residuals", "support"):
            assert os.path.exists(os.path.join(out, f"{stem}_seed1.csv"))
        assert os.path.exists(os.path.join(out, "summary.json"))
        assert not bundle.any_diverged

    def test_all_shipped_configs_load(self):
        cfg_dir = os.path.join(os.path.dirname(__file__), "..", "configs")
        for name in sorted(os.listdir(cfg_dir)):
            cfg = load_config(os.path.join(cfg_dir, name))
            assert cfg.n_steps >= 1


class TestCli:
    def _write_config(self, tmp_path, **overrides):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(base_config(tmp_path, **overrides)))
        return str(path)

    def test_simulate_ok(self, tmp_path, capsys):
        path = self._write_config(tmp_path, n_steps=500, seeds=[1],
                                  tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                                  measures={"checkpoints": [500], "eps": [0.05]})
        rc = cli_main(["simulate", "--config", path, "--quiet"])
        assert rc == 0

    def test_seed_override(self, tmp_path):
        path = self._write_config(tmp_path, n_steps=500, seeds=[1],
                                  tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                                  measures={"checkpoints": [500], "eps": [0.05]})
        out = str(tmp_path / "ovr")
        rc = cli_main(["simulate", "--config", path, "--out", out, "--seeds", "7,8", "--quiet"])
        assert rc == 0
        assert os.path.exists(os.path.join(out, "trace_seed7.csv"))
        assert os.path.exists(os.path.join(out, "trace_seed8.csv"))

    def test_integrate_writes_trajectory(self, tmp_path):
        path = self._write_config(tmp_path)
        out = str(tmp_path / "integ")
        rc = cli_main(["integrate", "--config", path, "--out", out, "--quiet"])
        assert rc == 0
        lines = open(os.path.join(out, "trajectory.csv")).read().splitlines()
        assert lines[0] == "t,x_1,x_2,mode"
        assert any("slide:0" in line for line in lines)

    def test_maps_prints_hulls(self, tmp_path, capsys):
        path = self._write_config(tmp_path)
        rc = cli_main(["maps", "--config", path, "--point", "0,0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "F vertices" in out and "K vertices" in out
        assert "[-1.0, 0.0]" in out  # boundary value in K only

    def test_measures_recompute(self, tmp_path):
        path = self._write_config(tmp_path, n_steps=500, seeds=[1],
                                  tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                                  measures={"checkpoints": [500], "eps": [0.05]})
        out = str(tmp_path / "m")
        assert cli_main(["simulate", "--config", path, "--out", out, "--quiet"]) == 0
        residuals = open(os.path.join(out, "residuals_seed1.csv")).read()
        assert cli_main(["measures", "--config", path, "--out", out, "--quiet"]) == 0
        assert open(os.path.join(out, "residuals_seed1.csv")).read() == residuals

    def test_study_exit_code(self, tmp_path):
        path = self._write_config(tmp_path, field="spurious_equilibrium", x0=[0.0],
                                  n_steps=2000, seeds=[1],
                                  tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
                                  measures={"checkpoints": [2000], "eps": [0.05]})
        rc = cli_main(["study", "--config", path, "--out", str(tmp_path / "st"), "--quiet"])
        assert rc == 0

    def test_config_error_exit_code(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(base_config(tmp_path, noise={"kind": "purple"})))
        assert cli_main(["simulate", "--config", str(path)]) == 2

    def test_io_error_exit_code(self, tmp_path):
        assert cli_main(["simulate", "--config", str(tmp_path / "missing.json")]) == 4

    def test_diverged_exit_code(self, tmp_path):
        inline = {
            "dimension": 1,
            "guards": [],
            "pieces": {"": {"type": "affine", "A": [[2.0]], "b": [0.0]}},
        }
        path = self._write_config(
            tmp_path, field=inline, x0=[1.0],
            schedule={"kind": "constant", "a0": 1.0},
            n_steps=100, seeds=[1], blowup_bound=1e3,
            tracking={"T": 0.5, "n_windows": 1, "dt": 1e-2},
            measures={"checkpoints": [100], "eps": [0.05]},
        )
        assert cli_main(["simulate", "--config", path, "--quiet"]) == 3
