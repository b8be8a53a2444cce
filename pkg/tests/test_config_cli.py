import os

import pytest

from vannodes.cli import main
from vannodes.config import EXPERIMENTS, ExperimentConfig


class TestConfig:
    def test_round_trip(self):
        c = ExperimentConfig(
            experiment="grid",
            depths=[3, 9],
            learning_rates=[0.01, 0.5],
            dataset="and4",
            early_stop=True,
            sigma_x_sq=0.25,
        )
        back = ExperimentConfig.from_text(c.to_text())
        assert back == c
        assert back.config_hash() == c.config_hash()

    def test_hash_sensitivity(self):
        a = ExperimentConfig(master_seed=0)
        b = ExperimentConfig(master_seed=1)
        assert a.config_hash() != b.config_hash()

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config key"):
            ExperimentConfig.from_text("nonsense=1\n")

    def test_bad_experiment_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(experiment="frobnicate")

    def test_comments_and_blanks_ignored(self):
        c = ExperimentConfig.from_text("# comment\n\nexperiment=grid\nruns=3\n")
        assert c.experiment == "grid"
        assert c.runs == 3

    def test_with_overrides_parses_strings(self):
        c = ExperimentConfig().with_overrides({"depths": "4,8", "early_stop": "true"})
        assert c.depths == [4, 8]
        assert c.early_stop is True

    def test_all_experiments_constructible(self):
        for name in EXPERIMENTS:
            assert ExperimentConfig(experiment=name).experiment == name


SMALL = [
    "--set", "depths=4", "--set", "widths=12", "--set", "runs=2",
    "--set", "probe_samples=100", "--set", "epochs=3", "--set", "max_epochs=3",
    "--set", "batch_size=4", "--set", "learning_rates=0.1",
    "--set", "dataset=xor2", "--set", "success_metric=train_accuracy",
]


class TestCli:
    def test_sweep_writes_outputs(self, tmp_path):
        out = str(tmp_path / "out")
        rc = main(["sweep", *SMALL, "--set", f"out_dir={out}"])
        assert rc == 0
        names = os.listdir(out)
        assert any(n.startswith("sweep_") and n.endswith(".csv") for n in names)
        assert any(n.endswith(".svg") for n in names)

    def test_config_file_plus_override(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("depths=4\nwidths=10\nruns=1\nprobe_samples=50\n")
        out = str(tmp_path / "o")
        rc = main(["sweep", "--config", str(cfg), "--set", f"out_dir={out}"])
        assert rc == 0
        assert os.path.isdir(out)

    def test_resume_skips_completed(self, tmp_path):
        out = str(tmp_path / "out")
        args = ["sweep", *SMALL, "--set", f"out_dir={out}"]
        assert main(args) == 0
        runs_csv = next(
            os.path.join(out, n) for n in os.listdir(out) if n.startswith("sweep_runs")
        )
        before = open(runs_csv).read()
        assert main(args) == 0  # second invocation resumes, adds nothing
        assert open(runs_csv).read() == before

    def test_bad_config_exits_2(self, tmp_path, capsys):
        rc = main(["sweep", "--set", "bogus_key=1", "--set", f"out_dir={tmp_path}"])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_failed_run_exits_nonzero(self, tmp_path, capsys):
        # point the grid at a missing MNIST directory: the run cannot complete
        rc = main([
            "grid", "--set", "dataset=mnist",
            "--set", f"mnist_dir={tmp_path}/absent", "--set", f"out_dir={tmp_path}/o",
        ])
        assert rc == 1
        assert "run failed" in capsys.readouterr().err

    def test_train_subcommands(self, tmp_path):
        out = str(tmp_path / "out")
        for cmd in ("dynamics", "tasks", "orth", "grid"):
            rc = main([cmd, *SMALL, "--set", f"out_dir={out}"])
            assert rc == 0, cmd

    def test_diag_and_heatmap(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["diag", *SMALL, "--set", f"out_dir={out}"]) == 0
        assert main(["heatmap", *SMALL, "--set", f"out_dir={out}"]) == 0
        assert any(n.startswith("diagnostics_") for n in os.listdir(out))
        assert any(n.startswith("heatmap_") for n in os.listdir(out))
