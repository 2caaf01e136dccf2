import json
import re

import numpy as np
import pytest

from stormloc.cli import main
from stormloc.nn.checkpoint import load_checkpoint
from stormloc.pack import read_pack, write_pack

GEN_ARGS = ["gen", "--n", "40", "--seed", "3", "--corrupt-prob", "0.3"]


def run(argv):
    return main([str(a) for a in argv])


class TestHelp:
    def test_every_subcommand_help_exits_zero(self, capsys):
        commands = [
            ["--help"],
            ["gen", "--help"], ["ingest", "--help"], ["train", "--help"],
            ["eval", "--help"], ["sweep", "--help"], ["plot", "--help"],
            ["oracle-study", "--help"], ["study", "--help"],
            ["study", "serve", "--help"], ["study", "report", "--help"],
        ]
        for argv in commands:
            with pytest.raises(SystemExit) as exc:
                run(argv)
            assert exc.value.code == 0
            assert "--" in capsys.readouterr().out


class TestGen:
    def test_split_sizes_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "d.stpk"
        assert run(GEN_ARGS + ["--out", out]) == 0
        assert "train': 28" in capsys.readouterr().out
        data = read_pack(out)
        assert len(data) == 40
        manifest = json.loads((tmp_path / "d.stpk.manifest.json").read_text())
        assert manifest["command"] == "gen"
        assert manifest["params"]["seed"] == 3

    def test_manifest_replay_is_bit_identical(self, tmp_path):
        a, b = tmp_path / "a.stpk", tmp_path / "b.stpk"
        assert run(GEN_ARGS + ["--out", a]) == 0
        manifest = json.loads((tmp_path / "a.stpk.manifest.json").read_text())
        replay = [arg.replace(str(a), str(b)) for arg in manifest["argv"]]
        assert run(replay) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_out_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STORMLOC_OUT_DIR", str(tmp_path))
        assert run(GEN_ARGS + ["--out", "sub/d.stpk"]) == 0
        assert (tmp_path / "sub" / "d.stpk").exists()


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory, small_run):
    """Pack + checkpoint on disk from the shared small training run."""
    from stormloc.nn.checkpoint import save_checkpoint

    root = tmp_path_factory.mktemp("artifacts")
    data, result = small_run
    write_pack(data, root / "d.stpk")
    save_checkpoint(result.model, root / "model.stck")
    return root


class TestEvalAndStudy:
    def test_eval_prints_medians(self, artifacts, tmp_path, capsys):
        code = run(["eval", "--data", artifacts / "d.stpk", "--ckpt", artifacts / "model.stck",
                    "--splits", "train,test", "--out-dir", tmp_path])
        assert code == 0
        out = capsys.readouterr().out
        assert "median error vs truth" in out
        assert (tmp_path / "eval_train.csv").exists()

    def test_oracle_study_runs(self, artifacts, tmp_path, capsys):
        code = run(["oracle-study", "--data", artifacts / "d.stpk",
                    "--ckpt", artifacts / "model.stck", "--n", "10",
                    "--out", tmp_path / "tally.json"])
        assert code == 0
        out = capsys.readouterr().out
        assert "p-value" in out
        tally = json.loads((tmp_path / "tally.json").read_text())
        assert set(tally) == {"train", "test"}

    def test_study_report_from_counts(self, capsys):
        code = run(["study", "report",
                    "--counts", "test=46,13,141", "--counts", "train=49,15,136"])
        assert code == 0
        out = capsys.readouterr().out
        assert "9.6e-06" in out and "1.2e-05" in out
        assert "200" in out

    def test_study_report_requires_input(self, capsys):
        assert run(["study", "report"]) == 2


class TestPlot:
    def test_svg_with_arrows_and_orange_cross(self, artifacts, tmp_path):
        out = tmp_path / "scene.svg"
        code = run(["plot", "--data", artifacts / "d.stpk", "--ckpt", artifacts / "model.stck",
                    "--index", "0", "--out", out])
        assert code == 0
        svg = out.read_text()
        assert svg.count('class="arrow"') == 1792
        assert svg.count('class="marker label-orange"') == 2
        assert '<rect class="cell"' in svg  # probability underlay present

    def test_plot_without_checkpoint(self, artifacts, tmp_path):
        out = tmp_path / "plain.svg"
        assert run(["plot", "--data", artifacts / "d.stpk", "--out", out]) == 0
        assert '<rect class="cell"' not in out.read_text()

    def test_index_out_of_range_is_config_error(self, artifacts, tmp_path, capsys):
        code = run(["plot", "--data", artifacts / "d.stpk", "--index", "999",
                    "--out", tmp_path / "x.svg"])
        assert code == 2


class TestExitCodes:
    def test_missing_pack_is_data_error(self, tmp_path, capsys):
        assert run(["eval", "--data", tmp_path / "nope.stpk", "--ckpt", tmp_path / "no.stck"]) == 3

    def test_corrupt_pack_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.stpk"
        bad.write_bytes(b"garbage!" * 10)
        assert run(["train", "--data", bad, "--out-dir", tmp_path / "run"]) == 3

    def test_divergent_training_is_numeric_failure(self, tmp_path, capsys):
        pack = tmp_path / "d.stpk"
        assert run(["gen", "--n", "24", "--seed", "0", "--out", pack]) == 0
        code = run(["train", "--data", pack, "--out-dir", tmp_path / "run",
                    "--epochs", "2", "--lr", "1e30"])
        assert code == 4
        assert "numeric failure" in capsys.readouterr().err

    def test_bad_flag_value_is_config_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["gen", "--n", "not-a-number", "--out", tmp_path / "d.stpk"])
        assert exc.value.code == 2


class TestTrainCommand:
    def test_train_writes_checkpoints_history_manifest(self, tmp_path, capsys):
        pack = tmp_path / "d.stpk"
        assert run(["gen", "--n", "24", "--seed", "1", "--out", pack]) == 0
        out_dir = tmp_path / "run"
        code = run(["train", "--data", pack, "--out-dir", out_dir, "--epochs", "2"])
        assert code == 0
        assert (out_dir / "model.stck").exists()
        assert (out_dir / "model.best.stck").exists()
        history = (out_dir / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,train_loss,val_loss,seconds"
        assert len(history) == 3
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["params"]["epochs"] == 2
        model = load_checkpoint(out_dir / "model.stck")
        assert model.temperature > 0


class TestSweep:
    def test_single_rate_sweep_writes_table(self, tmp_path, capsys):
        out_dir = tmp_path / "sweep"
        code = run(["sweep", "--rates", "0.5", "--n", "24", "--epochs", "1",
                    "--out-dir", out_dir])
        assert code == 0
        lines = (out_dir / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "corrupt_prob,split,n_corrupted,median_model_km,median_label_km"
        assert len(lines) == 3  # one rate x two splits
        assert (out_dir / "manifest.json").exists()


class TestIngestCommand:
    def test_ingest_to_pack(self, tmp_path):
        fine = np.random.default_rng(0).uniform(-10, 10, size=(2, 32, 56)).astype("<f4")
        fine.tofile(tmp_path / "f0.f32")
        (tmp_path / "m.csv").write_text(
            "# height=32 width=56 lat0=0.0 lon0=44.0\n"
            "timestamp,lat,lon,field_file\n"
            "1981-06-01T06:00:00Z,10.4,75.7,f0.f32\n"
        )
        out = tmp_path / "ingested.stpk"
        assert run(["ingest", "--manifest", tmp_path / "m.csv", "--out", out]) == 0
        data = read_pack(out)
        assert len(data) == 1
        assert data.samples[0].label_cell.flat == 592
