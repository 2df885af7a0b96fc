"""Command-line behavior: exit codes, flag/config layering, and the
subcommands wired end to end on miniature inputs."""

import numpy as np
import pytest

from egvd import imgio, make_clean_clip
from egvd.cli import main
from egvd.event_io import read_events, read_events_csv
from egvd.events import build_voxel_grid
from egvd.model import read_checkpoint_config
from egvd.training import read_manifest


@pytest.fixture(scope="module")
def frames_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("frames")
    imgio.save_frame_dir(root / "clip", make_clean_clip(16, 16, 3, seed=2))
    return root / "clip"


@pytest.fixture(scope="module")
def cli_dataset(tmp_path_factory):
    """A dataset synthesized through the CLI itself: one 4-frame 48x48 clip."""
    out = tmp_path_factory.mktemp("cli") / "ds"
    cfg = out.parent / "synth.cfg"
    cfg.write_text("width=48\nheight=48\nframes=4\n")
    code = main(
        [
            "synth-data",
            "--config",
            str(cfg),
            "--out",
            str(out),
            "--seed",
            "5",
            "--rain",
            "light",
        ]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def cli_run(cli_dataset, tmp_path_factory):
    """A 1-step training run driven through the CLI."""
    out = tmp_path_factory.mktemp("cli") / "run"
    code = main(
        [
            "train",
            "--preset",
            "desk",
            "--data",
            str(cli_dataset),
            "--out",
            str(out),
            "--epochs",
            "1",
            "--crop",
            "44",
            "--batch",
            "1",
            "--bins",
            "5",
            "--loss",
            "mae",
            "--seed",
            "3",
        ]
    )
    assert code == 0
    return out


class TestExitCodes:
    def test_usage_errors_exit_2(self):
        for argv in ([], ["no-such-command"], ["voxelize"], ["train", "--out", "x", "--crop"]):
            with pytest.raises(SystemExit) as exc:
                main(argv)
            assert exc.value.code == 2

    def test_runtime_failure_exits_1_on_stderr(self, tmp_path, capsys):
        code = main(["voxelize", "--events", str(tmp_path / "nope.evt"), "--out", "g.npz"])
        assert code == 1
        captured = capsys.readouterr()
        assert captured.err.startswith("error:")

    def test_bad_config_value_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("crop=lots\n")
        code = main(
            ["train", "--config", str(cfg), "--data", str(tmp_path), "--out", str(tmp_path / "o")]
        )
        assert code == 1
        assert "config key crop" in capsys.readouterr().err


class TestEventCommands:
    def test_simulate_then_voxelize_round_trip(self, frames_dir, tmp_path, capsys):
        evt = tmp_path / "events.evt"
        assert main(["simulate-events", "--frames", str(frames_dir), "--out", str(evt)]) == 0
        assert "wrote" in capsys.readouterr().out
        stream = read_events(evt)
        assert stream.width == 16 and stream.height == 16

        grid_path = tmp_path / "grid.npz"
        assert main(["voxelize", "--events", str(evt), "--out", str(grid_path), "--bins", "5"]) == 0
        with np.load(grid_path) as payload:
            data = payload["data"]
            assert data.shape == (5, 16, 16)
            expected = build_voxel_grid(stream, 5)
            np.testing.assert_array_equal(data, expected.data)
            assert payload["t_start"] == stream.t_start
            assert payload["t_end"] == stream.t_end

    def test_csv_output_matches_binary(self, frames_dir, tmp_path):
        evt, csv = tmp_path / "e.evt", tmp_path / "e.csv"
        main(["simulate-events", "--frames", str(frames_dir), "--out", str(evt)])
        main(["simulate-events", "--frames", str(frames_dir), "--out", str(csv)])
        a, b = read_events(evt), read_events_csv(csv)
        np.testing.assert_array_equal(a.t, b.t)
        np.testing.assert_array_equal(a.p, b.p)

    def test_voxelize_window_slice_and_default_bins(self, frames_dir, tmp_path):
        evt = tmp_path / "e.evt"
        main(["simulate-events", "--frames", str(frames_dir), "--out", str(evt)])
        stream = read_events(evt)
        mid = (stream.t_start + stream.t_end) // 2

        out = tmp_path / "half.npz"
        code = main(
            ["voxelize", "--events", str(evt), "--out", str(out), "--bins", "4", "--t1", str(mid)]
        )
        assert code == 0
        with np.load(out) as payload:
            expected = build_voxel_grid(stream.slice_time(stream.t_start, mid), 4)
            np.testing.assert_array_equal(payload["data"], expected.data)

        default = tmp_path / "default.npz"
        assert main(["voxelize", "--events", str(evt), "--out", str(default)]) == 0
        with np.load(default) as payload:
            assert payload["data"].shape[0] == 10  # model default bin count

    def test_contrast_flag_changes_event_count(self, frames_dir, tmp_path):
        lo, hi = tmp_path / "lo.evt", tmp_path / "hi.evt"
        main(["simulate-events", "--frames", str(frames_dir), "--out", str(lo), "--contrast", "0.05"])
        main(["simulate-events", "--frames", str(frames_dir), "--out", str(hi), "--contrast", "0.5"])
        assert len(read_events(lo)) > len(read_events(hi))


class TestSynthData:
    def test_dataset_layout_and_manifest(self, cli_dataset):
        manifest = read_manifest(cli_dataset / "manifest.txt")
        assert manifest["sequences"] == "clip00_light"
        seq = cli_dataset / "clip00_light"
        assert (seq / "events.evt").exists()
        assert len(list((seq / "rainy").glob("*.png"))) == 4
        assert len(list((seq / "clean").glob("*.png"))) == 4

    def test_existing_clean_frames_and_multiple_presets(self, frames_dir, tmp_path):
        out = tmp_path / "ds"
        code = main(
            [
                "synth-data",
                "--frames",
                str(frames_dir),
                "--out",
                str(out),
                "--rain",
                "light,heavy",
                "--seed",
                "1",
            ]
        )
        assert code == 0
        manifest = read_manifest(out / "manifest.txt")
        assert manifest["sequences"] == "clip_light,clip_heavy"


class TestTrainEvalDerain:
    def test_train_writes_run_artifacts(self, cli_run, capsys):
        assert (cli_run / "model.ckpt").exists()
        assert (cli_run / "loss_curve.tsv").exists()
        cfg, meta = read_checkpoint_config(cli_run / "model.ckpt")
        assert cfg.base_channels == 8  # desk preset
        assert cfg.voxel_bins == 5  # --bins flag
        assert meta["seed"] == 3

    def test_data_dir_env_fallback(self, cli_dataset, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("EGVD_DATA_DIR", raising=False)
        code = main(["train", "--out", str(tmp_path / "x")])
        assert code == 1
        assert "EGVD_DATA_DIR" in capsys.readouterr().err

        monkeypatch.setenv("EGVD_DATA_DIR", str(cli_dataset))
        out = tmp_path / "env_run"
        code = main(
            [
                "train",
                "--preset",
                "desk",
                "--out",
                str(out),
                "--epochs",
                "1",
                "--crop",
                "44",
                "--batch",
                "1",
                "--loss",
                "mae",
            ]
        )
        assert code == 0
        assert (out / "model.ckpt").exists()

    def test_eval_reports_model_and_baseline(self, cli_run, cli_dataset, tmp_path, capsys):
        out = tmp_path / "eval"
        code = main(
            [
                "eval",
                "--checkpoint",
                str(cli_run / "model.ckpt"),
                "--data",
                str(cli_dataset),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "variant=full" in text and "rainy" in text
        assert (out / "report.tsv").exists()

    def test_derain_writes_numbered_frames_and_aux(self, cli_run, cli_dataset, tmp_path, capsys):
        seq = cli_dataset / "clip00_light"
        out = tmp_path / "derained"
        code = main(
            [
                "derain",
                "--frames",
                str(seq / "rainy"),
                "--events",
                str(seq / "events.evt"),
                "--checkpoint",
                str(cli_run / "model.ckpt"),
                "--out",
                str(out),
                "--save-aux",
            ]
        )
        assert code == 0
        assert "derained 4 frames" in capsys.readouterr().out
        assert sorted(p.name for p in out.glob("*.png")) == [
            f"{k:06d}.png" for k in range(4)
        ]
        aux = sorted(p.name for p in (out / "aux").glob("*.png"))
        assert len(aux) == 8 and aux[0] == "mask_000000.png"

    def test_derain_rejects_wrong_fps(self, cli_run, cli_dataset, tmp_path, capsys):
        seq = cli_dataset / "clip00_light"
        code = main(
            [
                "derain",
                "--frames",
                str(seq / "rainy"),
                "--events",
                str(seq / "events.evt"),
                "--checkpoint",
                str(cli_run / "model.ckpt"),
                "--out",
                str(tmp_path / "x"),
                "--fps",
                "60",
            ]
        )
        assert code == 1
        assert "does not match" in capsys.readouterr().err


class TestAblateReport:
    def test_ablate_mapping_suite(self, cli_dataset, tmp_path, capsys):
        out = tmp_path / "abl"
        code = main(
            [
                "ablate",
                "--suite",
                "mapping",
                "--preset",
                "desk",
                "--data",
                str(cli_dataset),
                "--out",
                str(out),
                "--epochs",
                "1",
                "--crop",
                "44",
                "--batch",
                "1",
                "--loss",
                "mae",
            ]
        )
        assert code == 0
        assert "rainy input (no-op)" in capsys.readouterr().out
        table = (out / "table.tsv").read_text().splitlines()
        assert table[0] == "label\tparams\tpsnr\tssim"
        assert [line.split("\t")[0] for line in table[1:]] == ["background", "rain", "rainy"]

    def test_report_renders_plots(self, cli_run, capsys):
        code = main(["report", "--run", str(cli_run)])
        assert code == 0
        out = capsys.readouterr().out
        assert "wrote" in out
        assert (cli_run / "plots" / "loss_run.png").exists()
