"""Command-line entry point.

One executable, subcommand per operation. Numeric defaults come from the
preset/config/flag resolution in `config` — handlers read the resolved
settings instead of baking numbers in. Exit status: 0 success, 2 usage
error (argparse), 1 runtime failure; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import imgio
from .event_io import FormatError, read_events, read_events_csv, write_events, write_events_csv
from .events import build_voxel_grid, luminance, simulate_events
from .model import VARIANTS, derain_step, load_checkpoint
from .rain import make_clean_clip, synthesize_dataset
from .report import render_run
from .training import (
    SUITES,
    build_samples,
    evaluate,
    frame_timestamps,
    run_suite,
    train,
)

__all__ = ["main"]


def _env_data_dir() -> str | None:
    return os.environ.get("EGVD_DATA_DIR") or None


def _settings(args: argparse.Namespace, **flag_overrides) -> dict[str, str]:
    return cfgmod.resolve_settings(
        preset=getattr(args, "preset", None),
        config_path=getattr(args, "config", None),
        overrides=flag_overrides,
    )


def _command_value(args: argparse.Namespace, settings: dict[str, str], key: str):
    """Flag beats config beats COMMAND_DEFAULTS for handler-level knobs."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return cfgmod.typed_value(settings, key, cfgmod.COMMAND_DEFAULTS[key])


def _read_event_file(path: str | Path):
    return read_events_csv(path) if str(path).endswith(".csv") else read_events(path)


def cmd_simulate_events(args: argparse.Namespace) -> int:
    settings = _settings(args, contrast_threshold=args.contrast)
    sim = cfgmod.sim_config(settings)
    frames = imgio.load_frame_dir(args.frames)
    fps = _command_value(args, settings, "fps")
    stamps = frame_timestamps(frames.shape[0], fps)
    stream = simulate_events(list(zip(stamps, luminance(frames))), sim)
    out = Path(args.out)
    if out.suffix == ".csv":
        write_events_csv(stream, out)
    else:
        write_events(stream, out)
    print(f"wrote {stream.t.size} events to {out}")
    return 0


def cmd_voxelize(args: argparse.Namespace) -> int:
    settings = _settings(args)
    stream = _read_event_file(args.events)
    if args.t0 is not None or args.t1 is not None:
        t0 = args.t0 if args.t0 is not None else stream.t_start
        t1 = args.t1 if args.t1 is not None else stream.t_end
        stream = stream.slice_time(t0, t1, include_end=t1 == stream.t_end)
    bins = args.bins
    if bins is None:
        bins = cfgmod.typed_value(settings, "bins", cfgmod.model_config(settings).voxel_bins)
    grid = build_voxel_grid(stream, bins, normalize="maxabs" if args.normalize else None)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savez(out, data=grid.data, t_start=grid.t_start, t_end=grid.t_end)
    print(f"wrote {bins}x{stream.height}x{stream.width} voxel grid to {out}")
    return 0


def cmd_synth_data(args: argparse.Namespace) -> int:
    settings = _settings(args)
    sim = cfgmod.sim_config(settings)
    fps = _command_value(args, settings, "fps")
    seed = args.seed if args.seed is not None else 0

    if args.frames is not None:
        clean_dir = Path(args.frames)
    else:
        width = cfgmod.typed_value(settings, "width", cfgmod.COMMAND_DEFAULTS["width"])
        height = cfgmod.typed_value(settings, "height", cfgmod.COMMAND_DEFAULTS["height"])
        n_frames = cfgmod.typed_value(settings, "frames", cfgmod.COMMAND_DEFAULTS["frames"])
        n_clips = cfgmod.typed_value(settings, "clips", cfgmod.COMMAND_DEFAULTS["clips"])
        clean_dir = Path(args.out) / "clean_src"
        for i in range(n_clips):
            clip = make_clean_clip(height, width, n_frames, seed=seed + i)
            imgio.save_frame_dir(clean_dir / f"clip{i:02d}", clip)

    rain_names = _command_value(args, settings, "rain").split(",")
    params_list = []
    for name in rain_names:
        name = name.strip()
        params = cfgmod.rain_params(settings, preset=name)
        if args.seed is not None:
            params = replace(params, seed=args.seed)
        params_list.append((name, params))

    manifest = synthesize_dataset(clean_dir, params_list, args.out, sim_cfg=sim, fps=fps)
    print(f"wrote dataset manifest {manifest}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = _settings(
        args,
        seed=args.seed,
        loss=args.loss,
        epochs=args.epochs,
        crop=args.crop,
        batch=args.batch,
        variant=args.variant,
        voxel_bins=args.bins,
    )
    model_cfg = cfgmod.model_config(settings)
    train_cfg = cfgmod.train_config(settings)
    data = args.data or _env_data_dir()
    if data is None:
        raise ValueError("no dataset root: pass --data or set EGVD_DATA_DIR")
    result = train(model_cfg, train_cfg, data, args.out)
    print(
        f"trained {result.steps} steps over {result.epochs_run} epochs "
        f"(final loss {result.final_loss:.6f}, {result.wall_seconds:.1f}s)"
    )
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"loss curve: {result.curve_path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    data = args.data or _env_data_dir()
    if data is None:
        raise ValueError("no dataset root: pass --data or set EGVD_DATA_DIR")
    report = evaluate(
        args.checkpoint,
        data,
        out_dir=args.out,
        state_mode=args.state_mode,
        dump_frames=args.dump_frames,
        save_aux=args.save_aux,
    )
    sys.stdout.write(report.as_text())
    return 0


def cmd_derain(args: argparse.Namespace) -> int:
    settings = _settings(args)
    model, _meta = load_checkpoint(args.checkpoint)
    frames = imgio.load_frame_dir(args.frames)
    stream = _read_event_file(args.events)
    fps = _command_value(args, settings, "fps")
    stamps = frame_timestamps(frames.shape[0], fps)
    if stream.t_start != stamps[0] or stream.t_end != stamps[-1]:
        raise ValueError(
            f"event time range [{stream.t_start}, {stream.t_end}] does not match "
            f"{frames.shape[0]} frames at {fps} fps (expected [{stamps[0]}, {stamps[-1]}])"
        )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = None
    count = 0
    for sample in build_samples(frames, stream, stamps, model.cfg.voxel_bins):
        result = derain_step(model, sample, state)
        state = result.new_state
        pred = result.derained[-1][0].permute(1, 2, 0).numpy()
        imgio.save_png(out / f"{sample.index:06d}.png", pred)
        if args.save_aux:
            aux_dir = out / "aux"
            aux_dir.mkdir(exist_ok=True)
            rain = result.rain_layers[-1][0].permute(1, 2, 0).numpy()
            imgio.save_png(
                aux_dir / f"rain_{sample.index:06d}.png", np.clip(np.abs(rain), 0.0, 1.0)
            )
            mask = result.aux.get("mask")
            if mask is not None:
                imgio.save_png(aux_dir / f"mask_{sample.index:06d}.png", mask[0, 0].numpy())
        count += 1
    print(f"derained {count} frames into {out}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    settings = _settings(
        args,
        seed=args.seed,
        loss=args.loss,
        epochs=args.epochs,
        crop=args.crop,
        batch=args.batch,
    )
    model_cfg = cfgmod.model_config(settings)
    train_cfg = cfgmod.train_config(settings)
    data = args.data or _env_data_dir()
    if data is None:
        raise ValueError("no dataset root: pass --data or set EGVD_DATA_DIR")
    report = run_suite(args.suite, data, args.out, model_cfg, train_cfg)
    sys.stdout.write(report.as_table())
    print(f"tables under {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    written = render_run(args.run, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def _add_settings_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help="scale preset")
    parser.add_argument("--config", help="key=value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egvd",
        description="Event-guided video deraining: simulate, synthesize, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-events", help="simulate an event stream from PNG frames")
    _add_settings_flags(p)
    p.add_argument("--frames", required=True, help="directory of numbered PNG frames")
    p.add_argument("--out", required=True, help="output event file (.evt or .csv)")
    p.add_argument("--contrast", type=float, help="contrast threshold override")
    p.add_argument("--fps", type=float, help="frame rate of the input clip")
    p.set_defaults(func=cmd_simulate_events)

    p = sub.add_parser("voxelize", help="encode an event file as a voxel grid (.npz)")
    _add_settings_flags(p)
    p.add_argument("--events", required=True, help="event file (.evt or .csv)")
    p.add_argument("--out", required=True, help="output .npz path")
    p.add_argument("--bins", type=int, help="number of time bins")
    p.add_argument("--t0", type=int, help="window start (microseconds)")
    p.add_argument("--t1", type=int, help="window end (microseconds)")
    p.add_argument("--normalize", action="store_true", help="divide by max |value|")
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("synth-data", help="synthesize a rainy dataset with events")
    _add_settings_flags(p)
    p.add_argument("--frames", help="clean clip dir (or dir of clip dirs); generated if omitted")
    p.add_argument("--out", required=True, help="dataset root to write")
    p.add_argument("--seed", type=int, help="rain/scene seed")
    p.add_argument("--rain", help="rain preset name(s), comma separated")
    p.add_argument("--fps", type=float, help="frame rate")
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train a model on a synthesized dataset")
    _add_settings_flags(p)
    p.add_argument("--data", help="dataset root (default: $EGVD_DATA_DIR)")
    p.add_argument("--out", required=True, help="run directory for checkpoints and curves")
    p.add_argument("--seed", type=int)
    p.add_argument("--loss", choices=("neg_ssim", "mae", "mse"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--crop", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--bins", type=int, help="voxel bins the model consumes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint against a dataset")
    _add_settings_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="dataset root (default: $EGVD_DATA_DIR)")
    p.add_argument("--out", help="directory for report files and dumps")
    p.add_argument("--state-mode", choices=("carry", "reset"), default="carry")
    p.add_argument("--dump-frames", action="store_true", help="write derained PNGs")
    p.add_argument("--save-aux", action="store_true", help="also write mask/rain images")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("derain", help="derain a frame directory using an event file")
    _add_settings_flags(p)
    p.add_argument("--frames", required=True, help="rainy frames directory")
    p.add_argument("--events", required=True, help="event file (.evt or .csv)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output directory for derained frames")
    p.add_argument("--fps", type=float, help="frame rate of the clip")
    p.add_argument("--save-aux", action="store_true", help="also write mask/rain images")
    p.set_defaults(func=cmd_derain)

    p = sub.add_parser("ablate", help="run an ablation suite end to end")
    _add_settings_flags(p)
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--data", help="dataset root (default: $EGVD_DATA_DIR)")
    p.add_argument("--out", required=True, help="directory for per-run artifacts and tables")
    p.add_argument("--seed", type=int)
    p.add_argument("--loss", choices=("neg_ssim", "mae", "mse"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--crop", type=int)
    p.add_argument("--batch", type=int)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="render loss curves and metric tables as PNGs")
    p.add_argument("--run", required=True, help="run directory to scan")
    p.add_argument("--out", help="plot directory (default: <run>/plots)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
