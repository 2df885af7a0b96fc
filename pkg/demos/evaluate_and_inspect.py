"""Evaluate the train_tiny.py checkpoint and dump inspection maps.

Loads the checkpoint, scores it against the rainy-input no-op baseline,
then re-runs one frame by hand to pull out the motion mask and rain layer
the network predicted.

CLI equivalent:
    egvd eval --checkpoint <ckpt> --data <dir> --out <dir>
    egvd derain --checkpoint <ckpt> --frames <dir> --events <evt> --out <dir>
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from egvd.model import derain_step, load_checkpoint
from egvd.training import evaluate, load_sequence, sequence_dirs

TRAIN_OUT = Path(__file__).parent / "out" / "train"
OUT = Path(__file__).parent / "out" / "inspect"


def save_map(path: Path, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    norm = (arr - lo) / (hi - lo) if hi > lo else np.zeros_like(arr)
    Image.fromarray((norm * 255).round().astype(np.uint8)).save(path)


def main() -> None:
    ckpt = TRAIN_OUT / "run" / "checkpoints" / "last.ckpt"
    if not ckpt.exists():
        sys.exit(f"no checkpoint at {ckpt} — run train_tiny.py first")
    OUT.mkdir(parents=True, exist_ok=True)

    ds = TRAIN_OUT / "ds"
    report = evaluate(ckpt, ds, OUT / "eval", dump_frames=True, save_aux=True)
    print(report.as_text())

    # pull one frame's inspection maps out by hand
    model, _ = load_checkpoint(ckpt)
    samples = list(load_sequence(sequence_dirs(ds)[0], bins=model.cfg.voxel_bins))
    state = None
    out = None
    for sample in samples[:3]:
        out = derain_step(model, sample, state)
        state = out.new_state

    mask = out.aux["mask"][0, 0].numpy()
    rain = out.rain_layers[-1][0].mean(dim=0).numpy()
    derained = out.derained[-1][0].permute(1, 2, 0).numpy()
    print(f"motion mask range [{mask.min():.5f}, {mask.max():.5f}]")
    print(f"predicted rain layer mean {rain.mean():+.4f} (negative = removed light)")

    save_map(OUT / "mask.png", mask)
    save_map(OUT / "rain_layer.png", -rain)
    Image.fromarray((np.clip(derained, 0, 1) * 255).round().astype(np.uint8)).save(
        OUT / "derained.png"
    )
    print(f"wrote mask.png, rain_layer.png, derained.png to {OUT}")


if __name__ == "__main__":
    main()
