"""Render procedural rain and package a training dataset.

Generates a clean clip, renders streak layers at three densities, overlays
them, and builds a dataset directory (rainy PNGs + clean PNGs + simulated
events + manifest) ready for `egvd train --data ...`.

CLI equivalent:
    egvd synth-data --frames <clean_dir> --rain light,medium,heavy --out <dir>
"""

from pathlib import Path

import numpy as np

from egvd.config import RAIN_PRESETS
from egvd.imgio import save_frame_dir
from egvd.rain import generate_rain_layer, make_clean_clip, overlay, synthesize_dataset
from egvd.training import read_manifest, sequence_dirs

OUT = Path(__file__).parent / "out" / "dataset"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    clip = make_clean_clip(height=96, width=96, n_frames=8, seed=4)
    src = OUT / "clean"
    save_frame_dir(src / "street", clip)

    for name in ("light", "medium", "heavy"):
        params = RAIN_PRESETS[name]
        layer = generate_rain_layer(params, height=96, width=96, n_frames=8)
        rainy = np.stack([overlay(f, r) for f, r in zip(clip, layer.frames)])
        cover = float((layer.frames > 0.05).mean())
        print(
            f"{name:>6}: density {params.density:.0f} drops/Mpx, "
            f"{cover * 100:.1f}% of pixels above 0.05 rain intensity, "
            f"rainy range [{rainy.min():.3f}, {rainy.max():.3f}]"
        )

    ds = OUT / "ds"
    synthesize_dataset(src, [(n, RAIN_PRESETS[n]) for n in ("light", "medium", "heavy")], ds)
    for seq in sequence_dirs(ds):
        manifest = read_manifest(seq / "manifest.txt")
        print(f"  {seq.name}: {manifest['frames']} frames @ {manifest['width']}x{manifest['height']}, "
              f"rain seed {manifest['seed']}")
    print(f"dataset ready under {ds}")


if __name__ == "__main__":
    main()
