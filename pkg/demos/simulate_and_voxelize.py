"""Simulate an event stream from a synthetic clip and encode voxel grids.

Walks the full event path: clean frames -> log-intensity crossings ->
sorted event stream -> binary file round trip -> bilinear voxel grids.
Writes a polarity visualization per inter-frame interval to demos/out/.

CLI equivalent:
    egvd simulate-events --frames <dir> --fps 30 --out events.evt
    egvd voxelize --events events.evt --bins 10 --out grids.npz
"""

from pathlib import Path

import numpy as np
from PIL import Image

from egvd.event_io import read_events, write_events
from egvd.events import SimConfig, build_voxel_grid, luminance, simulate_events
from egvd.rain import make_clean_clip
from egvd.training import frame_timestamps

OUT = Path(__file__).parent / "out" / "events"


def polarity_image(grid_bin: np.ndarray) -> np.ndarray:
    """Red where negative events dominate, green where positive."""
    h, w = grid_bin.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    scale = max(1e-9, float(np.abs(grid_bin).max()))
    img[..., 0] = np.clip(-grid_bin / scale, 0, 1) * 255
    img[..., 1] = np.clip(grid_bin / scale, 0, 1) * 255
    return img


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    clip = make_clean_clip(height=96, width=96, n_frames=10, seed=0)
    stamps = frame_timestamps(len(clip), fps=30.0)
    frames = [(t, luminance(frame)) for t, frame in zip(stamps, clip)]

    cfg = SimConfig(contrast_threshold=0.15)
    stream = simulate_events(frames, cfg)
    pos = int((stream.p > 0).sum())
    print(f"simulated {len(stream)} events over {stream.t_end - stream.t_start} us")
    print(f"  polarity split: {pos} positive / {len(stream) - pos} negative")

    evt_path = OUT / "demo.evt"
    write_events(stream, evt_path)
    again = read_events(evt_path)
    assert np.array_equal(again.t, stream.t)
    print(f"  round-tripped through {evt_path} ({evt_path.stat().st_size} bytes)")

    # one voxel grid per inter-frame interval, as the model consumes them
    for k in range(len(stamps) - 1):
        window = stream.slice_time(stamps[k], stamps[k + 1], include_end=(k == len(stamps) - 2))
        grid = build_voxel_grid(window, n_bins=10)
        print(
            f"  interval {k}: {len(window)} events -> grid {grid.data.shape}, "
            f"mass {grid.mass():+.1f}"
        )
        summed = grid.data.sum(axis=0)
        Image.fromarray(polarity_image(summed)).save(OUT / f"polarity_{k:02d}.png")

    print(f"wrote polarity maps to {OUT}")


if __name__ == "__main__":
    main()
