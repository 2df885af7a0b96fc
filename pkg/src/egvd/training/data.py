"""Dataset loading: manifests, per-frame samples, and crop batching.

A sequence directory (as written by `rain.synthesize_dataset`) holds clean
and rainy PNG frames, one event file, and a `manifest.txt` of key=value
lines. Samples pair each rainy frame with its two neighbors, the event voxel
grids of the two surrounding inter-frame intervals, and the clean target.
At the sequence boundaries the missing neighbor frame is replicated and the
missing event side is an empty (all-zero) grid.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch

from .. import imgio
from ..event_io import read_events
from ..events import EventStream, EventVoxelGrid, build_voxel_grid
from ..model import ModelConfig, Sample, event_inputs

__all__ = [
    "read_manifest",
    "sequence_dirs",
    "frame_timestamps",
    "build_samples",
    "load_sequence",
    "clip_batch",
]


def read_manifest(path: str | Path) -> dict[str, str]:
    """Parse a key=value manifest (one pair per line, # comments)."""
    path = Path(path)
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def sequence_dirs(data_root: str | Path) -> list[Path]:
    """Sequence directories under a dataset root.

    Prefers the root manifest's `sequences=` list; otherwise any immediate
    subdirectory with a manifest.txt counts.
    """
    data_root = Path(data_root)
    root_manifest = data_root / "manifest.txt"
    if root_manifest.exists():
        values = read_manifest(root_manifest)
        if "sequences" in values:
            names = [n for n in values["sequences"].split(",") if n]
            dirs = [data_root / n for n in names]
            for d in dirs:
                if not (d / "manifest.txt").exists():
                    raise FileNotFoundError(f"sequence listed in manifest is missing: {d}")
            return dirs
    dirs = sorted(d for d in data_root.iterdir() if d.is_dir() and (d / "manifest.txt").exists())
    if not dirs:
        raise FileNotFoundError(f"no sequences under {data_root}")
    return dirs


def frame_timestamps(n_frames: int, fps: float) -> list[int]:
    """Microsecond frame timestamps for a constant frame rate."""
    return [round(k * 1e6 / fps) for k in range(n_frames)]


def _interval_grids(
    stream: EventStream, timestamps: Sequence[int], bins: int
) -> list[EventVoxelGrid]:
    """Voxel grids of the inter-frame intervals [t_{k-1}, t_k).

    The intervals partition the stream (the final one is closed on the
    right), so every event lands in exactly one grid.
    """
    grids = []
    last = len(timestamps) - 1
    for k in range(1, len(timestamps)):
        piece = stream.slice_time(timestamps[k - 1], timestamps[k], include_end=(k == last))
        grids.append(build_voxel_grid(piece, bins))
    return grids


def load_sequence(manifest_path: str | Path, bins: int = 10) -> Iterator[Sample]:
    """Yield one Sample per frame of a sequence directory.

    `bins` sets the voxel-grid depth (it is a property of the network input,
    not of the stored events, so the same sequence serves any bin count).
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.txt"
    seq_dir = manifest_path.parent
    meta = read_manifest(manifest_path)

    n_frames = int(meta["frames"])
    fps = float(meta["fps"])
    rainy = imgio.load_frame_dir(seq_dir / meta.get("rainy_dir", "rainy"))
    clean_dir = seq_dir / meta.get("clean_dir", "clean")
    clean = imgio.load_frame_dir(clean_dir) if clean_dir.exists() else None
    if rainy.shape[0] != n_frames:
        raise ValueError(
            f"{seq_dir}: manifest says {n_frames} frames, rainy dir has {rainy.shape[0]}"
        )
    if clean is not None and clean.shape != rainy.shape:
        raise ValueError(f"{seq_dir}: clean/rainy shape mismatch")
    height, width = rainy.shape[1:3]
    if int(meta["width"]) != width or int(meta["height"]) != height:
        raise ValueError(f"{seq_dir}: manifest resolution does not match frames")

    stream = read_events(seq_dir / meta.get("events", "events.evt"))
    timestamps = frame_timestamps(n_frames, fps)
    if stream.t_start != timestamps[0] or stream.t_end != timestamps[-1]:
        raise ValueError(
            f"{seq_dir}: event time range [{stream.t_start}, {stream.t_end}] does not match "
            f"{n_frames} frames at {fps} fps"
        )
    if (stream.width, stream.height) != (width, height):
        raise ValueError(f"{seq_dir}: event sensor size does not match frames")

    yield from build_samples(rainy, stream, timestamps, bins, clean=clean)


def build_samples(
    frames: np.ndarray,
    stream: EventStream,
    timestamps: Sequence[int],
    bins: int,
    clean: np.ndarray | None = None,
) -> Iterator[Sample]:
    """Yield one Sample per frame from in-memory frames and events.

    Boundary frames reuse themselves as their missing neighbor, paired with
    an all-zero voxel grid on that side.
    """
    n_frames, height, width = frames.shape[:3]
    if len(timestamps) != n_frames:
        raise ValueError(f"{n_frames} frames but {len(timestamps)} timestamps")
    grids = _interval_grids(stream, timestamps, bins)

    def zero_grid(t: int) -> EventVoxelGrid:
        return EventVoxelGrid(np.zeros((bins, height, width)), t, t)

    for k in range(n_frames):
        yield Sample(
            i_prev=frames[max(k - 1, 0)],
            i_t=frames[k],
            i_next=frames[min(k + 1, n_frames - 1)],
            ev_minus=grids[k - 1] if k >= 1 else zero_grid(timestamps[0]),
            ev_plus=grids[k] if k <= n_frames - 2 else zero_grid(timestamps[-1]),
            gt=clean[k] if clean is not None else None,
            index=k,
        )


def clip_batch(
    sample: Sample,
    cfg: ModelConfig,
    boxes: Sequence[tuple[int, int]],
    size: int,
    dtype: torch.dtype = torch.float32,
) -> dict[str, torch.Tensor | None]:
    """Batched tensors for one time step: each batch element is one crop
    window (y, x) of side `size`, shared across frames, events, and target."""

    def crop_img(img: np.ndarray) -> torch.Tensor:
        views = [img[y : y + size, x : x + size] for y, x in boxes]
        arr = np.ascontiguousarray(np.stack(views))
        return torch.from_numpy(arr).to(dtype).permute(0, 3, 1, 2)

    def crop_vol(vol: np.ndarray) -> torch.Tensor:
        views = [vol[:, y : y + size, x : x + size] for y, x in boxes]
        return torch.from_numpy(np.ascontiguousarray(np.stack(views))).to(dtype)

    events = event_inputs(sample, cfg)
    batch: dict[str, torch.Tensor | None] = {
        "i_prev": crop_img(sample.i_prev),
        "i_t": crop_img(sample.i_t),
        "i_next": crop_img(sample.i_next),
        "ev_minus": crop_vol(events[0]) if events is not None else None,
        "ev_plus": crop_vol(events[1]) if events is not None else None,
        "gt": crop_img(sample.gt) if sample.gt is not None else None,
    }
    return batch
