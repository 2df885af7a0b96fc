"""PNG frame I/O shared by the synthesis, training, and CLI layers.

Frames travel as float arrays in [0, 1]; on disk they are 8-bit PNGs with
zero-padded numeric names (``000000.png``, ``000001.png``, ...).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["to_uint8", "load_png", "save_png", "load_frame_dir", "save_frame_dir", "frame_paths"]


def to_uint8(img: np.ndarray) -> np.ndarray:
    """[0, 1] float → 8-bit, rounding to nearest."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(path: str | Path, img: np.ndarray) -> None:
    """Write a [0, 1] float image (grayscale (H, W) or RGB (H, W, 3))."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = to_uint8(np.asarray(img))
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(path)


def load_png(path: str | Path) -> np.ndarray:
    """Read a PNG as (H, W, 3) float64 in [0, 1]; grayscale is replicated."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def frame_paths(directory: str | Path) -> list[Path]:
    """PNG files of a frame directory in name order."""
    paths = sorted(Path(directory).glob("*.png"))
    if not paths:
        raise FileNotFoundError(f"no PNG frames in {directory}")
    return paths


def load_frame_dir(directory: str | Path) -> np.ndarray:
    """Read a frame directory as (T, H, W, 3) float64 in [0, 1].

    All frames must share one resolution.
    """
    paths = frame_paths(directory)
    frames = [load_png(p) for p in paths]
    shape = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != shape:
            raise ValueError(f"{p}: frame shape {f.shape} != first frame {shape}")
    return np.stack(frames)


def save_frame_dir(directory: str | Path, frames: np.ndarray) -> None:
    """Write (T, H, W[, 3]) float frames as numbered PNGs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        save_png(directory / f"{i:06d}.png", frame)
