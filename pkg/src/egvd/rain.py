"""Procedural rain-streak rendering and rainy-dataset construction.

Rain is modeled as a particle field: each drop is a point travelling along a
fixed wind direction, rendered per frame as a motion-blurred streak (a line
segment of length speed x shutter_fraction with a Gaussian cross profile).
Drops live on depth layers that scale width/brightness by 1/layer and speed
by 1/sqrt(layer) to fake perspective. Rain only ever adds light: a rainy
frame is clip(clean + rain, 0, 1).

`synthesize_dataset` packages the full pipeline: it overlays rain onto clean
PNG clips, simulates an event stream from the rainy luminance, and writes
frames, events, and a plain-text manifest per sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import imgio
from .event_io import write_events
from .events import SimConfig, luminance, simulate_events

__all__ = [
    "RainParams",
    "RainLayerSequence",
    "generate_rain_layer",
    "overlay",
    "synthesize_dataset",
    "make_clean_clip",
]

# Streak support is truncated at this many Gaussian sigmas from the segment.
_SUPPORT_SIGMAS = 3.0


@dataclass(frozen=True)
class RainParams:
    """Parameters of the procedural streak field.

    density: drops per megapixel per frame (>= 0; 0 renders nothing).
    direction_deg: streak angle from vertical; positive leans toward +x.
    speed_px_per_frame: (min, max) fall distance per frame at depth layer 1.
    streak_width_px: (min, max) full streak width at depth layer 1.
    brightness: (min, max) additive peak brightness at depth layer 1.
    shutter_fraction: fraction of the inter-frame interval the shutter is
        open; the rendered streak length is speed * shutter_fraction.
    depth_layers: number of perspective layers (>= 1).
    seed: RNG seed; identical params give bit-identical output.
    """

    density: float = 2500.0
    direction_deg: float = -10.0
    speed_px_per_frame: tuple[float, float] = (3.0, 6.0)
    streak_width_px: tuple[float, float] = (1.0, 2.0)
    brightness: tuple[float, float] = (0.3, 0.7)
    shutter_fraction: float = 0.7
    depth_layers: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.density < 0:
            raise ValueError("density must be non-negative")
        if abs(self.direction_deg) >= 60:
            raise ValueError("direction_deg must satisfy |angle| < 60 (from vertical)")
        for name in ("speed_px_per_frame", "streak_width_px", "brightness"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name}: max {hi} < min {lo}")
            if lo < 0:
                raise ValueError(f"{name}: values must be non-negative")
        if not 0 < self.shutter_fraction <= 1:
            raise ValueError("shutter_fraction must lie in (0, 1]")
        if self.depth_layers < 1:
            raise ValueError("depth_layers must be >= 1")
        b_lo, b_hi = self.brightness
        if b_hi > 1:
            raise ValueError("brightness must lie in [0, 1]")

    def manifest_items(self) -> list[tuple[str, str]]:
        """Flat key=value view for manifests."""
        return [
            ("density", repr(self.density)),
            ("direction_deg", repr(self.direction_deg)),
            ("speed_min", repr(self.speed_px_per_frame[0])),
            ("speed_max", repr(self.speed_px_per_frame[1])),
            ("width_min", repr(self.streak_width_px[0])),
            ("width_max", repr(self.streak_width_px[1])),
            ("brightness_min", repr(self.brightness[0])),
            ("brightness_max", repr(self.brightness[1])),
            ("shutter_fraction", repr(self.shutter_fraction)),
            ("depth_layers", str(self.depth_layers)),
            ("seed", str(self.seed)),
        ]


@dataclass
class RainLayerSequence:
    """Per-frame rain intensity maps, shape (T, H, W), values in [0, 1]."""

    frames: np.ndarray

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.frames[i]


def _render_streak(
    layer: np.ndarray,
    head_x: float,
    head_y: float,
    dir_x: float,
    dir_y: float,
    length: float,
    sigma: float,
    brightness: float,
) -> None:
    """Accumulate one motion-blurred streak into `layer` (in place).

    The streak is the set of points within a Gaussian falloff of the segment
    from (head - dir*length) to head; pixels sample at integer coordinates.
    """
    height, width = layer.shape
    tail_x = head_x - dir_x * length
    tail_y = head_y - dir_y * length
    pad = _SUPPORT_SIGMAS * sigma
    x0 = max(0, int(math.floor(min(head_x, tail_x) - pad)))
    x1 = min(width - 1, int(math.ceil(max(head_x, tail_x) + pad)))
    y0 = max(0, int(math.floor(min(head_y, tail_y) - pad)))
    y1 = min(height - 1, int(math.ceil(max(head_y, tail_y) + pad)))
    if x0 > x1 or y0 > y1:
        return
    ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    rel_x = xs - tail_x
    rel_y = ys - tail_y
    u = np.clip(rel_x * dir_x + rel_y * dir_y, 0.0, length)
    d2 = (rel_x - u * dir_x) ** 2 + (rel_y - u * dir_y) ** 2
    layer[y0 : y1 + 1, x0 : x1 + 1] += brightness * np.exp(-d2 / (2.0 * sigma * sigma))


def generate_rain_layer(params: RainParams, height: int, width: int, n_frames: int) -> RainLayerSequence:
    """Render a streak field as per-frame additive intensity maps.

    Deterministic given `params.seed`. Every frame draws every drop; drops
    whose streak has fully left the bottom of the frame respawn in a band
    along the top edge (with an upwind horizontal margin so the on-screen
    density stays stationary).
    """
    if height < 1 or width < 1 or n_frames < 1:
        raise ValueError("height, width, n_frames must all be >= 1")

    rng = np.random.default_rng(params.seed)
    n_drops = int(round(params.density * (height * width) / 1e6))

    theta = math.radians(params.direction_deg)
    dir_x = math.sin(theta)
    dir_y = math.cos(theta)

    max_len = params.speed_px_per_frame[1] * params.shutter_fraction
    max_pad = _SUPPORT_SIGMAS * params.streak_width_px[1] / 2.0
    margin = abs(math.tan(theta)) * height + max_pad + max_len + 1.0
    band = 0.1 * height

    # Per-drop properties; layer assignment round-robins so counts split
    # evenly across depth layers.
    layer_idx = np.arange(n_drops) % params.depth_layers + 1
    speed = rng.uniform(*params.speed_px_per_frame, size=n_drops) / np.sqrt(layer_idx)
    width_px = rng.uniform(*params.streak_width_px, size=n_drops) / layer_idx
    bright = rng.uniform(*params.brightness, size=n_drops) / layer_idx
    pos_x = rng.uniform(-margin, width + margin, size=n_drops)
    pos_y = rng.uniform(-max_len - max_pad, height, size=n_drops)

    length = speed * params.shutter_fraction
    sigma = np.maximum(width_px / 2.0, 1e-3)

    frames = np.zeros((n_frames, height, width), dtype=np.float64)
    for t in range(n_frames):
        layer = frames[t]
        for i in range(n_drops):
            _render_streak(
                layer, pos_x[i], pos_y[i], dir_x, dir_y, length[i], sigma[i], bright[i]
            )
        np.clip(layer, 0.0, 1.0, out=layer)
        if t == n_frames - 1:
            break
        pos_x += dir_x * speed
        pos_y += dir_y * speed
        for i in range(n_drops):
            tail_y = pos_y[i] - dir_y * length[i]
            if tail_y - _SUPPORT_SIGMAS * sigma[i] > height - 1:
                pos_x[i] = rng.uniform(-margin, width + margin)
                pos_y[i] = rng.uniform(-length[i] - _SUPPORT_SIGMAS * sigma[i], band)
    return RainLayerSequence(frames)


def overlay(clean: np.ndarray, rain: np.ndarray) -> np.ndarray:
    """Additive rain compositing: clip(clean + rain, 0, 1), broadcast to RGB."""
    clean = np.asarray(clean, dtype=np.float64)
    rain = np.asarray(rain, dtype=np.float64)
    if clean.ndim != 3 or clean.shape[-1] != 3:
        raise ValueError("clean frame must have shape (H, W, 3)")
    if rain.shape != clean.shape[:2]:
        raise ValueError(f"rain map shape {rain.shape} != frame shape {clean.shape[:2]}")
    return np.clip(clean + rain[..., None], 0.0, 1.0)


def _sequence_seed(base_seed: int, index: int) -> int:
    """Stable per-sequence RNG seed derived from (base seed, sequence index)."""
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _frame_timestamps(n_frames: int, fps: float) -> list[int]:
    return [round(k * 1e6 / fps) for k in range(n_frames)]


def synthesize_dataset(
    clean_video_dir: str | Path,
    params_list: Sequence[RainParams | tuple[str, RainParams]],
    out_dir: str | Path,
    sim_cfg: SimConfig | None = None,
    fps: float = 30.0,
) -> Path:
    """Build a rainy dataset from clean PNG clips.

    `clean_video_dir` is either one clip (a directory of numbered PNG
    frames) or a directory of such clip directories. For every
    (clip, params) pair a sequence directory is written containing
    `clean/%06d.png`, `rainy/%06d.png`, `events.evt` (simulated from the
    rainy luminance as stored on disk), and `manifest.txt`. Returns the path
    of the root manifest listing all sequences.
    """
    clean_video_dir = Path(clean_video_dir)
    out_dir = Path(out_dir)
    sim_cfg = sim_cfg or SimConfig()

    if sorted(clean_video_dir.glob("*.png")):
        clips = [clean_video_dir]
    else:
        clips = sorted(d for d in clean_video_dir.iterdir() if d.is_dir() and any(d.glob("*.png")))
    if not clips:
        raise FileNotFoundError(f"no PNG clips under {clean_video_dir}")

    named_params: list[tuple[str, RainParams]] = []
    for j, entry in enumerate(params_list):
        if isinstance(entry, tuple):
            named_params.append(entry)
        else:
            named_params.append((f"rain{j}", entry))

    out_dir.mkdir(parents=True, exist_ok=True)
    sequence_names: list[str] = []
    seq_index = 0
    for clip in clips:
        clean_frames = imgio.load_frame_dir(clip)
        n_frames, height, width = clean_frames.shape[:3]
        if n_frames < 2:
            raise ValueError(f"{clip}: a clip needs at least 2 frames")
        for name, params in named_params:
            seq_name = f"{clip.name}_{name}"
            seq_dir = out_dir / seq_name
            seq_params = replace(params, seed=_sequence_seed(params.seed, seq_index))
            rain = generate_rain_layer(seq_params, height, width, n_frames)
            rainy = np.stack([overlay(clean_frames[t], rain[t]) for t in range(n_frames)])

            imgio.save_frame_dir(seq_dir / "clean", clean_frames)
            imgio.save_frame_dir(seq_dir / "rainy", rainy)
            # Simulate events from the quantized frames actually on disk so
            # re-running the simulator on the PNGs reproduces the stream.
            stored = imgio.load_frame_dir(seq_dir / "rainy")
            timestamps = _frame_timestamps(n_frames, fps)
            gray = luminance(stored)
            stream = simulate_events(list(zip(timestamps, gray)), sim_cfg)
            write_events(stream, seq_dir / "events.evt")

            lines = [
                f"width={width}",
                f"height={height}",
                f"frames={n_frames}",
                f"fps={fps!r}",
                "clean_dir=clean",
                "rainy_dir=rainy",
                "events=events.evt",
                f"contrast_threshold={sim_cfg.contrast_threshold!r}",
                f"log_eps={sim_cfg.log_eps!r}",
                f"refractory_us={sim_cfg.refractory_us}",
            ]
            lines += [f"{k}={v}" for k, v in seq_params.manifest_items()]
            (seq_dir / "manifest.txt").write_text("\n".join(lines) + "\n")
            sequence_names.append(seq_name)
            seq_index += 1

    root_manifest = out_dir / "manifest.txt"
    root_manifest.write_text(
        "sequences=" + ",".join(sequence_names) + "\n" + f"count={len(sequence_names)}\n"
    )
    return root_manifest


def make_clean_clip(
    height: int = 64, width: int = 64, n_frames: int = 10, seed: int = 0
) -> np.ndarray:
    """Synthesize a smooth moving test scene, shape (T, H, W, 3) in [0, 1].

    A drifting two-tone gradient plus a few soft moving blobs: enough scene
    motion to produce events, smooth enough to stay compressible and
    rain-distinguishable. Used by demos and tests; not a substitute for real
    footage.
    """
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    n_blobs = 4
    bx = rng.uniform(0, width, n_blobs)
    by = rng.uniform(0, height, n_blobs)
    bvx = rng.uniform(-1.5, 1.5, n_blobs)
    bvy = rng.uniform(-1.0, 1.0, n_blobs)
    br = rng.uniform(height / 8, height / 3, n_blobs)
    hue = rng.uniform(0.0, 1.0, (n_blobs, 3))

    frames = np.zeros((n_frames, height, width, 3), dtype=np.float64)
    for t in range(n_frames):
        base = 0.25 + 0.3 * (xs + ys + 1.7 * t) / (width + height)
        frame = np.stack([base, 0.9 * base, 1.1 * base], axis=-1)
        for i in range(n_blobs):
            cx = (bx[i] + bvx[i] * t) % width
            cy = (by[i] + bvy[i] * t) % height
            blob = np.exp(-(((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * br[i] ** 2)))
            frame += 0.35 * blob[..., None] * hue[i]
        frames[t] = np.clip(frame, 0.0, 1.0)
    return frames
