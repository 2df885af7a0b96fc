"""Independent reference implementations used by the test suite.

Everything here favors the dumbest possible formulation — scalar loops,
double loops over events, explicit window sums — so a disagreement with the
library points at the library. No routine below calls into the package
except where a shared elementwise transform is the point of the contract
(the log-intensity preprocessing, noted inline).
"""

from __future__ import annotations

import math

import numpy as np


def simulate_events_scalar(
    frames: np.ndarray,
    timestamps: list[int],
    contrast: float,
    log_eps: float,
    refractory_us: float,
) -> list[tuple[int, int, int, int]]:
    """Per-pixel scalar threshold-crossing simulator.

    Walks every pixel independently with plain Python floats. The log
    transform is taken with np.log on the full frame array — the same
    elementwise preprocessing the library applies — because log is the one
    transcendental in the pipeline; all crossing arithmetic past that point
    (+, -, *, /, max, floor) is scalar and IEEE-identical to the vectorized
    equivalents. Returns (t, x, y, p) tuples sorted by (t, y, x, p).
    """
    frames = np.asarray(frames, dtype=np.float64)
    n_frames, height, width = frames.shape
    logs = np.log(frames + log_eps)
    C = float(contrast)
    refr = float(refractory_us)

    events: list[tuple[int, int, int, int]] = []
    for y in range(height):
        for x in range(width):
            ref = float(logs[0, y, x])
            resume = -math.inf
            for k in range(n_frames - 1):
                t0 = float(timestamps[k])
                t1 = float(timestamps[k + 1])
                l0 = float(logs[k, y, x])
                l1 = float(logs[k + 1, y, x])
                slope = (l1 - l0) / (t1 - t0)
                while True:
                    t_eff = max(t0, resume)
                    if not t_eff <= t1:
                        break
                    l_eff = l0 + slope * (t_eff - t0)
                    d = l_eff - ref
                    if d >= C:
                        pol, tc = 1, t_eff
                    elif d <= -C:
                        pol, tc = -1, t_eff
                    elif slope != 0.0:
                        sgn = 1.0 if slope > 0.0 else -1.0
                        level = ref + C * sgn
                        tc_fwd = t0 + (level - l0) / slope
                        tc_fwd = max(tc_fwd, t_eff)
                        if tc_fwd <= t1:
                            pol, tc = int(sgn), tc_fwd
                        else:
                            break
                    else:
                        break
                    events.append((int(math.floor(tc)), x, y, pol))
                    ref += C * float(pol)
                    resume = tc + refr
    events.sort(key=lambda e: (e[0], e[2], e[1], e[3]))
    return events


def voxel_grid_double_loop(
    t: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    p: np.ndarray,
    width: int,
    height: int,
    t_start: int,
    t_end: int,
    n_bins: int,
) -> np.ndarray:
    """Naive one-event-at-a-time bilinear accumulator."""
    grid = np.zeros((n_bins, height, width), dtype=np.float64)
    duration = t_end - t_start
    for ti, xi, yi, pi in zip(t, x, y, p):
        if duration == 0:
            grid[0, yi, xi] += float(pi)
            continue
        t_star = (n_bins - 1) * float(int(ti) - t_start) / duration
        lo = int(math.floor(t_star))
        frac = t_star - lo
        grid[lo, yi, xi] += float(pi) * (1.0 - frac)
        if lo + 1 <= n_bins - 1:
            grid[lo + 1, yi, xi] += float(pi) * frac
    return grid


def gaussian_window_2d(size: int, sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian built directly from its formula."""
    c = (size - 1) / 2.0
    w = np.empty((size, size), dtype=np.float64)
    for i in range(size):
        for j in range(size):
            w[i, j] = math.exp(-((i - c) ** 2 + (j - c) ** 2) / (2.0 * sigma * sigma))
    return w / w.sum()


def ssim_windowed(
    a: np.ndarray,
    b: np.ndarray,
    window_size: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float = 1.0,
) -> float:
    """Brute-force SSIM: explicit weighted sums per valid window position.

    `a`/`b` are (H, W) or (C, H, W) float arrays; channels are windowed
    independently and the map is averaged over everything.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
        b = b[None]
    window = gaussian_window_2d(window_size, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    channels, height, width = a.shape
    values = []
    for ch in range(channels):
        for i in range(height - window_size + 1):
            for j in range(width - window_size + 1):
                pa = a[ch, i : i + window_size, j : j + window_size]
                pb = b[ch, i : i + window_size, j : j + window_size]
                mu_a = float((window * pa).sum())
                mu_b = float((window * pb).sum())
                var_a = float((window * pa * pa).sum()) - mu_a * mu_a
                var_b = float((window * pb * pb).sum()) - mu_b * mu_b
                cov = float((window * pa * pb).sum()) - mu_a * mu_b
                values.append(
                    ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                    / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
                )
    return float(np.mean(values))


def psnr_scalar(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR from an explicitly accumulated squared error."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    total = 0.0
    for va, vb in zip(a, b):
        total += (float(va) - float(vb)) ** 2
    mse = total / a.size
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def avg_pool_2x2(img: np.ndarray) -> np.ndarray:
    """2x2 average pooling by explicit block means; img is (C, H, W)."""
    c, h, w = img.shape
    out = np.empty((c, h // 2, w // 2), dtype=np.float64)
    for ch in range(c):
        for i in range(h // 2):
            for j in range(w // 2):
                block = img[ch, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
                out[ch, i, j] = (
                    float(block[0, 0]) + float(block[0, 1]) + float(block[1, 0]) + float(block[1, 1])
                ) / 4.0
    return out


def overlay_scalar(clean: np.ndarray, rain: np.ndarray) -> np.ndarray:
    """Pixel-at-a-time additive compositing with clipping."""
    height, width, _ = clean.shape
    out = np.empty_like(clean, dtype=np.float64)
    for i in range(height):
        for j in range(width):
            for ch in range(3):
                v = float(clean[i, j, ch]) + float(rain[i, j])
                out[i, j, ch] = min(max(v, 0.0), 1.0)
    return out


def streak_scalar(
    height: int,
    width: int,
    head_x: float,
    head_y: float,
    dir_x: float,
    dir_y: float,
    length: float,
    sigma: float,
    brightness: float,
) -> np.ndarray:
    """One rasterized streak: per-pixel Gaussian falloff from the segment
    (head - dir*length) .. head, evaluated at integer pixel coordinates
    within a 3-sigma padded bounding box."""
    layer = np.zeros((height, width), dtype=np.float64)
    tail_x = head_x - dir_x * length
    tail_y = head_y - dir_y * length
    pad = 3.0 * sigma
    x0 = max(0, int(math.floor(min(head_x, tail_x) - pad)))
    x1 = min(width - 1, int(math.ceil(max(head_x, tail_x) + pad)))
    y0 = max(0, int(math.floor(min(head_y, tail_y) - pad)))
    y1 = min(height - 1, int(math.ceil(max(head_y, tail_y) + pad)))
    for yy in range(y0, y1 + 1):
        for xx in range(x0, x1 + 1):
            rel_x = xx - tail_x
            rel_y = yy - tail_y
            u = min(max(rel_x * dir_x + rel_y * dir_y, 0.0), length)
            d2 = (rel_x - u * dir_x) ** 2 + (rel_y - u * dir_y) ** 2
            layer[yy, xx] += brightness * math.exp(-d2 / (2.0 * sigma * sigma))
    return layer
