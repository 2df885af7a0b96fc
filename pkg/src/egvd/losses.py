"""SSIM/PSNR metrics and the multi-scale training losses.

One SSIM implementation serves both as evaluation metric and (negated,
summed over scales) as the training loss, so reported numbers and the
optimization target can never drift apart. SSIM uses an 11x11 Gaussian
window (sigma 1.5), the usual K1/K2 stabilizers for a dynamic range of 1.0,
and valid-mode windows only (no padding), averaged per channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

__all__ = [
    "SsimConfig",
    "gaussian_window",
    "ssim",
    "ssim_frames",
    "psnr",
    "gt_pyramid",
    "scale_terms",
    "multiscale_loss",
    "LOSS_KINDS",
]

LOSS_KINDS = ("neg_ssim", "mae", "mse")


@dataclass(frozen=True)
class SsimConfig:
    """SSIM constants: window size/shape and the K1/K2 stabilizers."""

    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    def __post_init__(self) -> None:
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValueError("window_size must be a positive odd integer")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def gaussian_window(size: int, sigma: float, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """Normalized 2-D Gaussian window of shape (size, size), sum exactly scaled to 1."""
    coords = torch.arange(size, dtype=torch.float64) - (size - 1) / 2.0
    g = torch.exp(-(coords**2) / (2.0 * sigma * sigma))
    window = torch.outer(g, g)
    window = window / window.sum()
    return window.to(dtype)


def _as_nchw(x: torch.Tensor) -> torch.Tensor:
    if x.dim() == 2:
        return x[None, None]
    if x.dim() == 3:
        return x[None]
    if x.dim() == 4:
        return x
    raise ValueError(f"expected 2-4 dims, got shape {tuple(x.shape)}")


def ssim(a: torch.Tensor, b: torch.Tensor, cfg: SsimConfig | None = None) -> torch.Tensor:
    """Mean structural similarity over all valid window positions.

    Accepts (H, W), (C, H, W) or (N, C, H, W) tensors; channels are windowed
    independently and averaged. Differentiable; returns a scalar tensor.
    """
    cfg = cfg or SsimConfig()
    a = _as_nchw(a)
    b = _as_nchw(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    if a.shape[-1] < cfg.window_size or a.shape[-2] < cfg.window_size:
        raise ValueError(
            f"image {tuple(a.shape[-2:])} smaller than {cfg.window_size}x{cfg.window_size} window"
        )
    channels = a.shape[1]
    window = gaussian_window(cfg.window_size, cfg.sigma, dtype=a.dtype)
    kernel = window.expand(channels, 1, -1, -1).to(a.device)

    def filt(x: torch.Tensor) -> torch.Tensor:
        return F.conv2d(x, kernel, groups=channels)

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b

    c1 = (cfg.k1 * cfg.data_range) ** 2
    c2 = (cfg.k2 * cfg.data_range) ** 2
    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return ssim_map.mean()


def ssim_frames(a: np.ndarray, b: np.ndarray, cfg: SsimConfig | None = None) -> float:
    """SSIM of two (H, W[, 3]) numpy frames in [0, 1], computed in float64."""
    ta = torch.from_numpy(np.asarray(a, dtype=np.float64))
    tb = torch.from_numpy(np.asarray(b, dtype=np.float64))
    if ta.dim() == 3:
        ta = ta.permute(2, 0, 1)
        tb = tb.permute(2, 0, 1)
    return float(ssim(ta, tb, cfg))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images; +inf when equal."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def gt_pyramid(gt: torch.Tensor, n_scales: int = 3) -> list[torch.Tensor]:
    """Ground-truth pyramid by repeated 2x2 average pooling, coarsest first."""
    levels = [gt]
    for _ in range(n_scales - 1):
        levels.append(F.avg_pool2d(levels[-1], kernel_size=2))
    levels.reverse()
    return levels


def scale_terms(
    derained: Sequence[torch.Tensor],
    gt: torch.Tensor,
    kind: str = "neg_ssim",
    cfg: SsimConfig | None = None,
) -> list[torch.Tensor]:
    """Per-scale loss terms for `derained` (coarsest first) against `gt`.

    neg_ssim: -SSIM per scale; mae / mse: mean absolute / squared error per
    scale. The ground-truth pyramid is formed by 2x2 average pooling.
    """
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    targets = gt_pyramid(_as_nchw(gt), n_scales=len(derained))
    terms = []
    for pred, target in zip(derained, targets):
        pred = _as_nchw(pred)
        if pred.shape != target.shape:
            raise ValueError(
                f"scale shape mismatch: prediction {tuple(pred.shape)} vs target {tuple(target.shape)}"
            )
        if kind == "neg_ssim":
            terms.append(-ssim(pred, target, cfg))
        elif kind == "mae":
            terms.append((pred - target).abs().mean())
        else:
            terms.append(((pred - target) ** 2).mean())
    return terms


def multiscale_loss(
    derained: Sequence[torch.Tensor],
    gt: torch.Tensor,
    kind: str = "neg_ssim",
    single_scale: bool = False,
    cfg: SsimConfig | None = None,
) -> torch.Tensor:
    """Training loss over the output pyramid (coarsest first).

    The default sums the per-scale terms; `single_scale` keeps only the
    full-resolution term (the last list entry) so single- vs multi-scale
    supervision can be compared under otherwise identical conditions.
    """
    terms = scale_terms(derained, gt, kind=kind, cfg=cfg)
    if single_scale:
        return terms[-1]
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total
