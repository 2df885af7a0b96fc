"""Multi-scale reconstruction: three decoder stages walk the pyramid coarse
to fine, each emitting a negative rain residual whose sum with the (average-
pooled) input frame is that scale's derained estimate. Between stages a
supervised attention block (MSAM) uses the scale's image estimate to re-weight
the features handed upward.
"""

from __future__ import annotations

import torch
from torch import nn
import torch.nn.functional as F

from .blocks import Upsample

__all__ = ["MSAM", "DecoderBlock", "Reconstructor", "downsample_frame"]


def downsample_frame(frame: torch.Tensor, times: int) -> torch.Tensor:
    """`times` rounds of 2x2 average pooling (the supervision pyramid)."""
    for _ in range(times):
        frame = F.avg_pool2d(frame, kernel_size=2)
    return frame


class MSAM(nn.Module):
    """Supervised attention: the scale's image estimate is turned into a
    sigmoid attention map (1x1 conv) that re-weights a convolved copy of the
    features, with an identity skip so attention can only modulate."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv_feat = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv_att = nn.Conv2d(3, channels, 1)

    def forward(self, feat: torch.Tensor, image_estimate: torch.Tensor) -> torch.Tensor:
        attention = torch.sigmoid(self.conv_att(image_estimate))
        return self.conv_feat(feat) * attention + feat


class DecoderBlock(nn.Module):
    """Eight 3x3 conv+ReLU layers; the first adapts the input width."""

    def __init__(self, in_channels: int, channels: int, n_layers: int = 8) -> None:
        super().__init__()
        layers: list[nn.Module] = []
        width = in_channels
        for _ in range(n_layers):
            layers += [nn.Conv2d(width, channels, 3, padding=1), nn.ReLU()]
            width = channels
        self.body = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x)


class Reconstructor(nn.Module):
    """Pyramid-to-image decoder.

    Returns, coarsest scale first: pre-clip estimates, clipped estimates, and
    the negative rain residuals. In the default mapping every stage predicts
    a residual added to the downsampled input frame; the
    `predict_background` mapping makes the heads emit the image directly.

    `residual_override` (test hook): when set, every residual head's output
    is replaced by that constant (0.0 turns the network into an exact
    pass-through of the input pyramid).
    """

    def __init__(
        self, channels: int, predict_background: bool = False, msam_enabled: bool = True
    ) -> None:
        super().__init__()
        c = channels
        self.predict_background = predict_background
        self.msam_enabled = msam_enabled
        self.decode3 = DecoderBlock(4 * c, 4 * c)
        self.head3 = nn.Conv2d(4 * c, 3, 3, padding=1)
        self.up3 = Upsample(4 * c, 2 * c)
        self.decode2 = DecoderBlock(4 * c, 2 * c)
        self.head2 = nn.Conv2d(2 * c, 3, 3, padding=1)
        self.up2 = Upsample(2 * c, c)
        self.decode1 = DecoderBlock(2 * c, c)
        self.head1 = nn.Conv2d(c, 3, 3, padding=1)
        if msam_enabled:
            self.msam3 = MSAM(4 * c)
            self.msam2 = MSAM(2 * c)
        self.residual_override: float | None = None

    def _emit(self, head: nn.Conv2d, feat: torch.Tensor, base: torch.Tensor):
        residual = head(feat)
        if self.residual_override is not None:
            residual = torch.full_like(residual, self.residual_override)
        if self.predict_background:
            raw = residual
            rain = raw - base
        else:
            raw = base + residual
            rain = residual
        return raw, torch.clamp(raw, 0.0, 1.0), rain

    def forward(
        self, pyramid: list[torch.Tensor], frame: torch.Tensor
    ) -> dict[str, list[torch.Tensor]]:
        p1, p2, p3 = pyramid
        bases = [downsample_frame(frame, 2), downsample_frame(frame, 1), frame]

        d3 = self.decode3(p3)
        raw3, der3, rain3 = self._emit(self.head3, d3, bases[0])
        f3 = self.msam3(d3, raw3) if self.msam_enabled else d3

        d2 = self.decode2(torch.cat([self.up3(f3), p2], dim=1))
        raw2, der2, rain2 = self._emit(self.head2, d2, bases[1])
        f2 = self.msam2(d2, raw2) if self.msam_enabled else d2

        d1 = self.decode1(torch.cat([self.up2(f2), p1], dim=1))
        raw1, der1, rain1 = self._emit(self.head1, d1, bases[2])

        return {
            "raw": [raw3, raw2, raw1],
            "derained": [der3, der2, der1],
            "rain": [rain3, rain2, rain1],
        }
