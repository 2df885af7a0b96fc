"""Event-aware motion detection (EAMD): a motion mask predicted from event
features gates the neighboring frames' features before temporal fusion.

The mask trunk looks at the concatenated event features through parallel
7x7 / 5x5 / 3x3 receptive fields (each followed by a 1x1 conv), fuses them
with a 3x3 conv, and squashes to (0, 1) with a sigmoid. The mask multiplies
the concatenated neighbor-frame features, a 1x1 conv mixes the gated result,
and two independent 3D convolutions collapse the temporal pairs
[current frame features, gated motion features] and [past events, future
events] down to single fused feature maps.
"""

from __future__ import annotations

import torch
from torch import nn
import torch.nn.functional as F

from .blocks import EqualParamConvBlock, module_param_count

__all__ = ["EAMD", "EqualParamFusion", "make_fusion"]


class EAMD(nn.Module):
    """Motion-mask-gated temporal fusion.

    When `use_events` is false (frame-only ablation) the mask trunk consumes
    the neighbor-frame features instead — same widths, no event-side fusion.

    `mask_override` (test hook): when set, the sigmoid mask is replaced by
    that constant everywhere.
    """

    def __init__(self, channels: int, use_events: bool = True) -> None:
        super().__init__()
        self.use_events = use_events
        c = channels
        self.branch7 = nn.Conv2d(2 * c, c, 7, padding=3)
        self.branch5 = nn.Conv2d(2 * c, c, 5, padding=2)
        self.branch3 = nn.Conv2d(2 * c, c, 3, padding=1)
        self.mix7 = nn.Conv2d(c, c, 1)
        self.mix5 = nn.Conv2d(c, c, 1)
        self.mix3 = nn.Conv2d(c, c, 1)
        self.fuse_mask = nn.Conv2d(3 * c, 1, 3, padding=1)
        self.gate = nn.Conv2d(2 * c, c, 1)
        self.fuse_frame = nn.Conv3d(c, c, (2, 3, 3), padding=(0, 1, 1))
        if use_events:
            self.fuse_event = nn.Conv3d(c, c, (2, 3, 3), padding=(0, 1, 1))
        self.mask_override: float | None = None

    def mask(self, left: torch.Tensor, right: torch.Tensor) -> torch.Tensor:
        """Single-channel motion mask in (0, 1) from a temporal feature pair."""
        x = torch.cat([left, right], dim=1)
        b7 = self.mix7(F.relu(self.branch7(x)))
        b5 = self.mix5(F.relu(self.branch5(x)))
        b3 = self.mix3(F.relu(self.branch3(x)))
        m = torch.sigmoid(self.fuse_mask(torch.cat([b7, b5, b3], dim=1)))
        if self.mask_override is not None:
            m = torch.full_like(m, self.mask_override)
        return m

    def forward(
        self,
        f_prev: torch.Tensor,
        f_t: torch.Tensor,
        f_next: torch.Tensor,
        e_minus: torch.Tensor | None = None,
        e_plus: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor | None, torch.Tensor]:
        if self.use_events:
            if e_minus is None or e_plus is None:
                raise ValueError("event features required for this configuration")
            m = self.mask(e_minus, e_plus)
        else:
            m = self.mask(f_prev, f_next)
        gated = m * torch.cat([f_prev, f_next], dim=1)
        f_m = self.gate(gated)
        f_fused = self.fuse_frame(torch.stack([f_t, f_m], dim=2)).squeeze(2)
        e_fused = None
        if self.use_events:
            e_fused = self.fuse_event(torch.stack([e_minus, e_plus], dim=2)).squeeze(2)
        return f_fused, e_fused, m


class EqualParamFusion(nn.Module):
    """Ablation stand-in for EAMD: two plain convolutional blocks (one per
    output domain) whose combined parameter count matches the full module's.

    Two blocks are needed because the replaced module fuses two domains into
    two outputs; the parity assertion applies to the total.
    """

    def __init__(self, channels: int) -> None:
        super().__init__()
        c = channels
        self.target_params = module_param_count(lambda: EAMD(c, use_events=True))
        self.frame_block = EqualParamConvBlock(3 * c, c, self.target_params // 2)
        frame_actual = sum(p.numel() for p in self.frame_block.parameters())
        self.event_block = EqualParamConvBlock(2 * c, c, self.target_params - frame_actual)

    def forward(
        self,
        f_prev: torch.Tensor,
        f_t: torch.Tensor,
        f_next: torch.Tensor,
        e_minus: torch.Tensor | None = None,
        e_plus: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor | None, torch.Tensor | None]:
        if e_minus is None or e_plus is None:
            raise ValueError("event features required for this configuration")
        f_fused = self.frame_block(torch.cat([f_prev, f_t, f_next], dim=1))
        e_fused = self.event_block(torch.cat([e_minus, e_plus], dim=1))
        return f_fused, e_fused, None


def make_fusion(channels: int, variant: str) -> nn.Module:
    """The temporal-fusion stage appropriate for an ablation variant."""
    if variant == "no_eamd":
        return EqualParamFusion(channels)
    return EAMD(channels, use_events=variant != "frame_only")
