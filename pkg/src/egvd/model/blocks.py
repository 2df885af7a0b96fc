"""Shared building blocks: residual convs, attention gates, ConvLSTM, and
the parameter-matched plain blocks used by the ablation variants."""

from __future__ import annotations

from typing import Callable

import torch
from torch import nn
import torch.nn.functional as F

__all__ = [
    "ResidualBlock",
    "FeatureExtractor",
    "ChannelGate",
    "SpatialGate",
    "ConvLSTMCell",
    "Upsample",
    "EqualParamConvBlock",
    "module_param_count",
    "count_parameters",
]


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def module_param_count(factory: Callable[[], nn.Module]) -> int:
    """Parameter count of a module built by `factory`, without allocating or
    touching RNG state (built on the meta device)."""
    rng_state = torch.get_rng_state()
    try:
        with torch.device("meta"):
            module = factory()
        return count_parameters(module)
    finally:
        torch.set_rng_state(rng_state)


class ResidualBlock(nn.Module):
    """conv-ReLU-conv with an identity skip."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(F.relu(self.conv1(x)))


class FeatureExtractor(nn.Module):
    """Shallow embedding: one convolution followed by one residual block."""

    def __init__(self, in_channels: int, channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(in_channels, channels, 3, padding=1)
        self.res = ResidualBlock(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.res(self.conv(x))


class ChannelGate(nn.Module):
    """Squeeze-style channel attention: global average pool, a two-layer
    bottleneck (reduction 4), sigmoid, and channelwise rescaling.

    `gate_override` (test hook): when set, the sigmoid gate is replaced by
    that constant, so 1.0 makes the block an exact identity.
    """

    def __init__(self, channels: int, reduction: int = 4) -> None:
        super().__init__()
        hidden = max(1, channels // reduction)
        self.fc1 = nn.Linear(channels, hidden)
        self.fc2 = nn.Linear(hidden, channels)
        self.gate_override: float | None = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        pooled = x.mean(dim=(-2, -1))
        gate = torch.sigmoid(self.fc2(F.relu(self.fc1(pooled))))
        if self.gate_override is not None:
            gate = torch.full_like(gate, self.gate_override)
        return x * gate[..., None, None]


class SpatialGate(nn.Module):
    """Spatial attention: channelwise mean and max maps, a 7x7 convolution,
    sigmoid, and pixelwise rescaling. Same `gate_override` hook as
    ChannelGate."""

    def __init__(self, kernel_size: int = 7) -> None:
        super().__init__()
        self.conv = nn.Conv2d(2, 1, kernel_size, padding=kernel_size // 2)
        self.gate_override: float | None = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        stats = torch.cat([x.mean(dim=1, keepdim=True), x.amax(dim=1, keepdim=True)], dim=1)
        gate = torch.sigmoid(self.conv(stats))
        if self.gate_override is not None:
            gate = torch.full_like(gate, self.gate_override)
        return x * gate


class ConvLSTMCell(nn.Module):
    """Convolutional LSTM cell: one convolution over [input, hidden] produces
    the four gates; state is a (hidden, cell) pair of feature maps."""

    def __init__(self, in_channels: int, hidden_channels: int, kernel_size: int = 3) -> None:
        super().__init__()
        self.hidden_channels = hidden_channels
        self.conv = nn.Conv2d(
            in_channels + hidden_channels,
            4 * hidden_channels,
            kernel_size,
            padding=kernel_size // 2,
        )

    def forward(
        self, x: torch.Tensor, hidden: torch.Tensor, cell: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        gates = self.conv(torch.cat([x, hidden], dim=1))
        i, f, o, g = torch.chunk(gates, 4, dim=1)
        cell_new = torch.sigmoid(f) * cell + torch.sigmoid(i) * torch.tanh(g)
        hidden_new = torch.sigmoid(o) * torch.tanh(cell_new)
        return hidden_new, cell_new


class Upsample(nn.Module):
    """Checkerboard-free 2x upsampling: bilinear interpolation + 3x3 conv."""

    def __init__(self, in_channels: int, out_channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        return self.conv(x)


def _search_equal_param_widths(
    in_channels: int, out_channels: int, target: int, max_side: int = 48
) -> tuple[int, int, int]:
    """Integer widths (h, w, v) for the 4-layer block below whose parameter
    count lands as close as possible to `target`.

    count(h, w, v) = h(9*ci+1) + w(h+v+1) + v(9*co+1) + co
    For each (h, v) the best w is solved directly, so the search is O(max_side^2).
    """
    ci, co = in_channels, out_channels
    best: tuple[int, tuple[int, int, int]] | None = None
    for h in range(1, max_side + 1):
        for v in range(1, max_side + 1):
            base = h * (9 * ci + 1) + v * (9 * co + 1) + co
            step = h + v + 1
            w_star = (target - base) / step
            for w in {int(w_star), int(w_star) + 1, 1}:
                if w < 1:
                    continue
                count = base + w * step
                err = abs(count - target)
                if best is None or err < best[0]:
                    best = (err, (h, w, v))
    assert best is not None
    return best[1]


class EqualParamConvBlock(nn.Module):
    """Plain convolutional stack sized to match a reference module's
    parameter count.

    Used by the ablation variants that swap an attention/fusion module for
    "the same amount of plain convolution": two 3x3 convs bracket two 1x1
    convs whose widths are searched so the total parameter count lands on
    `target_params` (the harness asserts within 1%).
    """

    def __init__(self, in_channels: int, out_channels: int, target_params: int) -> None:
        super().__init__()
        h, w, v = _search_equal_param_widths(in_channels, out_channels, target_params)
        self.target_params = target_params
        self.body = nn.Sequential(
            nn.Conv2d(in_channels, h, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(h, w, 1),
            nn.ReLU(),
            nn.Conv2d(w, v, 1),
            nn.ReLU(),
            nn.Conv2d(v, out_channels, 3, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x)
