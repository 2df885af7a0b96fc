"""Pyramidal adaptive selection (PAS): two three-scale encoders embed the
fused frame and event features separately; at every scale the event side is
sharpened by rain-edge attention (REA) and merged with the frame side by
multi-modal fusion (MMF); the coarsest frame features run through a ConvLSTM
that carries state across frames for long-term temporal context.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
import torch.nn.functional as F

from .blocks import (
    ChannelGate,
    ConvLSTMCell,
    EqualParamConvBlock,
    ResidualBlock,
    SpatialGate,
    module_param_count,
)

__all__ = ["LstmState", "REA", "MMF", "PyramidEncoder", "PAS"]


@dataclass
class LstmState:
    """ConvLSTM hidden/cell maps at the coarsest scale (4x base channels,
    H/4 x W/4). Zero at the start of a sequence."""

    hidden: torch.Tensor
    cell: torch.Tensor

    def detached(self) -> "LstmState":
        """State with gradients cut, for carrying across optimization clips."""
        return LstmState(self.hidden.detach(), self.cell.detach())


class REA(nn.Module):
    """Rain-edge attention: four repetitions of a channel-spatial-spatial-
    channel gate chain. Every gate rescales its input multiplicatively, so
    forcing all gates to 1 (via `set_gate_override`) passes the input through
    unchanged — the identity the tests pin down.
    """

    def __init__(self, channels: int, repetitions: int = 4) -> None:
        super().__init__()
        blocks: list[nn.Module] = []
        for _ in range(repetitions):
            blocks += [ChannelGate(channels), SpatialGate(), SpatialGate(), ChannelGate(channels)]
        self.blocks = nn.ModuleList(blocks)

    def set_gate_override(self, value: float | None) -> None:
        for block in self.blocks:
            block.gate_override = value

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            x = block(x)
        return x


class MMF(nn.Module):
    """Multi-modal fusion: concatenate event- and frame-domain features, then
    a residual convolution back to the frame-branch width."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.reduce = nn.Conv2d(2 * channels, channels, 3, padding=1)
        self.res = ResidualBlock(channels)

    def forward(self, event_feat: torch.Tensor, frame_feat: torch.Tensor) -> torch.Tensor:
        if event_feat.shape[-2:] != frame_feat.shape[-2:]:
            raise ValueError(
                f"spatial mismatch: {tuple(event_feat.shape[-2:])} vs {tuple(frame_feat.shape[-2:])}"
            )
        return self.res(self.reduce(torch.cat([event_feat, frame_feat], dim=1)))


class PyramidEncoder(nn.Module):
    """Three-scale embedding with strided-conv downsampling; widths are C,
    2C, 4C at full, half, and quarter resolution."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        c = channels
        self.conv1 = nn.Conv2d(c, c, 3, padding=1)
        self.down2 = nn.Conv2d(c, 2 * c, 3, stride=2, padding=1)
        self.down3 = nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        s1 = F.relu(self.conv1(x))
        s2 = F.relu(self.down2(s1))
        s3 = F.relu(self.down3(s2))
        return [s1, s2, s3]


class PAS(nn.Module):
    """Scale-wise selection between the two modalities plus the recurrent
    coarse-scale pathway.

    Variants: `no_rea` swaps each REA for an equal-parameter plain block;
    `no_lstm_state` pins the incoming recurrent state to zero; `frame_only`
    drops the event encoder entirely (the pyramid is then the frame encoder's
    output with the ConvLSTM still on the coarsest scale).
    """

    def __init__(self, channels: int, variant: str = "full") -> None:
        super().__init__()
        c = channels
        self.channels = c
        self.use_events = variant != "frame_only"
        self.stateless = variant == "no_lstm_state"
        self.frame_encoder = PyramidEncoder(c)
        self.lstm = ConvLSTMCell(4 * c, 4 * c)
        if self.use_events:
            self.event_encoder = PyramidEncoder(c)
            widths = (c, 2 * c, 4 * c)
            if variant == "no_rea":
                self.rea = nn.ModuleList(
                    EqualParamConvBlock(w, w, module_param_count(lambda w=w: REA(w)))
                    for w in widths
                )
            else:
                self.rea = nn.ModuleList(REA(w) for w in widths)
            self.mmf = nn.ModuleList(MMF(w) for w in widths)

    def zero_state(self, batch: int, height: int, width: int, **tensor_kwargs) -> LstmState:
        """All-zero recurrent state for a full-resolution input of (H, W)."""
        shape = (batch, 4 * self.channels, height // 4, width // 4)
        return LstmState(
            torch.zeros(shape, **tensor_kwargs), torch.zeros(shape, **tensor_kwargs)
        )

    def forward(
        self,
        frame_feat: torch.Tensor,
        event_feat: torch.Tensor | None,
        state: LstmState | None,
        aux: dict | None = None,
    ) -> tuple[list[torch.Tensor], LstmState]:
        f1, f2, f3 = self.frame_encoder(frame_feat)
        if state is None or self.stateless:
            state = self.zero_state(
                frame_feat.shape[0],
                frame_feat.shape[-2],
                frame_feat.shape[-1],
                dtype=f3.dtype,
                device=f3.device,
            )
        if state.hidden.shape != f3.shape or state.cell.shape != f3.shape:
            raise ValueError(
                f"stale state; reset required: state {tuple(state.hidden.shape)} "
                f"does not match coarse features {tuple(f3.shape)}"
            )
        hidden, cell = self.lstm(f3, state.hidden, state.cell)
        new_state = LstmState(hidden, cell)

        if not self.use_events:
            return [f1, f2, hidden], new_state
        if event_feat is None:
            raise ValueError("event features required for this configuration")
        e1, e2, e3 = self.event_encoder(event_feat)
        r1, r2, r3 = self.rea[0](e1), self.rea[1](e2), self.rea[2](e3)
        if aux is not None:
            aux["rea"] = [r1, r2, r3]
        p1 = self.mmf[0](r1, f1)
        p2 = self.mmf[1](r2, f2)
        p3 = self.mmf[2](r3, hidden)
        return [p1, p2, p3], new_state
