"""The full deraining network and its single-step inference entry point.

One step consumes three consecutive RGB frames plus the event voxel grids of
the two surrounding inter-frame intervals, and produces derained estimates at
three scales together with the updated recurrent state. Frames and events are
embedded separately, fused by the motion-gated temporal stage, selected
scale-by-scale across the two modalities, and decoded into negative rain
residuals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import torch
from torch import nn

from ..events import EventVoxelGrid, luminance
from .blocks import FeatureExtractor, count_parameters
from .config import ModelConfig
from .eamd import EqualParamFusion, make_fusion
from .pas import PAS, LstmState
from .reconstruct import Reconstructor

__all__ = ["Sample", "DerainOutput", "DerainModel", "derain_step", "event_inputs"]


@dataclass
class Sample:
    """One network input unit: a frame triplet, the two inter-frame event
    voxel grids, and (during training/evaluation) the clean target frame.

    Frames are (H, W, 3) floats in [0, 1]; H and W must be divisible by 4.
    """

    i_prev: np.ndarray
    i_t: np.ndarray
    i_next: np.ndarray
    ev_minus: EventVoxelGrid
    ev_plus: EventVoxelGrid
    gt: np.ndarray | None = None
    index: int = 0


@dataclass
class DerainOutput:
    """Network outputs, coarsest scale first (quarter, half, full resolution).

    derained: estimates clipped to [0, 1] (what gets written to disk);
    derained_raw: the same before clipping (what the loss consumes);
    rain_layers: the negative rain residuals — at every scale
    derained_raw == downsampled input + rain layer, exactly;
    new_state: recurrent state to carry to the next frame;
    aux: inspection maps (motion mask "mask"; event attention maps "rea").
    """

    derained: list[torch.Tensor]
    derained_raw: list[torch.Tensor]
    rain_layers: list[torch.Tensor]
    new_state: LstmState
    aux: dict[str, Any]


class DerainModel(nn.Module):
    """Event-guided video deraining network (see module docstring)."""

    def __init__(self, cfg: ModelConfig) -> None:
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        self.frame_extractor = FeatureExtractor(3, c)
        if cfg.uses_events:
            self.event_extractor = FeatureExtractor(cfg.voxel_bins, c)
        self.fusion = make_fusion(c, cfg.variant)
        self.pas = PAS(c, cfg.variant)
        self.reconstructor = Reconstructor(
            c, predict_background=cfg.predicts_background, msam_enabled=cfg.msam_enabled
        )

    def zero_state(self, batch: int, height: int, width: int, **tensor_kwargs) -> LstmState:
        return self.pas.zero_state(batch, height, width, **tensor_kwargs)

    def extract_features(
        self,
        i_prev: torch.Tensor,
        i_t: torch.Tensor,
        i_next: torch.Tensor,
        ev_minus: torch.Tensor | None = None,
        ev_plus: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, tuple[torch.Tensor, torch.Tensor] | None]:
        """Shallow embeddings: frame features stacked (N, C, 3, H, W) and the
        two event features (N, C, 1, H, W) each (None without an event
        branch). Frame and event extractors do not share weights."""
        frames = torch.stack(
            [self.frame_extractor(i_prev), self.frame_extractor(i_t), self.frame_extractor(i_next)],
            dim=2,
        )
        if not self.cfg.uses_events:
            return frames, None
        if ev_minus is None or ev_plus is None:
            raise ValueError("event voxel grids required for this configuration")
        return frames, (
            self.event_extractor(ev_minus).unsqueeze(2),
            self.event_extractor(ev_plus).unsqueeze(2),
        )

    def forward(
        self,
        i_prev: torch.Tensor,
        i_t: torch.Tensor,
        i_next: torch.Tensor,
        ev_minus: torch.Tensor | None = None,
        ev_plus: torch.Tensor | None = None,
        state: LstmState | None = None,
    ) -> DerainOutput:
        height, width = i_t.shape[-2:]
        if height % 4 or width % 4:
            raise ValueError(f"spatial size ({height}, {width}) must be divisible by 4")
        for name, tensor in (("i_prev", i_prev), ("i_next", i_next)):
            if tensor.shape != i_t.shape:
                raise ValueError(f"{name} shape {tuple(tensor.shape)} != {tuple(i_t.shape)}")

        frame_feats, event_feats = self.extract_features(i_prev, i_t, i_next, ev_minus, ev_plus)
        f_prev, f_t, f_next = frame_feats.unbind(dim=2)
        e_minus = e_plus = None
        if event_feats is not None:
            e_minus = event_feats[0].squeeze(2)
            e_plus = event_feats[1].squeeze(2)

        f_fused, e_fused, mask = self.fusion(f_prev, f_t, f_next, e_minus, e_plus)

        aux: dict[str, Any] = {"mask": mask}
        pyramid, new_state = self.pas(f_fused, e_fused, state, aux=aux)
        decoded = self.reconstructor(pyramid, i_t)
        return DerainOutput(
            derained=decoded["derained"],
            derained_raw=decoded["raw"],
            rain_layers=decoded["rain"],
            new_state=new_state,
            aux=aux,
        )

    def param_count(self) -> int:
        return count_parameters(self)

    def parity_report(self) -> list[dict[str, float]]:
        """Target-vs-actual parameter counts of every equal-parameter
        replacement present in this variant (empty for the full model)."""
        rows: list[dict[str, float]] = []
        if isinstance(self.fusion, EqualParamFusion):
            actual = count_parameters(self.fusion)
            target = self.fusion.target_params
            rows.append(
                {
                    "module": "fusion",
                    "target": target,
                    "actual": actual,
                    "rel_err": abs(actual - target) / target,
                }
            )
        if hasattr(self.pas, "rea"):
            for i, block in enumerate(self.pas.rea):
                if hasattr(block, "target_params"):
                    actual = count_parameters(block)
                    target = block.target_params
                    rows.append(
                        {
                            "module": f"rea_scale{i + 1}",
                            "target": target,
                            "actual": actual,
                            "rel_err": abs(actual - target) / target,
                        }
                    )
        return rows


def event_inputs(sample: Sample, cfg: ModelConfig) -> tuple[np.ndarray, np.ndarray] | None:
    """The event-branch input arrays for a sample under a given variant.

    Default: the two voxel grids. frame_frame: the neighbor frames'
    luminance tiled across the voxel bins (the event branch sees frames).
    frame_only: None (no event branch).
    """
    if not cfg.uses_events:
        return None
    if cfg.variant == "frame_frame":
        tile_minus = np.repeat(luminance(sample.i_prev)[None], cfg.voxel_bins, axis=0)
        tile_plus = np.repeat(luminance(sample.i_next)[None], cfg.voxel_bins, axis=0)
        return tile_minus, tile_plus
    for name, grid in (("ev_minus", sample.ev_minus), ("ev_plus", sample.ev_plus)):
        if grid.n_bins != cfg.voxel_bins:
            raise ValueError(
                f"{name} has {grid.n_bins} bins but the model expects {cfg.voxel_bins}"
            )
    return sample.ev_minus.data, sample.ev_plus.data


def derain_step(
    model: DerainModel, sample: Sample, state: LstmState | None = None
) -> DerainOutput:
    """Run one inference step on a numpy Sample (batch of one, no gradients)."""
    device = next(model.parameters()).device
    dtype = next(model.parameters()).dtype

    def img(x: np.ndarray) -> torch.Tensor:
        return torch.from_numpy(np.ascontiguousarray(x)).to(dtype).permute(2, 0, 1)[None].to(device)

    ev_minus = ev_plus = None
    events = event_inputs(sample, model.cfg)
    if events is not None:
        ev_minus = torch.from_numpy(np.ascontiguousarray(events[0])).to(dtype)[None].to(device)
        ev_plus = torch.from_numpy(np.ascontiguousarray(events[1])).to(dtype)[None].to(device)

    with torch.no_grad():
        return model(img(sample.i_prev), img(sample.i_t), img(sample.i_next), ev_minus, ev_plus, state)
