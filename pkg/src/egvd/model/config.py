"""Network configuration and the ablation-variant vocabulary."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ModelConfig", "VARIANTS"]

# Each variant changes exactly one thing relative to "full":
#   no_eamd          motion-gated fusion swapped for an equal-parameter conv block
#   no_rea           event-attention stacks swapped for equal-parameter conv blocks
#   no_lstm_state    recurrent state pinned to zero (cell kept, no carry-over)
#   frame_only       event branch removed; the motion mask is predicted from
#                    neighbor-frame features so the gating stays runnable
#   frame_frame      event branch kept but fed the neighbor frames' luminance
#                    tiled across the voxel bins instead of events
#   predict_background  heads output the clean image directly instead of a
#                    negative rain residual added to the input
VARIANTS = (
    "full",
    "no_eamd",
    "no_rea",
    "no_lstm_state",
    "frame_only",
    "frame_frame",
    "predict_background",
)


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs.

    base_channels: feature width at full resolution (doubles per scale).
    num_scales: pyramid depth; the architecture is fixed at 3.
    voxel_bins: time bins of the event voxel grids the network consumes.
    msam_enabled: keep the supervised-attention blocks between decoder stages.
    variant: one of VARIANTS.
    """

    base_channels: int = 32
    num_scales: int = 3
    voxel_bins: int = 10
    msam_enabled: bool = True
    variant: str = "full"

    def __post_init__(self) -> None:
        if self.num_scales != 3:
            raise ValueError("num_scales is fixed at 3")
        if self.base_channels < 4 or self.base_channels % 2:
            raise ValueError("base_channels must be even and >= 4")
        if self.voxel_bins < 2:
            raise ValueError("voxel_bins must be >= 2")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def uses_events(self) -> bool:
        """Whether the event branch exists (frame_only removes it)."""
        return self.variant != "frame_only"

    @property
    def predicts_background(self) -> bool:
        return self.variant == "predict_background"

    def manifest_items(self) -> list[tuple[str, str]]:
        return [
            ("base_channels", str(self.base_channels)),
            ("num_scales", str(self.num_scales)),
            ("voxel_bins", str(self.voxel_bins)),
            ("msam_enabled", str(int(self.msam_enabled))),
            ("variant", self.variant),
        ]
