"""Event-guided video deraining: simulation, synthesis, network, harness.

The package splits into five layers, lowest first:

- `events` / `event_io`: event-camera simulation from frame sequences,
  voxel-grid encoding, and the binary/CSV event-file formats.
- `rain`: procedural rain-streak rendering and rainy-dataset synthesis.
- `losses`: SSIM/PSNR metrics and the multi-scale training losses.
- `model`: the recurrent deraining network, its ablation variants, and
  checkpoint serialization.
- `training`: dataset loading, the training loop, evaluation, and the
  ablation harness; `cli` wires everything into one command.
"""

from .config import PRESETS, RAIN_PRESETS, resolve_settings
from .event_io import (
    FormatError,
    read_events,
    read_events_csv,
    serialize_events,
    write_events,
    write_events_csv,
)
from .events import (
    Event,
    EventStream,
    EventVoxelGrid,
    SimConfig,
    build_voxel_grid,
    luminance,
    simulate_events,
)
from .losses import LOSS_KINDS, SsimConfig, multiscale_loss, psnr, ssim, ssim_frames
from .model import (
    DerainModel,
    DerainOutput,
    LstmState,
    ModelConfig,
    Sample,
    VARIANTS,
    derain_step,
    load_checkpoint,
    read_checkpoint_config,
    save_checkpoint,
)
from .rain import (
    RainLayerSequence,
    RainParams,
    generate_rain_layer,
    make_clean_clip,
    overlay,
    synthesize_dataset,
)
from .training import (
    EvalReport,
    TrainConfig,
    TrainResult,
    evaluate,
    evaluate_model,
    load_sequence,
    run_suite,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DerainModel",
    "DerainOutput",
    "EvalReport",
    "Event",
    "EventStream",
    "EventVoxelGrid",
    "FormatError",
    "LOSS_KINDS",
    "LstmState",
    "ModelConfig",
    "PRESETS",
    "RAIN_PRESETS",
    "RainLayerSequence",
    "RainParams",
    "Sample",
    "SimConfig",
    "SsimConfig",
    "TrainConfig",
    "TrainResult",
    "VARIANTS",
    "build_voxel_grid",
    "derain_step",
    "evaluate",
    "evaluate_model",
    "generate_rain_layer",
    "load_checkpoint",
    "load_sequence",
    "luminance",
    "make_clean_clip",
    "multiscale_loss",
    "overlay",
    "psnr",
    "read_checkpoint_config",
    "read_events",
    "read_events_csv",
    "resolve_settings",
    "run_suite",
    "save_checkpoint",
    "serialize_events",
    "simulate_events",
    "ssim",
    "ssim_frames",
    "synthesize_dataset",
    "train",
    "write_events",
    "write_events_csv",
]
