"""The deraining network: configuration, building blocks, motion-gated
fusion, pyramidal selection, reconstruction, and checkpoints."""

from .blocks import (
    ChannelGate,
    ConvLSTMCell,
    EqualParamConvBlock,
    FeatureExtractor,
    ResidualBlock,
    SpatialGate,
    Upsample,
    count_parameters,
    module_param_count,
)
from .checkpoint import FORMAT_TAG, load_checkpoint, read_checkpoint_config, save_checkpoint
from .config import VARIANTS, ModelConfig
from .eamd import EAMD, EqualParamFusion, make_fusion
from .network import DerainModel, DerainOutput, Sample, derain_step, event_inputs
from .pas import MMF, PAS, REA, LstmState, PyramidEncoder
from .reconstruct import MSAM, DecoderBlock, Reconstructor, downsample_frame

__all__ = [
    "ModelConfig",
    "VARIANTS",
    "Sample",
    "DerainOutput",
    "DerainModel",
    "LstmState",
    "derain_step",
    "event_inputs",
    "EAMD",
    "EqualParamFusion",
    "make_fusion",
    "PAS",
    "REA",
    "MMF",
    "MSAM",
    "PyramidEncoder",
    "Reconstructor",
    "DecoderBlock",
    "downsample_frame",
    "FeatureExtractor",
    "ResidualBlock",
    "ChannelGate",
    "SpatialGate",
    "ConvLSTMCell",
    "Upsample",
    "EqualParamConvBlock",
    "count_parameters",
    "module_param_count",
    "save_checkpoint",
    "load_checkpoint",
    "read_checkpoint_config",
    "FORMAT_TAG",
]
