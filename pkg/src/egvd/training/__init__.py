from .ablate import SUITES, AblationReport, AblationRun, check_parity, run_suite, suite_runs
from .data import (
    build_samples,
    clip_batch,
    frame_timestamps,
    load_sequence,
    read_manifest,
    sequence_dirs,
)
from .evaluate import EvalReport, evaluate, evaluate_model
from .loop import TrainConfig, TrainResult, cosine_lr, train

__all__ = [
    "SUITES",
    "AblationReport",
    "AblationRun",
    "EvalReport",
    "TrainConfig",
    "TrainResult",
    "build_samples",
    "check_parity",
    "clip_batch",
    "cosine_lr",
    "evaluate",
    "evaluate_model",
    "frame_timestamps",
    "load_sequence",
    "read_manifest",
    "run_suite",
    "sequence_dirs",
    "suite_runs",
    "train",
]
