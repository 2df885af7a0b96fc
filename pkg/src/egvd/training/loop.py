"""The recurrent training loop.

Sequences are unrolled in clips of `clip_len` consecutive frames; the
recurrent state flows through a clip with gradients and crosses clip
boundaries detached (truncated backpropagation through time). Every knob —
data order, crop positions, initialization — draws from seeded generators,
so a (seed, config, data) triple fully determines the loss curve and the
checkpoint bytes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..losses import LOSS_KINDS, multiscale_loss, psnr
from ..model import DerainModel, ModelConfig, derain_step, save_checkpoint
from .data import clip_batch, load_sequence, sequence_dirs

__all__ = ["TrainConfig", "TrainResult", "train", "cosine_lr"]


@dataclass
class TrainConfig:
    """Optimization knobs.

    crop: square patch side (divisible by 4, at least 44 so the coarsest
        scale still fits an SSIM window).
    batch: crop windows drawn per sequence visit.
    epochs: full passes over the training sequences.
    lr_start / lr_end: cosine-annealed learning-rate range.
    clip_len: frames per recurrent unroll (state detaches between clips).
    loss: neg_ssim | mae | mse; single_scale supervises only the
        full-resolution output.
    checkpoint_keep: "last" overwrites one rolling per-epoch checkpoint,
        "all" keeps numbered ones.
    max_steps / eval_every / target_psnr_gain: optional step cap and
        early-stop rule (stop once full-resolution PSNR on the training data
        beats the rainy-input baseline by the given dB margin; checked every
        `eval_every` epochs).
    """

    crop: int = 128
    batch: int = 2
    epochs: int = 500
    lr_start: float = 1e-4
    lr_end: float = 1e-5
    schedule: str = "cosine"
    clip_len: int = 5
    seed: int = 0
    loss: str = "neg_ssim"
    single_scale: bool = False
    checkpoint_every: int = 1
    checkpoint_keep: str = "last"
    max_steps: int | None = None
    eval_every: int = 0
    target_psnr_gain: float | None = None

    def __post_init__(self) -> None:
        if self.crop % 4:
            raise ValueError("crop must be divisible by 4")
        if self.crop < 44:
            raise ValueError("crop must be at least 44 (coarsest scale must fit an SSIM window)")
        if self.clip_len < 1:
            raise ValueError("clip_len must be >= 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}")
        if self.schedule != "cosine":
            raise ValueError("only the cosine schedule is supported")
        if self.checkpoint_keep not in ("last", "all"):
            raise ValueError("checkpoint_keep must be 'last' or 'all'")


@dataclass
class TrainResult:
    checkpoint_path: Path
    curve_path: Path
    steps: int
    epochs_run: int
    final_loss: float
    wall_seconds: float
    early_stopped: bool = False
    baseline_psnr: float | None = None
    psnr_history: list[tuple[int, float]] = field(default_factory=list)


def cosine_lr(step: int, total_steps: int, lr_start: float, lr_end: float) -> float:
    """Cosine annealing from lr_start (step 0) to lr_end (last step)."""
    if total_steps <= 1:
        return lr_start
    frac = min(max(step / (total_steps - 1), 0.0), 1.0)
    return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + math.cos(math.pi * frac))


def _mean_full_psnr(model: DerainModel, sequences: list[list]) -> float:
    """Average full-resolution PSNR over all frames of all sequences, with
    recurrent state carried within each sequence."""
    model.eval()
    values = []
    for samples in sequences:
        state = None
        for sample in samples:
            out = derain_step(model, sample, state)
            state = out.new_state
            pred = out.derained[-1][0].permute(1, 2, 0).numpy()
            values.append(psnr(pred, sample.gt))
    model.train()
    return float(np.mean(values))


def _baseline_psnr(sequences: list[list]) -> float:
    values = [psnr(s.i_t, s.gt) for samples in sequences for s in samples]
    return float(np.mean(values))


def train(
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    data_root: str | Path,
    out_dir: str | Path,
) -> TrainResult:
    """Optimize a fresh model on a dataset root; returns paths and counters.

    Writes `loss_curve.tsv` (step, epoch, lr, loss), per-epoch checkpoints
    under `checkpoints/`, and the final `model.ckpt`. A non-finite loss
    aborts after dumping the offending batch next to the curve file.
    """
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(train_cfg.seed)
    model = DerainModel(model_cfg)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr_start)
    rng = np.random.default_rng(train_cfg.seed)

    dirs = sequence_dirs(data_root)
    sequences = [list(load_sequence(d, bins=model_cfg.voxel_bins)) for d in dirs]
    for d, samples in zip(dirs, sequences):
        if any(s.gt is None for s in samples):
            raise ValueError(f"{d}: training requires ground-truth clean frames")
        height, width = samples[0].i_t.shape[:2]
        if train_cfg.crop > min(height, width):
            raise ValueError(
                f"{d}: crop {train_cfg.crop} exceeds frame size {height}x{width}"
            )

    clips_per_epoch = sum(math.ceil(len(s) / train_cfg.clip_len) for s in sequences)
    total_steps = clips_per_epoch * train_cfg.epochs

    curve_path = out_dir / "loss_curve.tsv"
    ckpt_dir = out_dir / "checkpoints"
    final_path = out_dir / "model.ckpt"

    step = 0
    epochs_run = 0
    final_loss = math.nan
    early_stopped = False
    baseline = None
    psnr_history: list[tuple[int, float]] = []
    if train_cfg.target_psnr_gain is not None:
        baseline = _baseline_psnr(sequences)

    stop = False
    with open(curve_path, "w") as curve:
        curve.write("step\tepoch\tlr\tloss\n")
        for epoch in range(train_cfg.epochs):
            order = rng.permutation(len(sequences))
            for seq_idx in order:
                samples = sequences[seq_idx]
                height, width = samples[0].i_t.shape[:2]
                boxes = [
                    (
                        int(rng.integers(0, height - train_cfg.crop + 1)),
                        int(rng.integers(0, width - train_cfg.crop + 1)),
                    )
                    for _ in range(train_cfg.batch)
                ]
                state = None
                for start in range(0, len(samples), train_cfg.clip_len):
                    clip = samples[start : start + train_cfg.clip_len]
                    lr = cosine_lr(step, total_steps, train_cfg.lr_start, train_cfg.lr_end)
                    for group in optimizer.param_groups:
                        group["lr"] = lr
                    optimizer.zero_grad()

                    step_losses = []
                    for sample in clip:
                        batch = clip_batch(sample, model_cfg, boxes, train_cfg.crop)
                        out = model(
                            batch["i_prev"],
                            batch["i_t"],
                            batch["i_next"],
                            batch["ev_minus"],
                            batch["ev_plus"],
                            state,
                        )
                        step_losses.append(
                            multiscale_loss(
                                out.derained_raw,
                                batch["gt"],
                                kind=train_cfg.loss,
                                single_scale=train_cfg.single_scale,
                            )
                        )
                        state = out.new_state
                    loss = sum(step_losses) / len(step_losses)

                    if not torch.isfinite(loss):
                        dump_path = out_dir / "nan_batch.npz"
                        np.savez(
                            dump_path,
                            **{
                                k: v.detach().numpy()
                                for k, v in batch.items()
                                if isinstance(v, torch.Tensor)
                            },
                        )
                        raise RuntimeError(
                            f"non-finite loss at step {step}; offending batch dumped to {dump_path}"
                        )

                    loss.backward()
                    optimizer.step()
                    state = state.detached()

                    final_loss = loss.item()
                    curve.write(f"{step}\t{epoch}\t{lr:.10e}\t{final_loss:.10e}\n")
                    step += 1
                    if train_cfg.max_steps is not None and step >= train_cfg.max_steps:
                        stop = True
                        break
                if stop:
                    break
            epochs_run = epoch + 1
            if train_cfg.checkpoint_every and epochs_run % train_cfg.checkpoint_every == 0:
                if train_cfg.checkpoint_keep == "all":
                    ckpt_path = ckpt_dir / f"epoch_{epochs_run:05d}.ckpt"
                else:
                    ckpt_path = ckpt_dir / "last.ckpt"
                save_checkpoint(ckpt_path, model, seed=train_cfg.seed, step=step)
            if (
                not stop
                and train_cfg.eval_every
                and train_cfg.target_psnr_gain is not None
                and epochs_run % train_cfg.eval_every == 0
            ):
                score = _mean_full_psnr(model, sequences)
                psnr_history.append((step, score))
                if score >= baseline + train_cfg.target_psnr_gain:
                    early_stopped = True
                    stop = True
            if stop:
                break

    save_checkpoint(final_path, model, seed=train_cfg.seed, step=step)
    return TrainResult(
        checkpoint_path=final_path,
        curve_path=curve_path,
        steps=step,
        epochs_run=epochs_run,
        final_loss=final_loss,
        wall_seconds=time.perf_counter() - t0,
        early_stopped=early_stopped,
        baseline_psnr=baseline,
        psnr_history=psnr_history,
    )
