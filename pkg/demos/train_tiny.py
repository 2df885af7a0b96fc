"""Overfit a small model on one rainy clip — a few minutes on CPU.

Synthesizes a medium-rain clip, trains a narrow network on 44-pixel crops
until the derained clip beats the rainy input by 1.5 dB (or 700 steps pass),
and prints the PSNR trajectory. The checkpoint and loss curve land in
demos/out/train/ and feed evaluate_and_inspect.py.

CLI equivalent:
    egvd train --data <dir> --out <dir> --preset desk --epochs 150
"""

from pathlib import Path

from egvd.config import RAIN_PRESETS
from egvd.imgio import save_frame_dir
from egvd.model import ModelConfig
from egvd.rain import make_clean_clip, synthesize_dataset
from egvd.training import TrainConfig, train

OUT = Path(__file__).parent / "out" / "train"


def main() -> None:
    src = OUT / "clean"
    ds = OUT / "ds"
    if not ds.exists():
        save_frame_dir(src / "plaza", make_clean_clip(height=96, width=96, n_frames=8, seed=7))
        synthesize_dataset(src, [("medium", RAIN_PRESETS["medium"])], ds)

    model_cfg = ModelConfig(base_channels=8)
    train_cfg = TrainConfig(
        crop=44,
        batch=2,
        epochs=700,
        clip_len=4,
        seed=0,
        max_steps=700,
        eval_every=25,
        target_psnr_gain=1.5,
    )
    result = train(model_cfg, train_cfg, ds, OUT / "run")

    print(f"steps: {result.steps}, final loss {result.final_loss:.4f}, "
          f"{result.wall_seconds:.0f}s")
    print(f"rainy-input baseline: {result.baseline_psnr:.2f} dB")
    for step, psnr in result.psnr_history:
        print(f"  step {step:4d}: {psnr:.2f} dB ({psnr - result.baseline_psnr:+.2f})")
    if result.early_stopped:
        print("stopped early at the target gain")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"loss curve: {result.curve_path}")


if __name__ == "__main__":
    main()
