"""Ablation harness: one suite per design axis, one table per suite.

Each suite trains every configuration on the same data with the same seed,
evaluates on full frames, and renders a table whose last row is always the
rainy-input no-op baseline. Suites that swap modules for equal-parameter
stand-ins (modules suite) also assert the parameter parity they claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..model import DerainModel, ModelConfig, load_checkpoint
from .evaluate import evaluate_model
from .loop import TrainConfig, train

__all__ = ["SUITES", "AblationRun", "AblationReport", "suite_runs", "run_suite"]

SUITES = ("input", "modules", "mapping", "loss", "bins")

# Parameter parity bound for equal-parameter replacements (relative error).
PARITY_TOLERANCE = 0.01

_MODULE_ROWS = (
    # label, variant, (gated fusion, event attention, recurrent state)
    ("A", "no_eamd", ("no", "yes", "yes")),
    ("B", "no_rea", ("yes", "no", "yes")),
    ("C", "no_lstm_state", ("yes", "yes", "no")),
    ("D", "full", ("yes", "yes", "yes")),
)


@dataclass
class AblationRun:
    label: str
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    extras: dict = field(default_factory=dict)


@dataclass
class AblationReport:
    suite: str
    rows: list[dict] = field(default_factory=list)
    baseline: dict = field(default_factory=dict)

    def as_tsv(self) -> str:
        lines = ["label\tparams\tpsnr\tssim"]
        for row in self.rows:
            lines.append(
                f"{row['label']}\t{row['params']}\t{row['psnr']:.4f}\t{row['ssim']:.6f}"
            )
        if self.baseline:
            lines.append(
                f"rainy\t0\t{self.baseline['psnr']:.4f}\t{self.baseline['ssim']:.6f}"
            )
        return "\n".join(lines) + "\n"

    def as_table(self) -> str:
        if self.suite == "modules":
            header = (
                f"{'model':<6} {'gated fusion':<13} {'event attention':<16} "
                f"{'recurrent state':<16} {'params':>9} {'psnr':>7} {'ssim':>7}"
            )
            lines = [header, "-" * len(header)]
            for row in self.rows:
                fusion, attention, state = row["checks"]
                lines.append(
                    f"#{row['label']:<5} {fusion:<13} {attention:<16} {state:<16} "
                    f"{row['params']:>9} {row['psnr']:>7.2f} {row['ssim']:>7.4f}"
                )
        else:
            width = max([len(r["label"]) for r in self.rows] + [len("rainy"), 5])
            header = f"{'config':<{width}} {'params':>9} {'psnr':>7} {'ssim':>7}"
            lines = [header, "-" * len(header)]
            for row in self.rows:
                lines.append(
                    f"{row['label']:<{width}} {row['params']:>9} "
                    f"{row['psnr']:>7.2f} {row['ssim']:>7.4f}"
                )
        if self.baseline:
            pad = "rainy input (no-op)"
            lines.append(
                f"{pad:<{max(len(lines[0]) - 26, len(pad))}}"
                f" {self.baseline['psnr']:>7.2f} {self.baseline['ssim']:>7.4f}"
            )
        return "\n".join(lines) + "\n"


def suite_runs(
    suite: str, model_cfg: ModelConfig, train_cfg: TrainConfig
) -> list[AblationRun]:
    """Expand a suite name into the labeled configurations it compares."""
    if suite == "input":
        pairs = [
            ("frame", "frame_only"),
            ("frame+frame", "frame_frame"),
            ("frame+event", "full"),
        ]
        return [
            AblationRun(label, replace(model_cfg, variant=v), train_cfg)
            for label, v in pairs
        ]
    if suite == "modules":
        return [
            AblationRun(
                label,
                replace(model_cfg, variant=v),
                train_cfg,
                extras={"checks": checks},
            )
            for label, v, checks in _MODULE_ROWS
        ]
    if suite == "mapping":
        return [
            AblationRun("background", replace(model_cfg, variant="predict_background"), train_cfg),
            AblationRun("rain", replace(model_cfg, variant="full"), train_cfg),
        ]
    if suite == "loss":
        return [
            AblationRun("mae", model_cfg, replace(train_cfg, loss="mae")),
            AblationRun("mse", model_cfg, replace(train_cfg, loss="mse")),
            AblationRun(
                "neg_ssim_single",
                model_cfg,
                replace(train_cfg, loss="neg_ssim", single_scale=True),
            ),
            AblationRun(
                "neg_ssim_multi",
                model_cfg,
                replace(train_cfg, loss="neg_ssim", single_scale=False),
            ),
        ]
    if suite == "bins":
        return [
            AblationRun(f"bins{b}", replace(model_cfg, voxel_bins=b), train_cfg)
            for b in (5, 10, 15, 20)
        ]
    raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")


def check_parity(model: DerainModel) -> list[dict]:
    """Assert every equal-parameter stand-in is within PARITY_TOLERANCE of
    the module it replaces; returns the parity rows for the report."""
    rows = model.parity_report()
    for row in rows:
        if row["rel_err"] > PARITY_TOLERANCE:
            raise RuntimeError(
                f"{row['module']}: stand-in has {row['actual']} parameters, "
                f"target {row['target']} ({row['rel_err']:.2%} off; "
                f"bound {PARITY_TOLERANCE:.0%})"
            )
    return rows


def run_suite(
    suite: str,
    data_root: str | Path,
    out_dir: str | Path,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
) -> AblationReport:
    """Train and evaluate every configuration in a suite.

    Artifacts land under out_dir/<label>/; the comparative table is written
    to out_dir/table.txt and table.tsv.
    """
    out_dir = Path(out_dir)
    report = AblationReport(suite=suite)
    for run in suite_runs(suite, model_cfg, train_cfg):
        run_dir = out_dir / run.label
        result = train(run.model_cfg, run.train_cfg, data_root, run_dir)
        model, _ = load_checkpoint(result.checkpoint_path)
        parity = check_parity(model)
        eval_report = evaluate_model(model, data_root, out_dir=run_dir / "eval")
        row = {
            "label": run.label,
            "params": model.param_count(),
            "psnr": eval_report.average("model", "psnr"),
            "ssim": eval_report.average("model", "ssim"),
            "final_loss": result.final_loss,
            "steps": result.steps,
            "parity": parity,
            **run.extras,
        }
        report.rows.append(row)
        if not report.baseline:
            report.baseline = {
                "psnr": eval_report.average("rainy", "psnr"),
                "ssim": eval_report.average("rainy", "ssim"),
            }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "table.txt").write_text(report.as_table())
    (out_dir / "table.tsv").write_text(report.as_tsv())
    return report
