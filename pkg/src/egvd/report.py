"""Plot rendering for training runs: loss curves and metric tables as PNGs.

Everything draws through the Agg backend so it works headless; outputs are
files for humans to look at, nothing interactive.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_loss_curve", "plot_metric_table", "render_run"]


def _read_tsv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle, delimiter="\t")
        rows = list(reader)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty table")
        return list(reader.fieldnames), rows


def plot_loss_curve(curve_path: str | Path, out_path: str | Path) -> Path:
    """Loss vs. step with the learning rate on a twin axis."""
    _, rows = _read_tsv(curve_path)
    if not rows:
        raise ValueError(f"{curve_path}: no optimization steps recorded")
    steps = [int(r["step"]) for r in rows]
    losses = [float(r["loss"]) for r in rows]
    lrs = [float(r["lr"]) for r in rows]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, losses, lw=1.0, color="tab:blue")
    ax.set_xlabel("step")
    ax.set_ylabel("training loss", color="tab:blue")
    ax.grid(True, alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(steps, lrs, lw=0.8, color="tab:orange", alpha=0.7)
    ax2.set_ylabel("learning rate", color="tab:orange")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_metric_table(table_path: str | Path, out_path: str | Path) -> Path:
    """Render an evaluation or ablation TSV as paired PSNR/SSIM bar charts.

    Accepts either table grammar: evaluation rows (sequence, method, ...)
    are labeled "sequence/method"; ablation rows (label, ...) by label.
    """
    fields, rows = _read_tsv(table_path)
    if not rows:
        raise ValueError(f"{table_path}: no rows")
    if "method" in fields:
        labels = [f"{r['sequence']}/{r['method']}" for r in rows]
    else:
        labels = [r["label"] for r in rows]
    psnrs = [float(r["psnr"]) for r in rows]
    ssims = [float(r["ssim"]) for r in rows]

    fig, (ax1, ax2) = plt.subplots(
        1, 2, figsize=(10, 0.6 + 0.45 * len(rows)), sharey=True
    )
    y = range(len(rows))
    ax1.barh(y, psnrs, color="tab:blue")
    ax1.set_yticks(y, labels)
    ax1.invert_yaxis()
    ax1.set_xlabel("PSNR (dB)")
    ax2.barh(y, ssims, color="tab:green")
    ax2.set_xlabel("SSIM")
    ax2.set_xlim(0, 1)
    for ax in (ax1, ax2):
        ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def render_run(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Render every known artifact under a run directory.

    Looks for loss_curve.tsv, eval report.tsv files, and ablation
    table.tsv files anywhere below run_dir; returns the written plot paths.
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir / "plots"
    written: list[Path] = []
    for curve in sorted(run_dir.rglob("loss_curve.tsv")):
        stem = "_".join(curve.relative_to(run_dir).parent.parts) or "run"
        written.append(plot_loss_curve(curve, out_dir / f"loss_{stem}.png"))
    for table in sorted(run_dir.rglob("report.tsv")) + sorted(run_dir.rglob("table.tsv")):
        stem = "_".join(table.relative_to(run_dir).parent.parts) or "run"
        written.append(plot_metric_table(table, out_dir / f"metrics_{stem}.png"))
    if not written:
        raise FileNotFoundError(
            f"{run_dir}: no loss_curve.tsv, report.tsv, or table.tsv found"
        )
    return written
