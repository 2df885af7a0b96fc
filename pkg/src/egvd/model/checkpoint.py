"""Checkpoint archive: a zip holding a key=value config text plus one .npy
blob per parameter tensor, named by module path.

Writing is fully deterministic (stored entries, fixed timestamps, sorted
parameter order), so training runs that produce identical weights produce
byte-identical checkpoint files.
"""

from __future__ import annotations

import io
import zipfile
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig
from .network import DerainModel

__all__ = ["FORMAT_TAG", "save_checkpoint", "load_checkpoint", "read_checkpoint_config"]

FORMAT_TAG = "egvd-ckpt-1"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _entry(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.create_system = 3
    info.external_attr = 0o600 << 16
    return info


def save_checkpoint(
    path: str | Path, model: DerainModel, seed: int = 0, step: int = 0
) -> None:
    """Write model weights + config + run counters as one archive file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"format={FORMAT_TAG}"]
    lines += [f"{k}={v}" for k, v in model.cfg.manifest_items()]
    lines += [f"seed={seed}", f"step={step}"]
    config_text = "\n".join(lines) + "\n"

    state = model.state_dict()
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        zf.writestr(_entry("config.txt"), config_text)
        for name in sorted(state):
            buf = io.BytesIO()
            np.save(buf, state[name].detach().cpu().numpy())
            zf.writestr(_entry(f"params/{name}.npy"), buf.getvalue())


def _parse_config(text: str, path: Path) -> tuple[ModelConfig, dict[str, int]]:
    values: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    if values.get("format") != FORMAT_TAG:
        raise ValueError(
            f"{path}: unsupported checkpoint format {values.get('format')!r}; expected {FORMAT_TAG!r}"
        )
    cfg = ModelConfig(
        base_channels=int(values["base_channels"]),
        num_scales=int(values["num_scales"]),
        voxel_bins=int(values["voxel_bins"]),
        msam_enabled=bool(int(values["msam_enabled"])),
        variant=values["variant"],
    )
    meta = {"seed": int(values.get("seed", 0)), "step": int(values.get("step", 0))}
    return cfg, meta


def read_checkpoint_config(path: str | Path) -> tuple[ModelConfig, dict[str, int]]:
    """Config and run counters of a checkpoint, without loading weights."""
    path = Path(path)
    with zipfile.ZipFile(path) as zf:
        return _parse_config(zf.read("config.txt").decode(), path)


def load_checkpoint(path: str | Path) -> tuple[DerainModel, dict[str, int]]:
    """Rebuild the model a checkpoint describes and load its weights."""
    path = Path(path)
    with zipfile.ZipFile(path) as zf:
        cfg, meta = _parse_config(zf.read("config.txt").decode(), path)
        model = DerainModel(cfg)
        state = {}
        for info in zf.infolist():
            if not info.filename.startswith("params/") or not info.filename.endswith(".npy"):
                continue
            name = info.filename[len("params/") : -len(".npy")]
            array = np.load(io.BytesIO(zf.read(info)))
            state[name] = torch.from_numpy(array)
        model.load_state_dict(state, strict=True)
    return model, meta
