"""Presets and layered settings resolution.

All numeric defaults the command-line tool uses live here, in three layers
that each override the previous one: preset (`desk` or `paper`), config file
(key=value lines, same grammar as manifests), then explicit flags. Builders
below turn the resolved flat dict into typed configs; keys they don't own
are simply ignored, so one settings dict can feed every builder.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .events import SimConfig
from .model import ModelConfig
from .rain import RainParams
from .training import TrainConfig, read_manifest

__all__ = [
    "COMMAND_DEFAULTS",
    "PRESETS",
    "RAIN_PRESETS",
    "resolve_settings",
    "model_config",
    "train_config",
    "sim_config",
    "rain_params",
    "typed_value",
]

# Scale presets. "desk" trains a small model on small crops in minutes on a
# CPU; "paper" is the full-scale recipe (hours on a GPU).
PRESETS: dict[str, dict[str, str]] = {
    "desk": {"base_channels": "8", "crop": "64", "epochs": "30"},
    "paper": {"base_channels": "32", "crop": "128", "epochs": "500"},
}

# Named streak-field strengths. The names order overall rain energy
# (coverage x brightness); they are starting points, not calibrated weather.
RAIN_PRESETS: dict[str, RainParams] = {
    "light": RainParams(
        density=800.0,
        direction_deg=-8.0,
        speed_px_per_frame=(2.0, 4.0),
        streak_width_px=(1.0, 1.5),
        brightness=(0.2, 0.45),
    ),
    "medium": RainParams(),
    "heavy": RainParams(
        density=6000.0,
        direction_deg=-15.0,
        speed_px_per_frame=(4.0, 9.0),
        streak_width_px=(1.5, 3.0),
        brightness=(0.4, 0.85),
        depth_layers=4,
    ),
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_opt_int(text: str) -> int | None:
    return None if text.strip().lower() == "none" else int(text)


def _parse_opt_float(text: str) -> float | None:
    return None if text.strip().lower() == "none" else float(text)


_MODEL_KEYS = {
    "base_channels": int,
    "voxel_bins": int,
    "msam_enabled": _parse_bool,
    "variant": str,
}

_TRAIN_KEYS = {
    "crop": int,
    "batch": int,
    "epochs": int,
    "lr_start": float,
    "lr_end": float,
    "clip_len": int,
    "seed": int,
    "loss": str,
    "single_scale": _parse_bool,
    "checkpoint_every": int,
    "checkpoint_keep": str,
    "max_steps": _parse_opt_int,
    "eval_every": int,
    "target_psnr_gain": _parse_opt_float,
}

_SIM_KEYS = {
    "contrast_threshold": float,
    "log_eps": float,
    "refractory_us": int,
}

_RAIN_KEYS = {
    "rain_density": float,
    "rain_direction_deg": float,
    "rain_speed_min": float,
    "rain_speed_max": float,
    "rain_width_min": float,
    "rain_width_max": float,
    "rain_brightness_min": float,
    "rain_brightness_max": float,
    "rain_shutter_fraction": float,
    "rain_depth_layers": int,
    "rain_seed": int,
}

# Keys builders don't consume but commands do.
_EXTRA_KEYS = {
    "rain": str,  # rain preset name(s), comma separated
    "width": int,
    "height": int,
    "frames": int,
    "fps": float,
    "clips": int,
    "bins": int,
}

# Command-level fallbacks when neither preset, config file, nor flag says.
COMMAND_DEFAULTS = {
    "rain": "medium",
    "width": 64,
    "height": 64,
    "frames": 10,
    "fps": 30.0,
    "clips": 1,
}

KNOWN_KEYS = {
    **_MODEL_KEYS,
    **_TRAIN_KEYS,
    **_SIM_KEYS,
    **_RAIN_KEYS,
    **_EXTRA_KEYS,
}


def resolve_settings(
    preset: str | None = None,
    config_path: str | Path | None = None,
    overrides: dict | None = None,
) -> dict[str, str]:
    """Merge preset < config file < explicit overrides into one flat dict.

    Override values of None mean "not given" and are dropped; everything
    else is stringified so the three layers stay uniform. Unknown keys in
    the config file are rejected (they are silently inert otherwise, which
    buries typos).
    """
    if preset is not None and preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {tuple(PRESETS)}")
    settings: dict[str, str] = dict(PRESETS[preset]) if preset else {}
    if config_path is not None:
        loaded = read_manifest(config_path)
        unknown = sorted(set(loaded) - set(KNOWN_KEYS))
        if unknown:
            raise ValueError(f"{config_path}: unknown config keys: {', '.join(unknown)}")
        settings.update(loaded)
    if overrides:
        settings.update({k: str(v) for k, v in overrides.items() if v is not None})
    return settings


def _typed(settings: dict[str, str], table: dict) -> dict:
    kwargs = {}
    for key, parse in table.items():
        if key in settings:
            try:
                kwargs[key] = parse(settings[key])
            except ValueError as exc:
                raise ValueError(f"config key {key}: {exc}") from exc
    return kwargs


def model_config(settings: dict[str, str]) -> ModelConfig:
    return ModelConfig(**_typed(settings, _MODEL_KEYS))


def train_config(settings: dict[str, str]) -> TrainConfig:
    return TrainConfig(**_typed(settings, _TRAIN_KEYS))


def sim_config(settings: dict[str, str]) -> SimConfig:
    return SimConfig(**_typed(settings, _SIM_KEYS))


def rain_params(settings: dict[str, str], preset: str = "medium") -> RainParams:
    """A rain preset with any rain_* settings keys applied on top."""
    if preset not in RAIN_PRESETS:
        raise ValueError(
            f"unknown rain preset {preset!r}; expected one of {tuple(RAIN_PRESETS)}"
        )
    params = RAIN_PRESETS[preset]
    typed = _typed(settings, _RAIN_KEYS)
    fields = {}
    for key, value in typed.items():
        fields[key.removeprefix("rain_")] = value
    pairs = {
        "speed": "speed_px_per_frame",
        "width": "streak_width_px",
        "brightness": "brightness",
    }
    for short, attr in pairs.items():
        lo = fields.pop(f"{short}_min", None)
        hi = fields.pop(f"{short}_max", None)
        if lo is not None or hi is not None:
            base = getattr(params, attr)
            fields[attr] = (lo if lo is not None else base[0], hi if hi is not None else base[1])
    return replace(params, **fields)


def typed_value(settings: dict[str, str], key: str, default):
    """Fetch one of the command-level keys (width, fps, ...) with its type."""
    if key not in settings:
        return default
    return KNOWN_KEYS[key](settings[key])
