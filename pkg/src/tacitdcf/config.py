"""Flat key=value config files mirroring TrackerConfig.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from pathlib import Path

from tacitdcf.features import BankConfig
from tacitdcf.filters import RegularizationWeights
from tacitdcf.tracker import TrackerConfig

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}

# key -> (section, field, parser)
_KEYS = {
    "bank_levels": ("bank", "levels", int),
    "bank_orientations": ("bank", "orientations", int),
    "bank_phases": ("bank", "phases", int),
    "bank_kernel_size": ("bank", "kernel_size", int),
    "lambda_mask": ("reg", "mask", float),
    "lambda_style": ("reg", "style", float),
    "lambda_temporal": ("reg", "temporal", float),
    "lambda_st_style": ("reg", "st_style", float),
    "patch_size": ("top", "patch_size", int),
    "padding": ("top", "padding", float),
    "sigma_ratio": ("top", "sigma_ratio", float),
    "gamma": ("top", "gamma", float),
    "lam": ("top", "lam", float),
    "eta": ("top", "eta", float),
    "scale_count": ("top", "scale_count", int),
    "scale_step": ("top", "scale_step", float),
    "weight_mode": ("top", "weight_mode", str),
    "solver": ("top", "solver", str),
    "history_len": ("top", "history_len", int),
    "cosine_window": ("top", "cosine_window", lambda s: _BOOL[s.lower()]),
    "penalty_min": ("top", "penalty_min", float),
    "penalty_max": ("top", "penalty_max", float),
    "penalty_saturation": ("top", "penalty_saturation", float),
    "gs_max_iters": ("top", "gs_max_iters", int),
    "gs_tol": ("top", "gs_tol", float),
    "gs_kernel_coeffs": ("top", "gs_kernel_coeffs", int),
    "seed": ("top", "seed", int),
}


def parse_config(text: str) -> TrackerConfig:
    bank: dict = {}
    reg: dict = {}
    top: dict = {}
    buckets = {"bank": bank, "reg": reg, "top": top}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        section, fname, parser = _KEYS[key]
        try:
            buckets[section][fname] = parser(value)
        except (ValueError, KeyError) as exc:
            raise ValueError(
                f"config line {lineno}: bad value {value!r} for {key}"
            ) from exc
    kwargs = dict(top)
    if bank:
        kwargs["bank"] = BankConfig(**bank)
    if reg:
        kwargs["reg"] = RegularizationWeights(**reg)
    return TrackerConfig(**kwargs)


def load_config(path: str | Path) -> TrackerConfig:
    return parse_config(Path(path).read_text())


def dump_config(config: TrackerConfig) -> str:
    lines = []
    for key, (section, fname, _) in _KEYS.items():
        if section == "bank":
            value = getattr(config.bank, fname)
        elif section == "reg":
            value = getattr(config.reg, fname)
        else:
            value = getattr(config, fname)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
