"""Plain-text pipeline configuration: dotted keys, explicit op order.

Example:

    image_ops = remove_fore_edges, grayscale, clahe, binarize
    image_ops.binarize.method = sauvola
    image_ops.binarize.window = 31
    engines = mock
    ensemble.enabled = true
    extraction.vocabulary = vocab.tsv
    extraction.year = 1882

The op list is ordered because the op sequence is semantically significant;
every op name and parameter is validated against the schema below before
any page is touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .binarize import METHODS


class ConfigError(ValueError):
    pass


def _is_odd_window(v) -> bool:
    return isinstance(v, int) and v >= 3 and v % 2 == 1


def _positive(v) -> bool:
    return isinstance(v, (int, float)) and v > 0


def _non_negative(v) -> bool:
    return isinstance(v, (int, float)) and v >= 0


def _fraction(v) -> bool:
    return isinstance(v, (int, float)) and 0.0 <= v <= 1.0


def _tau(v) -> bool:
    return isinstance(v, int) and 0 <= v <= 255


def _kernel_dim(v) -> bool:
    return isinstance(v, int) and v >= 1


# op name -> {param: (validator, description)}
OP_SCHEMA: dict[str, dict[str, tuple]] = {
    "grayscale": {},
    "equalize": {},
    "clahe": {
        "tile_cols": (_kernel_dim, "tile columns >= 1"),
        "tile_rows": (_kernel_dim, "tile rows >= 1"),
        "clip_limit": (_positive, "positive clip factor (inf disables clipping)"),
    },
    "binarize": {
        "method": (lambda v: v in METHODS, f"one of {METHODS}"),
        "tau": (_tau, "integer 0..255"),
        "window": (_is_odd_window, "odd integer >= 3"),
        "k": (lambda v: isinstance(v, (int, float)), "float"),
        "R": (_positive, "positive float"),
        "offset": (lambda v: isinstance(v, (int, float)), "float"),
    },
    "morphology": {
        "op": (lambda v: v in ("erode", "dilate"), "erode or dilate"),
        "kernel_w": (_kernel_dim, "integer >= 1"),
        "kernel_h": (_kernel_dim, "integer >= 1"),
        "iterations": (lambda v: isinstance(v, int) and v >= 0, "integer >= 0"),
    },
    "remove_fore_edges": {
        "binarize_tau": (_tau, "integer 0..255"),
        "denoise_w": (_kernel_dim, "integer >= 1"),
        "denoise_h": (_kernel_dim, "integer >= 1"),
        "expand_w": (_kernel_dim, "integer >= 1"),
        "expand_h": (_kernel_dim, "integer >= 1"),
        "min_rect_area_fraction": (_fraction, "fraction 0..1"),
        "max_aspect_deviation": (_non_negative, "non-negative float"),
    },
    "deskew": {
        "max_angle": (_positive, "positive degrees"),
        "step": (_positive, "positive degrees"),
    },
}

LAYOUT_KEYS = {
    "canny_sigma": _positive,
    "canny_low": _positive,
    "canny_high": _positive,
    "vote_threshold": lambda v: isinstance(v, int) and v >= 1,
    "min_len_frac": _fraction,
    "max_gap": _non_negative,
    "samples": lambda v: isinstance(v, int) and v >= 1,
    "seed": lambda v: isinstance(v, int),
    "angle_tol": _positive,
    "merge_dist": _non_negative,
    "min_span_frac": _fraction,
    "y_overlap_min": _fraction,
    "indent_min_chars": _positive,
    "center_tol_frac": _fraction,
    "height_ratio_min": _positive,
    "gap_ratio_min": _positive,
}


@dataclass
class PipelineConfig:
    image_ops: list[tuple[str, dict]] = field(default_factory=list)
    engines: list[str] = field(default_factory=lambda: ["mock"])
    ensemble_enabled: bool = True
    ensemble_weights: str = "uniform"
    ensemble_iou_min: float = 0.3
    layout: dict = field(default_factory=dict)
    vocabulary_path: str | None = None
    abbrev_map_path: str | None = None
    rules_path: str | None = None
    header_pattern: str | None = None
    year: int = 0
    output_formats: list[str] = field(default_factory=lambda: ["csv"])
    workers: int | None = None
    raw_text: str = ""

    def validate(self) -> None:
        for name, params in self.image_ops:
            if name not in OP_SCHEMA:
                raise ConfigError(f"unknown image op {name!r}")
            schema = OP_SCHEMA[name]
            for key, value in params.items():
                if key not in schema:
                    raise ConfigError(f"unknown parameter {key!r} for op {name!r}")
                check, description = schema[key]
                if not check(value):
                    raise ConfigError(f"bad value {value!r} for {name}.{key} (expected {description})")
        if not self.engines:
            raise ConfigError("at least one OCR engine is required")
        if self.ensemble_weights not in ("uniform", "confidence"):
            raise ConfigError(f"ensemble weights must be uniform or confidence, got {self.ensemble_weights!r}")
        if not 0.0 <= self.ensemble_iou_min <= 1.0:
            raise ConfigError("ensemble iou_min must be in [0, 1]")
        for key, value in self.layout.items():
            if key not in LAYOUT_KEYS:
                raise ConfigError(f"unknown layout parameter {key!r}")
            if not LAYOUT_KEYS[key](value):
                raise ConfigError(f"bad value {value!r} for layout.{key}")
        for fmt in self.output_formats:
            if fmt not in ("csv", "json"):
                raise ConfigError(f"unknown output format {fmt!r}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _parse_scalar(raw: str):
    raw = raw.strip()
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("inf", "infinity"):
        return math.inf
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str) -> PipelineConfig:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, value = stripped.split("=", 1)
        entries[key.strip()] = value.strip()

    cfg = PipelineConfig(raw_text=text)
    cfg.image_ops = []
    op_order = [op.strip() for op in entries.pop("image_ops", "").split(",") if op.strip()]
    op_params: dict[str, dict] = {name: {} for name in op_order}

    for key in sorted(entries):
        value = entries[key]
        parts = key.split(".")
        if parts[0] == "image_ops" and len(parts) == 3:
            op, param = parts[1], parts[2]
            if op not in op_params:
                raise ConfigError(f"parameters given for op {op!r} that is not in the image_ops list")
            op_params[op][param] = _parse_scalar(value)
        elif key == "engines":
            cfg.engines = [e.strip() for e in value.split(",") if e.strip()]
        elif key == "ensemble.enabled":
            cfg.ensemble_enabled = _parse_scalar(value) is True
        elif key == "ensemble.weights":
            cfg.ensemble_weights = value
        elif key == "ensemble.iou_min":
            cfg.ensemble_iou_min = float(_parse_scalar(value))
        elif parts[0] == "layout" and len(parts) == 2:
            cfg.layout[parts[1]] = _parse_scalar(value)
        elif key == "extraction.vocabulary":
            cfg.vocabulary_path = value
        elif key == "extraction.abbrev_map":
            cfg.abbrev_map_path = value
        elif key == "extraction.rules":
            cfg.rules_path = value
        elif key == "extraction.header_pattern":
            cfg.header_pattern = value
        elif key == "extraction.year":
            cfg.year = int(_parse_scalar(value))
        elif key == "output.formats":
            cfg.output_formats = [f.strip() for f in value.split(",") if f.strip()]
        elif key == "workers":
            cfg.workers = int(_parse_scalar(value))
        else:
            raise ConfigError(f"unknown configuration key {key!r}")

    cfg.image_ops = [(name, op_params[name]) for name in op_order]
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
