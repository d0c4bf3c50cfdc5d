"""Pipeline configuration: defaults, validation, and a flat key-value
file format.

The file format is one `key = value` pair per line (TOML-style scalars
only: integers, floats, booleans, quoted strings). Blank lines and lines
starting with '#' are ignored. Command-line flags override file values,
which override the built-in defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import DataError


@dataclass
class PipelineConfig:
    peak_window: int = 3          # forward days aggregated by ttf
    keep_fraction: float = 0.70   # tf-idf candidate cut
    peak_quantile: float = 0.03   # share of scored pairs kept as peaks
    temporal_weight: float = 3.0  # consecutive-day same-phrase edge weight
    edge_floor: float = 0.0       # minimum same-day edge weight kept
    min_community: int = 2        # smallest community kept as an event
    synonym_threshold: float = 0.95  # cosine bar for phrase enrichment
    pseudo_top: int = 10          # pseudo-labeled docs per event
    negative_ratio: int = 2       # negatives per positive when training
    ensemble_size: int = 50       # classifiers per event
    add_top: int = 5              # retrieved docs appended per refinement
    iterations: int = 2           # selection rounds
    seed: int = 0
    endpoint: str = ""            # embedding service address; empty = none

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.peak_window >= 1, "peak_window must be >= 1"),
            (0.0 < self.keep_fraction <= 1.0, "keep_fraction must be in (0, 1]"),
            (0.0 < self.peak_quantile < 1.0, "peak_quantile must be in (0, 1)"),
            (self.temporal_weight > 1.0, "temporal_weight must exceed 1"),
            (self.edge_floor >= 0.0, "edge_floor must be >= 0"),
            (self.min_community >= 1, "min_community must be >= 1"),
            (
                0.0 < self.synonym_threshold <= 1.0,
                "synonym_threshold must be in (0, 1]",
            ),
            (self.pseudo_top >= 1, "pseudo_top must be >= 1"),
            (self.negative_ratio >= 1, "negative_ratio must be >= 1"),
            (self.ensemble_size >= 1, "ensemble_size must be >= 1"),
            (self.add_top >= 1, "add_top must be >= 1"),
            (self.iterations >= 1, "iterations must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise DataError(f"config: {message}")
        return self

    def merged(self, overrides: dict) -> "PipelineConfig":
        """New config with the non-None override values applied."""
        values = dataclasses.asdict(self)
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in values:
                raise DataError(f"config: unknown field {key!r}")
            values[key] = val
        return PipelineConfig(**values).validate()


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _parse_value(key: str, raw: str, line_no: int):
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    raise DataError(f"config line {line_no}: cannot parse value {raw!r} for {key}")


def parse_config(text: str) -> PipelineConfig:
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"config line {line_no}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_TYPES:
            raise DataError(f"config line {line_no}: unknown field {key!r}")
        if key in values:
            raise DataError(f"config line {line_no}: duplicate field {key!r}")
        val = _parse_value(key, raw, line_no)
        target = _FIELD_TYPES[key]
        if target == "int":
            if not isinstance(val, int) or isinstance(val, bool):
                raise DataError(f"config line {line_no}: {key} must be an integer")
        elif target == "float":
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise DataError(f"config line {line_no}: {key} must be a number")
            val = float(val)
        elif target == "str":
            if not isinstance(val, str):
                raise DataError(f"config line {line_no}: {key} must be a string")
        values[key] = val
    return PipelineConfig(**values).validate()


def serialize_config(config: PipelineConfig) -> str:
    lines = []
    for f in dataclasses.fields(PipelineConfig):
        val = getattr(config, f.name)
        if isinstance(val, bool):
            rendered = "true" if val else "false"
        elif isinstance(val, float):
            rendered = repr(val)
        elif isinstance(val, int):
            rendered = str(val)
        else:
            rendered = f'"{val}"'
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def load_config(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read config file {path!r}: {exc}") from exc


def save_config(path, config: PipelineConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(config))
