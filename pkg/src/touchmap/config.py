"""Pipeline configuration: one nested JSON document.

Sections mirror the processing stages — ``dsp``, ``detector``,
``manifold``, ``regressor`` — plus ``paths`` (artifact file names inside
the workspace) and a top-level ``seed``.  Every value is validated by the
dataclass that owns it; unknown sections or keys are rejected outright.

Precedence: built-in defaults < config file < ``--set section.key=value``
overrides < ``--seed`` (which also fills any module seed the file left at
its default).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .detect import DetectorConfig
from .manifold import ManifoldConfig
from .regressor import RegressorConfig


class ConfigError(ValueError):
    """Configuration file or override is malformed or invalid."""


@dataclass(frozen=True)
class DspConfig:
    sample_rate: int = 16000
    window: int = 480
    hop: int = 160
    fft_size: int = 512

    def __post_init__(self):
        if self.sample_rate < 1 or self.window < 1 or self.hop < 1:
            raise ValueError("sample_rate, window and hop must be positive")
        if self.window > self.fft_size:
            raise ValueError(f"window {self.window} exceeds fft_size {self.fft_size}")


@dataclass(frozen=True)
class PathsConfig:
    """Artifact file names, relative to the workspace (--out) directory."""

    events: str = "events.jsonl"
    segments_dir: str = "segments"
    features_dir: str = "features"
    coords: str = "coords.csv"
    scatter: str = "scatter.svg"
    checkpoint: str = "model.ckpt"
    history: str = "history.csv"
    report: str = "report.json"


_SECTIONS = {
    "dsp": DspConfig,
    "detector": DetectorConfig,
    "manifold": ManifoldConfig,
    "regressor": RegressorConfig,
    "paths": PathsConfig,
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    dsp: DspConfig = field(default_factory=DspConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    manifold: ManifoldConfig = field(default_factory=ManifoldConfig)
    regressor: RegressorConfig = field(default_factory=RegressorConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _build_section(cls, data: dict, section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in section {section!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {section!r}: {exc}") from None


def _parse_override(text: str) -> tuple[str, str | None, object]:
    """Parse 'section.key=value' or 'seed=value'; values are JSON when
    possible, bare strings otherwise."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    lhs, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if "." in lhs:
        section, key = lhs.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section {section!r} in override {text!r}")
        return section, key, value
    if lhs != "seed":
        raise ConfigError(f"unknown top-level key {lhs!r} in override {text!r}")
    return "seed", None, value


def load_config(
    path: str | Path | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> PipelineConfig:
    """Assemble the effective configuration.

    `path` is an optional JSON file; `overrides` are section.key=value
    strings; `seed` (the --seed flag) wins over everything and also fills
    each module seed the file and overrides left untouched.
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(raw) - set(_SECTIONS) - {"seed"}
        if unknown:
            raise ConfigError(f"{path}: unknown section(s) {sorted(unknown)}")

    sections = {}
    for name in _SECTIONS:
        value = raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(
                f"section {name!r} must be an object, got {type(value).__name__}"
            )
        sections[name] = dict(value)
    top_seed = raw.get("seed", 0)

    for text in overrides or []:
        section, key, value = _parse_override(text)
        if key is None:
            top_seed = value
        else:
            sections[section][key] = value

    if seed is not None:
        top_seed = seed
        for name in ("manifold", "regressor"):
            sections[name].setdefault("seed", seed)

    if not isinstance(top_seed, int) or isinstance(top_seed, bool):
        raise ConfigError(f"seed must be an integer, got {top_seed!r}")

    built = {
        name: _build_section(cls, sections[name], name) for name, cls in _SECTIONS.items()
    }
    return PipelineConfig(seed=top_seed, **built)
