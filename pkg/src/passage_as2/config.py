"""Run configuration: one JSON document with sections data / encoder / train /
pipeline / eval plus a mandatory top-level ``seed``.

Every field has a default except ``seed``. Unknown keys and wrongly typed
values are rejected with :class:`ConfigError`, whose message names the
offending field path (``train.lr``, ``pipeline.costs.pr``, ...).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .corpus import GROUPS, SPLITS
from .pipeline import DEFAULT_COSTS_MS, DEFAULT_TOP_N, MODES as PIPELINE_MODES
from .training import MODES as TRAIN_MODES
from .training import EncoderSettings, TrainConfig

FORMAT_VERSION = "passage-as2/1"


class ConfigError(ValueError):
    """A config value failed validation; ``path`` is the dotted field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class DataConfig:
    raw_dir: str = "data/raw"
    corpus_dir: str = "data/corpus"
    group: str = "all"


@dataclass(frozen=True)
class TrainSection:
    mode: str = "pr"
    batch_size: int = 16
    lr: float = 1e-3
    epochs: int = 30
    easi_epochs: int = 50
    fuse_epochs: int = 50
    max_seq_len: int = 128
    k_max: int = 5
    lambda_pr: float = 1.0
    lambda_easi: float = 1.0
    eval_every: int = 1
    out_dir: str = "models/pr"


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "peasi_top1"
    top_n: int = DEFAULT_TOP_N
    pr_model: str | None = None
    easi_model: str | None = None
    sentence_model: str | None = None
    retrieve_top_n: int | None = None
    costs: dict = field(default_factory=lambda: dict(DEFAULT_COSTS_MS))


@dataclass(frozen=True)
class EvalConfig:
    split: str = "dev"
    group: str = "all"
    out_dir: str = "runs/eval"
    run_logs: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    seed: int
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderSettings = field(default_factory=EncoderSettings)
    train: TrainSection = field(default_factory=TrainSection)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def train_config(self) -> TrainConfig:
        t = asdict(self.train)
        t.pop("out_dir")
        return TrainConfig(seed=self.seed, encoder=self.encoder, **t)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eval"]["run_logs"] = list(self.eval.run_logs)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_SECTIONS = {"data": DataConfig, "encoder": EncoderSettings, "train": TrainSection,
             "pipeline": PipelineConfig, "eval": EvalConfig}

# allowed values for enumerated fields
_CHOICES = {
    "data.group": GROUPS, "eval.group": GROUPS, "eval.split": SPLITS,
    "train.mode": TRAIN_MODES, "pipeline.mode": PIPELINE_MODES,
}
_POSITIVE = {"encoder.d_model", "encoder.n_heads", "encoder.n_layers", "encoder.d_ff", "train.batch_size",
             "train.max_seq_len", "train.k_max", "pipeline.top_n", "pipeline.retrieve_top_n"}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_value(path: str, annotation: str, value: Any) -> Any:
    optional = annotation.endswith("| None")
    base = annotation.split("|")[0].strip()
    if value is None:
        if optional:
            return None
        raise ConfigError(path, "must not be null")
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
    elif base == "float":
        if not _is_number(value):
            raise ConfigError(path, f"expected a number, got {value!r}")
        value = float(value)
        if value < 0:
            raise ConfigError(path, f"must be non-negative, got {value}")
    elif base == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
    elif base == "dict":
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected an object, got {value!r}")
        for k, v in value.items():
            if not _is_number(v) or v < 0:
                raise ConfigError(f"{path}.{k}", f"expected a non-negative number, got {v!r}")
        value = {k: float(v) for k, v in value.items()}
    elif base == "tuple":
        if not isinstance(value, (list, tuple)) or not all(isinstance(x, str) for x in value):
            raise ConfigError(path, f"expected a list of strings, got {value!r}")
        value = tuple(value)
    if path in _CHOICES and value not in _CHOICES[path]:
        raise ConfigError(path, f"must be one of {list(_CHOICES[path])}, got {value!r}")
    if path in _POSITIVE and value <= 0:
        raise ConfigError(path, f"must be positive, got {value}")
    if base == "int" and value < 0:
        raise ConfigError(path, f"must be non-negative, got {value}")
    return value


def _build_section(name: str, cls, raw: Any):
    if not isinstance(raw, dict):
        raise ConfigError(name, f"expected an object, got {raw!r}")
    known = {f.name: f for f in fields(cls)}
    for key in sorted(raw):
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    kwargs = {k: _check_value(f"{name}.{k}", str(known[k].type), v) for k, v in raw.items()}
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from exc


def from_dict(raw: Any) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in sorted(raw):
        if key != "seed" and key not in _SECTIONS:
            raise ConfigError(key, "unknown key")
    if "seed" not in raw:
        raise ConfigError("seed", "is required")
    seed = _check_value("seed", "int", raw["seed"])
    sections = {name: _build_section(name, cls, raw.get(name, {})) for name, cls in _SECTIONS.items()}
    enc = sections["encoder"]
    if enc.d_model % enc.n_heads:
        raise ConfigError("encoder.n_heads", f"must divide d_model={enc.d_model}")
    return RunConfig(seed=seed, **sections)


def set_path(raw: dict, dotted: str, value: Any) -> None:
    """Assign ``value`` at a dotted path inside a raw config dict (``train.lr``)."""
    parts = dotted.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(dotted, f"{part} is not a section")
    node[parts[-1]] = value


def load(path: str | Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read a JSON config (or start empty) and apply dotted-path overrides."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError("<file>", f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        set_path(raw, dotted, value)
    return from_dict(raw)
