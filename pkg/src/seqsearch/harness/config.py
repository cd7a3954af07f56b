"""Experiment configuration (JSON).

Relative paths inside a config file resolve against the file's directory.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..core import SeqSearchError

DECODERS = ("greedy", "beam", "rerank", "ats", "bats", "exhaustive")
OBJECTIVE_TYPES = ("ar_logprob", "max_rank", "min_prob", "channel", "lm_prior", "oracle_bleu", "oracle_chrf")
K_SEMANTICS = ("per_depth", "total")
DEFAULT_BUDGETS = (1, 2, 4, 8, 16, 32, 64, 128, 256)
PATH_FIELDS = ("direct_model", "channel_model", "language_model", "corpus", "refs", "output")


class ConfigError(SeqSearchError, ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    direct_model: str | None = None
    channel_model: str | None = None
    language_model: str | None = None
    objective: tuple = ({"type": "ar_logprob", "params": {"alpha": 0.0}, "weight": 1.0},)
    decoder: tuple[str, ...] = ("bats",)
    budgets: tuple[int, ...] = DEFAULT_BUDGETS
    C: float = 1.0
    k_semantics: str = "per_depth"
    Y: int = 32
    d_max: int | None = None  # defaults to Y
    value_estimate: str = "ratio"
    policy: str = "prob"
    seed: int = 0
    corpus: str | None = None
    refs: str | None = None
    output: str | None = None
    enumeration_limit: int = 1_000_000
    a_weight: float = 1.0
    b_weight: float = 1.0
    timing: bool = False

    def __post_init__(self):
        if isinstance(self.decoder, str):
            object.__setattr__(self, "decoder", tuple(d.strip() for d in self.decoder.split(",")))
        object.__setattr__(self, "decoder", tuple(self.decoder))
        object.__setattr__(self, "budgets", tuple(int(b) for b in self.budgets))
        if isinstance(self.objective, dict):
            object.__setattr__(self, "objective", (self.objective,))
        object.__setattr__(self, "objective", tuple(self.objective))
        self.validate()

    def validate(self) -> None:
        if not self.decoder or any(d not in DECODERS for d in self.decoder):
            raise ConfigError(f"decoder must be among {DECODERS}, got {self.decoder}")
        if not self.budgets:
            raise ConfigError("budget grid must be non-empty")
        if any(b < 1 for b in self.budgets):
            raise ConfigError("budgets must be positive integers")
        if any(b >= c for b, c in zip(self.budgets, self.budgets[1:])):
            raise ConfigError(f"budget grid must be strictly increasing, got {list(self.budgets)}")
        if not self.objective:
            raise ConfigError("objective list must be non-empty")
        for entry in self.objective:
            if not isinstance(entry, dict) or entry.get("type") not in OBJECTIVE_TYPES:
                raise ConfigError(f"bad objective entry {entry!r}; types are {OBJECTIVE_TYPES}")
            w = entry.get("weight", 1.0)
            if not isinstance(w, (int, float)) or not math.isfinite(w):
                raise ConfigError(f"objective weight must be a finite number, got {w!r}")
        if not (math.isfinite(self.C) and self.C >= 0):
            raise ConfigError("C must be finite and >= 0")
        if self.k_semantics not in K_SEMANTICS:
            raise ConfigError(f"k_semantics must be one of {K_SEMANTICS}")
        if self.Y < 1:
            raise ConfigError("Y must be >= 1")
        if self.d_max is not None and not 1 <= self.d_max <= self.Y:
            raise ConfigError("d_max must lie in [1, Y]")
        if self.value_estimate not in ("ratio", "log_offset"):
            raise ConfigError("value_estimate must be 'ratio' or 'log_offset'")
        if self.policy not in ("prob", "logprob"):
            raise ConfigError("policy must be 'prob' or 'logprob'")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.enumeration_limit < 1:
            raise ConfigError("enumeration_limit must be >= 1")

    @property
    def depth_cap(self) -> int:
        return self.Y if self.d_max is None else self.d_max

    def override(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def config_from_dict(data: dict, base_dir: Path | str | None = None) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {unknown}")
    data = dict(data)
    if base_dir is not None:
        for key in PATH_FIELDS:
            if data.get(key):
                data[key] = str(Path(base_dir) / data[key])
    try:
        return ExperimentConfig(**data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data, path.parent)


def parse_objective(text: str) -> tuple:
    """``--objective`` value: JSON, or ``type[:key=value,...]``."""
    text = text.strip()
    if text.startswith(("[", "{")):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid objective JSON ({exc})") from None
        return tuple(spec) if isinstance(spec, list) else (spec,)
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"objective parameter {item!r} is not key=value")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            params[key.strip()] = value.strip()
    return ({"type": kind.strip(), "params": params, "weight": 1.0},)


def parse_budgets(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"budget list must be comma-separated integers, got {text!r}") from None

