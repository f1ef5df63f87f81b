"""
Experiment configuration

A run is described by a flat key=value file (read with python-dotenv) plus CLI
overrides; flags win over the file, the file wins over config.settings defaults.

Example file:
    model=lstm_net
    scenario=cl1
    dataset=split_mnist
    seeds=1,2,3
    beta=0.01
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable, Mapping

from dotenv import dotenv_values

from config import settings
from core.errors import ConfigError
from core.scenario import Scenario
from utils.logger import get_logger

logger = get_logger(__name__)

# model -> (generator, regularizer)
MODELS = {
    "hnet": ("hnet", "snapshot"),
    "hnet_iwr": ("hnet", "iwr"),
    "lstm_net": ("lstm", "snapshot"),
    "lstm_net_iwr": ("lstm", "iwr"),
    "lstm_net_grow": ("grow", "none"),
}
DATASETS = ("split_mnist", "permuted_mnist", "synth")
LOOKAHEADS = ("adam", "sgd", "none")
TARGET_CHUNKS = ("live", "snapshot")
REQUIRED_KEYS = ("model", "scenario", "dataset")


@dataclass(frozen=True)
class TrainConfig:
    model: str = "lstm_net"
    beta: float = settings.DEFAULT_BETA
    lr: float = settings.DEFAULT_LR
    epochs: int = 1
    batch_size: int = settings.DEFAULT_BATCH_SIZE
    chunk_size: int = settings.DEFAULT_CHUNK_SIZE
    seed: int = 0
    fisher_samples: int = settings.FISHER_MAX_SAMPLES
    lookahead: str = "adam"
    target_chunks: str = "live"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model: unknown '{self.model}', expected one of {sorted(MODELS)}")
        if self.beta < 0:
            raise ConfigError(f"beta: must be >= 0, got {self.beta}")
        if self.epochs < 1:
            raise ConfigError(f"epochs: must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size: must be >= 1, got {self.batch_size}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size: must be >= 1, got {self.chunk_size}")
        if self.lookahead not in LOOKAHEADS:
            raise ConfigError(f"lookahead: unknown '{self.lookahead}', expected one of {LOOKAHEADS}")
        if self.target_chunks not in TARGET_CHUNKS:
            raise ConfigError(f"target_chunks: unknown '{self.target_chunks}', expected one of {TARGET_CHUNKS}")

    @property
    def generator(self) -> str:
        return MODELS[self.model][0]

    @property
    def regularizer(self) -> str:
        return MODELS[self.model][1]


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    scenario: str
    dataset: str
    seeds: tuple[int, ...] = (0,)
    out: str = settings.DEFAULT_OUT_DIR
    beta: float = settings.DEFAULT_BETA
    lr: float = settings.DEFAULT_LR
    epochs: int = 0  # 0 -> EPOCHS_BY_DATASET
    batch_size: int = settings.DEFAULT_BATCH_SIZE
    chunk_size: int = settings.DEFAULT_CHUNK_SIZE
    embedding_dim: int = settings.EMBEDDING_DIM
    hidden_size: int = settings.LSTM_HIDDEN
    hidden: tuple[int, ...] = ()  # () -> dataset default widths
    fisher_samples: int = settings.FISHER_MAX_SAMPLES
    lookahead: str = "adam"
    target_chunks: str = "live"
    lstm_gate_bias: bool = False
    grow_share_output: bool = False
    max_train_samples: int = 0  # 0 -> no cap
    max_test_samples: int = 0
    synth_tasks: int = settings.SYNTH_TASKS
    synth_classes: int = settings.SYNTH_CLASSES
    synth_dim: int = settings.SYNTH_DIM
    synth_separation: float = settings.SYNTH_SEPARATION
    synth_samples: int = settings.SYNTH_SAMPLES_PER_CLASS
    permuted_tasks: int = settings.PERMUTED_MNIST_TASKS
    data_root: str = field(default_factory=lambda: settings.DATA_ROOT)
    workers: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model: unknown '{self.model}', expected one of {sorted(MODELS)}")
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset: unknown '{self.dataset}', expected one of {DATASETS}")
        try:
            object.__setattr__(self, "scenario", Scenario.parse(self.scenario).value)
        except ValueError:
            raise ConfigError(f"scenario: unknown '{self.scenario}', expected cl1, cl2 or cl3") from None
        if not self.seeds:
            raise ConfigError("seeds: at least one seed is required")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden: widths must be positive, got {self.hidden}")
        if self.synth_separation <= 0:
            raise ConfigError(f"synth_separation: must be > 0, got {self.synth_separation}")
        # surfaces bad training values at parse time
        self.train_config(self.seeds[0])

    @property
    def scenario_enum(self) -> Scenario:
        return Scenario.parse(self.scenario)

    @property
    def resolved_epochs(self) -> int:
        return self.epochs or settings.EPOCHS_BY_DATASET[self.dataset]

    @property
    def main_hidden(self) -> tuple[int, ...]:
        if self.hidden:
            return self.hidden
        defaults = {
            "split_mnist": settings.SPLIT_MNIST_HIDDEN,
            "permuted_mnist": settings.PERMUTED_MNIST_HIDDEN,
            "synth": settings.SYNTH_HIDDEN,
        }
        return tuple(defaults[self.dataset])

    @property
    def cell_name(self) -> str:
        return f"{self.model}_{self.scenario}_{self.dataset}"

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            model=self.model,
            beta=self.beta,
            lr=self.lr,
            epochs=self.resolved_epochs,
            batch_size=self.batch_size,
            chunk_size=self.chunk_size,
            seed=int(seed),
            fisher_samples=self.fisher_samples,
            lookahead=self.lookahead,
            target_chunks=self.target_chunks,
        )

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def check_paths(self):
        """MNIST datasets need their IDX files under data_root before a run starts."""
        if self.dataset == "synth":
            return
        missing = []
        for stem in settings.MNIST_FILES.values():
            plain = os.path.join(self.data_root, stem)
            if not (os.path.exists(plain) or os.path.exists(plain + ".gz")):
                missing.append(plain)
        if missing:
            raise ConfigError(f"data_root: missing MNIST files {missing}")

    def to_env(self) -> str:
        """Resolved config as key=value text that parse_config reads back to an equal config."""
        lines = []
        for key, value in asdict(self).items():
            if isinstance(value, (tuple, list)):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def _int_list(raw: str) -> tuple[int, ...]:
    parts = [p.strip() for p in str(raw).replace(" ", ",").split(",") if p.strip()]
    return tuple(int(p) for p in parts)


def _bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


_COERCE: dict[str, Callable[[Any], Any]] = {
    f.name: {
        "str": str, "int": int, "float": float, "bool": _bool,
        "tuple[int, ...]": _int_list,
    }[f.type if isinstance(f.type, str) else f.type.__name__]
    for f in fields(ExperimentConfig)
}


def _coerce(key: str, raw):
    if isinstance(raw, (tuple, list)) and _COERCE[key] is _int_list:
        raw = ",".join(str(v) for v in raw)
    try:
        return _COERCE[key](raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read '{raw}' as {_COERCE[key].__name__.lstrip('_')}") from None


def _merge_raw(path: str | None, overrides: Mapping[str, Any] | None) -> dict[str, Any]:
    raw: dict[str, Any] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        raw.update({k.strip(): v for k, v in dotenv_values(path).items()})
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    unknown = sorted(k for k in raw if k not in _COERCE)
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}'" + (f" (also {unknown[1:]})" if unknown[1:] else ""))
    for key in REQUIRED_KEYS:
        if raw.get(key) in (None, ""):
            raise ConfigError(f"missing required key '{key}'")
    return raw


def _build(raw: Mapping[str, Any]) -> ExperimentConfig:
    values = {key: _coerce(key, value) for key, value in raw.items() if value is not None}
    config = ExperimentConfig(**values)
    logger.debug(f"[CONFIG] {config.cell_name} | seeds={list(config.seeds)} | beta={config.beta} "
                 f"| epochs={config.resolved_epochs} | chunk_size={config.chunk_size}")
    return config


def parse_config(path: str | None = None, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """
    Builds an ExperimentConfig from a key=value file and flag overrides.

    Args:
        path (str): Config file; optional when the flags carry the required keys.
        overrides (Mapping): Flag values; None entries are ignored.

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: Unknown key, unreadable value or missing required key (named in the message).
    """
    return _build(_merge_raw(path, overrides))


def parse_grid(path: str | None = None, overrides: Mapping[str, Any] | None = None) -> list[ExperimentConfig]:
    """
    Like parse_config, but model, scenario and dataset may be comma lists.

    Returns:
        list[ExperimentConfig]: One config per (model, scenario, dataset), in that nesting order.
    """
    raw = _merge_raw(path, overrides)

    def options(key):
        return [v.strip() for v in str(raw[key]).split(",") if v.strip()]

    return [
        _build({**raw, "model": m, "scenario": s, "dataset": d})
        for m in options("model") for s in options("scenario") for d in options("dataset")
    ]
