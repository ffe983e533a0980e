"""Experiment configuration: a JSON document of nested key-value sections."""
import json
from dataclasses import asdict, dataclass, field, fields

from .datasets import DatasetSpec
from .errors import ConfigError
from .gantrain import TrainConfig

DEFAULT_RADII = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]


@dataclass
class LemmaConfig:
    radii: list = field(default_factory=lambda: list(DEFAULT_RADII))
    m: int = 16
    hidden: int = 32
    n: int = 8
    k: int = 8
    antithetic: bool = True


@dataclass
class ShapeConfig:
    sample_size: int = 0  # 0 = use every point
    threshold_ratio: float = 0.1


@dataclass
class BenchConfig:
    batch_sizes: list = field(default_factory=lambda: [8, 16, 32, 64])
    n: int = 20
    repeats: int = 20


@dataclass
class ExperimentConfig:
    seed: int = 0
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    lemma: LemmaConfig = field(default_factory=LemmaConfig)
    shape: ShapeConfig = field(default_factory=ShapeConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    resume: str = None
    decision_trace: bool = False

    def to_dict(self):
        d = asdict(self)
        d["train"] = self.train.to_dict()
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name!r} section: {exc}") from exc


def from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - {f.name for f in fields(ExperimentConfig)}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return ExperimentConfig(
        seed=seed,
        dataset=_section(DatasetSpec, raw.get("dataset"), "dataset"),
        train=_section(TrainConfig, raw.get("train"), "train"),
        lemma=_section(LemmaConfig, raw.get("lemma"), "lemma"),
        shape=_section(ShapeConfig, raw.get("shape"), "shape"),
        bench=_section(BenchConfig, raw.get("bench"), "bench"),
        resume=raw.get("resume"),
        decision_trace=bool(raw.get("decision_trace", False)),
    )


def loads(text):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return from_dict(raw)


def load(path):
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
