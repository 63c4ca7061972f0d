"""Run configuration: JSON file -> dataclasses, with CLI flag overrides.

Precedence is flags > config file > built-in defaults. Unknown keys are
rejected so typos surface as config errors instead of silently using a
default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields

from .attacks import DEFAULT_EPSILON_GRID
from .automata import DEFAULT_ACTIONS, RewardPolicy, RlaConfig
from .dataseries import DEFAULT_FRACTIONS, MIN_SYNTH_DAYS, SynthParams
from .errors import ConfigError
from .lstm import DEFAULT_TRAIN_CONFIGS, AdversarialConfig, TrainConfig
from .lstm import MODEL_TAGS

CONFIG_VERSION = 1


def _build(cls, data, context: str):
    """Construct a section dataclass from a JSON mapping, strictly."""
    if not isinstance(data, dict):
        raise ConfigError(f"{context}: expected an object, got {type(data).__name__}")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {unknown}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from exc


@dataclass(frozen=True)
class DataSection:
    source: str = "synthetic"          # "synthetic" or "csv"
    path: str | None = None            # required for source = "csv"
    days: int = 1460
    synth: SynthParams = field(default_factory=SynthParams)

    def __post_init__(self):
        if self.source not in ("synthetic", "csv"):
            raise ValueError(f"data.source must be 'synthetic' or 'csv', got {self.source!r}")
        if self.source == "csv" and not self.path:
            raise ValueError("data.source 'csv' requires data.path")
        if self.days < MIN_SYNTH_DAYS:
            raise ValueError(f"data.days must be >= {MIN_SYNTH_DAYS}, got {self.days}")
        if isinstance(self.synth, dict):
            object.__setattr__(self, "synth", _build(SynthParams, self.synth, "data.synth"))


@dataclass(frozen=True)
class WindowingSection:
    sequence_length: int = 30
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS

    def __post_init__(self):
        if self.sequence_length < 1:
            raise ValueError(f"windowing.sequence_length must be >= 1, got {self.sequence_length}")
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if len(self.fractions) != 3:
            raise ValueError(f"windowing.fractions must have three entries, got {self.fractions}")


@dataclass(frozen=True)
class ModelSection:
    """Model tag plus optional overrides of the registered training defaults."""

    tag: str = "LSTM"
    hidden_units: int | None = None
    learning_rate: float | None = None
    epochs: int | None = None
    batch_size: int | None = None
    clip_threshold: float | None = None
    adversarial: dict | None = None    # {"kind": ..., "epsilon": ...} or null

    def __post_init__(self):
        if self.tag not in MODEL_TAGS:
            raise ValueError(f"model.tag must be one of {MODEL_TAGS}, got {self.tag!r}")

    def train_config(self, seed: int) -> TrainConfig:
        base = DEFAULT_TRAIN_CONFIGS[self.tag]
        overrides: dict = {"seed": seed}
        for name in ("hidden_units", "learning_rate", "epochs", "batch_size", "clip_threshold"):
            value = getattr(self, name)
            if value is not None:
                overrides[name] = value
        if self.adversarial is not None:
            overrides["adversarial"] = _build(AdversarialConfig, self.adversarial, "model.adversarial")
        try:
            return dataclasses.replace(base, **overrides)
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from exc


@dataclass(frozen=True)
class SweepSection:
    epsilons: tuple[float, ...] = DEFAULT_EPSILON_GRID
    pgd_iterations: int = 10
    alpha: float | None = None         # defaults to epsilon / 4 per grid point

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if not self.epsilons:
            raise ValueError("sweep.epsilons must not be empty")
        if any(e < 0 for e in self.epsilons):
            raise ValueError(f"sweep.epsilons must be >= 0, got {self.epsilons}")
        if self.pgd_iterations < 1:
            raise ValueError(f"sweep.pgd_iterations must be >= 1, got {self.pgd_iterations}")


@dataclass(frozen=True)
class CampaignSection:
    actions: tuple[float, ...] = DEFAULT_ACTIONS
    iterations: int = 300
    delay: int = 3
    k_domain: tuple[int, ...] = (1, 2, 3)
    combine: str = "sequential"
    reward_factor: float = 0.1
    penalty_factor: float = 0.05
    band: tuple[float, float] = (30.0, 50.0)
    mape_cap: float = 100.0
    jump_cap: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(float(a) for a in self.actions))
        object.__setattr__(self, "k_domain", tuple(int(k) for k in self.k_domain))
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if self.iterations < 1:
            raise ValueError(f"campaign.iterations must be >= 1, got {self.iterations}")
        if self.delay < 0:
            raise ValueError(f"campaign.delay must be >= 0, got {self.delay}")

    def policy(self) -> RewardPolicy:
        return RewardPolicy(
            reward_factor=self.reward_factor,
            penalty_factor=self.penalty_factor,
            band=self.band,
            mape_cap=self.mape_cap,
            jump_cap=self.jump_cap,
        )

    def rla(self) -> RlaConfig:
        return RlaConfig(k_domain=self.k_domain, policy=self.policy(), combine=self.combine)


@dataclass(frozen=True)
class StealthSection:
    window: int = 30
    z_threshold: float = 3.0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"stealth.window must be >= 2, got {self.window}")
        if self.z_threshold <= 0:
            raise ValueError(f"stealth.z_threshold must be positive, got {self.z_threshold}")


@dataclass(frozen=True)
class ExperimentConfig:
    config_version: int = CONFIG_VERSION
    seed: int = 7
    out: str = "."
    data: DataSection = field(default_factory=DataSection)
    windowing: WindowingSection = field(default_factory=WindowingSection)
    model: ModelSection = field(default_factory=ModelSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    campaign: CampaignSection = field(default_factory=CampaignSection)
    stealth: StealthSection = field(default_factory=StealthSection)

    def __post_init__(self):
        if self.config_version != CONFIG_VERSION:
            raise ValueError(f"config_version must be {CONFIG_VERSION}, got {self.config_version}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        for name, cls in _SECTIONS.items():
            value = getattr(self, name)
            if isinstance(value, dict):
                object.__setattr__(self, name, _build(cls, value, name))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "data": DataSection,
    "windowing": WindowingSection,
    "model": ModelSection,
    "sweep": SweepSection,
    "campaign": CampaignSection,
    "stealth": StealthSection,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "config")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def override(config: ExperimentConfig, **top_level) -> ExperimentConfig:
    """Replace top-level fields (seed, out) non-destructively."""
    present = {k: v for k, v in top_level.items() if v is not None}
    return dataclasses.replace(config, **present) if present else config


def override_section(config: ExperimentConfig, section: str, **values) -> ExperimentConfig:
    present = {k: v for k, v in values.items() if v is not None}
    if not present:
        return config
    try:
        updated = dataclasses.replace(getattr(config, section), **present)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from exc
    return dataclasses.replace(config, **{section: updated})
