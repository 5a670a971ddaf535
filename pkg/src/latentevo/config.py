"""Flat key-value run configuration.

A config file holds one `key = value` pair per line; blank lines and lines
starting with `#` are ignored. Unknown keys are rejected. Every key has a
desk-scale default, so an empty file is a valid configuration. The resolved
configuration echoed into a run's output directory parses back to an
identical configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Invalid configuration input; the message names the offending key."""


@dataclass
class RunConfig:
    seed: int = 0
    out: str = ""
    population: int = 200
    generations: int = 10
    initial_epochs: int = 50
    finetune_epochs: int = 30
    latent_size: int = 16
    embed_size: int = 8
    batch_size: int = 128
    learning_rate: float = 0.0005
    finetune_learning_rate: float = 0.0005
    momentum: float = 0.9
    clip_norm: float = 5.0
    lr_decay: float = 0.8
    lr_step_initial: int = 4
    lr_step_finetune: int = 2
    beta: float = 0.1
    beta_annealed: float | None = 0.4
    alpha: float = 1.0
    alpha_annealed: float | None = 4.0
    beta_speed: float = 5.0
    beta_floor: float = 0.0
    selection_pressure: float = 0.95
    mutation_rate: float = 0.01
    crossover: str = "linear"
    crossover_expansion: float = 0.25
    property_head: bool = True
    finetune: bool = True
    subset_strategy: str = "random"
    domain: str = "toy"
    holdout_fraction: float = 0.1
    frontier_depth: int = 4
    figures: bool = True
    baseline_initial: int = 1000
    baseline_batches: int = 30
    baseline_batch_size: int = 8

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.population < 2:
            raise ConfigError("population must be >= 2")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if self.crossover not in ("linear", "discrete"):
            raise ConfigError("crossover must be 'linear' or 'discrete'")
        if self.subset_strategy not in ("rank", "random"):
            raise ConfigError("subset_strategy must be 'rank' or 'random'")
        if self.domain != "toy":
            raise ConfigError("domain must be 'toy'")
        for key in ("initial_epochs", "finetune_epochs", "latent_size",
                    "embed_size", "batch_size", "lr_step_initial",
                    "lr_step_finetune", "baseline_initial", "baseline_batches",
                    "baseline_batch_size"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if self.frontier_depth < 0:
            raise ConfigError("frontier_depth must be >= 0")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_OPTIONAL_FLOATS = {"beta_annealed", "alpha_annealed"}
_BOOLS = {"property_head", "finetune", "figures"}
_STRINGS = {"out", "crossover", "subset_strategy", "domain"}
_INTS = {"seed", "population", "generations", "initial_epochs",
         "finetune_epochs", "latent_size", "embed_size", "batch_size",
         "lr_step_initial", "lr_step_finetune", "baseline_initial",
         "baseline_batches", "baseline_batch_size", "frontier_depth"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL_FLOATS:
        if raw.lower() == "none":
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number or 'none', got {raw!r}")
    if key in _BOOLS:
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    if key in _STRINGS:
        return raw
    if key in _INTS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}")


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config_text(text, source=str(path))


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_text(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}"
             for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"


def write_config(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_text(cfg))
