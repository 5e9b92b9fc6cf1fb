"""Experiment configuration files.

INI-like text: ``# comment`` lines, ``[section]`` headers and ``key = value``
pairs.  Every key must be known for its section; misspelled keys are
reported with their line number instead of being ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .augment import NR_INCREMENT, NR_MODULUS, NR_MULTIPLIER, AugmentConfig
from .data import Dataset, load_cifar10, load_records, synthetic_splits
from .model import NetworkSpec, SpecError, parse_layer, parse_shape
from .optim import LrSchedule
from .train import MODES, TrainConfig

SCHEMA: dict[str, tuple[str, ...]] = {
    "experiment": ("mode", "epochs", "batch_size", "lambda_mse", "lambda_xent", "xent_reduction", "precision",
                   "record_time"),
    "teacher": ("input", "layers", "feature_dim", "classes"),
    "student": ("input", "layers", "feature_dim", "classes"),
    "optimizer": ("lr", "beta1", "beta2", "eps", "decay_every", "decay_factor"),
    "augment": ("images_per_batch", "lcg_a", "lcg_c", "lcg_m"),
    "data": ("kind", "classes", "shape", "train_per_class", "test_per_class", "noise", "jitter", "path",
             "train_path", "test_path"),
    "seeds": ("init", "shuffle", "augment", "data"),
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass
class ConfigFile:
    sections: dict[str, dict[str, tuple[str, int]]] = field(default_factory=dict)
    source: str = "<config>"

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        entries = self.sections.get(section, {})
        if key is not None and key in entries:
            return entries[key][1]
        return None

    def raw(self, section: str, key: str, default=None, required: bool = False) -> Optional[str]:
        entries = self.sections.get(section, {})
        if key in entries:
            return entries[key][0]
        if required:
            raise ConfigError(f"missing required key '{key}' in section [{section}]", source=self.source)
        return default

    def get(self, section: str, key: str, kind=str, default=None, required: bool = False):
        value = self.raw(section, key, None, required)
        if value is None:
            return default
        try:
            if kind is bool:
                low = value.lower()
                if low not in ("true", "false", "yes", "no", "1", "0"):
                    raise ValueError(value)
                return low in ("true", "yes", "1")
            if kind is int:
                return int(value, 0)
            return kind(value)
        except ValueError:
            raise ConfigError(
                f"[{section}] {key} = {value!r} is not a valid {kind.__name__}",
                self.line_of(section, key),
                self.source,
            ) from None


def parse_config(text: str, source: str = "<config>") -> ConfigFile:
    cfg = ConfigFile(source=source)
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno, source)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, source)
            if section in cfg.sections:
                raise ConfigError(f"duplicate section [{section}]", lineno, source)
            cfg.sections[section] = {}
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno, source)
        if section is None:
            raise ConfigError(f"key '{key}' appears before any section header", lineno, source)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in section [{section}]", lineno, source)
        if key in cfg.sections[section]:
            raise ConfigError(f"duplicate key '{key}' in section [{section}]", lineno, source)
        cfg.sections[section][key] = (value, lineno)
    return cfg


def read_config(path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"not UTF-8 text: {exc}", source=str(path)) from None
    return parse_config(text, str(path))


def network_spec(cfg: ConfigFile, section: str) -> NetworkSpec:
    if section not in cfg.sections:
        raise ConfigError(f"missing section [{section}]", source=cfg.source)
    shape_txt = cfg.raw(section, "input", required=True)
    layers_txt = cfg.raw(section, "layers", required=True)
    d = cfg.get(section, "feature_dim", int, required=True)
    c = cfg.get(section, "classes", int, required=True)
    try:
        layers = tuple(parse_layer(part) for part in layers_txt.split("|") if part.strip())
        return NetworkSpec(parse_shape(shape_txt), layers, d, c)
    except SpecError as exc:
        raise ConfigError(f"[{section}] {exc}", cfg.line_of(section, "layers"), cfg.source) from None


def experiment_mode(cfg: ConfigFile, override: Optional[str] = None) -> str:
    mode = override or cfg.raw("experiment", "mode", required=True)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {mode!r}",
                          None if override else cfg.line_of("experiment", "mode"), cfg.source)
    return mode


def train_config(cfg: ConfigFile, mode: Optional[str] = None) -> TrainConfig:
    mode = experiment_mode(cfg, mode)
    spec = network_spec(cfg, "teacher" if mode == "teacher" else "student")
    precision = cfg.get("experiment", "precision", int, 64)
    if precision not in (32, 64):
        raise ConfigError("precision must be 32 or 64", cfg.line_of("experiment", "precision"), cfg.source)
    reduction = cfg.get("experiment", "xent_reduction", str, "mean")
    if reduction not in ("mean", "sum"):
        raise ConfigError("xent_reduction must be 'mean' or 'sum'", cfg.line_of("experiment", "xent_reduction"),
                          cfg.source)
    n_aug = cfg.get("augment", "images_per_batch", int, 0, required=(mode == "student_teacher_aug"))
    try:
        augment = AugmentConfig(
            images_per_batch=n_aug,
            image_shape=tuple(spec.input_shape),
            seed=cfg.get("seeds", "augment", int, 0),
            a=cfg.get("augment", "lcg_a", int, NR_MULTIPLIER),
            c=cfg.get("augment", "lcg_c", int, NR_INCREMENT),
            m=cfg.get("augment", "lcg_m", int, NR_MODULUS),
        )
        augment.initial_state()
        schedule = LrSchedule(
            base_lr=cfg.get("optimizer", "lr", float, 0.001),
            decay_every=cfg.get("optimizer", "decay_every", int, 50),
            decay_factor=cfg.get("optimizer", "decay_factor", float, 0.1),
        )
        return TrainConfig(
            mode=mode,
            spec=spec,
            epochs=cfg.get("experiment", "epochs", int, required=True),
            batch_size=cfg.get("experiment", "batch_size", int, required=True),
            lambda_mse=cfg.get("experiment", "lambda_mse", float, 1.0),
            lambda_xent=cfg.get("experiment", "lambda_xent", float, 1.0),
            xent_reduction=reduction,
            schedule=schedule,
            beta1=cfg.get("optimizer", "beta1", float, 0.9),
            beta2=cfg.get("optimizer", "beta2", float, 0.999),
            eps=cfg.get("optimizer", "eps", float, 1e-8),
            augment=augment,
            init_seed=cfg.get("seeds", "init", int, 0),
            shuffle_seed=cfg.get("seeds", "shuffle", int, 0),
            dtype=f"float{precision}",
            record_time=cfg.get("experiment", "record_time", bool, False),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), source=cfg.source) from None


def load_data(cfg: ConfigFile, base: Optional[Path] = None) -> tuple[Dataset, Dataset]:
    """Train and test splits described by the ``[data]`` section."""
    if "data" not in cfg.sections:
        raise ConfigError("missing section [data]", source=cfg.source)
    base = base or Path(cfg.source).parent
    kind = cfg.raw("data", "kind", required=True)
    classes = cfg.get("data", "classes", int, 10)
    shape_txt = cfg.raw("data", "shape", "3x32x32")
    try:
        shape = parse_shape(shape_txt)
    except SpecError as exc:
        raise ConfigError(str(exc), cfg.line_of("data", "shape"), cfg.source) from None
    if kind == "synthetic":
        return synthetic_splits(
            classes,
            cfg.get("data", "train_per_class", int, required=True),
            cfg.get("data", "test_per_class", int, required=True),
            shape,
            seed=cfg.get("seeds", "data", int, 0),
            noise=cfg.get("data", "noise", float, 0.2),
            jitter=cfg.get("data", "jitter", float, 0.0),
        )
    if kind == "cifar10":
        root = base / cfg.raw("data", "path", required=True)
        return load_cifar10(root, "train", classes), load_cifar10(root, "test", classes)
    if kind == "records":
        train = load_records(base / cfg.raw("data", "train_path", required=True), shape, classes, "train")
        test = load_records(base / cfg.raw("data", "test_path", required=True), shape, classes, "test")
        return train, test
    raise ConfigError(f"unknown data kind {kind!r} (synthetic, cifar10, records)", cfg.line_of("data", "kind"),
                      cfg.source)
