"""
Experiment configuration: YAML file, environment variables and overrides.

Precedence (highest first): overrides (CLI flags), environment variables,
config file, built-in defaults.
"""

import copy
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import yaml

from .errors import ValidationError
from .formatters.factory import FORMATTERS, resolve_format
from .dimension import DEFAULT_PRESSURE_BUDGET
from .ifs_core import DEFAULT_WORD_BUDGET
from .models.ifs import Ifs1D, parse_fraction, parse_word

logger = logging.getLogger(__name__)

PRESETS_FILE = os.path.join(os.path.dirname(__file__), "presets.yaml")

ENV_PREFIX = "IFS_KHINTCHINE_"
ENV_KEYS = {
    "SEED": ("seed",),
    "FORMAT": ("format",),
    "OUT": ("out",),
    "BUDGET_WORDS": ("budgets", "words"),
    "BUDGET_SAMPLES": ("budgets", "samples"),
    "BUDGET_PRESSURE": ("budgets", "pressure"),
}

TOP_LEVEL_KEYS = {"experiment", "preset", "ifs", "seed", "format", "out", "budgets", "experiments"}


def load_presets(path: str = PRESETS_FILE) -> Dict[str, Dict[str, Any]]:
    """Load the raw preset sections from the bundled presets file."""
    with open(path, "r") as f:
        return yaml.safe_load(f) or {}


def load_preset(name: str) -> Ifs1D:
    """
    Build a shipped preset by name.

    Raises:
        ValidationError: If no such preset exists
    """
    presets = load_presets()
    if name not in presets:
        raise ValidationError(
            f"unknown preset {name!r}, available: {', '.join(sorted(presets))}", "preset"
        )
    return Ifs1D.from_config(presets[name], name=name)


def load_file_config(config_file: Optional[str]) -> Dict[str, Any]:
    """
    Read a YAML config file.

    A missing file yields an empty dictionary; a file that cannot be parsed
    raises ValidationError.
    """
    if not config_file:
        return {}
    if not os.path.exists(config_file):
        logger.warning(f"Config file {config_file} not found, using defaults")
        return {}
    try:
        with open(config_file, "r") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ValidationError(f"cannot parse {config_file}: {e}", "config")
    if not isinstance(data, dict):
        raise ValidationError(f"{config_file} must hold a mapping", "config")
    return data


def _merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in extra.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_env_config() -> Dict[str, Any]:
    """Collect IFS_KHINTCHINE_* environment variables into config shape."""
    config: Dict[str, Any] = {}
    for suffix, path in ENV_KEYS.items():
        value = os.environ.get(ENV_PREFIX + suffix)
        if value is None:
            continue
        target = config
        for part in path[:-1]:
            target = target.setdefault(part, {})
        target[path[-1]] = value
    return config


# Parameter converters. Each takes (value, key) and returns the parsed value.

def as_int(minimum: int = None) -> Callable[[Any, str], int]:
    def convert(value: Any, key: str) -> int:
        if isinstance(value, bool):
            raise ValidationError(f"expected an integer, got {value!r}", key)
        try:
            result = int(value)
        except (TypeError, ValueError):
            raise ValidationError(f"expected an integer, got {value!r}", key)
        if isinstance(value, float) and value != result:
            raise ValidationError(f"expected an integer, got {value!r}", key)
        if minimum is not None and result < minimum:
            raise ValidationError(f"must be at least {minimum}, got {result}", key)
        return result
    return convert


def as_float(minimum: float = None, strict: bool = False) -> Callable[[Any, str], float]:
    def convert(value: Any, key: str) -> float:
        try:
            result = float(Fraction(value)) if isinstance(value, str) and "/" in value else float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"expected a number, got {value!r}", key)
        if minimum is not None and (result <= minimum if strict else result < minimum):
            relation = "greater than" if strict else "at least"
            raise ValidationError(f"must be {relation} {minimum}, got {result}", key)
        return result
    return convert


def as_fraction(value: Any, key: str) -> Fraction:
    return parse_fraction(value, key)


def as_text(value: Any, key: str) -> str:
    if isinstance(value, (dict, list)):
        raise ValidationError(f"expected a string, got {value!r}", key)
    return str(value)


def as_word(value: Any, key: str):
    return parse_word(value if isinstance(value, list) else str(value), key)


def as_flag(value: Any, key: str) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("1", "true", "yes", "on"):
        return True
    if str(value).lower() in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {value!r}", key)


def optional(convert: Callable[[Any, str], Any]) -> Callable[[Any, str], Any]:
    def wrapped(value: Any, key: str) -> Any:
        return None if value is None else convert(value, key)
    return wrapped


# name -> (converter, default) per experiment section
EXPERIMENT_PARAMETERS: Dict[str, Dict[str, Any]] = {
    "dim": {
        "n": (optional(as_int(1)), None),
        "tol": (as_float(0, strict=True), 1e-10),
    },
    "khintchine": {
        "z": (as_text, "fixpoint:1"),
        "theta": (as_text, "constant:1"),
        "exponent_ratio": (optional(as_float(1)), None),
        "ignore_diameter": (as_flag, False),
        "ranks": (as_int(1), 40),
        "samples": (as_int(1), 2000),
        "k_min": (as_int(1), 10),
        "min_rank": (as_int(1), 1),
        "measure_budget": (as_int(1), 2 ** 12),
    },
    "example21": {
        "m_max": (as_int(1), 64),
        "tail_n": (as_int(1), 300),
        "enumeration": (as_int(1), 2000),
        "ranks": (as_int(2), 61),
        "window": (as_int(1), 20),
        "step": (as_int(1), 5),
        "samples": (as_int(1), 5000),
        "k": (as_int(1), 1),
        "contrast_c": (as_fraction, Fraction(1, 2)),
        "threshold": (as_fraction, Fraction(5, 8)),
    },
    "example22": {
        "j": (as_word, (1,)),
        "ranks": (as_int(2), 80),
        "window_start": (as_int(1), 60),
        "samples": (as_int(1), 2000),
        "k": (as_int(1), 1),
        "series_n": (as_int(1), 10000),
    },
    "leadingblock": {
        "coding": (optional(as_word), None),
        "l": (as_int(1), 1),
        "digit": (as_int(1), 1),
        "block_length": (as_int(1), 2),
        "blocks": (as_int(1), 32),
    },
    "masstransfer": {
        "t": (as_float(1), 1.0),
        "s_min": (as_float(0, strict=True), 0.05),
        "s_max": (as_float(0, strict=True), 1.2),
        "grid": (as_int(2), 64),
        "n": (as_int(2), 12),
    },
    "mahler": {
        "start": (as_fraction, Fraction(0)),
        "depth": (as_int(1), 12),
        "x": (as_text, "1/2"),
        "top": (as_int(1), 10),
    },
    "quadratic": {
        "digits": (as_word, (1, 2)),
        "alpha": (as_text, "1,0,-2,+"),
        "depth": (as_int(1), 10),
    },
    "overlap": {
        "k": (as_int(1), 2),
        "delete": (optional(as_word), None),
    },
}

# experiments that act on an IFS preset or inline system
NEEDS_IFS = {"dim", "khintchine", "masstransfer", "mahler", "overlap"}


@dataclass
class Budgets:
    """Resource bounds; never raised silently."""
    words: int = DEFAULT_WORD_BUDGET
    samples: int = 10 ** 6
    depth: int = 256
    # words per pressure surrogate; sets the default Bowen level
    pressure: int = DEFAULT_PRESSURE_BUDGET


@dataclass
class ExperimentConfig:
    """
    Configuration for one experiment run, or a batch of them.

    Can be built from a dictionary with `from_dict`; `validate` converts
    every parameter and fills defaults before any work starts.
    """
    experiment: Optional[str] = None
    preset: Optional[str] = None
    ifs_section: Optional[Dict[str, Any]] = None
    seed: int = 0
    output_format: str = "csv"
    out: Optional[str] = None
    budgets: Budgets = field(default_factory=Budgets)
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    experiments: List['ExperimentConfig'] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        """Create an ExperimentConfig from merged config data."""
        budgets = data.get("budgets") or {}
        if not isinstance(budgets, dict):
            raise ValidationError("budgets must be a mapping", "budgets")
        unknown_budgets = set(budgets) - {"words", "samples", "depth", "pressure"}
        if unknown_budgets:
            raise ValidationError(f"unknown budget {sorted(unknown_budgets)[0]!r}", "budgets")
        sections = {
            name: data[name] for name in EXPERIMENT_PARAMETERS if name in data
        }
        unknown = set(data) - TOP_LEVEL_KEYS - set(EXPERIMENT_PARAMETERS)
        if unknown:
            key = sorted(unknown)[0]
            raise ValidationError(f"unknown configuration key {key!r}", key)
        config = cls(
            experiment=data.get("experiment"),
            preset=data.get("preset"),
            ifs_section=data.get("ifs"),
            seed=as_int(0)(data.get("seed", 0), "seed"),
            output_format=as_text(data.get("format", "csv"), "format"),
            out=data.get("out"),
            budgets=Budgets(
                words=as_int(1)(budgets.get("words", DEFAULT_WORD_BUDGET), "budgets.words"),
                samples=as_int(1)(budgets.get("samples", 10 ** 6), "budgets.samples"),
                depth=as_int(1)(budgets.get("depth", 256), "budgets.depth"),
                pressure=as_int(1)(
                    budgets.get("pressure", DEFAULT_PRESSURE_BUDGET), "budgets.pressure"
                ),
            ),
            sections=sections,
        )
        entries = data.get("experiments") or []
        if not isinstance(entries, list):
            raise ValidationError("experiments must be a list", "experiments")
        base = {key: value for key, value in data.items() if key != "experiments"}
        for index, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ValidationError("each entry must be a mapping", f"experiments[{index}]")
            config.experiments.append(cls.from_dict(_merge(base, entry)))
        return config

    def validate(self) -> 'ExperimentConfig':
        """
        Check and convert every parameter of the selected experiment.

        Raises:
            ValidationError: Naming the offending key
        """
        if self.experiments:
            for entry in self.experiments:
                entry.validate()
            return self
        if resolve_format(self.output_format) not in FORMATTERS:
            raise ValidationError(f"unknown output format {self.output_format!r}", "format")
        if self.experiment is None:
            raise ValidationError("no experiment selected", "experiment")
        schema = EXPERIMENT_PARAMETERS.get(self.experiment)
        if schema is None:
            raise ValidationError(
                f"unknown experiment {self.experiment!r}, expected one of "
                f"{', '.join(EXPERIMENT_PARAMETERS)}",
                "experiment",
            )
        raw = self.sections.get(self.experiment) or {}
        if not isinstance(raw, dict):
            raise ValidationError("section must be a mapping", self.experiment)
        for name in raw:
            if name not in schema:
                raise ValidationError(f"unknown parameter {name!r}", f"{self.experiment}.{name}")
        params = {}
        for name, (convert, default) in schema.items():
            value = raw.get(name)
            params[name] = default if value is None else convert(value, f"{self.experiment}.{name}")
        self.params = params
        if self.experiment in NEEDS_IFS:
            self.resolve_ifs()
        return self

    def resolve_ifs(self) -> Ifs1D:
        """Return the inline IFS if given, else the named preset."""
        if self.ifs_section is not None:
            return Ifs1D.from_config(self.ifs_section, name=self.preset or "inline")
        if not self.preset:
            raise ValidationError("a preset or an inline ifs section is required", "preset")
        return load_preset(self.preset)

    def runs(self) -> List['ExperimentConfig']:
        return self.experiments or [self]


def create_config(config_file: Optional[str] = None, env_vars: bool = False,
                  **overrides: Any) -> ExperimentConfig:
    """
    Create an ExperimentConfig.

    Parameters:
      config_file: Optional YAML file; a missing file yields defaults.
      env_vars: If True, apply IFS_KHINTCHINE_* environment variables over the file.
      overrides: Highest-precedence values (nested dicts merge into sections).
    """
    config = load_file_config(config_file)
    if env_vars:
        config = _merge(config, load_env_config())
    config = _merge(config, overrides)
    return ExperimentConfig.from_dict(config)
