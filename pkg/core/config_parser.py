"""
This module handles loading and validation of sweep configuration files.
Files are YAML key/value documents; JSON files load as well.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import yaml

from . import designs

logger = logging.getLogger(__name__)

ALTERNATIVES = ("pure", "random_admissible", "worst_case")
SAMPLERS = ("outcomes", "counts")
KNOWN_KEYS = frozenset({"name", "dims", "alphas", "epsilons", "sample_size", "trials", "alternative",
                        "seed", "output", "sampler", "workers"})


@dataclass(frozen=True)
class SampleSizeRule:
    """Either an explicit list of n or n = ⌈C·d³/(ε²α²)⌉."""
    kind: str
    values: Tuple[int, ...] = ()
    constant: float = 0.0

    def sizes(self, d: int, alpha: float, epsilon: float) -> List[int]:
        if self.kind == "explicit":
            return list(self.values)
        return [max(2, int(math.ceil(self.constant * d ** 3 / (epsilon ** 2 * alpha ** 2))))]


@dataclass(frozen=True)
class SweepConfig:
    name: str
    dims: Tuple[int, ...]
    alphas: Tuple[float, ...]
    epsilons: Tuple[float, ...]
    sample_size: SampleSizeRule
    trials: int
    alternative: str
    seed: int
    output: str
    sampler: str = "counts"
    workers: int = 1


def load_sweep_config(config_path: str) -> Optional[Dict[str, Any]]:
    """
    Loads a sweep configuration from a YAML (or JSON) file.

    Args:
        config_path: The path to the configuration file.

    Returns:
        A dictionary with the raw configuration, or None if the file cannot
        be read or does not hold a mapping.
    """
    try:
        with open(config_path, "r") as f:
            config = yaml.safe_load(f)
    except FileNotFoundError:
        logger.error("Configuration file %s not found.", config_path)
        return None
    except yaml.YAMLError as e:
        logger.error("Could not parse %s: %s", config_path, e)
        return None
    except OSError as e:
        logger.error("Could not read configuration %s: %s", config_path, e)
        return None
    if not isinstance(config, dict):
        logger.error("Configuration file %s does not contain a key/value mapping.", config_path)
        return None
    return config


def _as_list(raw: Dict[str, Any], key: str) -> list:
    value = raw.get(key)
    if value is None:
        raise ValueError(f"Missing required field '{key}'.")
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _parse_sample_size(raw: Any) -> SampleSizeRule:
    if isinstance(raw, (list, tuple)):
        raw = {"rule": "explicit", "values": list(raw)}
    if not isinstance(raw, dict):
        raise ValueError("Field 'sample_size' must be a list of n or a mapping with a 'rule'.")
    rule = raw.get("rule", "explicit" if "values" in raw else "rate")
    if rule == "explicit":
        values = tuple(int(v) for v in raw.get("values", []))
        if not values or min(values) < 2:
            raise ValueError("sample_size.values must be a non-empty list of n >= 2.")
        return SampleSizeRule(kind="explicit", values=values)
    if rule == "rate":
        constant = float(raw.get("constant", 0.0))
        if constant <= 0:
            raise ValueError("sample_size.constant must be positive for the rate rule.")
        return SampleSizeRule(kind="rate", constant=constant)
    raise ValueError(f"Unknown sample_size.rule {rule!r}; use 'explicit' or 'rate'.")


def parse_sweep_config(raw: Dict[str, Any], defaults: Optional[Dict[str, Any]] = None) -> SweepConfig:
    """
    Validates a raw configuration, filling missing keys from defaults.

    Raises:
        ValueError: naming the first offending field.
    """
    merged = dict(defaults or {})
    merged.update(raw)

    dims = tuple(int(d) for d in _as_list(merged, "dims"))
    unsupported = [d for d in dims if not designs.is_supported_dim(d)]
    if unsupported:
        raise ValueError(f"Unsupported dims {unsupported}; supported dims: {designs.supported_dims()} "
                         "(and any prime).")
    alphas = tuple(float(a) for a in _as_list(merged, "alphas"))
    if any(not 0.0 < a < 0.5 for a in alphas):
        raise ValueError(f"Every alpha must lie in (0, 1/2), got {list(alphas)}.")
    epsilons = tuple(float(e) for e in _as_list(merged, "epsilons"))
    if any(not 0.0 < e < 1.0 for e in epsilons):
        raise ValueError(f"Every epsilon must lie in (0, 1), got {list(epsilons)}.")
    if "sample_size" not in merged:
        raise ValueError("Missing required field 'sample_size'.")
    sample_size = _parse_sample_size(merged["sample_size"])

    trials = int(merged.get("trials", 0))
    if trials < 1:
        raise ValueError(f"Field 'trials' must be at least 1, got {trials}.")
    alternative = merged.get("alternative", "random_admissible")
    if alternative not in ALTERNATIVES:
        raise ValueError(f"Field 'alternative' must be one of {ALTERNATIVES}, got {alternative!r}.")
    sampler = merged.get("sampler", "counts")
    if sampler not in SAMPLERS:
        raise ValueError(f"Field 'sampler' must be one of {SAMPLERS}, got {sampler!r}.")
    workers = int(merged.get("workers", 1))
    if workers < 1:
        raise ValueError(f"Field 'workers' must be at least 1, got {workers}.")
    output = merged.get("output")
    if not output:
        raise ValueError("Missing required field 'output'.")

    unknown = sorted(k for k in merged if k not in KNOWN_KEYS)
    if unknown:
        logger.warning("Ignoring unknown sweep configuration keys: %s", ", ".join(map(str, unknown)))
    return SweepConfig(
        name=str(merged.get("name", "sweep")),
        dims=dims,
        alphas=alphas,
        epsilons=epsilons,
        sample_size=sample_size,
        trials=trials,
        alternative=alternative,
        seed=int(merged.get("seed", 0)),
        output=str(output),
        sampler=sampler,
        workers=workers,
    )
