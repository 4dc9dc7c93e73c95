"""Reciprocal-chain target models, filters and detectors (C++ core)."""

import json

from ._rctrack import (
    ConfigError,
    ModelError,
    ZeroEvidenceError,
    benefit_indicator,
    bridges_closed_form,
    bridges_recursive,
    hmc_filter,
    hrc_filter,
    mixture_endpoints,
    oracle_check,
    random_walk,
    schrodinger,
    validate_config,
)
from ._rctrack import run_experiment as _run_experiment


def load_config(path):
    """Reads and validates a config file; returns it as a dict."""
    with open(path) as fh:
        return json.loads(validate_config(fh.read()))


def run_experiment(config, threads=1):
    """Runs an experiment from a config dict (or JSON text)."""
    text = config if isinstance(config, str) else json.dumps(config)
    out = _run_experiment(text, threads)
    out["summary"] = json.loads(out["summary"])
    return out


__all__ = [
    "ConfigError",
    "ModelError",
    "ZeroEvidenceError",
    "benefit_indicator",
    "bridges_closed_form",
    "bridges_recursive",
    "hmc_filter",
    "hrc_filter",
    "load_config",
    "mixture_endpoints",
    "oracle_check",
    "random_walk",
    "run_experiment",
    "schrodinger",
    "validate_config",
]
