"""Python access to the hankelab experiments.

Reports and estimates come back as decoded JSON (schema "v1"). Configs may be
given as a dict or as key = value text.
"""

import json

from . import _core
from ._core import ConfigError, operation_catalog, uncovered_operations

__all__ = [
    "ConfigError",
    "run_experiment",
    "verify",
    "generate_coeffs",
    "generate_collection",
    "bmo_estimate",
    "bmo_minus1",
    "journe",
    "hankel_norm",
    "operation_catalog",
    "uncovered_operations",
]


def _config_text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return "\n".join(f"{k} = {v}" for k, v in config.items())


def _coeffs_text(coeffs):
    return coeffs if isinstance(coeffs, str) else json.dumps(coeffs)


def run_experiment(kind, config=None, freeze=False):
    return json.loads(_core.run_experiment(kind, _config_text(config), freeze))


def verify(config=None):
    return run_experiment("verify", config)


def generate_coeffs(config=None, trial=0):
    return json.loads(_core.generate_coeffs(_config_text(config), trial))


def generate_collection(config=None, trial=0):
    """Collection in the line format read by journe()."""
    return _core.generate_collection(_config_text(config), trial)


def bmo_estimate(coeffs, strategy="greedy"):
    return json.loads(_core.bmo_estimate(_coeffs_text(coeffs), strategy))


def bmo_minus1(coeffs, strategy="greedy"):
    return json.loads(_core.bmo_minus1(_coeffs_text(coeffs), strategy))


def journe(collection, delta="1/8", epsilon="1/2"):
    return json.loads(_core.journe(collection, str(delta), str(epsilon)))


def hankel_norm(coeffs, N):
    return _core.hankel_norm(_coeffs_text(coeffs), N)
