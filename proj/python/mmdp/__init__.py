"""Multiscale MDP solvers, compression and transfer."""

import json as _json

from ._core import (
    Error,
    Hierarchy,
    InvalidInput,
    Mdp,
    ParseError,
    auto_boundary_updates,
    build_hierarchy,
    policy_iteration,
    solve_hierarchy,
    transfer,
    value_determination,
)
from . import _core


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def build_domain(config):
    """Domain MDP from a dict or JSON string, e.g. {"type": "grid", "preset": "four-room"}."""
    return _core.build_domain(_text(config))


def run_experiment(config, out_dir):
    return _core.run_experiment(_text(config), str(out_dir))


__all__ = [
    "Error",
    "Hierarchy",
    "InvalidInput",
    "Mdp",
    "ParseError",
    "auto_boundary_updates",
    "build_domain",
    "build_hierarchy",
    "policy_iteration",
    "run_experiment",
    "solve_hierarchy",
    "transfer",
    "value_determination",
]
