"""Linearizable replication of state-based CRDTs: lattices, simulator, checker and client."""

import json as _json

from ._core import (
    Client,
    ConfigError,
    ConnectionError,
    Error,
    FrameError,
    GCounter,
    GSet,
    UnsupportedInput,
    UsageError,
    check,
    default_sim_config,
    frame_round_trip,
)
from ._core import simulate as _simulate

__all__ = [
    "Client",
    "ConfigError",
    "ConnectionError",
    "Error",
    "FrameError",
    "GCounter",
    "GSet",
    "UnsupportedInput",
    "UsageError",
    "check",
    "default_sim_config",
    "frame_round_trip",
    "simulate",
]


def simulate(config=None, **overrides):
    """Run one simulation. `config` is a dict or JSON string of SimConfig keys; keyword overrides win."""
    if isinstance(config, str):
        config = _json.loads(config)
    merged = dict(config or {})
    merged.update(overrides)
    return _simulate(_json.dumps(merged))
