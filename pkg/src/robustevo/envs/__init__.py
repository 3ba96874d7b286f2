"""Benchmark environments and a small name registry."""

from .base import Environment
from .cartpole2 import DoublePole
from .racing import Racing, TrackSpec
from .swarm import Foraging

ENVIRONMENTS = {
    DoublePole.name: DoublePole,
    Racing.name: Racing,
    Foraging.name: Foraging,
}


def make_env(name: str, **params) -> Environment:
    """Build an environment from its tag; ``params`` go to the constructor.

    For ``racing`` a ``track`` given as a path is loaded from file.
    """
    try:
        cls = ENVIRONMENTS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    if cls is Racing and isinstance(params.get("track"), str):
        params["track"] = TrackSpec.load(params["track"])
    return cls(**params)


__all__ = ["ENVIRONMENTS", "DoublePole", "Environment", "Foraging", "Racing", "TrackSpec",
           "make_env"]
