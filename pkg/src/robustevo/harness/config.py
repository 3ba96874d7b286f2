"""Experiment configuration files.

An experiment is an INI file with three required sections and one optional::

    [env]
    name = cartpole2

    [optimizer]
    algorithm = cmaes

    [protocol]
    nee = 20
    nve = 500
    f = 0.04
    budget = 400000
    seed = 0

    [experiment]
    replications = 10
    out = results/cmaes_f004
    workers = 1

Keys in ``[env]`` other than ``name`` are passed to the environment
constructor. The optimizer dimension ``n`` is taken from the environment's
genome length when omitted.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..envs import ENVIRONMENTS, make_env
from ..optimizers import OptimizerConfig
from ..protocol import ProtocolConfig

REQUIRED_SECTIONS = ("env", "optimizer", "protocol")
_INT_KEYS = {"n_internal", "n_steps"}


@dataclass
class ExperimentConfig:
    env_name: str
    optimizer: OptimizerConfig
    protocol: ProtocolConfig
    env_params: dict = field(default_factory=dict)
    replications: int = 1
    out: str = "results"
    workers: int = 1
    name: str = ""

    def __post_init__(self):
        if self.env_name not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.env_name!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def make_env(self):
        return make_env(self.env_name, **self.env_params)

    def with_overrides(self, seed=None, replications=None, out=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, protocol=replace(cfg.protocol, seed=int(seed)))
        if replications is not None:
            cfg = replace(cfg, replications=int(replications))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        return cfg


def _env_value(key, raw):
    if key in _INT_KEYS:
        return int(raw)
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config(text: str, name: str = "") -> ExperimentConfig:
    """Parse INI text; every problem is reported before any run starts."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    missing = [s for s in REQUIRED_SECTIONS if not cp.has_section(s)]
    if missing:
        raise ValueError(f"config is missing section(s): {', '.join(missing)}")
    env_sec = dict(cp["env"])
    if "name" not in env_sec:
        raise ValueError("[env] needs a 'name' key")
    env_name = env_sec.pop("name").strip()
    env_params = {k: _env_value(k, v) for k, v in env_sec.items()}

    opt_map = dict(cp["optimizer"])
    if "n" not in opt_map:
        opt_map["n"] = make_env(env_name, **env_params).topology.n_params
    optimizer = OptimizerConfig.from_mapping(opt_map)

    proto = dict(cp["protocol"])
    unknown = set(proto) - {"nee", "nve", "f", "budget", "seed"}
    if unknown:
        raise ValueError(f"unknown protocol option(s): {', '.join(sorted(unknown))}")
    protocol = ProtocolConfig(
        nee=int(proto.get("nee", 20)), nve=int(proto.get("nve", 500)),
        f=float(proto.get("f", 0.0)), budget=int(float(proto.get("budget", 1_000_000))),
        seed=int(proto.get("seed", 0)),
    )
    exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    return ExperimentConfig(
        env_name=env_name, optimizer=optimizer, protocol=protocol, env_params=env_params,
        replications=int(exp.get("replications", 1)), out=exp.get("out", "results"),
        workers=int(exp.get("workers", 1)), name=exp.get("name", name),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), name=path.stem)
