from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from ..validation import check_fitnesses, check_rng

ALGORITHMS = ("sss", "cmaes", "xnes", "snes")


def default_lambda(n: int) -> int:
    """Population size rule shared by the Gaussian methods: ``4 + floor(3 ln n)``."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return max(4, 4 + int(math.floor(3.0 * math.log(n))))


@dataclass
class OptimizerConfig:
    """Settings for every optimizer; fields left at 0 (or None) fall back to defaults.

    ``popsize`` is lambda for the Gaussian methods and the total number of
    candidates per generation (2 * mu) for SSS.
    """

    algorithm: str = "xnes"
    n: int = 1
    popsize: int = 0
    # SSS
    mu: int = 0
    mutrate: float = 0.02
    mutation_std: float = 0.2
    replace_fraction: float = 0.0
    weight_range: float = 8.0
    noise_range: float = 0.0
    # Gaussian methods
    sigma0: float | None = None
    init_range: float = 0.0
    lr_mean: float = 0.0
    lr_sigma: float = 0.0
    lr_shape: float = 0.0

    def __post_init__(self):
        self.algorithm = self.algorithm.lower()
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if self.popsize != 0 and self.popsize < 2:
            raise ValueError("explicit popsize must be >= 2")
        if not 0.0 <= self.mutrate <= 1.0:
            raise ValueError("mutrate must lie in [0, 1]")
        if not 0.0 <= self.replace_fraction <= 1.0:
            raise ValueError("replace_fraction must lie in [0, 1]")
        if self.sigma0 is not None and not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        for name in ("mutation_std", "noise_range", "init_range",
                     "lr_mean", "lr_sigma", "lr_shape", "mu"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.weight_range <= 0:
            raise ValueError("weight_range must be positive")

    @classmethod
    def from_mapping(cls, mapping) -> "OptimizerConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            key = key.strip().lower()
            if key not in known:
                raise ValueError(f"unknown optimizer option {key!r}")
            if key == "algorithm":
                kwargs[key] = str(value)
            elif known[key].type == "int":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


def rank_weights(fitnesses, weights_by_rank) -> np.ndarray:
    """Assign rank-based weights to samples, best (highest fitness) first.

    Equal fitnesses are ranked by sample index (lower index ranks higher).
    Samples are i.i.d., so this behaves like a random tie-break and keeps the
    step-size dynamics unbiased on plateaus.
    """
    f = np.asarray(fitnesses, dtype=float)
    order = np.argsort(-f, kind="stable")
    out = np.empty(len(f))
    out[order] = np.asarray(weights_by_rank, dtype=float)
    return out


class Optimizer:
    """Ask/tell base class. Higher fitness is better for every subclass."""

    name = "base"

    def __init__(self, config: OptimizerConfig, rng=None):
        self.config = config
        self.n = int(config.n)
        self.rng = check_rng(rng)
        self.iteration = 0
        self._pending = None

    @property
    def popsize(self) -> int:
        raise NotImplementedError

    def ask(self) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("ask() called twice without tell()")
        self._pending = self._sample()
        return self._pending.copy()

    def tell(self, fitnesses) -> None:
        if self._pending is None:
            raise RuntimeError("tell() called before ask()")
        f = check_fitnesses(fitnesses, len(self._pending))
        self._update(self._pending, f)
        self._pending = None
        self.iteration += 1

    def _sample(self) -> np.ndarray:
        raise NotImplementedError

    def _update(self, population: np.ndarray, fitnesses: np.ndarray) -> None:
        raise NotImplementedError

    @property
    def center(self) -> np.ndarray:
        """Current best guess of the optimum (distribution mean or best parent)."""
        raise NotImplementedError

    # -- checkpointing ------------------------------------------------------

    def _scalars(self) -> dict:
        return {}

    def _arrays(self) -> dict:
        raise NotImplementedError

    def _restore(self, scalars: dict, arrays: dict) -> None:
        raise NotImplementedError

    def _constants(self) -> dict:
        return {}

    def to_text(self) -> str:
        """Flat text dump of the search state, sufficient to resume a run."""
        if self._pending is not None:
            raise RuntimeError("cannot checkpoint between ask() and tell()")
        lines = [f"# robustevo optimizer checkpoint: {self.name}"]
        for key, value in self._constants().items():
            lines.append(f"# const {key} = {value!r}")
        lines.append(f"algorithm {self.name}")
        lines.append(f"iteration {self.iteration}")
        lines.append("config " + json.dumps(self.config.__dict__, sort_keys=True))
        lines.append("rng " + json.dumps(self.rng.bit_generator.state, sort_keys=True))
        for key, value in self._scalars().items():
            lines.append(f"scalar {key} {float(value)!r}")
        for key, arr in self._arrays().items():
            arr = np.atleast_1d(np.asarray(arr, dtype=float))
            shape = "x".join(str(s) for s in arr.shape)
            values = " ".join(repr(float(v)) for v in arr.ravel())
            lines.append(f"array {key} {shape} {values}")
        return "\n".join(lines) + "\n"


def load_checkpoint(text: str) -> Optimizer:
    from . import make_optimizer

    scalars, arrays = {}, {}
    config = rng_state = None
    iteration = 0
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        if kind == "config":
            config = OptimizerConfig(**json.loads(rest))
        elif kind == "rng":
            rng_state = json.loads(rest)
        elif kind == "iteration":
            iteration = int(rest)
        elif kind == "scalar":
            key, value = rest.split()
            scalars[key] = float(value)
        elif kind == "array":
            key, shape, *values = rest.split()
            dims = tuple(int(s) for s in shape.split("x"))
            arrays[key] = np.array([float(v) for v in values]).reshape(dims)
        elif kind != "algorithm":
            raise ValueError(f"unrecognised checkpoint line: {line[:40]!r}")
    if config is None:
        raise ValueError("checkpoint has no config line")
    opt = make_optimizer(config, rng=0)
    opt.rng.bit_generator.state = rng_state
    opt.iteration = iteration
    opt._restore(scalars, arrays)
    return opt
