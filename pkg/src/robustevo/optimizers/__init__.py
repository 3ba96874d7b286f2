"""Black-box optimizers sharing an ask/tell interface (higher fitness is better)."""

from .base import (ALGORITHMS, Optimizer, OptimizerConfig, default_lambda,
                   load_checkpoint, rank_weights)
from .cmaes import CMAES
from .nes import SNES, XNES, nes_utilities
from .sss import SSS, sss_mutate

_CLASSES = {"sss": SSS, "cmaes": CMAES, "xnes": XNES, "snes": SNES}


def make_optimizer(config: OptimizerConfig, rng=None, x0=None) -> Optimizer:
    """Build the optimizer named by ``config.algorithm``."""
    return _CLASSES[config.algorithm](config, rng=rng, x0=x0)


__all__ = [
    "ALGORITHMS", "CMAES", "Optimizer", "OptimizerConfig", "SNES", "SSS", "XNES",
    "default_lambda", "load_checkpoint", "make_optimizer", "nes_utilities",
    "rank_weights", "sss_mutate",
]
