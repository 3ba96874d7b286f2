"""Robust evaluation loop: shared condition matrices, regeneration, post-evaluation.

Each generation every candidate is scored on the same evaluation matrix
(EVM), one condition row per episode. The fitness-best candidate of the
generation is then scored on a post-evaluation matrix (PEVM) that is drawn
once from its own random stream and never changes. Model selection uses the
post-evaluation score ("performance"), not the fitness.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .optimizers import OptimizerConfig, make_optimizer
from .validation import check_fraction, check_ranges

logger = logging.getLogger(__name__)

EVM = "evm"
PEVM = "pevm"
STREAMS = ("evm", "pevm", "optimizer", "env")


class EpisodeError(RuntimeError):
    """An environment produced a non-finite episode score."""


@dataclass
class VariationMatrix:
    values: np.ndarray
    role: str = EVM
    generation: int = 0

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass
class ProtocolConfig:
    nee: int = 20
    nve: int = 500
    f: float = 0.0
    budget: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.nee < 1 or self.nve < 1:
            raise ValueError("nee and nve must be >= 1")
        check_fraction(self.f, "f")
        if self.f > 0:
            period = 1.0 / self.f
            if abs(period - round(period)) > 1e-9:
                raise ValueError(f"f must be the reciprocal of an integer, got {self.f}")
        if self.budget < self.nee:
            raise ValueError("budget must be at least nee")

    @property
    def period(self) -> int:
        """Generations between EVM regenerations; 0 means never."""
        return 0 if self.f == 0 else int(round(1.0 / self.f))


@dataclass
class GenerationRecord:
    generation: int
    episodes_used: int
    best_fitness: float
    best_performance: float
    best_so_far: float


@dataclass
class RunResult:
    best_genome: np.ndarray
    best_performance: float
    evaluation_at_best: int
    total_budget: int
    records: list = field(default_factory=list)
    short_budget: bool = False

    @property
    def episodes_used(self) -> int:
        return self.records[-1].episodes_used if self.records else 0


def seed_streams(seed: int) -> dict:
    """Independent named generators derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def generate_matrix(rng, ranges, n_rows: int, role: str = EVM, generation: int = 0) -> VariationMatrix:
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    r = check_ranges(ranges)
    u = rng.random((n_rows, len(r)))
    values = r[:, 0] + u * (r[:, 1] - r[:, 0])
    return VariationMatrix(values, role, generation)


def maybe_regenerate(matrix: VariationMatrix, generation: int, f: float, rng, ranges) -> VariationMatrix:
    """Redraw an EVM every ``round(1/f)`` generations; PEVMs are never redrawn."""
    f = check_fraction(f, "f")
    if matrix.role == PEVM or f == 0 or generation == 0:
        return matrix
    if generation % int(round(1.0 / f)) == 0:
        return generate_matrix(rng, ranges, matrix.n_rows, matrix.role, generation)
    return matrix


def evaluate_population(candidates, matrix: VariationMatrix, env) -> np.ndarray:
    """Mean episode score of each candidate over all rows of ``matrix``."""
    scores = env.evaluate_batch(np.atleast_2d(candidates), matrix.values)
    if not np.all(np.isfinite(scores)):
        raise EpisodeError(f"{env.name}: non-finite episode score")
    return scores.mean(axis=1)


def evaluate(candidate, matrix: VariationMatrix, env) -> float:
    return float(evaluate_population(np.asarray(candidate)[None, :], matrix, env)[0])


def run(protocol: ProtocolConfig, optimizer: OptimizerConfig, env, callback=None) -> RunResult:
    """Evolve until the episode budget is spent.

    Every simulated episode counts against the budget, including parent
    re-evaluations and post-evaluations. ``callback(record)`` is invoked after
    each generation.
    """
    if optimizer.n != env.topology.n_params:
        raise ValueError(
            f"optimizer dimension {optimizer.n} does not match {env.name} "
            f"genome length {env.topology.n_params}"
        )
    streams = seed_streams(protocol.seed)
    ranges = env.condition_ranges
    opt = make_optimizer(optimizer, rng=streams["optimizer"])
    evm = generate_matrix(streams["evm"], ranges, protocol.nee, EVM)
    pevm = generate_matrix(streams["pevm"], ranges, protocol.nve, PEVM)
    gen_cost = opt.popsize * protocol.nee + protocol.nve

    result = RunResult(best_genome=None, best_performance=-math.inf, evaluation_at_best=0,
                       total_budget=protocol.budget, short_budget=gen_cost > protocol.budget)
    episodes = 0
    generation = 0
    while episodes < protocol.budget:
        evm = maybe_regenerate(evm, generation, protocol.f, streams["evm"], ranges)
        candidates = opt.ask()
        fitness = evaluate_population(candidates, evm, env)
        episodes += len(candidates) * protocol.nee
        opt.tell(fitness)

        best = int(np.argmax(fitness))
        performance = float(evaluate_population(candidates[best][None, :], pevm, env)[0])
        episodes += protocol.nve
        if performance > result.best_performance:
            result.best_performance = performance
            result.best_genome = candidates[best].copy()
            result.evaluation_at_best = episodes
        record = GenerationRecord(generation, episodes, float(fitness[best]),
                                  performance, result.best_performance)
        result.records.append(record)
        if callback is not None:
            callback(record)
        generation += 1
    if result.short_budget:
        logger.warning("budget %d is below one generation's cost (%d episodes)",
                       protocol.budget, gen_cost)
    return result
