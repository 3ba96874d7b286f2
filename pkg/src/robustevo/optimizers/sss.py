from __future__ import annotations

import numpy as np

from .base import Optimizer, OptimizerConfig

DEFAULT_POPSIZE = 20


def sss_mutate(vector, rng, mutrate, std=0.2, replace_fraction=0.0, bound=8.0):
    """Mutate each coordinate independently with probability ``mutrate``.

    A mutated coordinate is redrawn uniformly in ``[-bound, bound]`` with
    probability ``replace_fraction`` and otherwise perturbed by Gaussian
    noise of standard deviation ``std``. The result is clipped to the bounds.
    """
    x = np.array(vector, dtype=float)
    n = x.size
    hit = rng.random(n) < mutrate
    replace = rng.random(n) < replace_fraction
    noise = rng.normal(0.0, 1.0, n) * std
    redraw = rng.uniform(-bound, bound, n)
    x = np.where(hit & replace, redraw, np.where(hit, x + noise, x))
    return np.clip(x, -bound, bound)


class SSS(Optimizer):
    """(mu + mu) stochastic steady state strategy.

    Every generation the mu parents are returned for re-evaluation together
    with one mutated offspring each; the best mu of the 2*mu candidates
    (optionally after adding uniform fitness noise) become the new parents.
    """

    name = "sss"

    def __init__(self, config: OptimizerConfig, rng=None, x0=None):
        super().__init__(config, rng)
        popsize = config.popsize or DEFAULT_POPSIZE
        self.mu = config.mu or max(1, popsize // 2)
        self.bound = config.weight_range
        if x0 is None:
            init = config.init_range or self.bound
            self.parents = self.rng.uniform(-init, init, (self.mu, self.n))
        else:
            x0 = np.atleast_2d(np.asarray(x0, dtype=float))
            self.parents = np.clip(np.broadcast_to(x0, (self.mu, self.n)).copy(),
                                   -self.bound, self.bound)
        self.parent_fitness = np.full(self.mu, np.nan)
        self.last_candidates = None

    @property
    def popsize(self) -> int:
        return 2 * self.mu

    @property
    def parent_mask(self) -> np.ndarray:
        """True for the entries of an ask() batch that are re-evaluated parents."""
        return np.arange(2 * self.mu) < self.mu

    @property
    def center(self) -> np.ndarray:
        if np.all(np.isnan(self.parent_fitness)):
            return self.parents[0].copy()
        return self.parents[int(np.nanargmax(self.parent_fitness))].copy()

    def _sample(self):
        c = self.config
        offspring = np.array([
            sss_mutate(p, self.rng, c.mutrate, c.mutation_std, c.replace_fraction, self.bound)
            for p in self.parents
        ])
        return np.vstack([self.parents, offspring])

    def _update(self, population, fitnesses):
        ranked = fitnesses
        if self.config.noise_range > 0:
            r = self.config.noise_range
            ranked = fitnesses + self.rng.uniform(-r, r, fitnesses.size)
        keep = np.argsort(-ranked, kind="stable")[: self.mu]
        self.parents = population[keep].copy()
        self.parent_fitness = fitnesses[keep].copy()
        self.last_candidates = population.copy()

    def _arrays(self):
        return {"parents": self.parents, "parent_fitness": self.parent_fitness}

    def _restore(self, scalars, arrays):
        self.parents = arrays["parents"].reshape(self.mu, self.n)
        self.parent_fitness = arrays["parent_fitness"]
