from __future__ import annotations

import math

import numpy as np

from .base import Optimizer, OptimizerConfig, default_lambda, rank_weights


class CMAES(Optimizer):
    """Covariance matrix adaptation evolution strategy (rank-one + rank-mu updates).

    Constants follow the standard defaults of Hansen & Ostermeier: lambda =
    4 + floor(3 ln n), mu = floor(lambda / 2), log-decreasing positive
    recombination weights, cumulative step-size adaptation.

    A generation in which every fitness is equal carries no ranking
    information and leaves the distribution untouched.
    """

    name = "cmaes"

    def __init__(self, config: OptimizerConfig, rng=None, x0=None):
        super().__init__(config, rng)
        n = self.n
        self.lam = config.popsize or default_lambda(n)
        self.mu = self.lam // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        w /= w.sum()
        self.weights = np.concatenate([w, np.zeros(self.lam - self.mu)])
        self.mueff = 1.0 / np.sum(w ** 2)

        self.c_sigma = (self.mueff + 2) / (n + self.mueff + 5)
        self.d_sigma = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.c_sigma
        self.c_c = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.c_1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.c_mu = min(1 - self.c_1,
                        2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff))
        if config.lr_shape:
            self.c_1 *= config.lr_shape
            self.c_mu *= config.lr_shape
        self.c_m = config.lr_mean or 1.0
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

        init = config.init_range or 1.0
        if x0 is None:
            self.mean = self.rng.uniform(-init, init, n)
        else:
            self.mean = np.array(x0, dtype=float).reshape(n)
        self.sigma = config.sigma0 if config.sigma0 is not None else 0.5 * init
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.p_sigma = np.zeros(n)
        self.p_c = np.zeros(n)

    @property
    def popsize(self):
        return self.lam

    @property
    def center(self):
        return self.mean.copy()

    def _constants(self):
        return {"lambda": self.lam, "mu": self.mu, "mueff": self.mueff,
                "c_sigma": self.c_sigma, "d_sigma": self.d_sigma, "c_c": self.c_c,
                "c_1": self.c_1, "c_mu": self.c_mu, "c_m": self.c_m}

    def _sample(self):
        z = self.rng.standard_normal((self.lam, self.n))
        y = (z * self.D) @ self.B.T
        return self.mean + self.sigma * y

    def _update(self, population, fitnesses):
        if np.all(fitnesses == fitnesses[0]):
            return
        n = self.n
        w = rank_weights(fitnesses, self.weights)
        y = (population - self.mean) / self.sigma
        y_w = w @ y
        self.mean = self.mean + self.c_m * self.sigma * y_w

        inv_sqrt_C = (self.B / self.D) @ self.B.T
        self.p_sigma = ((1 - self.c_sigma) * self.p_sigma
                        + math.sqrt(self.c_sigma * (2 - self.c_sigma) * self.mueff)
                        * (inv_sqrt_C @ y_w))
        norm_ps = np.linalg.norm(self.p_sigma)
        t = self.iteration + 1
        h_sigma = float(norm_ps / math.sqrt(1 - (1 - self.c_sigma) ** (2 * t))
                        < (1.4 + 2 / (n + 1)) * self.chi_n)
        self.p_c = ((1 - self.c_c) * self.p_c
                    + h_sigma * math.sqrt(self.c_c * (2 - self.c_c) * self.mueff) * y_w)

        delta_h = (1 - h_sigma) * self.c_c * (2 - self.c_c)
        rank_mu = (y * w[:, None]).T @ y
        self.C = ((1 + self.c_1 * delta_h - self.c_1 - self.c_mu * w.sum()) * self.C
                  + self.c_1 * np.outer(self.p_c, self.p_c)
                  + self.c_mu * rank_mu)
        self.C = (self.C + self.C.T) / 2

        self.sigma *= math.exp((self.c_sigma / self.d_sigma) * (norm_ps / self.chi_n - 1))
        self._decompose()

    def _decompose(self):
        eigvals, self.B = np.linalg.eigh(self.C)
        if not np.all(np.isfinite(eigvals)) or eigvals.min() <= 0:
            raise FloatingPointError(
                f"covariance matrix lost positive definiteness (min eigenvalue {eigvals.min()})"
            )
        self.D = np.sqrt(eigvals)

    def _scalars(self):
        return {"sigma": self.sigma}

    def _arrays(self):
        return {"mean": self.mean, "C": self.C, "p_sigma": self.p_sigma, "p_c": self.p_c}

    def _restore(self, scalars, arrays):
        self.sigma = scalars["sigma"]
        self.mean = arrays["mean"]
        self.C = arrays["C"].reshape(self.n, self.n)
        self.p_sigma = arrays["p_sigma"]
        self.p_c = arrays["p_c"]
        self._decompose()
