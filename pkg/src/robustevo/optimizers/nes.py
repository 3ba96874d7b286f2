"""Natural evolution strategies: exponential (xNES) and separable (sNES)."""

from __future__ import annotations

import math

import numpy as np

from .base import Optimizer, OptimizerConfig, default_lambda, rank_weights


def nes_utilities(lam: int) -> np.ndarray:
    """Rank-shaped utilities, best rank first; they sum to zero."""
    raw = np.maximum(0.0, math.log(lam / 2 + 1) - np.log(np.arange(1, lam + 1)))
    return raw / raw.sum() - 1.0 / lam


class _NES(Optimizer):
    # As in CMAES, a generation of identical fitnesses leaves the state untouched.
    def __init__(self, config: OptimizerConfig, rng=None, x0=None):
        super().__init__(config, rng)
        self.lam = config.popsize or default_lambda(self.n)
        self.utilities = nes_utilities(self.lam)
        init = config.init_range or 1.0
        if x0 is None:
            self.mean = self.rng.uniform(-init, init, self.n)
        else:
            self.mean = np.array(x0, dtype=float).reshape(self.n)
        self.lr_mean = config.lr_mean or 1.0
        self._z = None

    @property
    def popsize(self):
        return self.lam

    @property
    def center(self):
        return self.mean.copy()


class XNES(_NES):
    """Exponential NES with a full covariance factor ``sigma * B`` (det B = 1)."""

    name = "xnes"

    def __init__(self, config: OptimizerConfig, rng=None, x0=None):
        super().__init__(config, rng, x0)
        n = self.n
        default_lr = (9 + 3 * math.log(n)) / (5 * n * math.sqrt(n))
        self.lr_sigma = config.lr_sigma or default_lr
        self.lr_shape = config.lr_shape or default_lr
        self.sigma = config.sigma0 if config.sigma0 is not None else 1.0
        self.B = np.eye(n)

    def _constants(self):
        return {"lambda": self.lam, "lr_mean": self.lr_mean,
                "lr_sigma": self.lr_sigma, "lr_shape": self.lr_shape}

    def _sample(self):
        self._z = self.rng.standard_normal((self.lam, self.n))
        return self.mean + self.sigma * self._z @ self.B.T

    def _update(self, population, fitnesses):
        if np.all(fitnesses == fitnesses[0]):
            return
        n = self.n
        z = self._z
        u = rank_weights(fitnesses, self.utilities)
        g_delta = u @ z
        g_M = (z * u[:, None]).T @ z - u.sum() * np.eye(n)
        g_sigma = np.trace(g_M) / n
        g_B = g_M - g_sigma * np.eye(n)

        self.mean = self.mean + self.lr_mean * self.sigma * (self.B @ g_delta)
        self.sigma *= math.exp(0.5 * self.lr_sigma * g_sigma)
        self.B = self.B @ _expm_sym(0.5 * self.lr_shape * g_B)
        self._check_shape()

    def _check_shape(self):
        try:
            np.linalg.cholesky(self.B @ self.B.T)
        except np.linalg.LinAlgError as exc:
            raise FloatingPointError("xNES shape matrix became singular") from exc

    def _scalars(self):
        return {"sigma": self.sigma}

    def _arrays(self):
        return {"mean": self.mean, "B": self.B}

    def _restore(self, scalars, arrays):
        self.sigma = scalars["sigma"]
        self.mean = arrays["mean"]
        self.B = arrays["B"].reshape(self.n, self.n)


class SNES(_NES):
    """Separable NES: one step size per coordinate."""

    name = "snes"

    def __init__(self, config: OptimizerConfig, rng=None, x0=None):
        super().__init__(config, rng, x0)
        n = self.n
        self.lr_sigma = config.lr_sigma or (3 + math.log(n)) / (5 * math.sqrt(n))
        self.sigma = np.full(n, config.sigma0 if config.sigma0 is not None else 1.0)

    def _constants(self):
        return {"lambda": self.lam, "lr_mean": self.lr_mean, "lr_sigma": self.lr_sigma}

    def _sample(self):
        self._z = self.rng.standard_normal((self.lam, self.n))
        return self.mean + self.sigma * self._z

    def _update(self, population, fitnesses):
        if np.all(fitnesses == fitnesses[0]):
            return
        z = self._z
        u = rank_weights(fitnesses, self.utilities)
        self.mean = self.mean + self.lr_mean * self.sigma * (u @ z)
        self.sigma = self.sigma * np.exp(0.5 * self.lr_sigma * (u @ (z * z - 1)))

    def _scalars(self):
        return {}

    def _arrays(self):
        return {"mean": self.mean, "sigma": self.sigma}

    def _restore(self, scalars, arrays):
        self.mean = arrays["mean"]
        self.sigma = arrays["sigma"]


def _expm_sym(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix via its eigendecomposition."""
    vals, vecs = np.linalg.eigh((a + a.T) / 2)
    return (vecs * np.exp(vals)) @ vecs.T
