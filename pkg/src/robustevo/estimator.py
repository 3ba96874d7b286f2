"""scikit-learn style wrapper around the robust evolution protocol."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .envs import make_env
from .optimizers import OptimizerConfig
from .protocol import PEVM, ProtocolConfig, VariationMatrix, evaluate, run


class RobustEvolver(BaseEstimator):
    """Evolve a recurrent controller for one environment.

    ``fit`` ignores its data arguments: the training signal comes from
    simulated episodes, not from samples. After fitting, ``predict`` runs the
    evolved controller over a sensor sequence and ``score`` returns its mean
    episode score on given condition rows.
    """

    def __init__(self, env="cartpole2", algorithm="cmaes", nee=20, nve=500, f=0.0,
                 budget=400_000, seed=0, popsize=0, sigma0=None, env_params=None):
        self.env = env
        self.algorithm = algorithm
        self.nee = nee
        self.nve = nve
        self.f = f
        self.budget = budget
        self.seed = seed
        self.popsize = popsize
        self.sigma0 = sigma0
        self.env_params = env_params

    def _make_env(self):
        return make_env(self.env, **(self.env_params or {}))

    def fit(self, X=None, y=None, callback=None):
        env = self._make_env()
        protocol = ProtocolConfig(nee=self.nee, nve=self.nve, f=self.f, budget=self.budget,
                                  seed=self.seed)
        optimizer = OptimizerConfig(algorithm=self.algorithm, n=env.topology.n_params,
                                    popsize=self.popsize, sigma0=self.sigma0)
        result = run(protocol, optimizer, env, callback=callback)
        self.env_ = env
        self.result_ = result
        self.genome_ = result.best_genome
        self.best_performance_ = result.best_performance
        self.n_features_in_ = env.topology.n_sensors
        return self

    def predict(self, X):
        """Motor outputs for a time-ordered sensor sequence ``X`` (rows = steps)."""
        check_is_fitted(self, "genome_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"X must have shape (n_steps, {self.n_features_in_})")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        net = self.env_.controller(self.genome_)
        if hasattr(net, "reset"):
            net.reset()
            return np.array([net.activate(x) for x in X])
        raise TypeError(f"{self.env} controllers are not single-network")

    def score(self, X=None, y=None):
        """Mean episode score on condition rows ``X`` (defaults to the fitted performance)."""
        check_is_fitted(self, "genome_")
        if X is None:
            return float(self.best_performance_)
        rows = np.atleast_2d(np.asarray(X, dtype=float))
        return evaluate(self.genome_, VariationMatrix(rows, PEVM), self.env_)
