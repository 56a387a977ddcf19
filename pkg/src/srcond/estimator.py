"""scikit-learn wrapper around :func:`srcond.gp.evolve`."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .gp import GPConfig, evolve
from .expr import to_infix
from .telemetry import RunLog


class SymbolicRegressor(RegressorMixin, BaseEstimator):
    """Memetic GP regressor.

    Hyperparameters mirror :class:`srcond.gp.GPConfig`. After ``fit`` the
    model is ``intercept_ + slope_ * f(X)`` where ``f`` is ``tree_``;
    ``final_report_`` describes the Jacobian of ``f`` before that scaling and
    ``log_`` holds the per-candidate telemetry.
    """

    def __init__(self, population_size=1000, generations=100, local_opt_iters=10, max_size=50,
                 function_set="small", mutation_rate=0.25, tournament_size=5, elites=1,
                 constant_ratio=0.5, svd_method="jacobi", random_state=0):
        self.population_size = population_size
        self.generations = generations
        self.local_opt_iters = local_opt_iters
        self.max_size = max_size
        self.function_set = function_set
        self.mutation_rate = mutation_rate
        self.tournament_size = tournament_size
        self.elites = elites
        self.constant_ratio = constant_ratio
        self.svd_method = svd_method
        self.random_state = random_state

    def _config(self) -> GPConfig:
        seed = self.random_state
        if seed is None:
            seed = int(np.random.default_rng().integers(2**31))
        elif not isinstance(seed, (int, np.integer)):
            raise ValueError("random_state must be an int or None")
        return GPConfig(
            population_size=self.population_size, generations=self.generations,
            local_opt_iters=self.local_opt_iters, max_size=self.max_size, function_set=self.function_set,
            mutation_rate=self.mutation_rate, tournament_size=self.tournament_size, elites=self.elites,
            constant_ratio=self.constant_ratio, seed=int(seed), svd_method=self.svd_method,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        config = self._config()
        names = tuple(f"x{i}" for i in range(1, X.shape[1] + 1))
        log = RunLog()
        result = evolve(config, Dataset(X, y, names, "fit"), log)
        self.n_features_in_ = X.shape[1]
        self.tree_ = result.best.tree
        self.expression_ = to_infix(result.best.tree, names)
        self.intercept_ = result.intercept
        self.slope_ = result.slope
        self.final_report_ = result.report
        self.history_ = result.best_fitness
        self.log_ = log
        self._result = result
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self._result.predict(X)
