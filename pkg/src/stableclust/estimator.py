"""scikit-learn style wrapper around the local search and the exact oracle."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .instance import Instance
from .local_search import SearchConfig, rho_swap_search
from .metric import EUCLIDEAN, Point
from .oracle import DEFAULT_BUDGET, solve_exact

__all__ = ["StableKClustering"]


class StableKClustering(ClusterMixin, TransformerMixin, BaseEstimator):
    """Discrete k-median / k-means with candidate centres drawn from the data.

    Coordinates are converted to rationals with ``max_denominator`` so the
    underlying search runs in exact arithmetic.

    Parameters
    ----------
    n_clusters : int
    objective : {"kmedian", "kmeans"}
    rho : int
        Swap size of the local search.
    penalty : float or None
        Common outlier penalty for every point; points paying it get label -1.
    solver : {"local_search", "oracle"}
    max_iter : int or None
    max_denominator : int
    budget : int
        Evaluation limit for the oracle.
    """

    def __init__(self, n_clusters=2, objective="kmedian", rho=2, penalty=None, solver="local_search",
                 max_iter=None, max_denominator=10 ** 6, budget=DEFAULT_BUDGET):
        self.n_clusters = n_clusters
        self.objective = objective
        self.rho = rho
        self.penalty = penalty
        self.solver = solver
        self.max_iter = max_iter
        self.max_denominator = max_denominator
        self.budget = budget

    def _rational(self, v) -> Fraction:
        return Fraction(float(v)).limit_denominator(self.max_denominator)

    def _instance(self, X: np.ndarray) -> Instance:
        pts = [Point(i, tuple(self._rational(v) for v in row)) for i, row in enumerate(X)]
        cts = [Point(i, p.coords, role="centre") for i, p in enumerate(pts)]
        pen = None
        if self.penalty is not None:
            q = self._rational(self.penalty)
            pen = {p.id: q for p in pts}
        return Instance(self.objective, pts, cts, EUCLIDEAN, self.n_clusters, pen)

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=float)
        if self.solver not in ("local_search", "oracle"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not 1 <= self.n_clusters <= len(X):
            raise ValueError(f"n_clusters={self.n_clusters} must lie in [1, {len(X)}]")
        inst = self._instance(X)
        if self.solver == "oracle":
            S = min(solve_exact(inst, self.budget).solutions, key=sorted)
        else:
            sol, trace = rho_swap_search(inst, SearchConfig(rho=self.rho, max_iters=self.max_iter))
            S = sol.centres
            self.n_iter_ = trace.swaps
        self.centre_indices_ = np.array(sorted(S), dtype=int)
        self.cluster_centers_ = X[self.centre_indices_]
        self.cost_ = inst.cost(S)
        self.labels_ = self.predict(X)
        return self

    def transform(self, X):
        """Distances to the chosen centres (squared for k-means)."""
        check_is_fitted(self, "cluster_centers_")
        X = validate_data(self, X, dtype=float, reset=False)
        d2 = ((X[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(axis=2)
        return d2 if self.objective == "kmeans" else np.sqrt(d2)

    def predict(self, X):
        d = self.transform(X)
        labels = d.argmin(axis=1)
        if self.penalty is not None:
            pen = float(self.penalty)
            labels = np.where(d.min(axis=1) > pen, -1, labels)
        return labels

    def score(self, X, y=None):
        """Negative clustering cost of ``X`` against the fitted centres."""
        d = self.transform(X).min(axis=1)
        if self.penalty is not None:
            d = np.minimum(d, float(self.penalty))
        return -float(d.sum())
