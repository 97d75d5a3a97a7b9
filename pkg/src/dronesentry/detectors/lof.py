"""Local outlier factor against a fixed training set.

Standard definitions: k-distance, reachability distance, local reachability
density, and the LOF ratio of the neighbours' densities to the query's own.
Scores near 1 mean the query sits in a region as dense as its neighbours'.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams
from . import Vote, check_dimension, pairwise_distances

DEFAULT_LOF_THRESHOLD = 1.5


@dataclass(frozen=True)
class LofModel:
    train: np.ndarray
    k_neighbors: int
    lof_threshold: float = DEFAULT_LOF_THRESHOLD
    _k_dist: np.ndarray | None = field(default=None, compare=False, repr=False)
    _lrd: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def dim(self):
        return self.train.shape[1]

    def caches(self):
        if self._k_dist is None:
            k_dist, lrd = _train_densities(self.train, self.k_neighbors)
            object.__setattr__(self, "_k_dist", k_dist)
            object.__setattr__(self, "_lrd", lrd)
        return self._k_dist, self._lrd


def _train_densities(train, k):
    dists = pairwise_distances(train)
    # k-th nearest other point: the self-distance occupies column 0
    k_dist = np.partition(dists, k, axis=1)[:, k]
    n = len(train)
    lrd = np.empty(n)
    for i in range(n):
        mask = (dists[i] <= k_dist[i])
        mask[i] = False
        reach = np.maximum(k_dist[mask], dists[i][mask])
        mean = reach.mean() if len(reach) else 0.0
        lrd[i] = np.inf if mean == 0.0 else 1.0 / mean
    return k_dist, lrd


def fit_lof(train, k_neighbors=20, threshold=DEFAULT_LOF_THRESHOLD) -> LofModel:
    train = np.asarray(train, dtype=float)
    if not 1 <= k_neighbors < len(train):
        raise InvalidParams(
            f"k_neighbors must be in [1, n): {k_neighbors} vs n={len(train)}"
        )
    model = LofModel(train=train, k_neighbors=k_neighbors, lof_threshold=threshold)
    model.caches()
    return model


def lof_score(model: LofModel, x) -> float:
    """LOF of x relative to the training set (1 = typical density)."""
    x = check_dimension(model.dim, x)
    k_dist_train, lrd_train = model.caches()
    d = np.sqrt(((model.train - x) ** 2).sum(axis=1))
    k = model.k_neighbors
    kth = np.partition(d, k - 1)[k - 1]
    mask = d <= kth
    reach = np.maximum(k_dist_train[mask], d[mask])
    mean_reach = reach.mean()
    neighbor_lrd = lrd_train[mask]
    if mean_reach == 0.0:
        # x duplicates a dense cluster: as dense as its neighbours
        return 1.0
    lrd_x = 1.0 / mean_reach
    return float(neighbor_lrd.mean() / lrd_x)


def predict_lof(model: LofModel, x) -> Vote:
    return Vote.ANOMALY if lof_score(model, x) > model.lof_threshold else Vote.NORMAL
