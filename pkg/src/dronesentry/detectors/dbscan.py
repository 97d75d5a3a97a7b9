"""DBSCAN core points as a one-class boundary.

Fitting keeps the training points with at least min_pts neighbours within
eps (the point itself counts); a query point is normal iff it lies within
eps of some core point.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParams
from . import Vote, check_dimension, pairwise_distances

EPS_QUANTILE = 90.0   # default eps: this percentile of the 4-NN distances
EPS_NEIGHBOR = 4


@dataclass(frozen=True)
class DbscanModel:
    train: np.ndarray
    core_indices: np.ndarray
    eps: float
    min_pts: int

    @property
    def dim(self):
        return self.train.shape[1]

    @property
    def core_points(self):
        return self.train[self.core_indices]


def default_eps(train: np.ndarray, neighbor=EPS_NEIGHBOR, quantile=EPS_QUANTILE) -> float:
    """90th percentile of the distances to the 4th nearest other point."""
    dists = np.sort(pairwise_distances(train), axis=1)
    col = min(neighbor, dists.shape[1] - 1)
    return float(np.percentile(dists[:, col], quantile))


def fit_dbscan(train, eps=None, min_pts=5) -> DbscanModel:
    train = np.asarray(train, dtype=float)
    if len(train) == 0:
        raise InvalidParams("empty training set")
    if eps is None:
        eps = default_eps(train)
    if eps <= 0:
        raise InvalidParams(f"eps must be positive: {eps}")
    if min_pts < 1:
        raise InvalidParams(f"min_pts must be >= 1: {min_pts}")
    counts = (pairwise_distances(train) <= eps).sum(axis=1)  # self counts
    core = np.flatnonzero(counts >= min_pts)
    return DbscanModel(train=train, core_indices=core, eps=float(eps), min_pts=min_pts)


def predict_dbscan(model: DbscanModel, x) -> Vote:
    x = check_dimension(model.dim, x)
    cores = model.core_points
    if len(cores) == 0:
        return Vote.ANOMALY
    nearest = float(np.sqrt(((cores - x) ** 2).sum(axis=1).min()))
    return Vote.NORMAL if nearest <= model.eps else Vote.ANOMALY
