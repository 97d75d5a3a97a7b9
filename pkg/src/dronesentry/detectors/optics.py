"""OPTICS reachability as a novelty score.

A prediction appends the query point to the training data, re-runs the
standard OPTICS ordering (core distance / reachability distance, unbounded
neighbourhood radius) and thresholds the query's reachability at the 99th
percentile of the training reachabilities.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams
from . import Vote, check_dimension, pairwise_distances


@dataclass(frozen=True)
class OpticsModel:
    train: np.ndarray
    min_pts: int
    reach_threshold: float
    # cached training distances; rebuilt after deserialization
    _dists: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def dim(self):
        return self.train.shape[1]

    def train_dists(self) -> np.ndarray:
        d = self._dists
        if d is None:
            d = pairwise_distances(self.train)
            object.__setattr__(self, "_dists", d)
        return d


def reachability_order(dists: np.ndarray, min_pts: int):
    """Run the OPTICS ordering on a full distance matrix.

    Returns (order, reachability); the first point of each connected
    expansion keeps an infinite (undefined) reachability. With an unbounded
    radius every point is a core point, so a single expansion covers all.
    """
    n = len(dists)
    # core distance: min_pts-th smallest including the zero self-distance
    core = np.partition(dists, min_pts - 1, axis=1)[:, min_pts - 1]
    processed = np.zeros(n, dtype=bool)
    reach = np.full(n, np.inf)
    order = []
    for seed in range(n):
        if processed[seed]:
            continue
        current = seed
        while True:
            processed[current] = True
            order.append(current)
            if processed.all():
                break
            unproc = ~processed
            new_reach = np.maximum(core[current], dists[current])
            reach[unproc] = np.minimum(reach[unproc], new_reach[unproc])
            masked = np.where(unproc, reach, np.inf)
            nxt = int(masked.argmin())
            if not np.isfinite(masked[nxt]):
                break
            current = nxt
    return order, reach


def fit_optics(train, min_pts=5, threshold_pct=99.0) -> OpticsModel:
    train = np.asarray(train, dtype=float)
    if not 1 <= min_pts < len(train):
        raise InvalidParams(f"min_pts must be in [1, n): {min_pts} vs n={len(train)}")
    dists = pairwise_distances(train)
    _, reach = reachability_order(dists, min_pts)
    finite = reach[np.isfinite(reach)]
    threshold = float(np.percentile(finite, threshold_pct)) if len(finite) else 0.0
    return OpticsModel(
        train=train, min_pts=min_pts, reach_threshold=threshold, _dists=dists,
    )


def predict_optics(model: OpticsModel, x) -> Vote:
    x = check_dimension(model.dim, x)
    reach = query_reachability(model, x)
    if not np.isfinite(reach) or reach > model.reach_threshold:
        return Vote.ANOMALY
    return Vote.NORMAL


def query_reachability(model: OpticsModel, x) -> float:
    """Reachability of x after re-fitting the ordering on train + [x]."""
    x = check_dimension(model.dim, x)
    n = len(model.train)
    base = model.train_dists()
    dx = np.sqrt(((model.train - x) ** 2).sum(axis=1))
    aug = np.empty((n + 1, n + 1))
    aug[:n, :n] = base
    aug[:n, n] = dx
    aug[n, :n] = dx
    aug[n, n] = 0.0
    _, reach = reachability_order(aug, model.min_pts)
    return float(reach[n])
