"""k-means with an anomaly threshold on the nearest-centroid distance."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import TooFewPoints
from . import Vote, check_dimension


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray          # (k, d)
    distance_threshold: float      # 99.5th pct of training nearest distances
    k: int
    sse_history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def dim(self):
        return self.centroids.shape[1]


def fit_kmeans(train, k, seed=0, threshold_pct=99.5, max_iter=300) -> KMeansModel:
    """Lloyd iterations from seeded initial centroids until the assignment
    reaches a fixpoint (or 300 iterations)."""
    train = np.asarray(train, dtype=float)
    n = len(train)
    if k < 1 or n < k:
        raise TooFewPoints(f"need at least k={k} points, got {n}")

    rng = np.random.default_rng(seed)
    centroids = train[np.sort(rng.choice(n, size=k, replace=False))].copy()

    labels = None
    sse_history = []
    for _ in range(max_iter):
        d2 = ((train[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        # an empty cluster grabs the point farthest from its centroid
        for j in range(k):
            if not (new_labels == j).any():
                far = d2[np.arange(n), new_labels].argmax()
                new_labels[far] = j
        sse_history.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = np.vstack([train[labels == j].mean(axis=0) for j in range(k)])

    nearest = np.sqrt(
        ((train[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    )
    threshold = float(np.percentile(nearest, threshold_pct))
    return KMeansModel(
        centroids=centroids,
        distance_threshold=threshold,
        k=k,
        sse_history=tuple(sse_history),
    )


def predict_kmeans(model: KMeansModel, x) -> Vote:
    x = check_dimension(model.dim, x)
    dist = float(np.sqrt(((model.centroids - x) ** 2).sum(axis=1).min()))
    return Vote.ANOMALY if dist > model.distance_threshold else Vote.NORMAL
