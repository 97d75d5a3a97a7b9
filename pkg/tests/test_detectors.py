import math

import numpy as np
import pytest

from dronesentry.detectors import (
    DETECTOR_NAMES,
    Vote,
    bundle_from_json,
    bundle_to_json,
    feature_matrix,
    feature_vector,
    fit_bundle,
)
from dronesentry.detectors.dbscan import DbscanModel, fit_dbscan, predict_dbscan
from dronesentry.detectors.kmeans import KMeansModel, fit_kmeans, predict_kmeans
from dronesentry.detectors.lof import fit_lof, lof_score, predict_lof
from dronesentry.detectors.ocsvm import (
    decision_ocsvm,
    fit_ocsvm,
    kkt_residual,
    predict_ocsvm,
)
from dronesentry.detectors.optics import fit_optics, predict_optics, query_reachability
from dronesentry.errors import (
    DimensionMismatch,
    InvalidParams,
    NoConvergence,
    TooFewPoints,
)
from dronesentry.telemetry import FlightMode, LogRecord


# --- independent quadratic oracles, written from the definitions ---

def oracle_dbscan_cores(train, eps, min_pts):
    cores = set()
    for i in range(len(train)):
        count = sum(
            1 for j in range(len(train))
            if math.dist(train[i], train[j]) <= eps
        )
        if count >= min_pts:
            cores.add(i)
    return cores


def oracle_dbscan_vote(train, eps, min_pts, x):
    cores = oracle_dbscan_cores(train, eps, min_pts)
    for i in cores:
        if math.dist(train[i], x) <= eps:
            return Vote.NORMAL
    return Vote.ANOMALY


def oracle_optics_reachability(points, min_pts):
    n = len(points)
    dist = [[math.dist(points[i], points[j]) for j in range(n)] for i in range(n)]
    core = [sorted(row)[min_pts - 1] for row in dist]
    processed = [False] * n
    reach = [math.inf] * n
    for seed in range(n):
        if processed[seed]:
            continue
        current = seed
        while True:
            processed[current] = True
            if all(processed):
                break
            best, best_reach = None, math.inf
            for o in range(n):
                if processed[o]:
                    continue
                candidate = max(core[current], dist[current][o])
                if candidate < reach[o]:
                    reach[o] = candidate
                if reach[o] < best_reach:
                    best, best_reach = o, reach[o]
            if best is None or not math.isfinite(best_reach):
                break
            current = best
    return reach


def oracle_lof_score(train, k, x):
    n = len(train)
    d_train = [[math.dist(train[i], train[j]) for j in range(n)] for i in range(n)]
    k_dist = [sorted(row)[k] for row in d_train]  # self at index 0

    def lrd(idx):
        neighbors = [j for j in range(n) if j != idx and d_train[idx][j] <= k_dist[idx]]
        reach = [max(k_dist[j], d_train[idx][j]) for j in neighbors]
        mean = sum(reach) / len(reach)
        return math.inf if mean == 0 else 1.0 / mean

    dx = [math.dist(x, p) for p in train]
    kth = sorted(dx)[k - 1]
    neighbors = [j for j in range(n) if dx[j] <= kth]
    reach = [max(k_dist[j], dx[j]) for j in neighbors]
    mean_reach = sum(reach) / len(reach)
    if mean_reach == 0:
        return 1.0
    lrd_x = 1.0 / mean_reach
    return sum(lrd(j) for j in neighbors) / len(neighbors) / lrd_x


def clustered_instance(rng, n, d):
    centers = rng.normal(0, 4, size=(3, d))
    pts = np.vstack([
        centers[i % 3] + rng.normal(0, 0.5, size=d) for i in range(n)
    ])
    return pts


# --- k-means ---

def test_kmeans_single_centroid_is_mean():
    train = np.array([[0.0, 0.0], [0.1, 0.0], [-0.1, 0.0]])
    model = fit_kmeans(train, 1, seed=0)
    assert np.allclose(model.centroids, [[0.0, 0.0]])


def test_kmeans_k_equals_n_gives_zero_sse():
    train = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    model = fit_kmeans(train, 3, seed=0)
    assert model.sse_history[-1] == 0.0
    assert sorted(map(tuple, model.centroids)) == sorted(map(tuple, train))


def test_kmeans_too_few_points():
    with pytest.raises(TooFewPoints):
        fit_kmeans(np.zeros((3, 2)), 0)
    with pytest.raises(TooFewPoints):
        fit_kmeans(np.zeros((3, 2)), 4)


def test_kmeans_sse_non_increasing():
    rng = np.random.default_rng(5)
    train = clustered_instance(rng, 120, 3)
    model = fit_kmeans(train, 4, seed=2)
    sse = model.sse_history
    assert all(b <= a + 1e-9 for a, b in zip(sse, sse[1:]))


def test_kmeans_predict_threshold_and_dimension():
    model = KMeansModel(centroids=np.array([[0.0, 0.0]]), distance_threshold=1.0, k=1)
    assert predict_kmeans(model, np.array([5.0, 5.0])) == Vote.ANOMALY
    assert predict_kmeans(model, np.array([0.05, 0.0])) == Vote.NORMAL
    with pytest.raises(DimensionMismatch):
        predict_kmeans(model, np.array([1.0, 2.0, 3.0]))


# --- DBSCAN ---

def test_dbscan_worked_example():
    train = np.array([[0.0, 0.0], [0.2, 0.0], [5.0, 5.0]])
    model = fit_dbscan(train, eps=0.5, min_pts=2)
    assert set(model.core_indices) == {0, 1}
    assert predict_dbscan(model, np.array([0.1, 0.0])) == Vote.NORMAL
    assert predict_dbscan(model, np.array([10.0, 10.0])) == Vote.ANOMALY


def test_dbscan_invalid_params():
    train = np.zeros((4, 2))
    with pytest.raises(InvalidParams):
        fit_dbscan(train, eps=0.0, min_pts=2)
    with pytest.raises(InvalidParams):
        fit_dbscan(train, eps=1.0, min_pts=0)


@pytest.mark.parametrize("seed", range(5))
def test_dbscan_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    train = clustered_instance(rng, 80, 3)
    model = fit_dbscan(train, eps=1.0, min_pts=4)
    assert set(model.core_indices) == oracle_dbscan_cores(train, 1.0, 4)
    for x in rng.normal(0, 4, size=(20, 3)):
        assert predict_dbscan(model, x) == oracle_dbscan_vote(train, 1.0, 4, x)


# --- OPTICS ---

def test_optics_duplicate_point_normal_far_point_anomalous():
    rng = np.random.default_rng(1)
    train = rng.normal(0, 1, size=(60, 2))
    model = fit_optics(train, min_pts=5)
    assert predict_optics(model, train[17]) == Vote.NORMAL
    assert predict_optics(model, np.array([100.0, 100.0])) == Vote.ANOMALY


def test_optics_invalid_params():
    with pytest.raises(InvalidParams):
        fit_optics(np.zeros((5, 2)), min_pts=5)


@pytest.mark.parametrize("seed", range(4))
def test_optics_query_matches_oracle(seed):
    rng = np.random.default_rng(seed + 10)
    train = clustered_instance(rng, 50, 2)
    model = fit_optics(train, min_pts=4)
    for x in rng.normal(0, 5, size=(10, 2)):
        reach = query_reachability(model, x)
        oracle = oracle_optics_reachability(
            np.vstack([train, x[None, :]]), 4)[-1]
        assert math.isclose(reach, oracle, rel_tol=1e-9)
        vote = predict_optics(model, x)
        oracle_vote = (Vote.ANOMALY if not math.isfinite(oracle)
                       or oracle > model.reach_threshold else Vote.NORMAL)
        assert vote == oracle_vote


# --- LOF ---

def test_lof_grid_center_normal():
    grid = np.array([[i, j] for i in range(5) for j in range(5)], dtype=float)
    model = fit_lof(grid, k_neighbors=4)
    assert abs(lof_score(model, np.array([2.0, 2.0])) - 1.0) < 0.2
    assert predict_lof(model, np.array([2.0, 2.0])) == Vote.NORMAL


def test_lof_far_point_anomalous_and_matches_oracle():
    grid = np.array([[i, j] for i in range(5) for j in range(5)], dtype=float)
    model = fit_lof(grid, k_neighbors=4)
    x = np.array([100.0, 100.0])
    score = lof_score(model, x)
    assert score > 1.5
    assert predict_lof(model, x) == Vote.ANOMALY
    assert abs(score - oracle_lof_score(grid, 4, x)) < 1e-9


def test_lof_invalid_params():
    with pytest.raises(InvalidParams):
        fit_lof(np.zeros((10, 2)), k_neighbors=10)


@pytest.mark.parametrize("seed", range(4))
def test_lof_scores_match_oracle(seed):
    rng = np.random.default_rng(seed + 20)
    train = clustered_instance(rng, 60, 3)
    model = fit_lof(train, k_neighbors=6)
    for x in rng.normal(0, 4, size=(10, 3)):
        assert abs(lof_score(model, x) - oracle_lof_score(train, 6, x)) < 1e-9


# --- one-class SVM ---

def test_ocsvm_identical_training_points():
    train = np.ones((20, 3))
    model = fit_ocsvm(train, nu=0.2, gamma=0.5)
    assert predict_ocsvm(model, np.ones(3)) == Vote.NORMAL


def test_ocsvm_far_point_anomalous():
    rng = np.random.default_rng(3)
    train = rng.normal(0, 1, size=(100, 3))
    model = fit_ocsvm(train, nu=0.1, gamma=0.5)
    assert predict_ocsvm(model, np.full(3, 50.0)) == Vote.ANOMALY
    assert decision_ocsvm(model, np.full(3, 50.0)) < 0


@pytest.mark.parametrize("nu", [0.05, 0.1])
def test_ocsvm_nu_property_and_kkt(nu):
    rng = np.random.default_rng(7)
    train = rng.normal(0, 1, size=(200, 4))
    model = fit_ocsvm(train, nu=nu)
    outliers = np.mean([decision_ocsvm(model, x) < 0 for x in train])
    assert outliers <= nu + 0.02
    assert model.kkt_residual <= 1e-6
    assert kkt_residual(model) <= 1e-6
    # dual feasibility
    c = 1.0 / (nu * len(train))
    assert np.all(model.alpha >= -1e-12)
    assert np.all(model.alpha <= c + 1e-12)
    assert math.isclose(model.alpha.sum(), 1.0, rel_tol=1e-9)


def test_ocsvm_invalid_params_and_convergence_cap():
    train = np.random.default_rng(0).normal(0, 1, size=(50, 2))
    with pytest.raises(InvalidParams):
        fit_ocsvm(train, nu=0.0)
    with pytest.raises(InvalidParams):
        fit_ocsvm(train, nu=1.5)
    with pytest.raises(InvalidParams):
        fit_ocsvm(train, nu=0.1, gamma=-1.0)
    with pytest.raises(NoConvergence):
        fit_ocsvm(train, nu=0.5, max_iter=1)


# --- feature extraction and the bundle ---

def sample_record(**kw):
    base = dict(
        timestamp_ms=0, mode=FlightMode.AUTO, lat=0.0, lon=0.0, rel_alt=10.0,
        roll=0.01, pitch=-0.02, yaw=1.5, throttle=52.0, groundspeed=4.0,
        climb=0.1, baro_status=1, gps_fix=3, wp_index=0,
    )
    base.update(kw)
    return LogRecord(**base)


def test_feature_vector_order():
    vec = feature_vector(sample_record())
    assert vec.tolist() == [10.0, 0.01, -0.02, 1.5, 52.0, 4.0, 0.1]


def test_bundle_round_trip_and_determinism():
    rng = np.random.default_rng(9)
    train = rng.normal(0, 1, size=(80, 7)) + np.array([10, 0, 0, 0, 50, 4, 0])
    bundle = fit_bundle(train, seed=3, lof_k=5, dbscan_min_pts=3,
                        optics_min_pts=3)
    text = bundle_to_json(bundle)
    again = fit_bundle(train, seed=3, lof_k=5, dbscan_min_pts=3,
                       optics_min_pts=3)
    assert bundle_to_json(again) == text

    loaded = bundle_from_json(text)
    x = train[0] + 0.1
    votes = bundle.predict_votes(x)
    assert set(votes) == set(DETECTOR_NAMES)
    assert loaded.predict_votes(x) == votes
    far = bundle.predict_votes(np.full(7, 1000.0))
    assert all(v == Vote.ANOMALY for v in far.values())


def test_feature_matrix_shape():
    records = [sample_record(timestamp_ms=200 * i) for i in range(4)]
    m = feature_matrix(records)
    assert m.shape == (4, 7)
