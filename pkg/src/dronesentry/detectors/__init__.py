"""Five from-scratch unsupervised detectors with a uniform
fit-on-normal-data / predict-per-point contract.

Every model is fitted on raw, unscaled feature vectors (position, speed and
angles are absolute quantities; scaling would distort them). A fitted model
is immutable; predictions are pure functions of (model, point).
"""

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import DimensionMismatch, InvalidParams
from ..telemetry import LogRecord

DEFAULT_FEATURES = (
    "rel_alt", "roll", "pitch", "yaw", "throttle", "groundspeed", "climb",
)

DETECTOR_NAMES = ("kmeans", "dbscan", "optics", "lof", "ocsvm")
DETECTOR_LABELS = {"kmeans": "KM", "dbscan": "DB", "optics": "OP",
                   "lof": "LOF", "ocsvm": "SVM"}


class Vote(Enum):
    ANOMALY = "ANOMALY"
    NORMAL = "NORMAL"


def feature_vector(record: LogRecord, features=DEFAULT_FEATURES) -> np.ndarray:
    vec = np.array([float(getattr(record, f)) for f in features], dtype=float)
    if not np.all(np.isfinite(vec)):
        raise InvalidParams(f"non-finite feature value in record at {record.timestamp_ms}")
    return vec


def feature_matrix(records, features=DEFAULT_FEATURES) -> np.ndarray:
    rows = [feature_vector(rec, features) for rec in records]
    if not rows:
        return np.empty((0, len(features)))
    return np.vstack(rows)


def check_dimension(model_dim: int, x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model_dim:
        raise DimensionMismatch(
            f"expected a {model_dim}-dimensional point, got shape {x.shape}"
        )
    return x


def pairwise_distances(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    b = a if b is None else b
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(np.maximum(d2, 0.0))


from .kmeans import KMeansModel, fit_kmeans, predict_kmeans  # noqa: E402
from .dbscan import DbscanModel, fit_dbscan, predict_dbscan  # noqa: E402
from .optics import OpticsModel, fit_optics, predict_optics  # noqa: E402
from .lof import LofModel, fit_lof, lof_score, predict_lof  # noqa: E402
from .ocsvm import OcsvmModel, decision_ocsvm, fit_ocsvm, predict_ocsvm  # noqa: E402

BUNDLE_VERSION = 1


@dataclass(frozen=True)
class DetectorBundle:
    """The five fitted models sharing one training matrix, plus the feature
    subset and ordering that predictions must agree with."""

    features: tuple[str, ...]
    train: np.ndarray
    kmeans: KMeansModel
    dbscan: DbscanModel
    optics: OpticsModel
    lof: LofModel
    ocsvm: OcsvmModel
    seed: int

    @property
    def dim(self):
        return len(self.features)

    def predict_votes(self, x) -> dict[str, Vote]:
        return {
            "kmeans": predict_kmeans(self.kmeans, x),
            "dbscan": predict_dbscan(self.dbscan, x),
            "optics": predict_optics(self.optics, x),
            "lof": predict_lof(self.lof, x),
            "ocsvm": predict_ocsvm(self.ocsvm, x),
        }

    def predict_record(self, record: LogRecord) -> dict[str, Vote]:
        return self.predict_votes(feature_vector(record, self.features))


def fit_bundle(train: np.ndarray, features=DEFAULT_FEATURES, seed: int = 0,
               kmeans_k: int = 5, kmeans_threshold_pct: float = 99.5,
               dbscan_eps: float | None = None, dbscan_min_pts: int = 5,
               optics_min_pts: int = 5, optics_threshold_pct: float = 99.0,
               lof_k: int = 20, lof_threshold: float = 1.5,
               ocsvm_nu: float = 0.05, ocsvm_gamma: float | None = None) -> DetectorBundle:
    train = np.asarray(train, dtype=float)
    return DetectorBundle(
        features=tuple(features),
        train=train,
        kmeans=fit_kmeans(train, kmeans_k, seed=seed,
                          threshold_pct=kmeans_threshold_pct),
        dbscan=fit_dbscan(train, eps=dbscan_eps, min_pts=dbscan_min_pts),
        optics=fit_optics(train, min_pts=optics_min_pts,
                          threshold_pct=optics_threshold_pct),
        lof=fit_lof(train, k_neighbors=lof_k, threshold=lof_threshold),
        ocsvm=fit_ocsvm(train, nu=ocsvm_nu, gamma=ocsvm_gamma),
        seed=seed,
    )


def bundle_to_json(bundle: DetectorBundle) -> str:
    doc = {
        "version": BUNDLE_VERSION,
        "features": list(bundle.features),
        "seed": bundle.seed,
        "train": bundle.train.tolist(),
        "kmeans": {
            "centroids": bundle.kmeans.centroids.tolist(),
            "distance_threshold": bundle.kmeans.distance_threshold,
            "k": bundle.kmeans.k,
        },
        "dbscan": {
            "eps": bundle.dbscan.eps,
            "min_pts": bundle.dbscan.min_pts,
            "core_indices": bundle.dbscan.core_indices.tolist(),
        },
        "optics": {
            "min_pts": bundle.optics.min_pts,
            "reach_threshold": bundle.optics.reach_threshold,
        },
        "lof": {
            "k_neighbors": bundle.lof.k_neighbors,
            "lof_threshold": bundle.lof.lof_threshold,
        },
        "ocsvm": {
            "nu": bundle.ocsvm.nu,
            "gamma": bundle.ocsvm.gamma,
            "rho": bundle.ocsvm.rho,
            "alpha": bundle.ocsvm.alpha.tolist(),
            "kkt_residual": bundle.ocsvm.kkt_residual,
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def bundle_from_json(text: str) -> DetectorBundle:
    doc = json.loads(text)
    if doc.get("version") != BUNDLE_VERSION:
        raise InvalidParams(f"unsupported bundle version {doc.get('version')!r}")
    train = np.asarray(doc["train"], dtype=float)
    km = doc["kmeans"]
    db = doc["dbscan"]
    op = doc["optics"]
    lf = doc["lof"]
    oc = doc["ocsvm"]
    return DetectorBundle(
        features=tuple(doc["features"]),
        train=train,
        seed=doc["seed"],
        kmeans=KMeansModel(
            centroids=np.asarray(km["centroids"], dtype=float),
            distance_threshold=km["distance_threshold"],
            k=km["k"],
        ),
        dbscan=DbscanModel(
            train=train,
            core_indices=np.asarray(db["core_indices"], dtype=int),
            eps=db["eps"],
            min_pts=db["min_pts"],
        ),
        optics=OpticsModel(
            train=train,
            min_pts=op["min_pts"],
            reach_threshold=op["reach_threshold"],
        ),
        lof=LofModel(
            train=train,
            k_neighbors=lf["k_neighbors"],
            lof_threshold=lf["lof_threshold"],
        ),
        ocsvm=OcsvmModel(
            train=train,
            alpha=np.asarray(oc["alpha"], dtype=float),
            rho=oc["rho"],
            gamma=oc["gamma"],
            nu=oc["nu"],
            kkt_residual=oc["kkt_residual"],
        ),
    )


def save_bundle(bundle: DetectorBundle, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(bundle_to_json(bundle))


def load_bundle(path) -> DetectorBundle:
    with open(path, encoding="utf-8") as fh:
        return bundle_from_json(fh.read())
