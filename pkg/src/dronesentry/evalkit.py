"""Metrics and the experiment harness.

The harness regenerates the evaluation protocol on simulator corpora: train
on seeded clean runs of the fixed base mission, then score recall on six
fault suites and the false-positive rate on clean randomised missions, with
an ablation comparing rules-only, ensemble-only and combined fusion.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import pipeline as pl
from . import simkit
from .config import Config
from .detectors import (
    DETECTOR_NAMES,
    DetectorBundle,
    Vote,
    feature_matrix,
    fit_bundle,
)
from .detectors.dbscan import predict_dbscan
from .detectors.kmeans import predict_kmeans
from .detectors.lof import predict_lof
from .detectors.ocsvm import predict_ocsvm
from .detectors.optics import predict_optics
from .errors import LengthMismatch
from .phases import segment
from .rules import RuleSet, check_record, mine_ruleset
from .simkit import LabeledLog, base_mission, random_mission


@dataclass(frozen=True)
class Metrics:
    """Recall / false-positive counting; undefined rates stay None
    (all-anomalous data has no false-positive rate and vice versa)."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def recall(self):
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def false_positive_rate(self):
        neg = self.fp + self.tn
        return self.fp / neg if neg else None

    def to_dict(self):
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "recall": self.recall,
            "false_positive_rate": self.false_positive_rate,
        }


def evaluate(finals, labels) -> Metrics:
    """Count the confusion matrix of per-record decisions against ground
    truth. `finals` may be Votes or booleans (True = anomaly)."""
    finals = [f == Vote.ANOMALY if isinstance(f, Vote) else bool(f) for f in finals]
    labels = [bool(b) for b in labels]
    if len(finals) != len(labels):
        raise LengthMismatch(f"{len(finals)} verdicts vs {len(labels)} labels")
    tp = fp = tn = fn = 0
    for flagged, truth in zip(finals, labels):
        if truth:
            tp += flagged
            fn += not flagged
        else:
            fp += flagged
            tn += not flagged
    return Metrics(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class AblationResult:
    rules_only: Metrics
    ensemble_only: Metrics
    combined: Metrics
    per_detector: dict[str, Metrics]

    def to_dict(self):
        return {
            "rules_only": self.rules_only.to_dict(),
            "ensemble_only": self.ensemble_only.to_dict(),
            "combined": self.combined.to_dict(),
            "per_detector": {k: v.to_dict() for k, v in self.per_detector.items()},
        }


def ablation_from_verdicts(verdicts, labels) -> AblationResult:
    """Three fusion variants over identical per-record verdicts."""
    if len(verdicts) != len(labels):
        raise LengthMismatch(f"{len(verdicts)} verdicts vs {len(labels)} labels")
    rules_only = evaluate([pl.violations_only(v) for v in verdicts], labels)
    ensemble_only = evaluate([pl.majority_only(v) for v in verdicts], labels)
    fused = evaluate([pl.combined(v) for v in verdicts], labels)
    per_detector = {
        name: evaluate(
            [v.ensemble.votes[name] == Vote.ANOMALY for v in verdicts], labels,
        )
        for name in DETECTOR_NAMES
    }
    return AblationResult(rules_only, ensemble_only, fused, per_detector)


def run_ablation(labeled_logs, ruleset: RuleSet, bundle: DetectorBundle,
                 config: Config | None = None) -> AblationResult:
    """Analyze every log once, then score the three fusion configurations."""
    config = config or Config()
    pipe = pl.Pipeline(ruleset=ruleset, bundle=bundle, config=config)
    verdicts, labels = [], []
    for labeled in labeled_logs:
        vs, _ = pipe.analyze(labeled.log)
        verdicts.extend(vs)
        labels.extend(labeled.anomaly_mask)
    return ablation_from_verdicts(verdicts, labels)


# --- runtime benchmark ---

@dataclass(frozen=True)
class TimingStats:
    mean_ms: float
    median_ms: float
    max_ms: float

    def to_dict(self):
        return {"mean_ms": self.mean_ms, "median_ms": self.median_ms,
                "max_ms": self.max_ms}


def _stats(samples_s) -> TimingStats:
    ms = np.asarray(samples_s) * 1000.0
    return TimingStats(float(ms.mean()), float(np.median(ms)), float(ms.max()))


@dataclass(frozen=True)
class TimingReport:
    per_component: dict[str, TimingStats]
    samples: dict[str, tuple[float, ...]] = field(repr=False, default_factory=dict)

    def to_dict(self):
        return {k: v.to_dict() for k, v in self.per_component.items()}


def benchmark_latency(bundle: DetectorBundle | None, ruleset: RuleSet, log,
                      config: Config | None = None,
                      max_points: int | None = None) -> TimingReport:
    """Per-point wall time of rule checking and each detector, single
    threaded on a monotonic clock; pipeline rows are per-point sums.
    With no bundle the pipeline degenerates to rule checking alone."""
    config = config or Config()
    annotated = segment(log, alt_tol_m=config.phase.alt_tol_m,
                        pos_tol_m=config.phase.pos_tol_m)
    records = list(zip(annotated.log.records, annotated.phase_of))
    if max_points is not None:
        records = records[:max_points]

    predictors = {}
    if bundle is not None:
        predictors = {
            "kmeans": (bundle.kmeans, predict_kmeans),
            "dbscan": (bundle.dbscan, predict_dbscan),
            "optics": (bundle.optics, predict_optics),
            "lof": (bundle.lof, predict_lof),
            "ocsvm": (bundle.ocsvm, predict_ocsvm),
        }
    samples = {name: [] for name in predictors}
    samples["rules"] = []
    features = bundle.features if bundle is not None else None
    xs = (feature_matrix([rec for rec, _ in records], features)
          if bundle is not None else [None] * len(records))
    for (rec, phase), x in zip(records, xs):
        t0 = time.perf_counter()
        check_record(ruleset, rec, phase)
        samples["rules"].append(time.perf_counter() - t0)
        for name, (model, predict) in predictors.items():
            t0 = time.perf_counter()
            predict(model, x)
            samples[name].append(time.perf_counter() - t0)

    per_point = {name: np.asarray(vals) for name, vals in samples.items()}
    without_optics = sum(
        per_point[n] for n in ("rules", "kmeans", "dbscan", "lof", "ocsvm")
        if n in per_point
    )
    with_optics = without_optics + per_point.get("optics", 0.0)
    report = {name: _stats(vals) for name, vals in samples.items()}
    report["pipeline_without_optics"] = _stats(without_optics)
    report["pipeline_with_optics"] = _stats(with_optics)
    return TimingReport(
        per_component=report,
        samples={k: tuple(v) for k, v in samples.items()},
    )


# --- experiment protocol ---

SUITE_NAMES = ("windy_strong", "windy_mild", "actuator", "sensor_roll",
               "sensor_baro", "crash")

TRAIN_SEED_BASE = 1
EVAL_SEED_BASE = 101
CLEAN_SEED_BASE = 501
CRASH_AT_MS = 45_000
ACTUATOR_FACTOR = 0.7
STUCK_ROLL_VALUE = math.pi
STUCK_BARO_VALUE = 0.0


def build_training_corpus(n_runs=30, seed_base=TRAIN_SEED_BASE) -> list[LabeledLog]:
    """Clean seeded missions with randomised geometry: rule envelopes ignore
    mission geometry, while the detectors need heading coverage to
    generalise across missions."""
    return [
        simkit.simulate(random_mission(seed_base + i), (), seed=seed_base + i)
        for i in range(n_runs)
    ]


def train_artifacts(corpus, config: Config, seed: int = 0):
    """Mine the rule set and fit the detector bundle from clean logs."""
    annotated = [
        segment(lab.log, alt_tol_m=config.phase.alt_tol_m,
                pos_tol_m=config.phase.pos_tol_m)
        for lab in corpus
    ]
    ruleset, report = mine_ruleset(
        annotated,
        min_support=config.rules.min_support,
        holding_threshold=config.rules.holding_threshold,
        widen_budget=config.rules.widen_budget,
        bins=config.rules.bins,
        latency_ms=config.rules.latency_ms,
        numeric_features=config.rules.numeric_features,
        categorical_features=config.rules.categorical_features,
        provenance=tuple(f"train-seed-{TRAIN_SEED_BASE}+{i}" for i in range(len(corpus))),
    )
    pooled = np.vstack([
        feature_matrix(lab.log.records, config.detect.features) for lab in corpus
    ])
    rng = np.random.default_rng(seed)
    if len(pooled) > config.detect.max_train:
        idx = np.sort(rng.choice(len(pooled), config.detect.max_train, replace=False))
        pooled = pooled[idx]
    bundle = fit_bundle(
        pooled,
        features=config.detect.features,
        seed=seed,
        kmeans_k=config.detect.kmeans_k,
        kmeans_threshold_pct=config.detect.kmeans_threshold_pct,
        dbscan_eps=config.detect.dbscan_eps,
        dbscan_min_pts=config.detect.dbscan_min_pts,
        optics_min_pts=config.detect.optics_min_pts,
        optics_threshold_pct=config.detect.optics_threshold_pct,
        lof_k=config.detect.lof_k,
        lof_threshold=config.detect.lof_threshold,
        ocsvm_nu=config.detect.ocsvm_nu,
        ocsvm_gamma=config.detect.ocsvm_gamma,
    )
    return ruleset, bundle, report


def build_fault_suites(runs=5, seed_base=EVAL_SEED_BASE) -> dict[str, list[LabeledLog]]:
    """Seeded fault runs per archetype, plus clean random missions under
    the key "clean_random"."""
    mission = base_mission()
    suites: dict[str, list[LabeledLog]] = {name: [] for name in SUITE_NAMES}
    for i in range(runs):
        seed = seed_base + i
        strong, mild = simkit.windy_pair(mission, seed)
        suites["windy_strong"].append(strong)
        suites["windy_mild"].append(mild)
        suites["actuator"].append(simkit.simulate(
            mission, (simkit.ActuatorCapacity(ACTUATOR_FACTOR),), seed))
        suites["sensor_roll"].append(simkit.simulate(
            mission, (simkit.SensorStuck("roll", STUCK_ROLL_VALUE),), seed))
        suites["sensor_baro"].append(simkit.simulate(
            mission, (simkit.SensorStuck("baro_status", STUCK_BARO_VALUE),), seed))
        suites["crash"].append(simkit.simulate(
            mission, (simkit.EngineCutoff(at_ms=CRASH_AT_MS),), seed))
    suites["clean_random"] = [
        simkit.simulate(random_mission(CLEAN_SEED_BASE + i), (), CLEAN_SEED_BASE + i)
        for i in range(runs)
    ]
    return suites


@dataclass
class ExperimentReport:
    rule_count: int
    train_size: int
    suites: dict[str, AblationResult]
    wall_seconds: float

    def to_dict(self):
        return {
            "rule_count": self.rule_count,
            "train_size": self.train_size,
            "wall_seconds": self.wall_seconds,
            "suites": {k: v.to_dict() for k, v in self.suites.items()},
        }

    def recall_table(self) -> str:
        return render_results_table(self)


def run_experiment(config: Config | None = None, runs=5, n_train=30,
                   seed: int = 0) -> ExperimentReport:
    """The full protocol: train, then score every suite with the ablation."""
    config = config or Config()
    t0 = time.perf_counter()
    corpus = build_training_corpus(n_runs=n_train)
    ruleset, bundle, _ = train_artifacts(corpus, config, seed=seed)
    suites = build_fault_suites(runs=runs)
    results = {
        name: run_ablation(labeled, ruleset, bundle, config)
        for name, labeled in suites.items()
    }
    return ExperimentReport(
        rule_count=len(ruleset.range_rules),
        train_size=len(bundle.train),
        suites=results,
        wall_seconds=time.perf_counter() - t0,
    )


def _pct(value) -> str:
    return "N.A" if value is None else f"{100.0 * value:.2f}"


def render_results_table(report: ExperimentReport) -> str:
    """Plain-text tables mirroring the recall / false-positive layout of
    the evaluation protocol."""
    lines = []
    header = f"{'Suite':16s} {'Recall':>8s} {'FP rate':>8s}"
    for title, pick in [
        ("Combined detection rates (%)", lambda a: a.combined),
        ("Rule-checking only (%)", lambda a: a.rules_only),
        ("Ensemble only (%)", lambda a: a.ensemble_only),
    ]:
        lines.append(title)
        lines.append(header)
        for name, result in report.suites.items():
            m = pick(result)
            lines.append(
                f"{name:16s} {_pct(m.recall):>8s} {_pct(m.false_positive_rate):>8s}"
            )
        lines.append("")
    lines.append("Per-detector recall / FP (%)")
    lines.append(f"{'Suite':16s} " + " ".join(f"{n:>7s}" for n in DETECTOR_NAMES))
    for name, result in report.suites.items():
        row = []
        for det in DETECTOR_NAMES:
            m = result.per_detector[det]
            value = m.recall if m.recall is not None else m.false_positive_rate
            row.append(_pct(value))
        lines.append(f"{name:16s} " + " ".join(f"{v:>7s}" for v in row))
    return "\n".join(lines) + "\n"
