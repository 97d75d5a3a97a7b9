import numpy as np
import pytest

from dronesentry import evalkit, simkit
from dronesentry.config import Config
from dronesentry.detectors import Vote
from dronesentry.ensemble import decide, vote
from dronesentry.errors import LengthMismatch
from dronesentry.evalkit import (
    ablation_from_verdicts,
    benchmark_latency,
    evaluate,
)
from dronesentry.phases import segment
from dronesentry.rules import LatencyRule, RuleSet, Violation, mine_ruleset

A, N = Vote.ANOMALY, Vote.NORMAL


def test_evaluate_counts_and_rates():
    finals = [True, True, False, False, True]
    labels = [True, False, True, False, True]
    m = evaluate(finals, labels)
    assert (m.tp, m.fp, m.tn, m.fn) == (2, 1, 1, 1)
    assert m.recall == pytest.approx(2 / 3)
    assert m.false_positive_rate == pytest.approx(1 / 2)


def test_evaluate_perfect_detector_on_anomalous_data():
    m = evaluate([True] * 10, [True] * 10)
    assert m.recall == 1.0
    assert m.false_positive_rate is None


def test_evaluate_clean_reference_rate():
    # 7 flagged of 300 clean records: 2.33%
    finals = [True] * 7 + [False] * 293
    m = evaluate(finals, [False] * 300)
    assert m.recall is None
    assert m.false_positive_rate == pytest.approx(7 / 300)
    assert round(100 * m.false_positive_rate, 2) == 2.33


def test_evaluate_none_flagged_all_normal():
    m = evaluate([False] * 5, [False] * 5)
    assert m.false_positive_rate == 0.0
    assert m.recall is None


def test_evaluate_length_mismatch():
    with pytest.raises(LengthMismatch):
        evaluate([True], [True, False])


def test_evaluate_random_against_hand_count():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 50))
        finals = rng.random(n) < 0.4
        labels = rng.random(n) < 0.5
        m = evaluate(finals.tolist(), labels.tolist())
        assert m.tp == int(np.sum(finals & labels))
        assert m.fp == int(np.sum(finals & ~labels))
        assert m.tn == int(np.sum(~finals & ~labels))
        assert m.fn == int(np.sum(~finals & labels))


def make_verdict(broken, anomaly_votes, ts=0):
    votes = [A] * anomaly_votes + [N] * (5 - anomaly_votes)
    violations = (Violation(description="v", feature="roll", observed=1.0,
                            lower=0.0, upper=0.5),) if broken else ()
    return decide(violations, vote(votes), timestamp_ms=ts)


def test_ablation_or_fusion_monotone():
    rng = np.random.default_rng(1)
    verdicts, labels = [], []
    for i in range(400):
        verdicts.append(make_verdict(bool(rng.random() < 0.3),
                                     int(rng.integers(0, 6)), ts=i))
        labels.append(bool(rng.random() < 0.5))
    result = ablation_from_verdicts(verdicts, labels)
    assert result.combined.recall >= max(result.rules_only.recall,
                                         result.ensemble_only.recall)
    assert result.combined.false_positive_rate >= max(
        result.rules_only.false_positive_rate,
        result.ensemble_only.false_positive_rate,
    )
    # combined equals the OR exactly
    assert result.combined.tp + result.combined.fp == sum(
        1 for v in verdicts
        if v.rule_violations or v.ensemble.majority == A
    )


@pytest.fixture(scope="module")
def small_artifacts():
    config = Config()
    corpus = [simkit.simulate(simkit.random_mission(s), (), s) for s in range(1, 7)]
    ruleset, bundle, _ = evalkit.train_artifacts(corpus, config, seed=0)
    return config, corpus, ruleset, bundle


def test_benchmark_latency_components(small_artifacts):
    config, corpus, ruleset, bundle = small_artifacts
    report = benchmark_latency(bundle, ruleset, corpus[0].log, config,
                               max_points=30)
    keys = set(report.per_component)
    assert {"rules", "kmeans", "dbscan", "optics", "lof", "ocsvm",
            "pipeline_without_optics", "pipeline_with_optics"} <= keys
    with_o = report.per_component["pipeline_with_optics"].mean_ms
    without_o = report.per_component["pipeline_without_optics"].mean_ms
    assert with_o > without_o
    assert all(s.mean_ms >= 0 for s in report.per_component.values())


def test_benchmark_latency_rules_only(small_artifacts):
    config, corpus, ruleset, _ = small_artifacts
    report = benchmark_latency(None, ruleset, corpus[0].log, config,
                               max_points=20)
    rules = report.per_component["rules"]
    pipeline = report.per_component["pipeline_with_optics"]
    assert rules.mean_ms == pipeline.mean_ms


def test_run_ablation_on_stuck_roll(small_artifacts):
    config, corpus, ruleset, bundle = small_artifacts
    lab = simkit.simulate(
        simkit.base_mission(), (simkit.SensorStuck("roll", 3.14159),), 99,
    )
    result = evalkit.run_ablation([lab], ruleset, bundle, config)
    assert result.rules_only.recall == 1.0
    assert result.combined.recall == 1.0
    assert set(result.per_detector) == {"kmeans", "dbscan", "optics", "lof", "ocsvm"}


def test_rule_soundness_on_training(small_artifacts):
    config, corpus, ruleset, _ = small_artifacts
    annotated = [segment(lab.log) for lab in corpus]
    from dronesentry.rules import encode_value
    for rule in ruleset.range_rules:
        values = []
        for ann in annotated:
            for rec, phase in zip(ann.log.records, ann.phase_of):
                if rule.covers(phase):
                    values.append(encode_value(rec, rule.feature))
        violating = sum(1 for v in values if v < rule.lower or v > rule.upper)
        fraction = violating / len(values)
        assert fraction <= 0.01
        if rule.holding_fraction == 1.0:
            assert violating == 0
