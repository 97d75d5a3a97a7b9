"""Majority voting, rule fusion and sliding-window alerting.

The fusion is a hard OR: a point is anomalous when any rule is broken or
when at least three of the five detectors vote anomaly. Alerts fire only
when the anomalous share of the window exceeds the configured fraction and
the current anomalous run is long enough to rule out isolated blips.
"""

from collections import deque
from dataclasses import dataclass, field

from .detectors import DETECTOR_LABELS, DETECTOR_NAMES, Vote
from .errors import WrongArity
from .rules import Violation

MAJORITY = 3

DEFAULT_WINDOW_LEN = 10
DEFAULT_ALERT_FRACTION = 0.3
DEFAULT_SUSTAINED_RUN = 3


@dataclass(frozen=True)
class EnsembleVerdict:
    votes: dict[str, Vote]
    majority: Vote


def vote(votes) -> EnsembleVerdict:
    """Combine exactly five detector votes into the ensemble majority."""
    if isinstance(votes, dict):
        if sorted(votes) != sorted(DETECTOR_NAMES):
            raise WrongArity(f"expected votes from {DETECTOR_NAMES}, got {sorted(votes)}")
        named = dict(votes)
    else:
        votes = list(votes)
        if len(votes) != len(DETECTOR_NAMES):
            raise WrongArity(f"expected 5 votes, got {len(votes)}")
        named = dict(zip(DETECTOR_NAMES, votes))
    anomalies = sum(1 for v in named.values() if v == Vote.ANOMALY)
    majority = Vote.ANOMALY if anomalies >= MAJORITY else Vote.NORMAL
    return EnsembleVerdict(votes=named, majority=majority)


@dataclass(frozen=True)
class PointVerdict:
    timestamp_ms: int
    rule_violations: tuple[Violation, ...]
    ensemble: EnsembleVerdict
    final: Vote
    explanation: tuple[str, ...]


def decide(rule_violations, ensemble: EnsembleVerdict,
           timestamp_ms: int = 0) -> PointVerdict:
    """Fuse rule checking and the ensemble by the decision matrix:
    anomaly unless no rule broke and the majority voted normal."""
    rule_violations = tuple(rule_violations)
    broken = len(rule_violations) > 0
    final = Vote.ANOMALY if broken or ensemble.majority == Vote.ANOMALY else Vote.NORMAL
    explanation = [v.description for v in rule_violations]
    if ensemble.majority == Vote.ANOMALY:
        detail = " ".join(
            f"{DETECTOR_LABELS[name]}:{'A' if v == Vote.ANOMALY else 'N'}"
            for name, v in ensemble.votes.items()
        )
        explanation.append(f"ensemble majority voted anomaly ({detail})")
    return PointVerdict(
        timestamp_ms=timestamp_ms,
        rule_violations=rule_violations,
        ensemble=ensemble,
        final=final,
        explanation=tuple(explanation),
    )


@dataclass(frozen=True)
class Alert:
    timestamp_ms: int
    window_fraction: float
    run_length: int
    explanation: tuple[str, ...]


@dataclass
class WindowState:
    """Per-stream sliding window over the last window_len final decisions."""

    window_len: int = DEFAULT_WINDOW_LEN
    alert_fraction: float = DEFAULT_ALERT_FRACTION
    sustained_run: int = DEFAULT_SUSTAINED_RUN
    ring: deque = field(default_factory=deque)
    run_length: int = 0

    def __post_init__(self):
        self.ring = deque(self.ring, maxlen=self.window_len)

    def step(self, verdict: PointVerdict) -> Alert | None:
        anomalous = verdict.final == Vote.ANOMALY
        self.ring.append(anomalous)
        self.run_length = self.run_length + 1 if anomalous else 0
        fraction = sum(self.ring) / len(self.ring)
        if fraction > self.alert_fraction and self.run_length >= self.sustained_run:
            return Alert(
                timestamp_ms=verdict.timestamp_ms,
                window_fraction=fraction,
                run_length=self.run_length,
                explanation=verdict.explanation,
            )
        return None


def stream_step(state: WindowState, verdict: PointVerdict):
    """Advance one stream step; returns (state, alert-or-None)."""
    alert = state.step(verdict)
    return state, alert


def verdict_line(verdict: PointVerdict) -> str:
    """One-line rendering used on the stream output."""
    rules_part = ",".join(sorted({v.feature for v in verdict.rule_violations}))
    votes_part = " ".join(
        f"{DETECTOR_LABELS[name]}:{'A' if v == Vote.ANOMALY else 'N'}"
        for name, v in verdict.ensemble.votes.items()
    )
    return (
        f"ts={verdict.timestamp_ms} final={verdict.final.value} "
        f"rules=[{rules_part}] votes={votes_part}"
    )


def alert_line(alert: Alert) -> str:
    return f"ALERT window_frac={alert.window_fraction:.2f} run={alert.run_length}"
