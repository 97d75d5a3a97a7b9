"""Batch and streaming glue: segment a log, check rules, run the ensemble
and fuse the decisions per record."""

from dataclasses import dataclass

from . import ensemble as ens
from . import rules as rulemod
from .config import Config
from .detectors import DetectorBundle, Vote
from .phases import PhaseTracker, segment
from .rules import RuleSet
from .telemetry import FlightLog, LogRecord


@dataclass
class Pipeline:
    ruleset: RuleSet
    bundle: DetectorBundle
    config: Config

    def analyze(self, log: FlightLog):
        """Per-record verdicts plus command-latency violations.

        Latency violations are evaluated once against the whole command
        stream with "now" at the last record's timestamp.
        """
        annotated = segment(
            log,
            alt_tol_m=self.config.phase.alt_tol_m,
            pos_tol_m=self.config.phase.pos_tol_m,
        )
        verdicts = []
        for idx, (rec, phase) in enumerate(zip(log.records, annotated.phase_of)):
            verdicts.append(self._verdict(rec, phase, idx))
        latency = []
        if self.ruleset.latency_rule is not None and log.records:
            latency = rulemod.check_latency(
                self.ruleset.latency_rule, log.commands,
                now_ms=log.records[-1].timestamp_ms,
            )
        return verdicts, latency

    def _verdict(self, rec: LogRecord, phase, idx) -> ens.PointVerdict:
        violations = rulemod.check_record(self.ruleset, rec, phase, record_index=idx)
        votes = self.bundle.predict_record(rec)
        verdict = ens.vote(votes)
        return ens.decide(violations, verdict, timestamp_ms=rec.timestamp_ms)


@dataclass
class StreamMonitor:
    """Stateful per-record monitor for live streams."""

    pipeline: Pipeline
    tracker: PhaseTracker
    window: ens.WindowState
    index: int = 0

    def step(self, rec: LogRecord):
        phase = self.tracker.advance(rec)
        verdict = self.pipeline._verdict(rec, phase, self.index)
        self.index += 1
        _, alert = ens.stream_step(self.window, verdict)
        return verdict, alert


def make_monitor(pipeline: Pipeline, meta) -> StreamMonitor:
    cfg = pipeline.config
    return StreamMonitor(
        pipeline=pipeline,
        tracker=PhaseTracker(
            meta, alt_tol_m=cfg.phase.alt_tol_m, pos_tol_m=cfg.phase.pos_tol_m,
        ),
        window=ens.WindowState(
            window_len=cfg.window.length,
            alert_fraction=cfg.window.alert_fraction,
            sustained_run=cfg.window.sustained_run,
        ),
    )


# fusion variants used by the ablation study
def violations_only(verdict: ens.PointVerdict) -> bool:
    return len(verdict.rule_violations) > 0


def majority_only(verdict: ens.PointVerdict) -> bool:
    return verdict.ensemble.majority == Vote.ANOMALY


def combined(verdict: ens.PointVerdict) -> bool:
    return verdict.final == Vote.ANOMALY
