"""Command-line entry point.

Exit codes: 0 clean, 1 anomalies found (detect/stream), 2 usage or config
errors.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ensemble as ens
from . import evalkit, figures, pipeline, simkit, telemetry
from .config import Config
from .detectors import (
    bundle_to_json,
    feature_matrix,
    fit_bundle,
    load_bundle,
)
from .errors import DroneSentryError
from .phases import segment
from .rules import RuleSet, mine_ruleset
from .simkit import LabeledLog

USAGE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dronesentry",
        description="Drone flight-log anomaly detection: mined phase rules "
                    "plus a five-model unsupervised ensemble.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="config override, e.g. rules.min_support=0.1")
    common.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("simulate", help="run the mission simulator")
    p.add_argument("--mission", default="base",
                   help="'base', 'random', or a mission JSON file")
    p.add_argument("--fault", action="append", default=[], metavar="SPEC",
                   help="e.g. wind:speed=12,dir=1.57,start=0,end=600000")
    p.add_argument("--cruise", type=float, default=simkit.BASE_CRUISE)
    p.add_argument("--tick-ms", type=int, default=simkit.BASE_TICK_MS)
    p.add_argument("--name", default=None, help="output file stem")
    p.add_argument("--out", required=True, help="output directory")

    p = add_parser("mine", help="mine a rule set from clean logs")
    p.add_argument("--logs", nargs="+", required=True,
                   help="log files or directories of .csv logs")
    p.add_argument("--out", required=True, help="ruleset JSON path")

    p = add_parser("fit", help="fit the detector bundle from clean logs")
    p.add_argument("--logs", nargs="+", required=True)
    p.add_argument("--out", required=True, help="bundle JSON path")

    p = add_parser("detect", help="batch detection over one log")
    p.add_argument("--log", required=True)
    p.add_argument("--rules", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--labels", help="ground-truth label CSV for recall")
    p.add_argument("--out", help="verdict CSV path")

    p = add_parser("stream", help="monitor records from stdin")
    p.add_argument("--rules", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--mission", required=True,
                   help="mission metadata JSON (for phase tracking)")

    p = add_parser("eval", help="run the full evaluation protocol")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--train-runs", type=int, default=30)
    p.add_argument("--out", required=True, help="report directory")

    p = add_parser("bench", help="per-point runtime benchmark")
    p.add_argument("--rules", default=None)
    p.add_argument("--bundle", default=None)
    p.add_argument("--train-runs", type=int, default=30)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--out", required=True, help="report directory")
    return parser


def load_config(args) -> Config:
    config = Config.load(args.config) if args.config else Config()
    for override in args.set:
        config.apply_override(override)
    return config


def _load_mission(args) -> simkit.MissionSpec:
    if args.mission == "base":
        return simkit.base_mission()
    if args.mission == "random":
        return simkit.random_mission(args.seed)
    meta = telemetry.MissionMeta.from_json(Path(args.mission).read_text())
    return simkit.MissionSpec(
        home=meta.home,
        takeoff_alt_m=meta.takeoff_alt_m,
        waypoints=meta.waypoints,
        cruise_speed=args.cruise,
        tick_ms=args.tick_ms,
    )


def cmd_simulate(args, config: Config) -> int:
    mission = _load_mission(args)
    faults = tuple(simkit.parse_fault_spec(text) for text in args.fault)
    labeled = simkit.simulate(mission, faults, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or f"sim_seed{args.seed}"
    log_path = out / f"{stem}.csv"
    labels_path = out / f"{stem}.labels.csv"
    log_path.write_text(telemetry.write_log(labeled.log))
    labels_path.write_text(simkit.write_labels(labeled))
    print(f"wrote {log_path} ({len(labeled.log)} records) and {labels_path}")
    return 0


def _gather_logs(paths) -> list[telemetry.FlightLog]:
    files = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(
                f for f in p.glob("*.csv") if not f.name.endswith(".labels.csv")
            ))
        else:
            files.append(p)
    if not files:
        raise DroneSentryError(f"no log files found under {list(paths)}")
    return [telemetry.load_log(f) for f in files]


def cmd_mine(args, config: Config) -> int:
    logs = _gather_logs(args.logs)
    annotated = [
        segment(log, config.phase.alt_tol_m, config.phase.pos_tol_m)
        for log in logs
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
        provenance=tuple(str(p) for p in args.logs),
    )
    Path(args.out).write_text(
        json.dumps(ruleset.to_json_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(f"mined {len(ruleset.range_rules)} rules from "
          f"{report.transactions} records across {len(logs)} logs "
          f"({len(report.widened)} widened, {len(report.dropped)} dropped)")
    print(f"wrote {args.out}")
    return 0


def cmd_fit(args, config: Config) -> int:
    logs = _gather_logs(args.logs)
    pooled = np.vstack([
        feature_matrix(log.records, config.detect.features) for log in logs
    ])
    rng = np.random.default_rng(args.seed)
    if len(pooled) > config.detect.max_train:
        idx = np.sort(rng.choice(len(pooled), config.detect.max_train, replace=False))
        pooled = pooled[idx]
    bundle = fit_bundle(
        pooled,
        features=config.detect.features,
        seed=args.seed,
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
    Path(args.out).write_text(bundle_to_json(bundle))
    print(f"fitted 5 detectors on {len(pooled)} points; wrote {args.out}")
    return 0


def _load_pipeline(args, config: Config) -> pipeline.Pipeline:
    ruleset = RuleSet.from_json_dict(json.loads(Path(args.rules).read_text()))
    bundle = load_bundle(args.bundle)
    return pipeline.Pipeline(ruleset=ruleset, bundle=bundle, config=config)


def cmd_detect(args, config: Config) -> int:
    pipe = _load_pipeline(args, config)
    log = telemetry.load_log(args.log)
    verdicts, latency_violations = pipe.analyze(log)
    anomalies = sum(1 for v in verdicts if pipeline.combined(v))
    # isolated anomalous rows are reported but only sustained runs fail the
    # exit code, mirroring the alerting criterion
    longest_run = run = 0
    for v in verdicts:
        run = run + 1 if pipeline.combined(v) else 0
        longest_run = max(longest_run, run)
    sustained = longest_run >= config.window.sustained_run

    if args.out:
        lines = ["timestamp_ms,final,n_rule_violations,majority,votes"]
        for v in verdicts:
            votes = "".join(
                "A" if vv.value == "ANOMALY" else "N"
                for vv in v.ensemble.votes.values()
            )
            lines.append(
                f"{v.timestamp_ms},{v.final.value},{len(v.rule_violations)},"
                f"{v.ensemble.majority.value},{votes}"
            )
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")

    print(f"{anomalies} of {len(verdicts)} records anomalous "
          f"(longest run {longest_run})")
    for v in latency_violations:
        print(f"latency: {v.description}")
    if args.labels:
        labels = simkit.parse_labels(Path(args.labels).read_text())
        metrics = evalkit.evaluate([pipeline.combined(v) for v in verdicts], labels)
        recall = metrics.recall
        fpr = metrics.false_positive_rate
        print(f"recall: {'N.A' if recall is None else f'{100*recall:.2f}%'}  "
              f"false positives: {'N.A' if fpr is None else f'{100*fpr:.2f}%'}")
    return 1 if sustained or latency_violations else 0


def cmd_stream(args, config: Config) -> int:
    pipe = _load_pipeline(args, config)
    meta = telemetry.MissionMeta.from_json(Path(args.mission).read_text())
    monitor = pipeline.make_monitor(pipe, meta)
    alerts = 0
    header = ",".join(telemetry.TELEMETRY_COLUMNS)
    for line_no, line in enumerate(sys.stdin, start=1):
        line = line.strip()
        if not line or line == header or line.startswith("#"):
            continue
        try:
            rec = telemetry.parse_record(line, line_no=line_no)
        except DroneSentryError as exc:
            print(f"error: skipping line {line_no}: {exc}", file=sys.stderr)
            continue
        verdict, alert = monitor.step(rec)
        print(ens.verdict_line(verdict))
        if alert is not None:
            alerts += 1
            print(ens.alert_line(alert))
        sys.stdout.flush()
    return 1 if alerts else 0


def cmd_eval(args, config: Config) -> int:
    report = evalkit.run_experiment(
        config, runs=args.runs, n_train=args.train_runs, seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    table = report.recall_table()
    (out / "tables.txt").write_text(table)
    rows = ["suite,fusion,recall,false_positive_rate"]
    for suite, result in report.suites.items():
        for fusion in ("combined", "rules_only", "ensemble_only"):
            m = getattr(result, fusion)
            rec = "" if m.recall is None else f"{m.recall:.6f}"
            fpr = "" if m.false_positive_rate is None else f"{m.false_positive_rate:.6f}"
            rows.append(f"{suite},{fusion},{rec},{fpr}")
    (out / "metrics.csv").write_text("\n".join(rows) + "\n")
    figures.save_recall_bars(report, out / "recall_bars.png")
    figures.save_fpr_bars(report, out / "fpr_bars.png")
    print(table)
    print(f"wrote {out}/metrics.json, metrics.csv, tables.txt, "
          f"recall_bars.png, fpr_bars.png")
    return 0


def cmd_bench(args, config: Config) -> int:
    if args.rules and args.bundle:
        pipe = _load_pipeline(args, config)
        ruleset, bundle = pipe.ruleset, pipe.bundle
    else:
        corpus = evalkit.build_training_corpus(n_runs=args.train_runs)
        ruleset, bundle, _ = evalkit.train_artifacts(corpus, config, seed=args.seed)
    stream = simkit.simulate(
        simkit.random_mission(evalkit.CLEAN_SEED_BASE), (), evalkit.CLEAN_SEED_BASE,
    )
    timing = evalkit.benchmark_latency(
        bundle, ruleset, stream.log, config, max_points=args.points,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "timings.json").write_text(
        json.dumps(timing.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    rows = ["component,mean_ms,median_ms,max_ms"]
    for name, stats in timing.per_component.items():
        rows.append(f"{name},{stats.mean_ms:.4f},{stats.median_ms:.4f},{stats.max_ms:.4f}")
    (out / "timings.csv").write_text("\n".join(rows) + "\n")
    figures.save_timing_boxplots(timing, out / "timing_boxplot.png")
    for name, stats in timing.per_component.items():
        print(f"{name:24s} mean {stats.mean_ms:9.3f} ms  "
              f"median {stats.median_ms:9.3f} ms  max {stats.max_ms:9.3f} ms")
    print(f"wrote {out}/timings.json, timings.csv, timing_boxplot.png")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "mine": cmd_mine,
    "fit": cmd_fit,
    "detect": cmd_detect,
    "stream": cmd_stream,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except (DroneSentryError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
