"""Range-rule mining and checking.

Each telemetry record becomes a transaction of discretized items (equal-width
bins per numeric feature per phase, categorical items for status columns).
Level-wise Apriori finds the frequent itemsets; a rule is emitted per
(feature, scope) whose frequent bins cover (almost) all in-scope records,
with bounds taken from the observed envelope. A candidate whose frequent
bins miss at most 1% of records is widened to absorb the minority when every
excursion is negligible; otherwise it is dropped. Rules holding identically
in every phase are promoted to universal scope.

Domain knowledge contributes one latency rule: a command not enacted within
the configured budget (default 2 s) is anomalous, as is one never enacted.
"""

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .errors import EmptyCorpus, InvalidSupport
from .phases import MissionPhase, PhaseAnnotatedLog
from .telemetry import CommandEvent, FlightMode, LogRecord

RANGE_BIN = "range_bin"
CATEGORICAL = "categorical"

DEFAULT_MIN_SUPPORT = 0.05
DEFAULT_HOLDING_THRESHOLD = 0.99
DEFAULT_WIDEN_BUDGET = 0.01
DEFAULT_BINS = 4
DEFAULT_LATENCY_MS = 2000

# lat/lon/yaw/wp_index are mission-geometry columns: ranges mined from one
# mission would misfire on any other, so they stay out of the rule features
RULE_NUMERIC_FEATURES = ("rel_alt", "roll", "pitch", "throttle", "groundspeed", "climb")
RULE_CATEGORICAL_FEATURES = ("mode", "baro_status", "gps_fix")

MODE_CODES = {mode: float(i) for i, mode in enumerate(FlightMode)}
_CODE_MODES = {v: k for k, v in MODE_CODES.items()}


def encode_value(record: LogRecord, feature: str) -> float:
    value = getattr(record, feature)
    if feature == "mode":
        return MODE_CODES[value]
    return float(value)


def display_value(feature: str, code: float) -> str:
    if feature == "mode":
        mode = _CODE_MODES.get(code)
        return mode.value if mode is not None else f"code {code:g}"
    return f"{code:.6g}"


@dataclass(frozen=True)
class Item:
    """One discretized observation: a bin of a numeric feature or a
    categorical value (stored with lower == upper)."""

    feature: str
    kind: str
    lower: float
    upper: float

    def __post_init__(self):
        assert self.lower <= self.upper

    @classmethod
    def range_bin(cls, feature, lower, upper):
        return cls(feature, RANGE_BIN, lower, upper)

    @classmethod
    def categorical(cls, feature, value):
        return cls(feature, CATEGORICAL, value, value)


Transaction = frozenset  # of Item, at most one per feature


@dataclass(frozen=True)
class LatencyRule:
    max_latency_ms: int = DEFAULT_LATENCY_MS

    def __post_init__(self):
        assert self.max_latency_ms > 0

    @property
    def description(self):
        return (
            f"A command must be enacted within {self.max_latency_ms} ms "
            f"of being issued."
        )


@dataclass(frozen=True)
class RangeRule:
    """A bounded invariant on one feature, universal or phase-scoped."""

    feature: str
    scope: MissionPhase | None      # None = universal
    lower: float
    upper: float
    holding_fraction: float
    support: float
    source: str                     # "mined" or "domain"
    description: str

    @property
    def widened(self) -> bool:
        return self.holding_fraction < 1.0

    def covers(self, phase: MissionPhase) -> bool:
        return self.scope is None or self.scope == phase

    def scope_name(self) -> str:
        return "universal" if self.scope is None else self.scope.name


@dataclass(frozen=True)
class Violation:
    description: str
    feature: str
    observed: float
    lower: float
    upper: float
    kind: str = "range"             # range | latency | lost_command
    record_index: int | None = None
    command_id: int | None = None


@dataclass(frozen=True)
class RuleSet:
    range_rules: tuple[RangeRule, ...]
    latency_rule: LatencyRule | None
    min_support: float
    holding_threshold: float
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        seen = set()
        for rule in self.range_rules:
            key = (rule.feature, rule.scope)
            assert key not in seen, f"duplicate rule for {key}"
            seen.add(key)

    def to_json_dict(self) -> dict:
        return {
            "min_support": self.min_support,
            "holding_threshold": self.holding_threshold,
            "provenance": list(self.provenance),
            "rules": [
                {
                    "feature": r.feature,
                    "scope": r.scope_name(),
                    "lower": r.lower,
                    "upper": r.upper,
                    "holding_fraction": r.holding_fraction,
                    "support": r.support,
                    "source": r.source,
                    "description": r.description,
                }
                for r in self.range_rules
            ],
            "latency_rule": (
                None if self.latency_rule is None
                else {"max_latency_ms": self.latency_rule.max_latency_ms}
            ),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RuleSet":
        rules = tuple(
            RangeRule(
                feature=r["feature"],
                scope=None if r["scope"] == "universal" else MissionPhase[r["scope"]],
                lower=r["lower"],
                upper=r["upper"],
                holding_fraction=r["holding_fraction"],
                support=r["support"],
                source=r["source"],
                description=r["description"],
            )
            for r in doc["rules"]
        )
        latency = doc.get("latency_rule")
        return cls(
            range_rules=rules,
            latency_rule=None if latency is None else LatencyRule(latency["max_latency_ms"]),
            min_support=doc["min_support"],
            holding_threshold=doc["holding_threshold"],
            provenance=tuple(doc.get("provenance", ())),
        )


# --- discretization ---

def discretize(annotated_logs, numeric_features=RULE_NUMERIC_FEATURES,
               categorical_features=RULE_CATEGORICAL_FEATURES,
               bins: int = DEFAULT_BINS):
    """Turn segmented logs into per-phase transaction sets.

    Returns (transactions_by_phase, envelopes) where envelopes maps
    (phase, feature) to the observed (min, max) used for the bin edges.
    """
    values: dict[tuple[MissionPhase, str], list[float]] = {}
    rows: list[tuple[MissionPhase, LogRecord]] = []
    for ann in annotated_logs:
        for rec, phase in zip(ann.log.records, ann.phase_of):
            rows.append((phase, rec))
            for feat in numeric_features:
                values.setdefault((phase, feat), []).append(encode_value(rec, feat))
    if not rows:
        raise EmptyCorpus("no records to discretize")

    envelopes = {key: (min(vals), max(vals)) for key, vals in values.items()}

    def numeric_item(phase, feat, v):
        lo, hi = envelopes[(phase, feat)]
        if hi <= lo:
            return Item.range_bin(feat, lo, hi)
        width = (hi - lo) / bins
        idx = min(bins - 1, int((v - lo) / width))
        return Item.range_bin(feat, lo + idx * width, lo + (idx + 1) * width)

    transactions: dict[MissionPhase, list[Transaction]] = {}
    for phase, rec in rows:
        items = [numeric_item(phase, f, encode_value(rec, f)) for f in numeric_features]
        items += [
            Item.categorical(f, encode_value(rec, f)) for f in categorical_features
        ]
        transactions.setdefault(phase, []).append(frozenset(items))
    return transactions, envelopes


# --- Apriori ---

def mine_frequent(transactions, min_support) -> dict[Transaction, Fraction]:
    """Level-wise Apriori: exactly the itemsets with support >= min_support.

    Supports are exact fractions of the transaction count.
    """
    if not 0.0 < min_support <= 1.0:
        raise InvalidSupport(f"min_support must be in (0, 1]: {min_support}")
    transactions = list(transactions)
    n = len(transactions)
    if n == 0:
        return {}

    universe = sorted({item for t in transactions for item in t},
                      key=lambda i: (i.feature, i.kind, i.lower, i.upper))
    index = {item: b for b, item in enumerate(universe)}
    patterns = Counter(
        _bitmask(t, index) for t in transactions
    )

    def count(mask: int) -> int:
        return sum(mult for pat, mult in patterns.items() if pat & mask == mask)

    result: dict[Transaction, Fraction] = {}
    threshold = Fraction(min_support).limit_denominator(10 ** 9)

    current = []
    for b, item in enumerate(universe):
        c = count(1 << b)
        sup = Fraction(c, n)
        if sup >= threshold:
            result[frozenset([item])] = sup
            current.append(frozenset([item]))

    k = 2
    while current:
        seen = set()
        candidates = []
        for a, b in combinations(current, 2):
            union = a | b
            if len(union) != k or union in seen:
                continue
            seen.add(union)
            if all(frozenset(sub) in result for sub in combinations(union, k - 1)):
                candidates.append(union)
        nxt = []
        for cand in candidates:
            mask = _bitmask(cand, index)
            sup = Fraction(count(mask), n)
            if sup >= threshold:
                result[cand] = sup
                nxt.append(cand)
        current = nxt
        k += 1
    return result


def _bitmask(items, index) -> int:
    mask = 0
    for item in items:
        mask |= 1 << index[item]
    return mask


# --- rule derivation ---

@dataclass
class MiningReport:
    """Diagnostics so a human can examine near-miss minorities and the
    multi-feature itemsets that are mined but not emitted as rules."""

    widened: list[dict] = field(default_factory=list)
    dropped: list[dict] = field(default_factory=list)
    multi_feature_itemsets: int = 0
    transactions: int = 0


def derive_rules(itemsets_by_phase, annotated_logs,
                 holding_threshold=DEFAULT_HOLDING_THRESHOLD,
                 widen_budget=DEFAULT_WIDEN_BUDGET,
                 min_support=DEFAULT_MIN_SUPPORT,
                 latency_ms=DEFAULT_LATENCY_MS,
                 provenance=(),
                 report: MiningReport | None = None) -> RuleSet:
    """Build the rule set from per-phase frequent itemsets.

    For each (feature, phase) the candidate bounds span the feature's
    frequent bins; records outside the span are the near-miss minority.
    """
    if not 0.0 < holding_threshold <= 1.0:
        raise InvalidSupport(f"holding threshold must be in (0, 1]: {holding_threshold}")
    if report is None:
        report = MiningReport()

    phase_values: dict[tuple[MissionPhase, str], list[float]] = {}
    all_values: dict[str, list[float]] = {}
    for ann in annotated_logs:
        for rec, phase in zip(ann.log.records, ann.phase_of):
            for feat in set(RULE_NUMERIC_FEATURES) | set(RULE_CATEGORICAL_FEATURES):
                v = encode_value(rec, feat)
                phase_values.setdefault((phase, feat), []).append(v)
                all_values.setdefault(feat, []).append(v)

    per_phase: dict[str, dict[MissionPhase, RangeRule]] = {}
    phases_present = sorted(itemsets_by_phase.keys())
    for phase in phases_present:
        itemsets = itemsets_by_phase[phase]
        report.multi_feature_itemsets += sum(1 for s in itemsets if len(s) > 1)
        singles: dict[str, list[tuple[Item, Fraction]]] = {}
        for itemset, sup in itemsets.items():
            if len(itemset) != 1:
                continue
            (item,) = itemset
            singles.setdefault(item.feature, []).append((item, sup))
        for feat, frequent in sorted(singles.items()):
            vals = phase_values.get((phase, feat))
            if not vals:
                continue
            kind = frequent[0][0].kind
            rule = _derive_one(
                feat, phase, kind, frequent, vals,
                holding_threshold, widen_budget, report,
            )
            if rule is not None:
                per_phase.setdefault(feat, {})[phase] = rule

    rules = _promote_universal(per_phase, phases_present, all_values)
    rules.sort(key=lambda r: (r.scope is not None, -1 if r.scope is None else int(r.scope), r.feature))
    return RuleSet(
        range_rules=tuple(rules),
        latency_rule=LatencyRule(latency_ms),
        min_support=min_support,
        holding_threshold=holding_threshold,
        provenance=tuple(provenance),
    )


def _derive_one(feat, phase, kind, frequent, vals, holding_threshold,
                widen_budget, report):
    support = float(max(sup for _, sup in frequent))
    n = len(vals)
    if kind == CATEGORICAL:
        counts = Counter(vals)
        value, c = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        holding = c / n
        if holding < holding_threshold:
            report.dropped.append(
                {"feature": feat, "phase": phase.name, "holding": holding}
            )
            return None
        desc = (
            f"During {phase.name}, {feat} is always "
            f"{display_value(feat, value)}."
        )
        return RangeRule(feat, phase, value, value, holding, support, "mined", desc)

    span_lo = min(item.lower for item, _ in frequent)
    span_hi = max(item.upper for item, _ in frequent)
    inside = [v for v in vals if span_lo <= v <= span_hi]
    holding = len(inside) / n
    if holding == 1.0:
        lo, hi = min(vals), max(vals)
        desc = _range_sentence(feat, phase, lo, hi)
        return RangeRule(feat, phase, lo, hi, 1.0, support, "mined", desc)
    if 1.0 - holding <= 1.0 - holding_threshold:
        budget = widen_budget * (span_hi - span_lo)
        excursions = [
            max(span_lo - v, v - span_hi) for v in vals if not span_lo <= v <= span_hi
        ]
        if all(e <= budget for e in excursions):
            lo, hi = min(vals), max(vals)
            report.widened.append({
                "feature": feat, "phase": phase.name, "holding": holding,
                "minority": n - len(inside), "max_excursion": max(excursions),
            })
            desc = _range_sentence(feat, phase, lo, hi)
            return RangeRule(feat, phase, lo, hi, holding, support, "mined", desc)
    report.dropped.append(
        {"feature": feat, "phase": phase.name, "holding": holding}
    )
    return None


def _range_sentence(feat, phase, lo, hi):
    where = "At every point of the mission" if phase is None else f"During {phase.name}"
    if lo == hi:
        return f"{where}, {feat} is always {display_value(feat, lo)}."
    return (
        f"{where}, {feat} stays between {display_value(feat, lo)} "
        f"and {display_value(feat, hi)}."
    )


def _promote_universal(per_phase, phases_present, all_values):
    rules = []
    for feat, by_phase in sorted(per_phase.items()):
        identical = (
            len(by_phase) == len(phases_present)
            and len(phases_present) > 1
            and len({(r.lower, r.upper) for r in by_phase.values()}) == 1
        )
        if identical:
            sample = next(iter(by_phase.values()))
            vals = all_values[feat]
            inside = sum(1 for v in vals if sample.lower <= v <= sample.upper)
            holding = inside / len(vals)
            if sample.lower == sample.upper:
                desc = (
                    f"At every point of the mission, {feat} is always "
                    f"{display_value(feat, sample.lower)}."
                )
            else:
                desc = _range_sentence(feat, None, sample.lower, sample.upper)
            rules.append(RangeRule(
                feat, None, sample.lower, sample.upper, holding,
                min(r.support for r in by_phase.values()), "mined", desc,
            ))
        else:
            rules.extend(by_phase.values())
    return rules


# --- checking ---

def check_record(rules: RuleSet, record: LogRecord, phase: MissionPhase,
                 record_index: int | None = None) -> list[Violation]:
    """All rule violations of one record in its phase; empty = compliant."""
    violations = []
    for rule in rules.range_rules:
        if not rule.covers(phase):
            continue
        observed = encode_value(record, rule.feature)
        if observed < rule.lower or observed > rule.upper:
            violations.append(Violation(
                description=(
                    f"{rule.feature} = {display_value(rule.feature, observed)} "
                    f"violates: {rule.description}"
                ),
                feature=rule.feature,
                observed=observed,
                lower=rule.lower,
                upper=rule.upper,
                kind="range",
                record_index=record_index,
            ))
    return violations


def check_latency(rule: LatencyRule, commands, now_ms: int) -> list[Violation]:
    """Latency violations: commands enacted too late, or never enacted once
    the budget has expired (reported as lost commands)."""
    violations = []
    for cmd in commands:
        if cmd.enact_ms is not None:
            latency = cmd.enact_ms - cmd.issue_ms
            if latency > rule.max_latency_ms:
                violations.append(Violation(
                    description=(
                        f"command {cmd.cmd_id} enacted after {latency} ms "
                        f"violates: {rule.description}"
                    ),
                    feature="command_latency",
                    observed=float(latency),
                    lower=0.0,
                    upper=float(rule.max_latency_ms),
                    kind="latency",
                    command_id=cmd.cmd_id,
                ))
        elif now_ms - cmd.issue_ms > rule.max_latency_ms:
            violations.append(Violation(
                description=(
                    f"command {cmd.cmd_id} lost: no acknowledgement "
                    f"{now_ms - cmd.issue_ms} ms after issue "
                    f"violates: {rule.description}"
                ),
                feature="command_latency",
                observed=float(now_ms - cmd.issue_ms),
                lower=0.0,
                upper=float(rule.max_latency_ms),
                kind="lost_command",
                command_id=cmd.cmd_id,
            ))
    return violations


# --- one-call mining pipeline ---

def mine_ruleset(annotated_logs, min_support=DEFAULT_MIN_SUPPORT,
                 holding_threshold=DEFAULT_HOLDING_THRESHOLD,
                 widen_budget=DEFAULT_WIDEN_BUDGET,
                 bins=DEFAULT_BINS,
                 latency_ms=DEFAULT_LATENCY_MS,
                 numeric_features=RULE_NUMERIC_FEATURES,
                 categorical_features=RULE_CATEGORICAL_FEATURES,
                 provenance=()):
    """Discretize, mine and derive in one step; returns (RuleSet, report)."""
    annotated_logs = list(annotated_logs)
    transactions, _ = discretize(
        annotated_logs, numeric_features, categorical_features, bins,
    )
    itemsets_by_phase = {
        phase: mine_frequent(txns, min_support)
        for phase, txns in transactions.items()
    }
    report = MiningReport(transactions=sum(len(t) for t in transactions.values()))
    ruleset = derive_rules(
        itemsets_by_phase, annotated_logs,
        holding_threshold=holding_threshold,
        widen_budget=widen_budget,
        min_support=min_support,
        latency_ms=latency_ms,
        provenance=provenance,
        report=report,
    )
    return ruleset, report
