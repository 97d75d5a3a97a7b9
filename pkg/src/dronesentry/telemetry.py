"""Flight-log data model, CSV parsing and serialization.

A log file is a telemetry CSV (fixed column order), optionally preceded by a
``# meta`` line carrying the mission descriptor as JSON and optionally
followed by a ``# commands`` section with its own CSV header. Everything
round-trips through :func:`parse_log` / :func:`write_log`.
"""

import json
import math
from dataclasses import dataclass
from enum import Enum

from .errors import (
    MissingColumn,
    NonMonotoneTimestamps,
    UnknownMode,
    ValueOutOfRange,
)

TELEMETRY_COLUMNS = (
    "timestamp_ms", "mode", "lat", "lon", "rel_alt", "roll", "pitch", "yaw",
    "throttle", "groundspeed", "climb", "baro_status", "gps_fix", "wp_index",
)
COMMAND_COLUMNS = ("cmd_id", "issue_ms", "enact_ms")

META_PREFIX = "# meta "
COMMANDS_MARKER = "# commands"


class FlightMode(str, Enum):
    STABILISE = "STABILISE"
    AUTO = "AUTO"
    RTL = "RTL"


@dataclass(frozen=True)
class LogRecord:
    """One telemetry row. Angles in radians, altitude in meters,
    throttle in percent, timestamps in integer milliseconds."""

    timestamp_ms: int
    mode: FlightMode
    lat: float
    lon: float
    rel_alt: float
    roll: float
    pitch: float
    yaw: float
    throttle: float
    groundspeed: float
    climb: float
    baro_status: int
    gps_fix: int
    wp_index: int

    def validate(self):
        if abs(self.roll) > math.pi:
            raise ValueOutOfRange(f"|roll| > pi: {self.roll}")
        if abs(self.pitch) > math.pi:
            raise ValueOutOfRange(f"|pitch| > pi: {self.pitch}")
        if not 0.0 <= self.throttle <= 100.0:
            raise ValueOutOfRange(f"throttle outside [0, 100]: {self.throttle}")
        if self.baro_status not in (0, 1):
            raise ValueOutOfRange(f"baro_status not in {{0,1}}: {self.baro_status}")
        if self.gps_fix < 0:
            raise ValueOutOfRange(f"gps_fix negative: {self.gps_fix}")
        if self.wp_index < 0:
            raise ValueOutOfRange(f"wp_index negative: {self.wp_index}")


@dataclass(frozen=True)
class CommandEvent:
    """A ground-station command: issued at issue_ms, acknowledged by the
    drone at enact_ms (None when the ack never arrived)."""

    cmd_id: int
    issue_ms: int
    enact_ms: int | None = None

    def validate(self):
        if self.enact_ms is not None and self.enact_ms < self.issue_ms:
            raise ValueOutOfRange(
                f"command {self.cmd_id}: enact_ms {self.enact_ms} < issue_ms {self.issue_ms}"
            )


@dataclass(frozen=True)
class MissionMeta:
    """Mission descriptor: home position, takeoff altitude target and the
    ordered waypoint list as (lat, lon, alt_m) triples."""

    home: tuple[float, float]
    takeoff_alt_m: float
    waypoints: tuple[tuple[float, float, float], ...]

    def to_json(self) -> str:
        doc = {
            "home": list(self.home),
            "takeoff_alt_m": self.takeoff_alt_m,
            "waypoints": [list(w) for w in self.waypoints],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "MissionMeta":
        doc = json.loads(text)
        return cls(
            home=(float(doc["home"][0]), float(doc["home"][1])),
            takeoff_alt_m=float(doc["takeoff_alt_m"]),
            waypoints=tuple(
                (float(w[0]), float(w[1]), float(w[2])) for w in doc["waypoints"]
            ),
        )


@dataclass(frozen=True)
class FlightLog:
    """Immutable flight log: telemetry records, sparse command events and an
    optional mission descriptor."""

    records: tuple[LogRecord, ...]
    commands: tuple[CommandEvent, ...] = ()
    meta: MissionMeta | None = None

    def __post_init__(self):
        last = None
        for rec in self.records:
            rec.validate()
            if last is not None and rec.timestamp_ms <= last:
                raise NonMonotoneTimestamps(
                    f"timestamps not strictly increasing at {rec.timestamp_ms}"
                )
            last = rec.timestamp_ms
        for cmd in self.commands:
            cmd.validate()

    def __len__(self):
        return len(self.records)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(raw: str, column: str, line_no: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueOutOfRange(f"line {line_no}: bad {column} value {raw!r}") from None


def _parse_int(raw: str, column: str, line_no: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValueOutOfRange(f"line {line_no}: bad {column} value {raw!r}") from None


def parse_record(line: str, line_no: int = 0) -> LogRecord:
    """Parse a single telemetry CSV row into a validated LogRecord."""
    parts = line.strip().split(",")
    if len(parts) != len(TELEMETRY_COLUMNS):
        raise MissingColumn(
            f"line {line_no}: expected {len(TELEMETRY_COLUMNS)} fields, got {len(parts)}"
        )
    mode_raw = parts[1]
    try:
        mode = FlightMode(mode_raw)
    except ValueError:
        raise UnknownMode(f"line {line_no}: unknown mode {mode_raw!r}") from None
    rec = LogRecord(
        timestamp_ms=_parse_int(parts[0], "timestamp_ms", line_no),
        mode=mode,
        lat=_parse_float(parts[2], "lat", line_no),
        lon=_parse_float(parts[3], "lon", line_no),
        rel_alt=_parse_float(parts[4], "rel_alt", line_no),
        roll=_parse_float(parts[5], "roll", line_no),
        pitch=_parse_float(parts[6], "pitch", line_no),
        yaw=_parse_float(parts[7], "yaw", line_no),
        throttle=_parse_float(parts[8], "throttle", line_no),
        groundspeed=_parse_float(parts[9], "groundspeed", line_no),
        climb=_parse_float(parts[10], "climb", line_no),
        baro_status=_parse_int(parts[11], "baro_status", line_no),
        gps_fix=_parse_int(parts[12], "gps_fix", line_no),
        wp_index=_parse_int(parts[13], "wp_index", line_no),
    )
    rec.validate()
    return rec


def parse_log(text: str) -> FlightLog:
    """Parse the log-file text into a validated FlightLog.

    Raises MissingColumn, ValueOutOfRange, NonMonotoneTimestamps or
    UnknownMode; every malformed input maps to exactly one of these.
    """
    meta = None
    records = []
    commands = []
    lines = text.splitlines()
    i = 0
    if i < len(lines) and lines[i].startswith(META_PREFIX):
        meta = MissionMeta.from_json(lines[i][len(META_PREFIX):])
        i += 1
    if i >= len(lines):
        raise MissingColumn("missing telemetry header")
    header = lines[i].strip()
    if header != ",".join(TELEMETRY_COLUMNS):
        raise MissingColumn(f"bad telemetry header: {header!r}")
    i += 1
    while i < len(lines):
        line = lines[i]
        if line.strip() == COMMANDS_MARKER:
            i += 1
            break
        if line.strip():
            records.append(parse_record(line, line_no=i + 1))
        i += 1
    else:
        return FlightLog(records=tuple(records), commands=(), meta=meta)

    if i >= len(lines) or lines[i].strip() != ",".join(COMMAND_COLUMNS):
        raise MissingColumn("bad or missing command header after '# commands'")
    i += 1
    for j in range(i, len(lines)):
        line = lines[j].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise MissingColumn(f"line {j + 1}: expected 3 command fields")
        enact = None if parts[2] == "" else _parse_int(parts[2], "enact_ms", j + 1)
        cmd = CommandEvent(
            cmd_id=_parse_int(parts[0], "cmd_id", j + 1),
            issue_ms=_parse_int(parts[1], "issue_ms", j + 1),
            enact_ms=enact,
        )
        cmd.validate()
        commands.append(cmd)
    return FlightLog(records=tuple(records), commands=tuple(commands), meta=meta)


def write_record(rec: LogRecord) -> str:
    """Serialize one record as a telemetry CSV row (lossless float repr)."""
    return ",".join([
        str(rec.timestamp_ms), rec.mode.value, _fmt(rec.lat), _fmt(rec.lon),
        _fmt(rec.rel_alt), _fmt(rec.roll), _fmt(rec.pitch), _fmt(rec.yaw),
        _fmt(rec.throttle), _fmt(rec.groundspeed), _fmt(rec.climb),
        str(rec.baro_status), str(rec.gps_fix), str(rec.wp_index),
    ])


def write_log(log: FlightLog) -> str:
    """Serialize a FlightLog; parse_log(write_log(log)) == log."""
    lines = []
    if log.meta is not None:
        lines.append(META_PREFIX + log.meta.to_json())
    lines.append(",".join(TELEMETRY_COLUMNS))
    for rec in log.records:
        lines.append(write_record(rec))
    if log.commands:
        lines.append(COMMANDS_MARKER)
        lines.append(",".join(COMMAND_COLUMNS))
        for cmd in log.commands:
            enact = "" if cmd.enact_ms is None else str(cmd.enact_ms)
            lines.append(f"{cmd.cmd_id},{cmd.issue_ms},{enact}")
    return "\n".join(lines) + "\n"


def load_log(path) -> FlightLog:
    with open(path, encoding="utf-8") as fh:
        return parse_log(fh.read())


def save_log(log: FlightLog, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_log(log))
