"""Mission-phase segmentation.

A generic mission passes through five phases in order; the current phase is
inferred from log indicators only (mode, relative altitude, waypoint index,
distance to home), never given directly by the autopilot.
"""

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import MissingMetadata
from .telemetry import FlightLog, FlightMode, LogRecord, MissionMeta

EARTH_RADIUS_M = 6371000.0

DEFAULT_ALT_TOL_M = 0.5
DEFAULT_POS_TOL_M = 1.0


class MissionPhase(IntEnum):
    INITIALISATION = 0
    TAKEOFF = 1
    ON_MISSION = 2
    RETURN_TO_ORIGIN = 3
    LANDING = 4


def haversine_m(lat1, lon1, lat2, lon2) -> float:
    """Great-circle distance in meters."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


@dataclass
class PhaseTracker:
    """Incremental phase state machine.

    Feed records in timestamp order; the phase never regresses. A record may
    advance the tracker through several transitions at once (e.g. a log that
    starts mid-air).
    """

    meta: MissionMeta
    alt_tol_m: float = DEFAULT_ALT_TOL_M
    pos_tol_m: float = DEFAULT_POS_TOL_M
    phase: MissionPhase = field(default=MissionPhase.INITIALISATION, init=False)

    def advance(self, rec: LogRecord) -> MissionPhase:
        while self.phase < MissionPhase.LANDING and self._condition_met(rec):
            self.phase = MissionPhase(self.phase + 1)
        return self.phase

    def _condition_met(self, rec: LogRecord) -> bool:
        nxt = MissionPhase(self.phase + 1)
        if nxt == MissionPhase.TAKEOFF:
            return rec.mode == FlightMode.AUTO
        if nxt == MissionPhase.ON_MISSION:
            return rec.rel_alt >= self.meta.takeoff_alt_m - self.alt_tol_m
        if nxt == MissionPhase.RETURN_TO_ORIGIN:
            n_wp = len(self.meta.waypoints)
            if rec.wp_index >= n_wp:
                return True
            # geometric fallback, only once the last waypoint is the target
            if rec.wp_index == n_wp - 1:
                last = self.meta.waypoints[-1]
                return haversine_m(rec.lat, rec.lon, last[0], last[1]) <= self.pos_tol_m
            return False
        if nxt == MissionPhase.LANDING:
            home = self.meta.home
            return haversine_m(rec.lat, rec.lon, home[0], home[1]) <= self.pos_tol_m
        return False


@dataclass(frozen=True)
class PhaseAnnotatedLog:
    log: FlightLog
    phase_of: tuple[MissionPhase, ...]

    def __post_init__(self):
        assert len(self.phase_of) == len(self.log.records)


def segment(log: FlightLog, alt_tol_m=DEFAULT_ALT_TOL_M,
            pos_tol_m=DEFAULT_POS_TOL_M) -> PhaseAnnotatedLog:
    """Assign a MissionPhase to every record.

    Transitions fire at the first record meeting each indicator condition;
    a log ending mid-phase (crash, aborted mission) is legal and simply
    stays in the last phase reached.
    """
    if log.meta is None:
        raise MissingMetadata("phase segmentation needs mission metadata")
    if not log.meta.waypoints:
        raise MissingMetadata("mission metadata has an empty waypoint list")
    tracker = PhaseTracker(log.meta, alt_tol_m=alt_tol_m, pos_tol_m=pos_tol_m)
    phases = tuple(tracker.advance(rec) for rec in log.records)
    return PhaseAnnotatedLog(log=log, phase_of=phases)


def phase_slices(annotated: PhaseAnnotatedLog) -> dict[MissionPhase, range]:
    """Contiguous record-index range per phase present in the log.

    The ranges partition 0..n in phase order; phases never reached are
    simply absent from the mapping.
    """
    slices: dict[MissionPhase, range] = {}
    phases = annotated.phase_of
    n = len(phases)
    start = 0
    while start < n:
        phase = phases[start]
        end = start
        while end < n and phases[end] == phase:
            end += 1
        slices[phase] = range(start, end)
        start = end
    return slices
