"""Seeded point-mass quadrotor mission simulator with fault injection.

The simulator replaces a full physics stack with point-mass kinematics and a
first-order attitude response: good enough to reproduce the telemetry
statistics that rule mining and the detector ensemble consume, while staying
deterministic and fast. Identical (mission, faults, seed) triples produce
bit-identical logs.

Noise is drawn in fixed-size blocks per tick regardless of which faults are
active, so records before a fault interval are identical to the no-fault run
with the same seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CalibrationFailed,
    ConflictingFaults,
    InfeasibleMission,
    NoAnomalies,
)
from .telemetry import (
    CommandEvent,
    FlightLog,
    FlightMode,
    LogRecord,
    MissionMeta,
)

EARTH_RADIUS_M = 6371000.0

# flight profile
INIT_DURATION_S = 4.0
CLIMB_RATE = 2.0          # m/s, takeoff
DESCENT_RATE = 1.5        # m/s, landing
CRUISE_VCAP = 0.5         # m/s, vertical authority while cruising
MAX_CLIMB_RATE = 3.0      # m/s, physics cap on commanded vertical speed
TERMINAL_FALL_RATE = 9.0  # m/s, ballistic descent cap
GRAVITY = 9.81
HOLD_GAIN = 2.0           # 1/s, position-hold proportional gain
ALT_HOLD_GAIN = 2.0       # 1/s
ARRIVE_RADIUS_M = 1.0
LEG_SWITCH_ALT_MARGIN = 0.6   # start first leg this far below the target alt
TIMEOUT_FACTOR = 3.0

# autopilot trim retargeting while airborne: the altitude and speed
# setpoints step between two levels, keeping per-phase telemetry spreads
# realistic instead of razor-thin noise bands
ALT_TRIM_LOW = -0.3       # m relative to takeoff altitude
ALT_TRIM_HIGH = 0.5
ALT_TRIM_FREQ = 0.5       # rad/s of the switching wave
SPEED_TRIM_AMP = 1.0      # m/s
SPEED_TRIM_FREQ = 0.42    # rad/s
DESCENT_START_DIST_M = 3.0  # begin descending this far from home

# throttle model (percent)
HOVER_THROTTLE = 50.0
THROTTLE_PER_CLIMB = 5.0    # % per m/s of vertical speed
SPEED_EFFORT = 3.0          # % at full cruise speed
SURGE_THROTTLE = 12.0       # brief surge when the speed trim retargets
SURGE_TICKS = 1

# nominal noise half-widths (uniform)
ATT_NOISE = 0.03       # rad
YAW_NOISE = 0.02       # rad
VEL_NOISE = 0.12       # m/s per horizontal axis
CLIMB_NOISE = 0.12     # m/s
THR_NOISE = 2.0        # percent

# wind coupling
WIND_ATT_GAIN = 0.22   # rad of oscillation amplitude per m/s of wind
WIND_GUST_FRAC = 0.30
WIND_GROUND_ATT_FACTOR = 0.6

# degraded-actuator coupling, scaled by (1 - factor) / 0.3. The feedback
# loop hunts: throttle drifts off its climb-matched value, the heading
# oscillates, and the track wobbles sideways (cross-track only, so the
# groundspeed magnitude barely moves).
ACT_THR_BIAS = 2.0
ACT_THR_HUNT = 12.0      # slow square-wave throttle hunting
ACT_THR_HUNT_FREQ = 0.8  # rad/s
ACT_THR_WOBBLE = 1.0
ACT_ATT_WOBBLE = 0.0
ACT_YAW_WOBBLE = 1.2
ACT_VEL_WOBBLE = 0.5
ACT_CLIMB_WOBBLE = 0.05

BALLISTIC_DRAG_TAU_S = 1.5
TUMBLE_BASE = 0.25
TUMBLE_GROWTH_PER_S = 0.45
TUMBLE_MAX = 1.2

DRAWS_PER_TICK = 12
NOISE_CHUNK = 1024
FAR_FUTURE_MS = 10 ** 9


@dataclass(frozen=True)
class MissionSpec:
    """Mission description: home position, altitude target, waypoint loop."""

    home: tuple[float, float]
    takeoff_alt_m: float
    waypoints: tuple[tuple[float, float, float], ...]
    cruise_speed: float = 4.0
    tick_ms: int = 200

    def __post_init__(self):
        if self.takeoff_alt_m <= 0:
            raise InfeasibleMission("takeoff altitude must be positive")
        if not self.waypoints:
            raise InfeasibleMission("mission needs at least one waypoint")
        if self.cruise_speed <= 0:
            raise InfeasibleMission("cruise speed must be positive")
        if self.tick_ms <= 0:
            raise InfeasibleMission("tick_ms must be positive")

    def meta(self) -> MissionMeta:
        return MissionMeta(
            home=self.home,
            takeoff_alt_m=self.takeoff_alt_m,
            waypoints=self.waypoints,
        )


@dataclass(frozen=True)
class Wind:
    speed_mps: float
    direction_rad: float
    start_ms: int = 0
    end_ms: int = FAR_FUTURE_MS

    def __post_init__(self):
        if self.speed_mps < 0:
            raise InfeasibleMission("wind speed must be non-negative")
        if self.start_ms >= self.end_ms:
            raise InfeasibleMission("fault interval must satisfy start < end")


@dataclass(frozen=True)
class ActuatorCapacity:
    factor: float
    start_ms: int = 0
    end_ms: int = FAR_FUTURE_MS

    def __post_init__(self):
        if not 0.0 < self.factor <= 1.0:
            raise InfeasibleMission("capacity factor must be in (0, 1]")
        if self.start_ms >= self.end_ms:
            raise InfeasibleMission("fault interval must satisfy start < end")


STUCKABLE_FEATURES = (
    "rel_alt", "roll", "pitch", "yaw", "throttle", "groundspeed", "climb",
    "baro_status", "gps_fix", "lat", "lon",
)


@dataclass(frozen=True)
class SensorStuck:
    feature: str
    stuck_value: float
    start_ms: int = 0
    end_ms: int = FAR_FUTURE_MS

    def __post_init__(self):
        if self.feature not in STUCKABLE_FEATURES:
            raise InfeasibleMission(f"cannot stick feature {self.feature!r}")
        if self.start_ms >= self.end_ms:
            raise InfeasibleMission("fault interval must satisfy start < end")


@dataclass(frozen=True)
class EngineCutoff:
    at_ms: int


FaultSpec = Wind | ActuatorCapacity | SensorStuck | EngineCutoff


@dataclass(frozen=True)
class LabeledLog:
    """A flight log plus per-record ground-truth anomaly labels."""

    log: FlightLog
    anomaly_mask: tuple[bool, ...]

    def __post_init__(self):
        assert len(self.anomaly_mask) == len(self.log.records)


def enu_from_latlon(lat, lon, home) -> tuple[float, float]:
    x = math.radians(lon - home[1]) * EARTH_RADIUS_M * math.cos(math.radians(home[0]))
    y = math.radians(lat - home[0]) * EARTH_RADIUS_M
    return x, y


def latlon_from_enu(x, y, home) -> tuple[float, float]:
    lat = home[0] + math.degrees(y / EARTH_RADIUS_M)
    lon = home[1] + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(home[0]))))
    return lat, lon


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def _fault_interval(fault: FaultSpec) -> tuple[int, int]:
    if isinstance(fault, EngineCutoff):
        return fault.at_ms, FAR_FUTURE_MS
    return fault.start_ms, fault.end_ms


def _check_conflicts(faults):
    stuck = [f for f in faults if isinstance(f, SensorStuck)]
    for i in range(len(stuck)):
        for j in range(i + 1, len(stuck)):
            a, b = stuck[i], stuck[j]
            if a.feature == b.feature and a.start_ms < b.end_ms and b.start_ms < a.end_ms:
                raise ConflictingFaults(
                    f"overlapping SensorStuck faults on {a.feature!r}"
                )


class _NoiseStream:
    """Chunked uniform(-1, 1) draws; tick i sees the same values no matter
    how long the run lasts."""

    def __init__(self, rng):
        self._rng = rng
        self._chunks = []

    def tick(self, i) -> list[float]:
        chunk, off = divmod(i, NOISE_CHUNK)
        while chunk >= len(self._chunks):
            self._chunks.append(
                self._rng.uniform(-1.0, 1.0, size=(NOISE_CHUNK, DRAWS_PER_TICK)).tolist()
            )
        return self._chunks[chunk][off]


def simulate(mission: MissionSpec, faults=(), seed: int = 0) -> LabeledLog:
    """Run one mission and return the labelled log.

    The anomaly mask is true exactly on records whose timestamp falls inside
    any fault interval (an engine cutoff marks everything from at_ms on).
    """
    faults = tuple(faults)
    _check_conflicts(faults)

    rng = np.random.default_rng(seed)
    # per-run constants, always drawn so fault on/off never shifts the stream
    run_const = rng.uniform(0.0, 2.0 * math.pi, size=10).tolist()
    cmd_latencies = rng.integers(150, 451, size=3).tolist()
    noise = _NoiseStream(rng)

    home = mission.home
    wps_enu = [
        (*enu_from_latlon(w[0], w[1], home), w[2]) for w in mission.waypoints
    ]
    n_wp = len(wps_enu)
    dt = mission.tick_ms / 1000.0

    path_len = 0.0
    prev = (0.0, 0.0)
    for wx, wy, _ in wps_enu:
        path_len += math.hypot(wx - prev[0], wy - prev[1])
        prev = (wx, wy)
    path_len += math.hypot(prev[0], prev[1])
    nominal_s = (
        INIT_DURATION_S
        + mission.takeoff_alt_m / CLIMB_RATE
        + path_len / mission.cruise_speed
        + mission.takeoff_alt_m / DESCENT_RATE
        + 10.0
    )
    max_ticks = int(TIMEOUT_FACTOR * nominal_s / dt)

    winds = [f for f in faults if isinstance(f, Wind)]
    capacities = [f for f in faults if isinstance(f, ActuatorCapacity)]
    stucks = [f for f in faults if isinstance(f, SensorStuck)]
    cutoffs = [f for f in faults if isinstance(f, EngineCutoff)]

    (phase_r, phase_p, act_a1, act_a2, act_y, act_v1, act_v2, tum_1, tum_2,
     trim_phase) = run_const
    w_roll, w_pitch = 1.1, 1.7        # rad/s oscillation frequencies
    a_att, a_yaw, a_vel = 1.3, 0.7, 0.9
    tum_f1, tum_f2 = 5.0, 6.3

    x, y, z = 0.0, 0.0, 0.0
    vx = vy = vz = 0.0
    stage = "INIT"
    leg = 0
    yaw_ref = 0.0
    engine_off_since = None

    records = []
    mask = []
    init_end_ms = int(round(INIT_DURATION_S * 1000))
    return_at_ms = None
    descend_at_ms = None

    for tick in range(max_ticks):
        t_ms = tick * mission.tick_ms
        t_s = t_ms / 1000.0
        n = noise.tick(tick)

        active_winds = [w for w in winds if w.start_ms <= t_ms <= w.end_ms]
        cap = 1.0
        for c in capacities:
            if c.start_ms <= t_ms <= c.end_ms:
                cap = min(cap, c.factor)
        cut = any(c.at_ms <= t_ms for c in cutoffs)

        if stage == "INIT" and t_ms >= init_end_ms:
            stage = "CLIMB"
        on_ground_idle = stage == "INIT"

        act_s = (1.0 - cap) / 0.3 if cap < 1.0 else 0.0

        wind_vx = wind_vy = 0.0
        wind_roll = wind_pitch = 0.0
        for w in active_winds:
            along = w.speed_mps * (1.0 + WIND_GUST_FRAC * n[7])
            cross = w.speed_mps * WIND_GUST_FRAC * n[8]
            cos_d, sin_d = math.cos(w.direction_rad), math.sin(w.direction_rad)
            if not on_ground_idle and not (cut and z <= 0.0):
                wind_vx += along * cos_d - cross * sin_d
                wind_vy += along * sin_d + cross * cos_d
            amp = WIND_ATT_GAIN * w.speed_mps
            if on_ground_idle:
                amp *= WIND_GROUND_ATT_FACTOR
            wind_roll += amp * math.sin(w_roll * t_s + phase_r) * (1.0 + 0.25 * n[7])
            wind_pitch += amp * math.sin(w_pitch * t_s + phase_p) * (1.0 + 0.25 * n[8])

        if cut and engine_off_since is None:
            engine_off_since = t_s

        # autopilot trim: setpoints step between two levels; a degraded
        # actuator loop loses the trim and falls back to the base setpoints,
        # which puts it between the trained behaviour bands
        surge = 0.0
        if act_s > 0.0:
            alt_target = mission.takeoff_alt_m
            leg_speed = mission.cruise_speed
        else:
            alt_target = mission.takeoff_alt_m + (
                ALT_TRIM_HIGH if math.sin(ALT_TRIM_FREQ * t_s + trim_phase) >= 0
                else ALT_TRIM_LOW
            )
            trim_wave = math.sin(SPEED_TRIM_FREQ * t_s + trim_phase * 0.7)
            leg_speed = mission.cruise_speed + SPEED_TRIM_AMP * (
                1.0 if trim_wave >= 0 else -1.0
            )
            # retargeting kicks the throttle for a tick or two
            prev_wave = math.sin(
                SPEED_TRIM_FREQ * (t_s - SURGE_TICKS * dt) + trim_phase * 0.7
            )
            if (trim_wave >= 0) != (prev_wave >= 0):
                surge = SURGE_THROTTLE

        if cut:
            # ballistic crash: no thrust, horizontal drag, growing tumble
            vz = max(vz - GRAVITY * dt, -TERMINAL_FALL_RATE)
            decay = math.exp(-dt / BALLISTIC_DRAG_TAU_S)
            vx = vx * decay + wind_vx * (1.0 - decay)
            vy = vy * decay + wind_vy * (1.0 - decay)
            x += vx * dt
            y += vy * dt
            z += vz * dt
            grounded = z <= 0.0
            if grounded:
                z = 0.0
            amp = min(TUMBLE_MAX, TUMBLE_BASE + TUMBLE_GROWTH_PER_S * (t_s - engine_off_since))
            roll = amp * math.sin(tum_f1 * t_s + tum_1) + ATT_NOISE * n[0]
            pitch = amp * math.sin(tum_f2 * t_s + tum_2) + ATT_NOISE * n[1]
            yaw = _wrap_angle(yaw_ref + 0.8 * (t_s - engine_off_since) + YAW_NOISE * n[2])
            throttle = 0.0
            climb = vz
            speed = math.hypot(vx, vy)
        else:
            # commanded velocities from the pre-move state
            climb_rate_eff = CLIMB_RATE * cap
            if stage == "CLIMB":
                # hand over to the first leg one tick early so the record
                # that crosses the phase boundary already flies like cruise
                margin = mission.takeoff_alt_m - LEG_SWITCH_ALT_MARGIN
                if z + climb_rate_eff * dt >= margin + CLIMB_NOISE * dt + 0.005:
                    stage = "LEG"
            if stage == "INIT":
                cmd_x = cmd_y = cmd_z = 0.0
                yaw_ref = 0.0
            elif stage == "CLIMB":
                cmd_x, cmd_y = _hold(-x, -y, mission.cruise_speed)
                cmd_z = climb_rate_eff
                tgt = wps_enu[0]
                yaw_ref = math.atan2(tgt[1] - y, tgt[0] - x)
            elif stage == "LEG":
                tgt = wps_enu[leg]
                ex, ey = tgt[0] - x, tgt[1] - y
                dist = math.hypot(ex, ey)
                if dist > 1e-9:
                    ux, uy = ex / dist, ey / dist
                    yaw_ref = math.atan2(uy, ux)
                else:
                    ux = uy = 0.0
                cmd_x, cmd_y = ux * leg_speed, uy * leg_speed
                cmd_z = _clamp(ALT_HOLD_GAIN * (alt_target - z),
                               -CRUISE_VCAP, CRUISE_VCAP)
            else:  # RETURN / DESCEND: head home, descending on final approach
                ex, ey = -x, -y
                dist = math.hypot(ex, ey)
                speed_cap = leg_speed if dist > DESCENT_START_DIST_M else mission.cruise_speed
                cmd_x, cmd_y = _hold(ex, ey, speed_cap)
                if dist <= DESCENT_START_DIST_M or stage == "DESCEND":
                    cmd_z = -DESCENT_RATE
                else:
                    cmd_z = _clamp(ALT_HOLD_GAIN * (alt_target - z),
                                   -CRUISE_VCAP, CRUISE_VCAP)
                if dist > 1e-9 and stage == "RETURN":
                    yaw_ref = math.atan2(ey, ex)

            act_vx = act_vy = act_roll = act_pitch = act_yaw = 0.0
            act_thr = 0.0
            act_climb = 0.0
            if act_s > 0.0:
                cmd_norm = math.hypot(cmd_x, cmd_y)
                if cmd_norm > 0.1:
                    px, py = -cmd_y / cmd_norm, cmd_x / cmd_norm
                else:
                    px, py = 0.0, 1.0
                sideways = ACT_VEL_WOBBLE * act_s * math.sin(a_vel * t_s + act_v1) * (1.0 + 0.3 * n[10])
                act_vx, act_vy = px * sideways, py * sideways
                act_roll = ACT_ATT_WOBBLE * act_s * math.sin(a_att * t_s + act_a1) * (1.0 + 0.3 * n[9])
                act_pitch = ACT_ATT_WOBBLE * act_s * math.sin(a_att * t_s + act_a2) * (1.0 + 0.3 * n[10])
                act_yaw = ACT_YAW_WOBBLE * act_s * math.sin(a_yaw * t_s + act_y)
                hunt = 1.0 if math.sin(ACT_THR_HUNT_FREQ * t_s + act_v2) >= 0 else -1.0
                act_thr = act_s * (
                    ACT_THR_BIAS + ACT_THR_HUNT * hunt + ACT_THR_WOBBLE * n[11]
                )
                act_climb = ACT_CLIMB_WOBBLE * act_s * math.sin(a_att * t_s + act_v1)

            if on_ground_idle:
                vx = vy = vz = 0.0
                roll = ATT_NOISE * n[0] + wind_roll
                pitch = ATT_NOISE * n[1] + wind_pitch
                yaw = _wrap_angle(yaw_ref + YAW_NOISE * n[2])
                throttle = 0.0
                climb = 0.0
                speed = 0.0
            else:
                vx = cmd_x + VEL_NOISE * n[3] + wind_vx + act_vx
                vy = cmd_y + VEL_NOISE * n[4] + wind_vy + act_vy
                vz = _clamp(
                    cmd_z + CLIMB_NOISE * n[5] + act_climb,
                    -MAX_CLIMB_RATE, MAX_CLIMB_RATE,
                )
                x += vx * dt
                y += vy * dt
                z += vz * dt
                if z <= 0.0:
                    z = 0.0
                    vz = min(vz, 0.0)
                roll = ATT_NOISE * n[0] + wind_roll + act_roll
                pitch = ATT_NOISE * n[1] + wind_pitch + act_pitch
                yaw = _wrap_angle(yaw_ref + YAW_NOISE * n[2] + act_yaw)
                speed = math.hypot(vx, vy)
                climb = vz
                throttle = _clamp(
                    HOVER_THROTTLE
                    + THROTTLE_PER_CLIMB * cmd_z
                    + SPEED_EFFORT * min(1.0, math.hypot(cmd_x, cmd_y) / mission.cruise_speed)
                    + THR_NOISE * n[6]
                    + surge
                    + act_thr,
                    0.0, 100.0,
                )
            grounded = False

            # post-move stage transitions so the logged row already reflects
            # arrivals; keeps mode/wp_index aligned with the phase boundary
            if stage == "LEG":
                tgt = wps_enu[leg]
                if math.hypot(tgt[0] - x, tgt[1] - y) <= ARRIVE_RADIUS_M:
                    leg += 1
                    if leg >= n_wp:
                        stage = "RETURN"
                        return_at_ms = t_ms
            elif stage == "RETURN" and math.hypot(x, y) <= ARRIVE_RADIUS_M:
                stage = "DESCEND"
                descend_at_ms = t_ms

        if stage == "INIT":
            mode = FlightMode.STABILISE
        elif stage in ("CLIMB", "LEG"):
            mode = FlightMode.AUTO
        else:
            mode = FlightMode.RTL
        wp_index = leg if stage in ("INIT", "CLIMB", "LEG") else n_wp
        lat, lon = latlon_from_enu(x, y, home)

        values = {
            "timestamp_ms": t_ms,
            "mode": mode,
            "lat": lat,
            "lon": lon,
            "rel_alt": z,
            "roll": _clamp(roll, -math.pi, math.pi),
            "pitch": _clamp(pitch, -math.pi, math.pi),
            "yaw": yaw,
            "throttle": throttle,
            "groundspeed": speed,
            "climb": climb,
            "baro_status": 1,
            "gps_fix": 3,
            "wp_index": wp_index,
        }
        for s in stucks:
            if s.start_ms <= t_ms <= s.end_ms:
                if s.feature in ("baro_status", "gps_fix"):
                    values[s.feature] = int(s.stuck_value)
                else:
                    values[s.feature] = float(s.stuck_value)
        records.append(LogRecord(**values))
        mask.append(any(lo <= t_ms <= hi for lo, hi in map(_fault_interval, faults)))

        if cut and grounded:
            break
        if stage == "DESCEND" and z <= 0.0:
            break

    commands = []
    events = [
        (1, init_end_ms),
        (2, return_at_ms),
        (3, descend_at_ms),
    ]
    for idx, (cmd_id, enact) in enumerate(events):
        if enact is None:
            continue
        latency = int(cmd_latencies[idx])
        commands.append(
            CommandEvent(cmd_id=cmd_id, issue_ms=max(0, enact - latency), enact_ms=enact)
        )

    log = FlightLog(
        records=tuple(records),
        commands=tuple(commands),
        meta=mission.meta(),
    )
    return LabeledLog(log=log, anomaly_mask=tuple(mask))


def _hold(ex, ey, max_speed):
    dist = math.hypot(ex, ey)
    if dist < 1e-12:
        return 0.0, 0.0
    speed = min(max_speed, HOLD_GAIN * dist)
    return ex / dist * speed, ey / dist * speed


def _clamp(v, lo, hi):
    return max(lo, min(hi, v))


def mission_complete(log: FlightLog, pos_tol_m: float = 1.0) -> bool:
    """True when the log ends landed at home with every waypoint visited."""
    if not log.records or log.meta is None:
        return False
    last = log.records[-1]
    if last.wp_index < len(log.meta.waypoints):
        return False
    if last.rel_alt > 0.05:
        return False
    home = log.meta.home
    x, y = enu_from_latlon(last.lat, last.lon, home)
    return math.hypot(x, y) <= pos_tol_m


def waypoint_tracking_error(log: FlightLog) -> float:
    """Mean cross-track distance to the active leg while on mission.

    The legs run home -> wp1 -> ... -> wpN -> home; records before takeoff
    completion and after landing start contribute nothing.
    """
    if log.meta is None:
        return 0.0
    home = log.meta.home
    pts = [(0.0, 0.0)]
    pts += [enu_from_latlon(w[0], w[1], home)[:2] for w in log.meta.waypoints]
    pts.append((0.0, 0.0))
    total, count = 0.0, 0
    for rec in log.records:
        if rec.mode == FlightMode.STABILISE or rec.rel_alt < log.meta.takeoff_alt_m * 0.5:
            continue
        seg = min(rec.wp_index, len(pts) - 2)
        ax, ay = pts[seg]
        bx, by = pts[seg + 1]
        px, py = enu_from_latlon(rec.lat, rec.lon, home)
        total += _point_segment_distance(px, py, ax, ay, bx, by)
        count += 1
    return total / count if count else 0.0


def _point_segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom < 1e-12:
        return math.hypot(px - ax, py - ay)
    t = _clamp(((px - ax) * dx + (py - ay) * dy) / denom, 0.0, 1.0)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


WIND_SEARCH_MAX_FACTOR = 4.0
WIND_SEARCH_STEPS = 12
DEFAULT_WIND_DIRECTION = 0.9


def windy_pair(mission: MissionSpec, seed: int,
               direction_rad: float = DEFAULT_WIND_DIRECTION):
    """Calibrate a mission-stopping wind and return (strong, mild) runs.

    The strong speed is found by bisection over (0, 4 x cruise]; the mild run
    uses 25% of it and must complete the mission.
    """
    hi = WIND_SEARCH_MAX_FACTOR * mission.cruise_speed

    def run(speed):
        return simulate(mission, (Wind(speed, direction_rad),), seed)

    if mission_complete(run(hi).log):
        raise CalibrationFailed(
            f"no wind speed up to {hi} m/s prevents mission completion"
        )
    lo = 0.0
    for _ in range(WIND_SEARCH_STEPS):
        mid = (lo + hi) / 2.0
        if mission_complete(run(mid).log):
            lo = mid
        else:
            hi = mid
    strong = run(hi)
    if mission_complete(strong.log):
        raise CalibrationFailed("calibrated strong wind unexpectedly completed")
    mild = run(hi / 4.0)
    if not mission_complete(mild.log):
        raise CalibrationFailed("mild wind at 25% of strong failed to complete")
    return strong, mild


def extract_anomalous_segment(labeled: LabeledLog) -> FlightLog:
    """The sub-log of exactly the ground-truth anomalous records."""
    if not any(labeled.anomaly_mask):
        raise NoAnomalies("label mask contains no anomalous records")
    recs = tuple(
        rec for rec, bad in zip(labeled.log.records, labeled.anomaly_mask) if bad
    )
    return FlightLog(records=recs, commands=labeled.log.commands, meta=labeled.log.meta)


# --- label sidecar files and the CLI fault grammar ---

def write_labels(labeled: LabeledLog) -> str:
    lines = ["timestamp_ms,is_anomaly"]
    for rec, bad in zip(labeled.log.records, labeled.anomaly_mask):
        lines.append(f"{rec.timestamp_ms},{1 if bad else 0}")
    return "\n".join(lines) + "\n"


def parse_labels(text: str) -> tuple[bool, ...]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "timestamp_ms,is_anomaly":
        raise ValueError("bad label file header")
    return tuple(ln.split(",")[1] == "1" for ln in lines[1:])


def parse_fault_spec(text: str) -> FaultSpec:
    """Parse the CLI fault grammar, e.g.
    ``wind:speed=12,dir=1.57,start=0,end=600000``."""
    kind, _, rest = text.partition(":")
    params = {}
    if rest:
        for part in rest.split(","):
            key, _, value = part.partition("=")
            if not _:
                raise ValueError(f"bad fault parameter {part!r}")
            params[key.strip()] = value.strip()
    try:
        if kind == "wind":
            return Wind(
                speed_mps=float(params["speed"]),
                direction_rad=float(params.get("dir", DEFAULT_WIND_DIRECTION)),
                start_ms=int(params.get("start", 0)),
                end_ms=int(params.get("end", FAR_FUTURE_MS)),
            )
        if kind == "actuator":
            return ActuatorCapacity(
                factor=float(params["factor"]),
                start_ms=int(params.get("start", 0)),
                end_ms=int(params.get("end", FAR_FUTURE_MS)),
            )
        if kind == "sensor_stuck":
            return SensorStuck(
                feature=params["feature"],
                stuck_value=float(params["value"]),
                start_ms=int(params.get("start", 0)),
                end_ms=int(params.get("end", FAR_FUTURE_MS)),
            )
        if kind == "engine_cutoff":
            return EngineCutoff(at_ms=int(params["at"]))
    except KeyError as missing:
        raise ValueError(f"fault {kind!r} missing parameter {missing}") from None
    raise ValueError(f"unknown fault kind {kind!r}")


# --- canonical missions used by the experiments ---

BASE_HOME = (-35.363262, 149.165237)
BASE_ALT_M = 10.0
BASE_CRUISE = 4.0
BASE_TICK_MS = 200


def base_mission() -> MissionSpec:
    """The fixed four-waypoint training loop."""
    offsets = [(65.0, 0.0), (65.0, 65.0), (0.0, 65.0), (0.0, 18.0)]
    wps = tuple(
        (*latlon_from_enu(ox, oy, BASE_HOME), BASE_ALT_M) for ox, oy in offsets
    )
    return MissionSpec(
        home=BASE_HOME,
        takeoff_alt_m=BASE_ALT_M,
        waypoints=wps,
        cruise_speed=BASE_CRUISE,
        tick_ms=BASE_TICK_MS,
    )


def random_mission(seed: int) -> MissionSpec:
    """A validation mission with randomised waypoint count and coordinates."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
    radii = rng.uniform(40.0, 90.0, size=n)
    wps = []
    for ang, rad in zip(angles, radii):
        ox, oy = rad * math.cos(ang), rad * math.sin(ang)
        wps.append((*latlon_from_enu(ox, oy, BASE_HOME), BASE_ALT_M))
    return MissionSpec(
        home=BASE_HOME,
        takeoff_alt_m=BASE_ALT_M,
        waypoints=tuple(wps),
        cruise_speed=BASE_CRUISE,
        tick_ms=BASE_TICK_MS,
    )
