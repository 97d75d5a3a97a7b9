import math

import pytest
from hypothesis import given, settings, strategies as st

from dronesentry import telemetry
from dronesentry.errors import (
    MissingColumn,
    NonMonotoneTimestamps,
    UnknownMode,
    ValueOutOfRange,
)
from dronesentry.telemetry import (
    CommandEvent,
    FlightLog,
    FlightMode,
    LogRecord,
    MissionMeta,
    parse_log,
    write_log,
)

HEADER = ",".join(telemetry.TELEMETRY_COLUMNS)


def make_record(ts=0, mode=FlightMode.AUTO, roll=0.01, **kw):
    base = dict(
        timestamp_ms=ts, mode=mode, lat=-35.36, lon=149.16, rel_alt=10.0,
        roll=roll, pitch=-0.02, yaw=1.5, throttle=52.0, groundspeed=4.0,
        climb=0.1, baro_status=1, gps_fix=3, wp_index=1,
    )
    base.update(kw)
    return LogRecord(**base)


def row(ts, roll=0.01, mode="AUTO"):
    return f"{ts},{mode},-35.36,149.16,10.0,{roll},-0.02,1.5,52.0,4.0,0.1,1,3,1"


def test_parse_two_rows():
    text = HEADER + "\n" + row(0) + "\n" + row(200) + "\n"
    log = parse_log(text)
    assert len(log.records) == 2
    assert log.records[0].timestamp_ms == 0
    assert log.records[1].timestamp_ms == 200
    assert log.records[0].mode == FlightMode.AUTO


def test_parse_roll_out_of_range():
    text = HEADER + "\n" + row(0, roll=4.0) + "\n"
    with pytest.raises(ValueOutOfRange):
        parse_log(text)


def test_roll_exactly_pi_is_legal():
    text = HEADER + "\n" + row(0, roll=repr(math.pi)) + "\n"
    log = parse_log(text)
    assert log.records[0].roll == math.pi


def test_parse_non_monotone_timestamps():
    text = HEADER + "\n" + row(100) + "\n" + row(100) + "\n"
    with pytest.raises(NonMonotoneTimestamps):
        parse_log(text)


def test_parse_unknown_mode():
    text = HEADER + "\n" + row(0, mode="LOITER") + "\n"
    with pytest.raises(UnknownMode):
        parse_log(text)


def test_parse_missing_column():
    with pytest.raises(MissingColumn):
        parse_log("timestamp_ms,mode\n0,AUTO\n")
    with pytest.raises(MissingColumn):
        parse_log(HEADER + "\n" + "0,AUTO,1.0\n")


@pytest.mark.parametrize("field,value", [
    ("throttle", -1.0), ("throttle", 101.0), ("baro_status", 2),
    ("gps_fix", -1), ("pitch", 3.2),
])
def test_record_validation(field, value):
    with pytest.raises(ValueOutOfRange):
        make_record(**{field: value}).validate()


def test_invalid_record_rejected_at_log_construction():
    with pytest.raises(ValueOutOfRange):
        FlightLog(records=(make_record(throttle=150.0),))


def test_write_empty_log_is_header_only():
    assert write_log(FlightLog(records=())) == HEADER + "\n"


def test_round_trip_with_commands_and_meta():
    meta = MissionMeta(home=(-35.36, 149.16), takeoff_alt_m=10.0,
                       waypoints=((-35.35, 149.17, 10.0),))
    log = FlightLog(
        records=(make_record(0), make_record(200, roll=-0.5)),
        commands=(CommandEvent(1, 100, 350), CommandEvent(2, 5000, None)),
        meta=meta,
    )
    assert parse_log(write_log(log)) == log


def test_command_enact_before_issue_rejected():
    with pytest.raises(ValueOutOfRange):
        CommandEvent(1, 1000, 900).validate()


finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(
    st.tuples(finite, finite, finite, st.floats(min_value=0, max_value=100),
              st.sampled_from(list(FlightMode))),
    min_size=0, max_size=20,
))
def test_round_trip_random_logs(rows):
    records = tuple(
        make_record(ts=200 * i, roll=r * 3.0, pitch=p * 3.0, yaw=y * 3.0,
                    throttle=t, mode=m)
        for i, (r, p, y, t, m) in enumerate(rows)
    )
    log = FlightLog(records=records)
    assert parse_log(write_log(log)) == log
