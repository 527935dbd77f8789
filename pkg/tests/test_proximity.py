import io
import random

import pytest
from hypothesis import given, strategies as st

from marge.beacon import BeaconId, BeaconKind
from marge.errors import EmptyWindow, InvalidScanEvent, OutOfOrderEvent, UnknownBeacon
from marge.proximity import (
    DEFAULT_TTL_MS,
    Presence,
    RegionEventType,
    RegionTracker,
    ScanEvent,
    broadcast_stats,
    read_scan_log,
    scan_event_to_json,
    write_scan_log,
)

B1 = BeaconId(b"\x01" * 16, 1, 1)
B2 = BeaconId(b"\x02" * 16, 1, 2)
STICKER = BeaconId(b"\x03" * 16, 2, 1)


def make_tracker(**kwargs):
    kinds = {STICKER: BeaconKind.STICKER}
    return RegionTracker(kind_of=kinds, **kwargs)


class TestIngest:
    def test_first_event_emits_entered(self):
        tracker = make_tracker()
        events = tracker.ingest(ScanEvent(B1, -60, 0))
        assert [e.type for e in events] == [RegionEventType.ENTERED]
        assert events[0].beacon == B1

    def test_ema_smoothing_closed_form(self):
        # 0.3 * (-70) + 0.7 * (-60) = -63.0
        tracker = make_tracker(alpha=0.3)
        tracker.ingest(ScanEvent(B1, -60, 0))
        tracker.ingest(ScanEvent(B1, -70, 1000))
        assert tracker.smoothed_rssi(B1) == pytest.approx(-63.0)

    def test_first_event_uses_raw_rssi(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -81, 5))
        assert tracker.smoothed_rssi(B1) == -81.0

    def test_out_of_order_rejected(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 1000))
        with pytest.raises(OutOfOrderEvent):
            tracker.ingest(ScanEvent(B1, -60, 999))

    def test_equal_timestamps_allowed(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 1000))
        tracker.ingest(ScanEvent(B2, -70, 1000))

    def test_ordering_enforced_across_beacons(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 1000))
        with pytest.raises(OutOfOrderEvent):
            tracker.ingest(ScanEvent(B2, -60, 500))

    def test_rssi_bounds(self):
        with pytest.raises(InvalidScanEvent):
            ScanEvent(B1, 1, 0)
        with pytest.raises(InvalidScanEvent):
            ScanEvent(B1, -128, 0)


class TestPresence:
    def test_present_right_after_event(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 0))
        status, emitted = tracker.status(B1, 1)
        assert status is Presence.PRESENT
        assert emitted == []

    def test_expiry_boundary(self):
        ttl = DEFAULT_TTL_MS[BeaconKind.PROXIMITY]
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 0))
        status, _ = tracker.status(B1, ttl)
        assert status is Presence.PRESENT
        status, emitted = tracker.status(B1, ttl + 1)
        assert status is Presence.ABSENT
        assert [e.type for e in emitted] == [RegionEventType.EXITED]
        # Exited is emitted exactly once
        status, emitted = tracker.status(B1, ttl + 2)
        assert status is Presence.ABSENT
        assert emitted == []

    def test_sticker_ttl_is_longer(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(STICKER, -90, 0))
        status, _ = tracker.status(STICKER, 100_000)  # past proximity TTL
        assert status is Presence.PRESENT
        status, _ = tracker.status(STICKER, DEFAULT_TTL_MS[BeaconKind.STICKER] + 1)
        assert status is Presence.ABSENT

    def test_unknown_beacon(self):
        tracker = make_tracker()
        with pytest.raises(UnknownBeacon):
            tracker.status(B1, 0)
        with pytest.raises(UnknownBeacon):
            tracker.smoothed_rssi(B1)

    def test_reentry_after_silence_emits_exit_then_enter(self):
        ttl = DEFAULT_TTL_MS[BeaconKind.PROXIMITY]
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 0))
        emitted = tracker.ingest(ScanEvent(B1, -60, ttl + 50_000))
        assert [e.type for e in emitted] == [RegionEventType.EXITED, RegionEventType.ENTERED]


class TestGate:
    def test_unlocked_when_present_and_strong(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -65, 0))
        assert tracker.gate_unlocked(B1, 1000, min_rssi=-80) is True

    def test_locked_when_weak(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -95, 0))
        assert tracker.gate_unlocked(B1, 1000, min_rssi=-80) is False

    def test_locked_after_expiry(self):
        ttl = DEFAULT_TTL_MS[BeaconKind.PROXIMITY]
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -65, 0))
        assert tracker.gate_unlocked(B1, ttl + 1, min_rssi=-80) is False

    def test_unknown_beacon_is_locked(self):
        tracker = make_tracker()
        assert tracker.gate_unlocked(B1, 0) is False


event_streams = st.lists(
    st.tuples(
        st.sampled_from([0, 1]),          # beacon selector
        st.integers(-127, 0),             # rssi
        st.integers(0, 40_000),           # time increment, may exceed the TTL
        st.booleans(),                    # interleave a status query
    ),
    min_size=1,
    max_size=60,
)


@given(event_streams)
def test_entered_exited_strictly_alternate(rows):
    beacons = [B1, B2]
    tracker = make_tracker()
    per_beacon: dict[BeaconId, list[RegionEventType]] = {B1: [], B2: []}
    t = 0
    for which, rssi, dt, also_query in rows:
        t += dt
        emitted = tracker.ingest(ScanEvent(beacons[which], rssi, t))
        for ev in emitted:
            per_beacon[ev.beacon].append(ev.type)
        if also_query:
            for b in beacons:
                try:
                    _, emitted = tracker.status(b, t)
                except UnknownBeacon:
                    continue
                for ev in emitted:
                    per_beacon[ev.beacon].append(ev.type)
    for seq in per_beacon.values():
        for i, kind in enumerate(seq):
            expected = RegionEventType.ENTERED if i % 2 == 0 else RegionEventType.EXITED
            assert kind is expected


@given(event_streams)
def test_smoothed_rssi_within_observed_bounds(rows):
    tracker = make_tracker()
    seen: dict[BeaconId, list[int]] = {}
    beacons = [B1, B2]
    t = 0
    for which, rssi, dt, _ in rows:
        t += dt
        tracker.ingest(ScanEvent(beacons[which], rssi, t))
        seen.setdefault(beacons[which], []).append(rssi)
    for beacon, values in seen.items():
        smoothed = tracker.smoothed_rssi(beacon)
        assert min(values) - 1e-9 <= smoothed <= max(values) + 1e-9


def test_gate_requires_recent_broadcast():
    """The gate can only open if a broadcast arrived within the TTL."""
    tracker = make_tracker()
    ttl = DEFAULT_TTL_MS[BeaconKind.PROXIMITY]
    rng = random.Random(7)
    t = 0
    last_seen = None
    for _ in range(300):
        t += rng.randrange(0, 30_000)
        if rng.random() < 0.6:
            tracker.ingest(ScanEvent(B1, rng.randrange(-100, -40), t))
            last_seen = t
        unlocked = tracker.gate_unlocked(B1, t, min_rssi=-127)
        if unlocked:
            assert last_seen is not None and t - last_seen <= ttl


class TestBroadcastStats:
    def test_measured_proximity_rate(self):
        # 200 broadcasts over a 24-minute ride -> 8.33/min
        events = [ScanEvent(B1, -70, int(i * 24 * 60_000 / 200)) for i in range(200)]
        report = broadcast_stats(events, (0, 24 * 60_000))
        assert report.total_events == 200
        (rate,) = report.beacons
        assert rate.broadcast_count == 200
        assert rate.rate_per_min == pytest.approx(8.33, abs=0.01)

    def test_measured_sticker_rate(self):
        events = [ScanEvent(STICKER, -90, i * 6 * 60_000) for i in range(4)]
        report = broadcast_stats(events, (0, 25 * 60_000))
        (rate,) = report.beacons
        assert rate.rate_per_min == pytest.approx(0.16)

    def test_empty_log(self):
        report = broadcast_stats([], (0, 60_000))
        assert report.beacons == []
        assert report.total_events == 0

    def test_empty_window_rejected(self):
        with pytest.raises(EmptyWindow):
            broadcast_stats([], (60_000, 60_000))
        with pytest.raises(EmptyWindow):
            broadcast_stats([], (60_000, 0))

    def test_window_filters_events(self):
        events = [ScanEvent(B1, -70, t) for t in (0, 10, 20, 30)]
        report = broadcast_stats(events, (10, 20))
        assert report.total_events == 2

    @given(st.lists(st.tuples(st.sampled_from([0, 1]), st.integers(0, 100_000)), max_size=50))
    def test_counts_partition_the_window(self, rows):
        events = sorted(
            (ScanEvent([B1, B2][which], -70, t) for which, t in rows),
            key=lambda e: e.t_ms,
        )
        report = broadcast_stats(events, (0, 100_000))
        assert report.total_events == len(events)


class TestScanLogFormat:
    def test_line_format(self):
        line = scan_event_to_json(ScanEvent(B1, -70, 12))
        assert line == (
            '{"t_ms":12,"uuid":"01010101010101010101010101010101","major":1,"minor":1,"rssi":-70}'
        )

    def test_round_trip(self):
        events = [ScanEvent(B1, -70, 0), ScanEvent(B2, -80, 5), ScanEvent(B1, -60, 5)]
        buf = io.StringIO()
        assert write_scan_log(events, buf) == 3
        buf.seek(0)
        assert read_scan_log(buf) == events

    def test_unsorted_log_rejected(self):
        buf = io.StringIO()
        write_scan_log([ScanEvent(B1, -70, 10), ScanEvent(B1, -70, 5)], buf)
        buf.seek(0)
        with pytest.raises(OutOfOrderEvent):
            read_scan_log(buf)

    def test_garbage_line_rejected(self):
        with pytest.raises(InvalidScanEvent):
            read_scan_log(io.StringIO("not json\n"))

    def test_snapshot_restore(self):
        tracker = make_tracker()
        tracker.ingest(ScanEvent(B1, -60, 0))
        tracker.ingest(ScanEvent(B1, -70, 1000))
        snap = tracker.snapshot()
        clone = make_tracker()
        clone.restore(snap)
        assert clone.smoothed_rssi(B1) == tracker.smoothed_rssi(B1)
        assert clone.latest_t_ms == tracker.latest_t_ms
        assert clone.gate_unlocked(B1, 2000, min_rssi=-80)
