"""Scan-event stream processing: presence tracking and broadcast-rate analytics.

A stream is a t_ms-ordered sequence of RSSI observations. The tracker keeps
per-beacon presence with a kind-dependent TTL and an exponentially smoothed
signal, emitting Entered/Exited transitions. Expiry is evaluated lazily on
the next ingest or query, so the engine needs no background clock.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, IO, Iterable

from .beacon import BeaconId, BeaconKind
from .errors import EmptyWindow, InvalidScanEvent, OutOfOrderEvent, UnknownBeacon

#: Maximum silence before a beacon is considered gone. Powered proximity
#: beacons broadcast every ~6-8 s, so 15 s covers two missed broadcasts;
#: stickers average one broadcast per ~6 min, hence the much longer window.
DEFAULT_TTL_MS = {
    BeaconKind.PROXIMITY: 15_000,
    BeaconKind.STICKER: 450_000,
}

DEFAULT_SMOOTHING_ALPHA = 0.3
DEFAULT_GATE_MIN_RSSI = -90


@dataclass(frozen=True, slots=True)
class ScanEvent:
    beacon: BeaconId
    rssi: int
    t_ms: int

    def __post_init__(self):
        if not -127 <= self.rssi <= 0:
            raise InvalidScanEvent(f"rssi must be in [-127, 0] dBm, got {self.rssi}")
        if self.t_ms < 0:
            raise InvalidScanEvent(f"t_ms must be non-negative, got {self.t_ms}")


class Presence(enum.Enum):
    PRESENT = "present"
    ABSENT = "absent"


class RegionEventType(enum.Enum):
    ENTERED = "entered"
    EXITED = "exited"


@dataclass(frozen=True, slots=True)
class RegionEvent:
    type: RegionEventType
    beacon: BeaconId
    t_ms: int


@dataclass
class _BeaconRecord:
    last_seen_ms: int
    smoothed_rssi: float
    status: Presence


class RegionTracker:
    """Single-writer presence state for one scan stream.

    ``kind_of`` maps a beacon identity to its hardware kind so the right TTL
    applies; unknown identities default to the proximity TTL.
    """

    def __init__(
        self,
        kind_of: Callable[[BeaconId], BeaconKind] | dict[BeaconId, BeaconKind] | None = None,
        alpha: float = DEFAULT_SMOOTHING_ALPHA,
        ttl_ms: dict[BeaconKind, int] | None = None,
    ):
        if not 0 < alpha <= 1:
            raise InvalidScanEvent(f"smoothing alpha must be in (0, 1], got {alpha}")
        if isinstance(kind_of, dict):
            mapping = kind_of
            kind_of = lambda b: mapping.get(b, BeaconKind.PROXIMITY)  # noqa: E731
        self._kind_of = kind_of or (lambda b: BeaconKind.PROXIMITY)
        self._alpha = alpha
        self._ttl = dict(DEFAULT_TTL_MS)
        if ttl_ms:
            self._ttl.update(ttl_ms)
        self._records: dict[BeaconId, _BeaconRecord] = {}
        self._last_t_ms: int | None = None

    @property
    def latest_t_ms(self) -> int | None:
        """Timestamp of the most recently ingested event."""
        return self._last_t_ms

    def _ttl_of(self, beacon: BeaconId) -> int:
        return self._ttl[self._kind_of(beacon)]

    def _expire(self, beacon: BeaconId, rec: _BeaconRecord, now_ms: int) -> list[RegionEvent]:
        if rec.status is Presence.PRESENT and now_ms - rec.last_seen_ms > self._ttl_of(beacon):
            rec.status = Presence.ABSENT
            return [RegionEvent(RegionEventType.EXITED, beacon, now_ms)]
        return []

    def ingest(self, event: ScanEvent) -> list[RegionEvent]:
        """Feed one observation; returns any Entered/Exited transitions."""
        if self._last_t_ms is not None and event.t_ms < self._last_t_ms:
            raise OutOfOrderEvent(
                f"t_ms regressed from {self._last_t_ms} to {event.t_ms}"
            )
        self._last_t_ms = event.t_ms
        emitted: list[RegionEvent] = []
        rec = self._records.get(event.beacon)
        if rec is None:
            rec = _BeaconRecord(event.t_ms, float(event.rssi), Presence.PRESENT)
            self._records[event.beacon] = rec
            emitted.append(RegionEvent(RegionEventType.ENTERED, event.beacon, event.t_ms))
            return emitted
        # Silence longer than the TTL means the beacon left and came back.
        emitted.extend(self._expire(event.beacon, rec, event.t_ms))
        if rec.status is Presence.ABSENT:
            rec.status = Presence.PRESENT
            emitted.append(RegionEvent(RegionEventType.ENTERED, event.beacon, event.t_ms))
        rec.smoothed_rssi = self._alpha * event.rssi + (1 - self._alpha) * rec.smoothed_rssi
        rec.last_seen_ms = event.t_ms
        return emitted

    def status(self, beacon: BeaconId, now_ms: int) -> tuple[Presence, list[RegionEvent]]:
        """Presence at ``now_ms``; the first query past expiry emits Exited once."""
        rec = self._records.get(beacon)
        if rec is None:
            raise UnknownBeacon(f"beacon {beacon.uuid_hex}/{beacon.major}/{beacon.minor} never observed")
        emitted = self._expire(beacon, rec, now_ms)
        return rec.status, emitted

    def smoothed_rssi(self, beacon: BeaconId) -> float:
        rec = self._records.get(beacon)
        if rec is None:
            raise UnknownBeacon(f"beacon {beacon.uuid_hex}/{beacon.major}/{beacon.minor} never observed")
        return rec.smoothed_rssi

    def gate_unlocked(self, beacon: BeaconId, now_ms: int, min_rssi: int = DEFAULT_GATE_MIN_RSSI) -> bool:
        """True iff the beacon is present and its smoothed signal clears ``min_rssi``."""
        try:
            status, _ = self.status(beacon, now_ms)
        except UnknownBeacon:
            return False
        return status is Presence.PRESENT and self._records[beacon].smoothed_rssi >= min_rssi

    def snapshot(self) -> dict:
        """JSON-serializable state for persistence."""
        return {
            "last_t_ms": self._last_t_ms,
            "beacons": [
                {
                    "uuid": b.uuid_hex,
                    "major": b.major,
                    "minor": b.minor,
                    "last_seen_ms": r.last_seen_ms,
                    "smoothed_rssi": r.smoothed_rssi,
                    "status": r.status.value,
                }
                for b, r in self._records.items()
            ],
        }

    def restore(self, snapshot: dict) -> None:
        self._last_t_ms = snapshot.get("last_t_ms")
        self._records = {}
        for row in snapshot.get("beacons", []):
            beacon = BeaconId.from_hex(row["uuid"], row["major"], row["minor"])
            self._records[beacon] = _BeaconRecord(
                row["last_seen_ms"], row["smoothed_rssi"], Presence(row["status"])
            )


@dataclass(frozen=True, slots=True)
class BeaconRate:
    beacon: BeaconId
    broadcast_count: int
    duration_min: float
    rate_per_min: float


@dataclass(frozen=True, slots=True)
class RateReport:
    window_ms: tuple[int, int]
    beacons: list[BeaconRate] = field(default_factory=list)

    @property
    def total_events(self) -> int:
        return sum(b.broadcast_count for b in self.beacons)


def broadcast_stats(log: Iterable[ScanEvent], window: tuple[int, int]) -> RateReport:
    """Per-beacon broadcast counts and per-minute rates over [t_start, t_end]."""
    t_start, t_end = window
    if t_end <= t_start:
        raise EmptyWindow(f"window end {t_end} must exceed start {t_start}")
    duration_min = (t_end - t_start) / 60_000.0
    counts: dict[BeaconId, int] = {}
    for event in log:
        if t_start <= event.t_ms <= t_end:
            counts[event.beacon] = counts.get(event.beacon, 0) + 1
    rates = [
        BeaconRate(beacon, n, duration_min, n / duration_min)
        for beacon, n in counts.items()
    ]
    rates.sort(key=lambda r: (r.beacon.uuid, r.beacon.major, r.beacon.minor))
    return RateReport((t_start, t_end), rates)


# --- scan-log file format ------------------------------------------------------
# One event per line: {"t_ms": int, "uuid": hex, "major": int, "minor": int,
# "rssi": int}, t_ms-sorted.

def scan_event_to_json(event: ScanEvent) -> str:
    return json.dumps(
        {
            "t_ms": event.t_ms,
            "uuid": event.beacon.uuid_hex,
            "major": event.beacon.major,
            "minor": event.beacon.minor,
            "rssi": event.rssi,
        },
        separators=(",", ":"),
    )


def scan_event_from_json(obj: dict) -> ScanEvent:
    beacon = BeaconId.from_hex(obj["uuid"], int(obj["major"]), int(obj["minor"]))
    return ScanEvent(beacon, int(obj["rssi"]), int(obj["t_ms"]))


def write_scan_log(events: Iterable[ScanEvent], out: IO[str]) -> int:
    n = 0
    for event in events:
        out.write(scan_event_to_json(event) + "\n")
        n += 1
    return n


def read_scan_log(src: IO[str]) -> list[ScanEvent]:
    """Parse a scan-log stream, enforcing t_ms order."""
    events: list[ScanEvent] = []
    last = None
    for lineno, line in enumerate(src, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidScanEvent(f"line {lineno}: not valid JSON: {exc}") from exc
        event = scan_event_from_json(obj)
        if last is not None and event.t_ms < last:
            raise OutOfOrderEvent(f"line {lineno}: t_ms regressed from {last} to {event.t_ms}")
        last = event.t_ms
        events.append(event)
    return events
