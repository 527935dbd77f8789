"""Beacon advertisement codec and RSSI-based proximity estimation.

Advertisement payload layout (25 bytes, manufacturer-specific data):

    Offset  Length  Value     Description
    0-1     2       4C 00     manufacturer id (little-endian)
    2       1       02        beacon type marker
    3       1       15        remaining payload length (21)
    4-19    16      [UUID]    deployment UUID
    20-21   2       [major]   region number, big-endian
    22-23   2       [minor]   beacon number, big-endian
    24      1       [power]   calibrated RSSI at 1 m, signed two's complement

The hardware kind (powered proximity beacon vs. battery sticker) is not on
the wire; deployments map it from (uuid, major, minor).
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

from .errors import InvalidExponent, InvalidFrame, MalformedFrame

FRAME_LENGTH = 25
_MANUFACTURER_PREFIX = b"\x4c\x00"
_BEACON_TYPE = 0x02
_PAYLOAD_LENGTH = 0x15
_BODY = struct.Struct(">16sHHb")


class BeaconKind(enum.Enum):
    PROXIMITY = "proximity"
    STICKER = "sticker"


@dataclass(frozen=True, slots=True)
class BeaconId:
    """Identity of one physical beacon within a deployment."""

    uuid: bytes
    major: int
    minor: int

    def __post_init__(self):
        if len(self.uuid) != 16:
            raise InvalidFrame(f"uuid must be 16 bytes, got {len(self.uuid)}")
        if not 0 <= self.major <= 0xFFFF:
            raise InvalidFrame(f"major out of range: {self.major}")
        if not 0 <= self.minor <= 0xFFFF:
            raise InvalidFrame(f"minor out of range: {self.minor}")

    @property
    def uuid_hex(self) -> str:
        return self.uuid.hex()

    @classmethod
    def from_hex(cls, uuid_hex: str, major: int, minor: int) -> "BeaconId":
        cleaned = uuid_hex.replace("-", "").lower()
        try:
            raw = bytes.fromhex(cleaned)
        except ValueError as exc:
            raise InvalidFrame(f"bad uuid hex: {uuid_hex!r}") from exc
        return cls(raw, major, minor)


@dataclass(frozen=True, slots=True)
class BeaconFrame:
    """Parsed advertisement payload."""

    uuid: bytes
    major: int
    minor: int
    measured_power: int
    kind: BeaconKind = BeaconKind.PROXIMITY

    def __post_init__(self):
        if len(self.uuid) != 16:
            raise InvalidFrame(f"uuid must be 16 bytes, got {len(self.uuid)}")
        if not 0 <= self.major <= 0xFFFF:
            raise InvalidFrame(f"major out of range: {self.major}")
        if not 0 <= self.minor <= 0xFFFF:
            raise InvalidFrame(f"minor out of range: {self.minor}")
        if not -127 <= self.measured_power <= 0:
            raise InvalidFrame(
                f"measured_power must be in [-127, 0] dBm, got {self.measured_power}"
            )

    @property
    def beacon_id(self) -> BeaconId:
        return BeaconId(self.uuid, self.major, self.minor)


def encode_advertisement(frame: BeaconFrame) -> bytes:
    """Serialize a frame to its 25-byte advertisement payload."""
    return (
        _MANUFACTURER_PREFIX
        + bytes((_BEACON_TYPE, _PAYLOAD_LENGTH))
        + _BODY.pack(frame.uuid, frame.major, frame.minor, frame.measured_power)
    )


def parse_advertisement(payload: bytes, kind: BeaconKind = BeaconKind.PROXIMITY) -> BeaconFrame:
    """Parse an advertisement payload.

    Raises MalformedFrame for anything that is not a beacon advertisement;
    never crashes on arbitrary input. ``kind`` is supplied by the caller's
    deployment config since the wire format has no kind field.
    """
    if not isinstance(payload, (bytes, bytearray, memoryview)):
        raise MalformedFrame(f"expected bytes, got {type(payload).__name__}")
    payload = bytes(payload)
    if len(payload) != FRAME_LENGTH:
        raise MalformedFrame(f"expected {FRAME_LENGTH} bytes, got {len(payload)}")
    if payload[:2] != _MANUFACTURER_PREFIX:
        raise MalformedFrame(f"bad manufacturer prefix: {payload[:2].hex()}")
    if payload[2] != _BEACON_TYPE:
        raise MalformedFrame(f"bad beacon type marker: 0x{payload[2]:02x}")
    if payload[3] != _PAYLOAD_LENGTH:
        raise MalformedFrame(f"bad payload length marker: 0x{payload[3]:02x}")
    uuid, major, minor, power = _BODY.unpack(payload[4:])
    if not -127 <= power <= 0:
        raise MalformedFrame(f"measured power out of range: {power} dBm")
    return BeaconFrame(uuid, major, minor, power, kind)


def estimate_distance(rssi: float, measured_power: float, path_loss_exponent: float = 2.0) -> float:
    """Log-distance path-loss estimate in meters.

    distance = 10 ** ((measured_power - rssi) / (10 * path_loss_exponent)),
    anchored at 1 m where rssi == measured_power. Strictly increasing as the
    signal weakens.
    """
    if path_loss_exponent <= 0:
        raise InvalidExponent(f"path_loss_exponent must be > 0, got {path_loss_exponent}")
    return math.pow(10.0, (measured_power - rssi) / (10.0 * path_loss_exponent))


class Zone(enum.Enum):
    IMMEDIATE = "immediate"
    NEAR = "near"
    FAR = "far"
    OUT_OF_RANGE = "out_of_range"


_ZONE_ORDER = {Zone.IMMEDIATE: 0, Zone.NEAR: 1, Zone.FAR: 2, Zone.OUT_OF_RANGE: 3}


@dataclass(frozen=True, slots=True)
class ZoneThresholds:
    """Upper distance bound of each zone, meters. Beyond ``far`` is out of range."""

    immediate: float = 1.0
    near: float = 7.0
    far: float = 30.0

    def __post_init__(self):
        if not 0 < self.immediate < self.near < self.far:
            raise InvalidFrame("zone thresholds must satisfy 0 < immediate < near < far")


DEFAULT_THRESHOLDS = ZoneThresholds()


@dataclass(frozen=True, slots=True)
class ProximityZone:
    zone: Zone
    distance_m: float


def classify_proximity(distance_m: float, thresholds: ZoneThresholds = DEFAULT_THRESHOLDS) -> ProximityZone:
    """Bucket a distance estimate into a proximity zone."""
    if distance_m < 0:
        raise InvalidFrame(f"distance must be non-negative, got {distance_m}")
    if distance_m <= thresholds.immediate:
        zone = Zone.IMMEDIATE
    elif distance_m <= thresholds.near:
        zone = Zone.NEAR
    elif distance_m <= thresholds.far:
        zone = Zone.FAR
    else:
        zone = Zone.OUT_OF_RANGE
    return ProximityZone(zone, distance_m)


def zone_rank(zone: Zone) -> int:
    """Position of a zone in the immediate < near < far < out_of_range order."""
    return _ZONE_ORDER[zone]
