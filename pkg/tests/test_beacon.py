import math
import random

import pytest
from hypothesis import given, strategies as st

from marge.beacon import (
    BeaconFrame,
    BeaconId,
    BeaconKind,
    DEFAULT_THRESHOLDS,
    Zone,
    ZoneThresholds,
    classify_proximity,
    encode_advertisement,
    estimate_distance,
    parse_advertisement,
    zone_rank,
)
from marge.errors import InvalidExponent, InvalidFrame, MalformedFrame


def oracle_encode(uuid: bytes, major: int, minor: int, power: int) -> bytes:
    """Independent byte-level encoder: assembles the payload digit by digit,
    written before the production codec and kept free of its helpers."""
    out = bytearray()
    out += b"\x4c\x00"            # manufacturer id
    out.append(0x02)               # beacon type
    out.append(0x15)               # remaining length = 21
    out += uuid                    # 16 bytes
    out.append((major >> 8) & 0xFF)
    out.append(major & 0xFF)
    out.append((minor >> 8) & 0xFF)
    out.append(minor & 0xFF)
    out.append(power & 0xFF)       # two's complement signed byte
    return bytes(out)


frames = st.builds(
    BeaconFrame,
    uuid=st.binary(min_size=16, max_size=16),
    major=st.integers(0, 0xFFFF),
    minor=st.integers(0, 0xFFFF),
    measured_power=st.integers(-127, 0),
)


class TestCodec:
    def test_known_vector_matches_oracle(self):
        payload = encode_advertisement(BeaconFrame(b"\x00" * 16, 1, 2, -59))
        assert payload == oracle_encode(b"\x00" * 16, 1, 2, -59)

    def test_oracle_payload_parses_to_fields(self):
        frame = parse_advertisement(oracle_encode(b"\x00" * 16, 1, 2, -59))
        assert frame.uuid == b"\x00" * 16
        assert frame.major == 1
        assert frame.minor == 2
        assert frame.measured_power == -59

    def test_all_zero_vector(self):
        frame = BeaconFrame(b"\x00" * 16, 0, 0, -59)
        assert encode_advertisement(frame) == oracle_encode(b"\x00" * 16, 0, 0, -59)

    @given(frames)
    def test_round_trip(self, frame):
        assert parse_advertisement(encode_advertisement(frame)) == frame

    @given(frames)
    def test_encoding_matches_oracle(self, frame):
        assert encode_advertisement(frame) == oracle_encode(
            frame.uuid, frame.major, frame.minor, frame.measured_power
        )

    def test_minor_locality(self):
        a = encode_advertisement(BeaconFrame(b"\xab" * 16, 7, 1, -60))
        b = encode_advertisement(BeaconFrame(b"\xab" * 16, 7, 2, -60))
        diff = [i for i in range(25) if a[i] != b[i]]
        assert diff == [23]  # only the minor bytes may differ
        c = encode_advertisement(BeaconFrame(b"\xab" * 16, 7, 0x1FF, -60))
        diff = [i for i in range(25) if a[i] != c[i]]
        assert set(diff) <= {22, 23}

    def test_corrupted_type_marker_rejected(self):
        payload = bytearray(oracle_encode(b"\x11" * 16, 3, 4, -70))
        payload[2] = 0x03
        with pytest.raises(MalformedFrame):
            parse_advertisement(bytes(payload))

    def test_corrupted_length_marker_rejected(self):
        payload = bytearray(oracle_encode(b"\x11" * 16, 3, 4, -70))
        payload[3] = 0x14
        with pytest.raises(MalformedFrame):
            parse_advertisement(bytes(payload))

    def test_wrong_manufacturer_rejected(self):
        payload = b"\x4c\x01" + oracle_encode(b"\x11" * 16, 3, 4, -70)[2:]
        with pytest.raises(MalformedFrame):
            parse_advertisement(payload)

    def test_wrong_length_rejected(self):
        with pytest.raises(MalformedFrame):
            parse_advertisement(b"\x4c\x00\x02\x15")
        with pytest.raises(MalformedFrame):
            parse_advertisement(oracle_encode(b"\x11" * 16, 3, 4, -70) + b"\x00")

    def test_parse_never_crashes_on_noise(self):
        rng = random.Random(0xBEAC)
        for _ in range(2000):
            blob = rng.randbytes(rng.randrange(0, 64))
            try:
                frame = parse_advertisement(blob)
                assert isinstance(frame, BeaconFrame)
            except MalformedFrame:
                pass

    def test_kind_is_out_of_band(self):
        payload = encode_advertisement(BeaconFrame(b"\x01" * 16, 1, 1, -59, BeaconKind.STICKER))
        assert parse_advertisement(payload, kind=BeaconKind.STICKER).kind is BeaconKind.STICKER
        # the wire bytes are identical regardless of kind
        assert payload == encode_advertisement(BeaconFrame(b"\x01" * 16, 1, 1, -59))

    def test_invalid_fields_rejected_at_construction(self):
        with pytest.raises(InvalidFrame):
            BeaconFrame(b"\x00" * 15, 0, 0, -59)
        with pytest.raises(InvalidFrame):
            BeaconFrame(b"\x00" * 16, 0x10000, 0, -59)
        with pytest.raises(InvalidFrame):
            BeaconFrame(b"\x00" * 16, 0, 0, 1)
        with pytest.raises(InvalidFrame):
            BeaconFrame(b"\x00" * 16, 0, 0, -128)


class TestDistance:
    def test_reference_distance_identity(self):
        for exponent in (1.0, 2.0, 3.5):
            assert estimate_distance(-59, -59, exponent) == pytest.approx(1.0)

    def test_closed_form_values(self):
        # 10 ** ((-59 - (-79)) / 20) = 10 ** 1
        assert estimate_distance(-79, -59, 2.0) == pytest.approx(10.0)
        # 10 ** ((-59 - (-99)) / 20) = 10 ** 2
        assert estimate_distance(-99, -59, 2.0) == pytest.approx(100.0)

    def test_invalid_exponent(self):
        with pytest.raises(InvalidExponent):
            estimate_distance(-70, -59, 0.0)
        with pytest.raises(InvalidExponent):
            estimate_distance(-70, -59, -2.0)

    @given(
        st.integers(-127, 0),
        st.integers(-127, 0),
        st.integers(-90, -10),
        st.floats(0.5, 6.0),
    )
    def test_monotone_in_rssi(self, rssi_a, rssi_b, power, exponent):
        if rssi_a == rssi_b:
            return
        lo, hi = sorted((rssi_a, rssi_b))
        assert estimate_distance(lo, power, exponent) > estimate_distance(hi, power, exponent)


class TestZones:
    def test_examples(self):
        assert classify_proximity(0.5).zone is Zone.IMMEDIATE
        assert classify_proximity(5.0).zone is Zone.NEAR
        assert classify_proximity(31.0).zone is Zone.OUT_OF_RANGE

    def test_distance_echoed(self):
        assert classify_proximity(12.25).distance_m == 12.25

    def test_boundaries(self):
        assert classify_proximity(1.0).zone is Zone.IMMEDIATE
        assert classify_proximity(7.0).zone is Zone.NEAR
        assert classify_proximity(30.0).zone is Zone.FAR
        assert classify_proximity(30.0 + 1e-9).zone is Zone.OUT_OF_RANGE

    def test_out_of_range_iff_beyond_far(self):
        for d in (0.0, 1.0, 7.0, 29.9, 30.0):
            assert classify_proximity(d).zone is not Zone.OUT_OF_RANGE
        for d in (30.001, 100.0, 1e6):
            assert classify_proximity(d).zone is Zone.OUT_OF_RANGE

    @given(st.floats(0, 100), st.floats(0, 100))
    def test_zone_monotone_in_distance(self, d1, d2):
        lo, hi = sorted((d1, d2))
        assert zone_rank(classify_proximity(lo).zone) <= zone_rank(classify_proximity(hi).zone)

    def test_custom_thresholds(self):
        tight = ZoneThresholds(immediate=0.5, near=2.0, far=5.0)
        assert classify_proximity(1.0, tight).zone is Zone.NEAR
        assert classify_proximity(6.0, tight).zone is Zone.OUT_OF_RANGE
        assert DEFAULT_THRESHOLDS.far == 30.0

    def test_bad_thresholds(self):
        with pytest.raises(InvalidFrame):
            ZoneThresholds(immediate=5.0, near=2.0, far=30.0)

    def test_negative_distance_rejected(self):
        with pytest.raises(InvalidFrame):
            classify_proximity(-0.1)


def test_beacon_id_hex_round_trip():
    b = BeaconId.from_hex("B9407F30-F5F8-466E-AFF9-25556B57FE6D", 10, 20)
    assert b.uuid_hex == "b9407f30f5f8466eaff925556b57fe6d"
    assert BeaconId.from_hex(b.uuid_hex, 10, 20) == b
    with pytest.raises(InvalidFrame):
        BeaconId.from_hex("xyz", 1, 1)


def test_distance_zone_pipeline_covers_measured_envelope():
    # a weak signal from a calibrated -59 dBm beacon lands in the 7-30 m band
    d = estimate_distance(-87, -59, 2.0)
    assert 7.0 < d <= 30.0
    assert classify_proximity(d).zone is Zone.FAR
    assert math.isclose(d, 10 ** (28 / 20))
