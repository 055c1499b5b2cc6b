"""Meter link codec: CRC, framing, stream resynchronization."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridloop.devices.meterframe import (
    REG_FREQ,
    REG_I_RMS,
    REG_P,
    REG_PHASE,
    REG_TORQUE,
    REG_V_RMS,
    REGISTERS,
    SYNC_BYTE,
    FrameStreamDecoder,
    MeterFrame,
    crc16_ccitt,
    decode_meter_frame,
    decode_register_value,
    encode_meter_frame,
    encode_register_value,
)
from gridloop.errors import EncodingRangeError, FrameDecodeError
from oracles import crc16_bitwise


def test_crc_known_answer():
    # standard CRC-16/CCITT-FALSE check value
    assert crc16_ccitt(b"123456789") == 0x29B1


def test_crc_table_matches_bitwise_reference():
    rng = random.Random(5)
    for _ in range(200):
        data = bytes(rng.randrange(256)
                     for _ in range(rng.randrange(0, 40)))
        assert crc16_ccitt(data) == crc16_bitwise(data)


def test_empty_frame_is_six_bytes():
    wire = encode_meter_frame(MeterFrame(device_id=1, sequence=0))
    assert len(wire) == 6
    assert wire[0] == SYNC_BYTE
    assert wire[3] == 0
    decoded = decode_meter_frame(wire)
    assert decoded.registers == ()


def test_frame_layout():
    frame = MeterFrame(device_id=3, sequence=7,
                       registers=((REG_V_RMS, 0x0899),))
    wire = encode_meter_frame(frame)
    assert len(wire) == 10
    assert wire[:4] == bytes((SYNC_BYTE, 3, 7, 1))
    assert wire[4:8] == bytes((REG_V_RMS, 0x08, 0x99, 0x00))
    crc = crc16_ccitt(wire[:8])
    assert wire[8] == crc & 0xFF
    assert wire[9] == crc >> 8


def test_round_trip_preserves_registers():
    regs = ((REG_V_RMS, 2199), (REG_I_RMS, 230), (REG_P, 500))
    frame = MeterFrame(device_id=2, sequence=200, registers=regs)
    decoded = decode_meter_frame(encode_meter_frame(frame))
    assert decoded == frame


def test_register_scaling():
    assert encode_register_value(REG_V_RMS, 219.9) == 2199
    assert decode_register_value(REG_V_RMS, 2199) == pytest.approx(219.9)
    assert encode_register_value(REG_I_RMS, 2.34) == 234
    assert encode_register_value(REG_FREQ, 46.67) == 4667


def test_offset_binary_registers_carry_sign():
    assert encode_register_value(REG_TORQUE, 0.0) == 0x8000
    assert encode_register_value(REG_TORQUE, -3.5) == 0x8000 - 350
    assert decode_register_value(REG_TORQUE, 0x8000 - 350) == \
        pytest.approx(-3.5)
    assert decode_register_value(REG_PHASE, 0x8000 + 1234) == \
        pytest.approx(12.34)


def test_out_of_range_value_rejected_at_encode():
    with pytest.raises(EncodingRangeError):
        encode_register_value(REG_V_RMS, 7000.0)
    with pytest.raises(EncodingRangeError):
        encode_register_value(REG_TORQUE, -400.0)
    with pytest.raises(EncodingRangeError):
        encode_register_value(0x7F, 1.0)


def test_values_maps_register_names():
    frame = MeterFrame(device_id=1, sequence=0, registers=(
        (REG_V_RMS, 2200), (REG_TORQUE, 0x8000 + 350)))
    values = frame.values()
    assert values["voltage_rms"] == pytest.approx(220.0)
    assert values["torque"] == pytest.approx(3.5)


def test_values_rejects_unknown_register():
    frame = MeterFrame(device_id=1, sequence=0, registers=((0x70, 1),))
    with pytest.raises(FrameDecodeError):
        frame.values()


@pytest.mark.parametrize("mangle,reason", [
    (lambda b: bytes([0x00]) + b[1:], "sync"),
    (lambda b: b[:4], "length"),
    (lambda b: b[:-1] + bytes([b[-1] ^ 0x01]), "crc"),
    (lambda b: b + b"\x00", "trailing"),
])
def test_decode_failure_reasons(mangle, reason):
    wire = encode_meter_frame(MeterFrame(
        device_id=1, sequence=4, registers=((REG_V_RMS, 100),)))
    with pytest.raises(FrameDecodeError) as err:
        decode_meter_frame(mangle(wire))
    assert err.value.reason == reason


def test_single_bit_flip_always_detected_on_one_frame():
    wire = encode_meter_frame(MeterFrame(
        device_id=2, sequence=9,
        registers=((REG_V_RMS, 2200), (REG_P, 512))))
    for byte_at in range(len(wire)):
        for bit in range(8):
            corrupt = bytearray(wire)
            corrupt[byte_at] ^= 1 << bit
            with pytest.raises(FrameDecodeError):
                decode_meter_frame(bytes(corrupt))


@settings(max_examples=200)
@given(st.integers(0, 255), st.integers(0, 255),
       st.lists(st.tuples(st.sampled_from(sorted(REGISTERS)),
                          st.integers(0, 0xFFFF)), max_size=8))
def test_round_trip_random_frames(dev, seq, regs):
    frame = MeterFrame(device_id=dev, sequence=seq,
                       registers=tuple(regs))
    assert decode_meter_frame(encode_meter_frame(frame)) == frame


def stream_frames(count, start_seq=0, device=1):
    frames = [MeterFrame(device_id=device, sequence=(start_seq + i) & 0xFF,
                         registers=((REG_V_RMS, 2000 + i),))
              for i in range(count)]
    return frames, b"".join(encode_meter_frame(f) for f in frames)


def test_stream_decoder_handles_arbitrary_chunking():
    frames, wire = stream_frames(20)
    decoder = FrameStreamDecoder()
    got = []
    rng = random.Random(11)
    at = 0
    while at < len(wire):
        step = rng.randrange(1, 9)
        got.extend(decoder.feed(wire[at:at + step]))
        at += step
    assert got == frames
    assert decoder.frames_decoded == 20
    assert decoder.sequence_gaps == 0
    assert decoder.rejected == {}


def test_stream_decoder_skips_leading_garbage():
    frames, wire = stream_frames(2)
    decoder = FrameStreamDecoder()
    got = decoder.feed(b"\x00\x11\x22" + wire)
    assert got == frames
    assert decoder.resync_bytes == 3


def test_stream_decoder_recovers_after_corrupt_frame():
    frames, wire = stream_frames(3)
    middle = bytearray(wire)
    # flip a payload bit in the second frame
    middle[10 + 5] ^= 0x40
    decoder = FrameStreamDecoder()
    got = decoder.feed(bytes(middle))
    assert frames[0] in got
    assert frames[2] in got
    assert frames[1] not in got
    assert decoder.rejected.get("crc", 0) >= 1
    # the lost frame shows up as a sequence gap
    assert decoder.sequence_gaps == 1


def test_stream_decoder_counts_sequence_wrap_as_continuous():
    frames, wire = stream_frames(4, start_seq=254)
    decoder = FrameStreamDecoder()
    assert decoder.feed(wire) == frames
    assert decoder.sequence_gaps == 0


def test_stream_decoder_tracks_devices_independently():
    _, wire_a = stream_frames(3, device=1)
    _, wire_b = stream_frames(3, start_seq=100, device=2)
    decoder = FrameStreamDecoder()
    decoder.feed(wire_a[:10])
    decoder.feed(wire_b[:10])
    decoder.feed(wire_a[10:])
    decoder.feed(wire_b[10:])
    assert decoder.frames_decoded == 6
    assert decoder.sequence_gaps == 0


def test_stream_decoder_holds_partial_frame():
    frames, wire = stream_frames(1)
    decoder = FrameStreamDecoder()
    assert decoder.feed(wire[:5]) == []
    assert decoder.feed(wire[5:]) == frames
