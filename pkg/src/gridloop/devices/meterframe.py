"""Wire codec for the serial meter link.

Frame layout, in order: sync byte 0xA5, device id, sequence number,
register count N, then N four-byte register records (register id, value
high byte, value low byte, reserved 0x00), then CRC-16/CCITT-FALSE
(polynomial 0x1021, initial value 0xFFFF) computed over everything before
it and appended little-endian. An empty frame is exactly six bytes.

Register values are 16-bit unsigned with per-register scaling; signed
quantities ride offset-binary around 0x8000.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import EncodingRangeError, FrameDecodeError

SYNC_BYTE = 0xA5

REG_V_RMS = 0x01
REG_I_RMS = 0x02
REG_P = 0x03
REG_Q = 0x04
REG_FREQ = 0x05
REG_SPEED = 0x06
REG_TORQUE = 0x07
REG_PHASE = 0x08


@dataclass(frozen=True)
class RegisterSpec:
    name: str
    lsb: float
    offset_binary: bool = False


REGISTERS: dict[int, RegisterSpec] = {
    REG_V_RMS: RegisterSpec("voltage_rms", 0.1),
    REG_I_RMS: RegisterSpec("current_rms", 0.01),
    REG_P: RegisterSpec("real_power", 1.0),
    REG_Q: RegisterSpec("reactive_power", 1.0),
    REG_FREQ: RegisterSpec("frequency", 0.01),
    REG_SPEED: RegisterSpec("speed_rpm", 1.0),
    REG_TORQUE: RegisterSpec("torque", 0.01, offset_binary=True),
    REG_PHASE: RegisterSpec("phase_deg", 0.01, offset_binary=True),
}


def _build_crc_table() -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc16_ccitt(data: bytes, init: int = 0xFFFF) -> int:
    crc = init
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ byte) & 0xFF]
    return crc


@dataclass(frozen=True)
class MeterFrame:
    """One decoded frame: raw 16-bit register values keyed by id."""

    device_id: int
    sequence: int
    registers: tuple[tuple[int, int], ...] = ()

    def values(self) -> dict[str, float]:
        """Engineering values for every register in the frame."""
        out = {}
        for reg_id, raw in self.registers:
            spec = REGISTERS.get(reg_id)
            if spec is None:
                raise FrameDecodeError(
                    f"unknown register id 0x{reg_id:02X}", reason="register")
            out[spec.name] = decode_register_value(reg_id, raw)
        return out


def encode_register_value(reg_id: int, value: float) -> int:
    """16-bit raw encoding of an engineering value."""
    spec = REGISTERS.get(reg_id)
    if spec is None:
        raise EncodingRangeError(f"unknown register id 0x{reg_id:02X}",
                                 register=reg_id)
    raw = round(value / spec.lsb)
    if spec.offset_binary:
        raw += 0x8000
    if not 0 <= raw <= 0xFFFF:
        raise EncodingRangeError(
            f"{spec.name} value {value} does not fit register "
            f"0x{reg_id:02X}", register=reg_id)
    return raw


def decode_register_value(reg_id: int, raw: int) -> float:
    spec = REGISTERS[reg_id]
    if spec.offset_binary:
        return (raw - 0x8000) * spec.lsb
    return raw * spec.lsb


def encode_meter_frame(frame: MeterFrame) -> bytes:
    if not 0 <= frame.device_id <= 0xFF:
        raise EncodingRangeError("device id must fit one byte", register=-1)
    if not 0 <= frame.sequence <= 0xFF:
        raise EncodingRangeError("sequence must fit one byte", register=-1)
    if len(frame.registers) > 0xFF:
        raise EncodingRangeError("too many registers for one frame",
                                 register=-1)
    body = bytearray((SYNC_BYTE, frame.device_id, frame.sequence,
                      len(frame.registers)))
    for reg_id, raw in frame.registers:
        if not 0 <= reg_id <= 0xFF:
            raise EncodingRangeError("register id must fit one byte",
                                     register=reg_id)
        if not 0 <= raw <= 0xFFFF:
            raise EncodingRangeError("register value must fit 16 bits",
                                     register=reg_id)
        body.extend((reg_id, (raw >> 8) & 0xFF, raw & 0xFF, 0x00))
    crc = crc16_ccitt(bytes(body))
    body.extend((crc & 0xFF, (crc >> 8) & 0xFF))
    return bytes(body)


def decode_meter_frame(data: bytes) -> MeterFrame:
    """Decode exactly one frame. Raises FrameDecodeError with a reason of
    sync, length, crc, or trailing."""
    if len(data) < 6:
        raise FrameDecodeError("frame shorter than minimum", reason="length")
    if data[0] != SYNC_BYTE:
        raise FrameDecodeError(
            f"bad sync byte 0x{data[0]:02X}", reason="sync")
    count = data[3]
    expected = 4 + 4 * count + 2
    if len(data) < expected:
        raise FrameDecodeError("frame truncated", reason="length")
    if len(data) > expected:
        raise FrameDecodeError("trailing bytes after frame",
                               reason="trailing")
    crc_stored = data[expected - 2] | (data[expected - 1] << 8)
    crc_calc = crc16_ccitt(data[:expected - 2])
    if crc_stored != crc_calc:
        raise FrameDecodeError(
            f"crc mismatch: stored 0x{crc_stored:04X}, "
            f"computed 0x{crc_calc:04X}", reason="crc")
    registers = []
    for i in range(count):
        base = 4 + 4 * i
        reg_id = data[base]
        raw = (data[base + 1] << 8) | data[base + 2]
        registers.append((reg_id, raw))
    return MeterFrame(device_id=data[1], sequence=data[2],
                      registers=tuple(registers))


class FrameStreamDecoder:
    """Incremental decoder for a byte stream of concatenated frames.

    Scans forward to the next sync byte after any rejection, so one
    corrupt frame costs at most its own bytes. Tracks per-device sequence
    continuity.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self._last_sequence: dict[int, int] = {}
        self.rejected: dict[str, int] = {}
        self.resync_bytes = 0
        self.sequence_gaps = 0
        self.frames_decoded = 0

    def feed(self, data: bytes) -> list[MeterFrame]:
        self._buf.extend(data)
        frames: list[MeterFrame] = []
        while True:
            sync_at = self._buf.find(SYNC_BYTE)
            if sync_at < 0:
                self.resync_bytes += len(self._buf)
                self._buf.clear()
                break
            if sync_at > 0:
                self.resync_bytes += sync_at
                del self._buf[:sync_at]
            if len(self._buf) < 4:
                break
            need = 4 + 4 * self._buf[3] + 2
            if len(self._buf) < need:
                break
            try:
                frame = decode_meter_frame(bytes(self._buf[:need]))
            except FrameDecodeError as exc:
                self.rejected[exc.reason] = \
                    self.rejected.get(exc.reason, 0) + 1
                self.resync_bytes += 1
                del self._buf[:1]
                continue
            del self._buf[:need]
            last = self._last_sequence.get(frame.device_id)
            if last is not None and frame.sequence != (last + 1) & 0xFF:
                self.sequence_gaps += 1
            self._last_sequence[frame.device_id] = frame.sequence
            self.frames_decoded += 1
            frames.append(frame)
        return frames
