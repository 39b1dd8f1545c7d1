"""Binary datagram codec for the accelerator node.

Layout (little-endian throughout)::

    header           magic "MCE1" (4) | msg_type u8 | request_id u64       13 bytes
    PriceRequest  01 header | count u8 | count x option                     14 + 53n
        option       spot f64 | strike f64 | rate f64 | volatility f64 |
                     expiry f64 | kind u8 (0 call, 1 put) | paths u32 |
                     seed u64                                               53 bytes
    PriceResponse 02 header | count u8 | count x (price f64 | std_error f64 | status u8)
    Ping 03 / Pong 04  header only
    Error         05 header | code u8 | detail_len u16 | detail (UTF-8)

A datagram never exceeds ``MAX_DATAGRAM`` bytes.
"""
from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from typing import Union

MAGIC = b"MCE1"
MAX_DATAGRAM = 1400
DEFAULT_LANES = 7

HEADER = struct.Struct("<4sBQ")
COUNT = struct.Struct("<B")
OPTION = struct.Struct("<5dBIQ")
RESULT = struct.Struct("<ddB")
ERROR_HEAD = struct.Struct("<BH")

# Largest count that still fits in one datagram.
MAX_WIRE_OPTIONS = (MAX_DATAGRAM - HEADER.size - COUNT.size) // OPTION.size
MAX_ERROR_DETAIL = MAX_DATAGRAM - HEADER.size - ERROR_HEAD.size


class MsgType(enum.IntEnum):
    PRICE_REQUEST = 0x01
    PRICE_RESPONSE = 0x02
    PING = 0x03
    PONG = 0x04
    ERROR = 0x05


class Status(enum.IntEnum):
    OK = 0
    INVALID_OPTION = 1
    LANE_ERROR = 2


class ErrorCode(enum.IntEnum):
    FRAME_TOO_LARGE = 1
    BAD_LENGTH = 2
    BAD_TYPE = 3
    BAD_VALUE = 4
    INTERNAL = 5


class ProtocolError(Exception):
    """Base class for codec failures."""

    code = ErrorCode.INTERNAL


class BadMagic(ProtocolError):
    pass


class BadType(ProtocolError):
    code = ErrorCode.BAD_TYPE


class BadLength(ProtocolError):
    code = ErrorCode.BAD_LENGTH


class BadValue(ProtocolError):
    code = ErrorCode.BAD_VALUE


class FrameTooLarge(ProtocolError):
    code = ErrorCode.FRAME_TOO_LARGE


@dataclass(frozen=True)
class WireOption:
    spot: float
    strike: float
    rate: float
    volatility: float
    expiry: float
    kind: int
    paths: int
    seed: int


@dataclass(frozen=True)
class WireResult:
    price: float
    std_error: float
    status: Status = Status.OK


@dataclass(frozen=True)
class Ping:
    request_id: int


@dataclass(frozen=True)
class Pong:
    request_id: int


@dataclass(frozen=True)
class PriceRequest:
    request_id: int
    options: tuple[WireOption, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class PriceResponse:
    request_id: int
    results: tuple[WireResult, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class ErrorFrame:
    request_id: int
    code: int
    detail: str = ""


Frame = Union[Ping, Pong, PriceRequest, PriceResponse, ErrorFrame]

_TYPE_OF = {
    Ping: MsgType.PING,
    Pong: MsgType.PONG,
    PriceRequest: MsgType.PRICE_REQUEST,
    PriceResponse: MsgType.PRICE_RESPONSE,
    ErrorFrame: MsgType.ERROR,
}


def _check_u(value: int, bits: int, name: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 1 << bits:
        raise ProtocolError(f"{name} must be a {bits}-bit unsigned integer, got {value!r}")


def _check_floats(values, names) -> None:
    for v, n in zip(values, names):
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise BadValue(f"{n} must be a finite float, got {v!r}")


def _check_count(n: int, lane_count: int) -> None:
    if not 1 <= n <= min(lane_count, MAX_WIRE_OPTIONS):
        raise FrameTooLarge(f"option count {n} outside [1, {lane_count}]")


def encode(frame: Frame, lane_count: int = DEFAULT_LANES) -> bytes:
    """Serialize ``frame``; ``lane_count`` bounds the options or results per frame."""
    try:
        msg_type = _TYPE_OF[type(frame)]
    except KeyError:
        raise ProtocolError(f"not a frame: {frame!r}") from None
    _check_u(frame.request_id, 64, "request_id")
    parts = [HEADER.pack(MAGIC, msg_type, frame.request_id)]

    if isinstance(frame, PriceRequest):
        _check_count(len(frame.options), lane_count)
        parts.append(COUNT.pack(len(frame.options)))
        for o in frame.options:
            _check_floats((o.spot, o.strike, o.rate, o.volatility, o.expiry),
                          ("spot", "strike", "rate", "volatility", "expiry"))
            if o.kind not in (0, 1):
                raise BadValue(f"kind must be 0 or 1, got {o.kind!r}")
            _check_u(o.paths, 32, "paths")
            _check_u(o.seed, 64, "seed")
            parts.append(OPTION.pack(o.spot, o.strike, o.rate, o.volatility, o.expiry,
                                     o.kind, o.paths, o.seed))
    elif isinstance(frame, PriceResponse):
        _check_count(len(frame.results), lane_count)
        parts.append(COUNT.pack(len(frame.results)))
        for r in frame.results:
            _check_floats((r.price, r.std_error), ("price", "std_error"))
            parts.append(RESULT.pack(r.price, r.std_error, Status(r.status)))
    elif isinstance(frame, ErrorFrame):
        _check_u(frame.code, 8, "code")
        detail = frame.detail.encode("utf-8")[:MAX_ERROR_DETAIL]
        # Truncation may split a code point; back off to a clean boundary.
        detail = detail.decode("utf-8", errors="ignore").encode("utf-8")
        parts.append(ERROR_HEAD.pack(frame.code, len(detail)))
        parts.append(detail)

    data = b"".join(parts)
    if len(data) > MAX_DATAGRAM:
        raise FrameTooLarge(f"encoded frame is {len(data)} bytes")
    return data


def decode_header(data: bytes) -> tuple[int, int]:
    """Return ``(msg_type, request_id)`` without validating the type or body."""
    if len(data) < len(MAGIC) or data[:4] != MAGIC:
        raise BadMagic("bad magic")
    if len(data) < HEADER.size:
        raise BadLength(f"datagram of {len(data)} bytes is shorter than a header")
    _, msg_type, request_id = HEADER.unpack_from(data)
    return msg_type, request_id


def _counted_body(data: bytes, item: struct.Struct) -> int:
    if len(data) < HEADER.size + COUNT.size:
        raise BadLength("missing option count")
    (n,) = COUNT.unpack_from(data, HEADER.size)
    if n == 0:
        raise BadLength("option count is zero")
    expected = HEADER.size + COUNT.size + n * item.size
    if len(data) != expected:
        raise BadLength(f"expected {expected} bytes for {n} entries, got {len(data)}")
    return n


def decode(data: bytes) -> Frame:
    """Parse one datagram. Raises a ``ProtocolError`` subclass on any malformed input."""
    data = bytes(data)
    msg_type, request_id = decode_header(data)
    if len(data) > MAX_DATAGRAM:
        raise BadLength(f"datagram of {len(data)} bytes exceeds {MAX_DATAGRAM}")
    try:
        kind = MsgType(msg_type)
    except ValueError:
        raise BadType(f"unknown msg_type 0x{msg_type:02x}") from None

    if kind in (MsgType.PING, MsgType.PONG):
        if len(data) != HEADER.size:
            raise BadLength(f"{kind.name} carries no body")
        return (Ping if kind is MsgType.PING else Pong)(request_id)

    if kind is MsgType.PRICE_REQUEST:
        n = _counted_body(data, OPTION)
        options = []
        for i in range(n):
            spot, strike, rate, vol, expiry, k, paths, seed = OPTION.unpack_from(
                data, HEADER.size + COUNT.size + i * OPTION.size)
            _check_floats((spot, strike, rate, vol, expiry),
                          ("spot", "strike", "rate", "volatility", "expiry"))
            if k not in (0, 1):
                raise BadValue(f"option {i}: kind must be 0 or 1, got {k}")
            options.append(WireOption(spot, strike, rate, vol, expiry, k, paths, seed))
        return PriceRequest(request_id, tuple(options))

    if kind is MsgType.PRICE_RESPONSE:
        n = _counted_body(data, RESULT)
        results = []
        for i in range(n):
            price, se, status = RESULT.unpack_from(data, HEADER.size + COUNT.size + i * RESULT.size)
            _check_floats((price, se), ("price", "std_error"))
            try:
                status = Status(status)
            except ValueError:
                raise BadValue(f"result {i}: unknown status {status}") from None
            results.append(WireResult(price, se, status))
        return PriceResponse(request_id, tuple(results))

    if len(data) < HEADER.size + ERROR_HEAD.size:
        raise BadLength("truncated error body")
    code, detail_len = ERROR_HEAD.unpack_from(data, HEADER.size)
    start = HEADER.size + ERROR_HEAD.size
    if len(data) != start + detail_len:
        raise BadLength(f"error detail length {detail_len} does not match datagram")
    try:
        detail = data[start:].decode("utf-8")
    except UnicodeDecodeError:
        raise BadValue("error detail is not valid UTF-8") from None
    return ErrorFrame(request_id, code, detail)
