import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from mcprice import wire
from mcprice.wire import (
    BadLength,
    BadMagic,
    BadType,
    BadValue,
    ErrorFrame,
    FrameTooLarge,
    Ping,
    Pong,
    PriceRequest,
    PriceResponse,
    ProtocolError,
    Status,
    WireOption,
    WireResult,
    decode,
    encode,
)

OPT = WireOption(spot=100.0, strike=80.0, rate=0.0, volatility=0.0, expiry=1.0, kind=0, paths=1000, seed=42)


def test_ping_golden():
    assert encode(Ping(0)) == bytes.fromhex("4d43453103" + "00" * 8)
    assert len(encode(Ping(0))) == 13
    assert encode(Ping(1)) == bytes.fromhex("4d43453103" + "01" + "00" * 7)


def test_price_request_golden():
    # Hand-assembled: 1.0 = 00..f03f, 100.0 = 00..5940, 80.0 = 00..5440, 0.25 = 00..d03f
    o = WireOption(spot=100.0, strike=80.0, rate=0.0, volatility=0.25, expiry=1.0, kind=1, paths=1000, seed=258)
    expected = bytes.fromhex(
        "4d434531"                     # magic
        "01"                           # PriceRequest
        "0700000000000000"             # request_id 7
        "01"                           # count
        "0000000000005940"             # spot 100.0
        "0000000000005440"             # strike 80.0
        "0000000000000000"             # rate 0.0
        "000000000000d03f"             # volatility 0.25
        "000000000000f03f"             # expiry 1.0
        "01"                           # kind put
        "e8030000"                     # paths 1000
        "0201000000000000"             # seed 258
    )
    assert encode(PriceRequest(7, (o,))) == expected
    assert decode(expected) == PriceRequest(7, (o,))


def test_price_response_and_error_golden():
    resp = PriceResponse(2, (WireResult(20.0, 0.0, Status.OK), WireResult(0.0, 0.0, Status.INVALID_OPTION)))
    assert encode(resp) == bytes.fromhex(
        "4d434531" "02" "0200000000000000" "02"
        "0000000000003440" "0000000000000000" "00"
        "0000000000000000" "0000000000000000" "01"
    )
    assert encode(ErrorFrame(3, 1, "ab")) == bytes.fromhex("4d434531" "05" "0300000000000000" "01" "0200" "6162")


def test_layout_widths():
    assert wire.HEADER.size == 13
    assert wire.OPTION.size == 53
    assert wire.RESULT.size == 17
    # 7 options: 13 + 1 + 7 * 53
    assert len(encode(PriceRequest(1, (OPT,) * 7))) == 385
    assert len(encode(PriceResponse(1, (WireResult(1.0, 0.1),) * 7))) == 13 + 1 + 7 * 17


def test_roundtrip_simple():
    assert decode(encode(Pong(9))) == Pong(9)
    assert decode(encode(Ping(2**64 - 1))) == Ping(2**64 - 1)


def test_bad_magic():
    data = bytearray(encode(Pong(9)))
    data[0] = 0x4E
    with pytest.raises(BadMagic):
        decode(bytes(data))


def test_truncated_body():
    data = encode(PriceRequest(1, (OPT,)))
    with pytest.raises(BadLength):
        decode(data[:-1])
    with pytest.raises(BadLength):
        decode(data + b"\x00")
    with pytest.raises(BadLength):
        decode(encode(Ping(1))[:-1])


def test_unknown_type():
    data = bytearray(encode(Ping(1)))
    data[4] = 0x77
    with pytest.raises(BadType):
        decode(bytes(data))


def test_non_finite_rejected():
    raw = bytearray(encode(PriceRequest(1, (OPT,))))
    struct.pack_into("<d", raw, 14, float("nan"))
    with pytest.raises(BadValue):
        decode(bytes(raw))
    with pytest.raises(BadValue):
        encode(PriceRequest(1, (WireOption(float("inf"), 1, 0, 0, 1, 0, 1, 0),)))


def test_bad_kind_and_status_rejected():
    raw = bytearray(encode(PriceRequest(1, (OPT,))))
    raw[14 + 40] = 2
    with pytest.raises(BadValue):
        decode(bytes(raw))
    raw = bytearray(encode(PriceResponse(1, (WireResult(1.0, 0.0),))))
    raw[-1] = 9
    with pytest.raises(BadValue):
        decode(bytes(raw))


def test_zero_count_is_bad_length():
    with pytest.raises(BadLength):
        decode(wire.HEADER.pack(wire.MAGIC, 1, 0) + b"\x00")


def test_encode_count_bounds():
    with pytest.raises(FrameTooLarge):
        encode(PriceRequest(1, ()))
    with pytest.raises(FrameTooLarge):
        encode(PriceRequest(1, (OPT,) * 8))
    # A wider lane bound lets the client build oversized frames for the node to reject.
    assert decode(encode(PriceRequest(1, (OPT,) * 8), lane_count=8)).options == (OPT,) * 8


def test_encode_rejects_out_of_range_ints():
    with pytest.raises(ProtocolError):
        encode(Ping(-1))
    with pytest.raises(ProtocolError):
        encode(PriceRequest(1, (WireOption(1, 1, 0, 0, 1, 0, 2**32, 0),)))


def test_error_detail_utf8():
    frame = ErrorFrame(4, wire.ErrorCode.BAD_VALUE, "größe ✓")
    assert decode(encode(frame)) == frame
    raw = bytearray(encode(ErrorFrame(4, 1, "ab")))
    raw[-1] = 0xFF
    with pytest.raises(BadValue):
        decode(bytes(raw))


def test_long_error_detail_truncated_to_datagram():
    data = encode(ErrorFrame(1, 5, "é" * 2000))
    assert len(data) <= wire.MAX_DATAGRAM
    assert isinstance(decode(data), ErrorFrame)


# -- randomized --------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False)
u64 = st.integers(0, 2**64 - 1)
wire_options = st.builds(WireOption, finite, finite, finite, finite, finite,
                         st.sampled_from([0, 1]), st.integers(0, 2**32 - 1), u64)
wire_results = st.builds(WireResult, finite, finite, st.sampled_from(list(Status)))
frames = st.one_of(
    st.builds(Ping, u64),
    st.builds(Pong, u64),
    st.builds(PriceRequest, u64, st.lists(wire_options, min_size=1, max_size=7).map(tuple)),
    st.builds(PriceResponse, u64, st.lists(wire_results, min_size=1, max_size=7).map(tuple)),
    st.builds(ErrorFrame, u64, st.integers(0, 255), st.text(max_size=200)),
)


@settings(max_examples=500, deadline=None)
@given(frames)
def test_roundtrip_property(frame):
    data = encode(frame)
    assert len(data) <= wire.MAX_DATAGRAM
    assert decode(data) == frame


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=1600))
def test_decode_total_on_arbitrary_bytes(data):
    try:
        decode(data)
    except ProtocolError:
        pass


def test_decode_survives_mutated_frames():
    rnd = random.Random(3)
    seed_frames = [encode(PriceRequest(5, (OPT,) * 3)), encode(Ping(1)), encode(ErrorFrame(1, 2, "x"))]
    for _ in range(5000):
        data = bytearray(rnd.choice(seed_frames))
        for _ in range(rnd.randint(1, 4)):
            data[rnd.randrange(len(data))] = rnd.randrange(256)
        if rnd.random() < 0.3:
            del data[rnd.randrange(len(data)):]
        try:
            decode(bytes(data))
        except ProtocolError:
            pass
