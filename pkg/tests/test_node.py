import random
import socket
import threading
import time

import pytest

from conftest import UdpClient
from mcprice import wire
from mcprice.node import AccelNode, NodeConfig, Pacing, modeled_service_time, process_frame
from mcprice.pricing import OptionKind, OptionSpec, SimParams, price_mc
from mcprice.wire import ErrorCode, ErrorFrame, Ping, Pong, PriceRequest, PriceResponse, Status, WireOption

INTRINSIC = WireOption(spot=100.0, strike=80.0, rate=0.0, volatility=0.0, expiry=1.0, kind=0, paths=1000, seed=1)


def wopt(i: int, paths: int = 2000, seed: int = None) -> WireOption:
    return WireOption(spot=90.0 + i, strike=100.0, rate=0.02, volatility=0.1 + 0.05 * (i % 5),
                      expiry=0.5 + 0.1 * i, kind=i % 2, paths=paths, seed=1000 + i if seed is None else seed)


def direct(o: WireOption):
    spec = OptionSpec(o.spot, o.strike, o.rate, o.volatility, o.expiry, OptionKind.CALL if o.kind == 0 else OptionKind.PUT)
    return price_mc(spec, SimParams(o.paths, o.seed))


def test_config_validation():
    with pytest.raises(ValueError):
        NodeConfig(lane_count=0)
    with pytest.raises(ValueError):
        NodeConfig(per_lane_rate=-1)
    with pytest.raises(ValueError):
        NodeConfig(pacing=Pacing.MODELED)
    with pytest.raises(ValueError):
        NodeConfig(max_inflight=0)
    with pytest.raises(ValueError):
        NodeConfig(pacing="sometimes")
    assert NodeConfig(pacing="modeled", per_lane_rate=1e6).pacing is Pacing.MODELED


def test_ping_pong(udp_client):
    assert udp_client.call(Ping(5)) == Pong(5)


def test_zero_vol_intrinsic(udp_client):
    resp = udp_client.call(PriceRequest(9, (INTRINSIC,)))
    assert resp == PriceResponse(9, (wire.WireResult(20.0, 0.0, Status.OK),))


def test_eight_options_rejected(udp_client):
    resp = udp_client.call(PriceRequest(11, tuple(wopt(i) for i in range(8))))
    assert isinstance(resp, ErrorFrame)
    assert resp.request_id == 11
    assert resp.code == ErrorCode.FRAME_TOO_LARGE


def test_invalid_option_isolated(udp_client):
    bad = WireOption(spot=-5.0, strike=100.0, rate=0.0, volatility=0.2, expiry=1.0, kind=0, paths=100, seed=1)
    resp = udp_client.call(PriceRequest(3, (wopt(0), bad, wopt(2))))
    assert [r.status for r in resp.results] == [Status.OK, Status.INVALID_OPTION, Status.OK]
    assert resp.results[1].price == 0.0 and resp.results[1].std_error == 0.0
    assert resp.results[0].price == direct(wopt(0)).price


def test_bad_magic_dropped_silently(native_node, udp_client):
    udp_client.send_raw(b"XXXX" + wire.encode(Ping(1))[4:])
    udp_client.send_raw(b"MC")
    udp_client.sock.settimeout(0.3)
    with pytest.raises(socket.timeout):
        udp_client.recv()
    # Still alive afterwards.
    udp_client.sock.settimeout(5)
    assert udp_client.call(Ping(2)) == Pong(2)
    assert native_node.stats.snapshot()["errors"] == 2


def test_parseable_garbage_gets_error_frame(udp_client):
    frame = wire.encode(PriceRequest(21, (wopt(0),)))
    udp_client.send_raw(frame[:-3])
    resp = udp_client.recv()
    assert isinstance(resp, ErrorFrame) and resp.request_id == 21 and resp.code == ErrorCode.BAD_LENGTH
    udp_client.send_raw(wire.encode(Pong(22)))
    resp = udp_client.recv()
    assert isinstance(resp, ErrorFrame) and resp.code == ErrorCode.BAD_TYPE


def test_lane_isolation_and_order(udp_client):
    opts = [wopt(i) for i in range(7)]
    rng = random.Random(3)
    for trial in range(3):
        rng.shuffle(opts)
        resp = udp_client.call(PriceRequest(100 + trial, tuple(opts)))
        for o, r in zip(opts, resp.results):
            est = direct(o)
            assert (r.price, r.std_error) == (est.price, est.std_error)
    # One option alone on a lane gives the same bits as inside a full frame.
    alone = udp_client.call(PriceRequest(200, (opts[3],)))
    assert alone.results[0].price == direct(opts[3]).price


def test_request_id_echo_concurrent(native_node):
    errors = []

    def client(k):
        c = UdpClient(native_node.address)
        try:
            for j in range(15):
                rid = (k << 32) | j
                opts = tuple(wopt(i, paths=500) for i in range(1 + (j % 7)))
                resp = c.call(PriceRequest(rid, opts))
                if resp.request_id != rid or len(resp.results) != len(opts):
                    errors.append((rid, resp))
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)
        finally:
            c.close()

    threads = [threading.Thread(target=client, args=(k,)) for k in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    assert native_node.stats.snapshot()["frames_served"] == 90


def test_modeled_service_time_max_rule():
    cfg = NodeConfig(pacing="modeled", per_lane_rate=1e6)
    req = PriceRequest(1, (wopt(0, paths=100), wopt(1, paths=500_000)))
    assert modeled_service_time(req, cfg) == pytest.approx(0.5)
    assert modeled_service_time(req, NodeConfig()) == 0.0
    cfg.frame_latency = 0.05
    assert modeled_service_time(req, cfg) == pytest.approx(0.55)


def test_process_frame_lane_bound():
    with pytest.raises(wire.FrameTooLarge):
        process_frame(PriceRequest(1, tuple(wopt(i, 10) for i in range(8))), NodeConfig())


@pytest.mark.parametrize("count", [1, 7])
def test_modeled_pacing_flat(count):
    cfg = NodeConfig(pacing="modeled", per_lane_rate=1e6)
    with AccelNode(cfg) as node:
        c = UdpClient(node.address)
        try:
            opts = tuple(wopt(i, paths=500_000) for i in range(count))
            c.call(Ping(0))
            t0 = time.monotonic()
            resp = c.call(PriceRequest(1, opts))
            elapsed = time.monotonic() - t0
        finally:
            c.close()
    assert all(r.status == Status.OK for r in resp.results)
    assert elapsed == pytest.approx(0.5, rel=0.10)


def test_modeled_pacing_mixed_paths():
    cfg = NodeConfig(pacing="modeled", per_lane_rate=1e6)
    with AccelNode(cfg) as node:
        c = UdpClient(node.address)
        try:
            t0 = time.monotonic()
            c.call(PriceRequest(1, (wopt(0, paths=100), wopt(1, paths=200_000))))
            elapsed = time.monotonic() - t0
        finally:
            c.close()
    assert elapsed == pytest.approx(0.2, rel=0.10)


def test_stats_monotone(native_node, udp_client):
    before = native_node.stats.snapshot()
    udp_client.call(PriceRequest(1, (wopt(0, 100), wopt(1, 100))))
    after = native_node.stats.snapshot()
    assert after["frames_served"] == before["frames_served"] + 1
    assert after["options_served"] == before["options_served"] + 2
    assert after["busy_time"] > before["busy_time"]
    assert after["errors"] == before["errors"]


def test_bind_failure():
    holder = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    holder.bind(("127.0.0.1", 0))
    try:
        with pytest.raises(OSError, match="cannot bind"):
            AccelNode(NodeConfig(port=holder.getsockname()[1])).start()
    finally:
        holder.close()
