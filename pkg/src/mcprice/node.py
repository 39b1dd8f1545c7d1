"""Simulated network-attached pricing accelerator.

The node listens on UDP, prices each option of a request frame on its own
lane (a worker thread running the pricing core), and optionally paces its
replies with a throughput model so that service time looks like a fixed
pipeline rather than host compute.
"""
from __future__ import annotations

import argparse
import enum
import json
import logging
import signal
import socket
import sys
import threading
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from mcprice import wire
from mcprice.pricing import InvalidOptionError, OptionKind, OptionSpec, SimParams, price_mc

log = logging.getLogger("mcprice.node")

RECV_BUFFER = 2048


class Pacing(enum.Enum):
    NATIVE = "native"
    MODELED = "modeled"


@dataclass
class NodeConfig:
    host: str = "127.0.0.1"
    port: int = 0
    lane_count: int = wire.DEFAULT_LANES
    per_lane_rate: float = 0.0
    pacing: Pacing = Pacing.NATIVE
    max_inflight: int = 4
    # Fixed pipeline latency added to every modeled frame.
    frame_latency: float = 0.0

    def __post_init__(self) -> None:
        self.pacing = Pacing(self.pacing)
        if self.lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if self.lane_count > wire.MAX_WIRE_OPTIONS:
            raise ValueError(f"lane_count must be <= {wire.MAX_WIRE_OPTIONS} to fit one datagram")
        if self.per_lane_rate < 0:
            raise ValueError("per_lane_rate must be >= 0")
        if self.pacing is Pacing.MODELED and self.per_lane_rate <= 0:
            raise ValueError("modeled pacing requires per_lane_rate > 0")
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        if self.frame_latency < 0:
            raise ValueError("frame_latency must be >= 0")


@dataclass
class LaneStats:
    frames_served: int = 0
    options_served: int = 0
    errors: int = 0
    busy_time: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record_frame(self, options: int, busy: float) -> None:
        with self._lock:
            self.frames_served += 1
            self.options_served += options
            self.busy_time += busy

    def record_error(self) -> None:
        with self._lock:
            self.errors += 1

    def snapshot(self) -> dict:
        with self._lock:
            return {"frames_served": self.frames_served, "options_served": self.options_served,
                    "errors": self.errors, "busy_time": self.busy_time}


def price_lane(option: wire.WireOption) -> wire.WireResult:
    try:
        spec = OptionSpec(option.spot, option.strike, option.rate, option.volatility, option.expiry,
                          OptionKind.CALL if option.kind == 0 else OptionKind.PUT)
        est = price_mc(spec, SimParams(option.paths, option.seed))
    except InvalidOptionError:
        return wire.WireResult(0.0, 0.0, wire.Status.INVALID_OPTION)
    except Exception:
        log.exception("lane failure")
        return wire.WireResult(0.0, 0.0, wire.Status.LANE_ERROR)
    return wire.WireResult(est.price, est.std_error, wire.Status.OK)


def modeled_service_time(request: wire.PriceRequest, config: NodeConfig) -> float:
    """Lanes run in parallel, so the slowest lane sets the frame time."""
    if config.pacing is not Pacing.MODELED:
        return 0.0
    return config.frame_latency + max(o.paths for o in request.options) / config.per_lane_rate


def process_frame(request: wire.PriceRequest, config: NodeConfig,
                  lanes: Optional[Executor] = None,
                  received_at: Optional[float] = None) -> wire.PriceResponse:
    if received_at is None:
        received_at = time.monotonic()
    if len(request.options) > config.lane_count:
        raise wire.FrameTooLarge(f"{len(request.options)} options for {config.lane_count} lanes")
    if lanes is None:
        results = [price_lane(o) for o in request.options]
    else:
        results = list(lanes.map(price_lane, request.options))
    delay = received_at + modeled_service_time(request, config) - time.monotonic()
    if delay > 0:
        time.sleep(delay)
    return wire.PriceResponse(request.request_id, tuple(results))


class AccelNode:
    """UDP daemon wrapper; use as a context manager or call ``start``/``stop``."""

    def __init__(self, config: NodeConfig) -> None:
        self.config = config
        self.stats = LaneStats()
        self._sock: Optional[socket.socket] = None
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._frames: Optional[ThreadPoolExecutor] = None
        self._lanes: Optional[ThreadPoolExecutor] = None

    @property
    def address(self) -> tuple[str, int]:
        if self._sock is None:
            raise RuntimeError("node not started")
        return self._sock.getsockname()[:2]

    def start(self) -> "AccelNode":
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            sock.bind((self.config.host, self.config.port))
        except OSError as exc:
            sock.close()
            raise OSError(f"cannot bind {self.config.host}:{self.config.port}: {exc}") from exc
        sock.settimeout(0.1)
        self._sock = sock
        self._stop.clear()
        self._lanes = ThreadPoolExecutor(self.config.lane_count, thread_name_prefix="lane")
        self._frames = ThreadPoolExecutor(self.config.max_inflight, thread_name_prefix="frame")
        self._thread = threading.Thread(target=self._receive_loop, name="accel-node", daemon=True)
        self._thread.start()
        log.info("accel-node listening on %s:%d lanes=%d pacing=%s",
                 *self.address, self.config.lane_count, self.config.pacing.value)
        return self

    def stop(self) -> dict:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        if self._frames is not None:
            self._frames.shutdown(wait=True)
        if self._lanes is not None:
            self._lanes.shutdown(wait=True)
        if self._sock is not None:
            self._sock.close()
        return self.stats.snapshot()

    def __enter__(self) -> "AccelNode":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def _receive_loop(self) -> None:
        while not self._stop.is_set():
            try:
                data, addr = self._sock.recvfrom(RECV_BUFFER)
            except socket.timeout:
                continue
            except OSError:
                if self._stop.is_set():
                    break
                raise
            self._frames.submit(self._handle, data, addr, time.monotonic())

    def _reply(self, frame: wire.Frame, addr) -> None:
        try:
            self._sock.sendto(wire.encode(frame, lane_count=self.config.lane_count), addr)
        except OSError as exc:
            log.warning("send to %s failed: %s", addr, exc)

    def _handle(self, data: bytes, addr, received_at: float) -> None:
        try:
            _, request_id = wire.decode_header(data)
        except wire.ProtocolError:
            # Not addressed to us, or too short to answer.
            self.stats.record_error()
            return
        try:
            frame = wire.decode(data)
        except wire.ProtocolError as exc:
            self.stats.record_error()
            self._reply(wire.ErrorFrame(request_id, exc.code, str(exc)), addr)
            return

        if isinstance(frame, wire.Ping):
            self._reply(wire.Pong(request_id), addr)
            return
        if not isinstance(frame, wire.PriceRequest):
            self.stats.record_error()
            self._reply(wire.ErrorFrame(request_id, wire.ErrorCode.BAD_TYPE,
                                        f"unexpected {type(frame).__name__}"), addr)
            return
        if len(frame.options) > self.config.lane_count:
            self.stats.record_error()
            self._reply(wire.ErrorFrame(request_id, wire.ErrorCode.FRAME_TOO_LARGE,
                                        f"{len(frame.options)} options for {self.config.lane_count} lanes"),
                        addr)
            return
        try:
            response = process_frame(frame, self.config, self._lanes, received_at)
        except Exception as exc:
            log.exception("frame %d failed", request_id)
            self.stats.record_error()
            self._reply(wire.ErrorFrame(request_id, wire.ErrorCode.INTERNAL, str(exc)), addr)
            return
        service = time.monotonic() - received_at
        self.stats.record_frame(len(frame.options), service)
        self._reply(response, addr)
        log.info("frame request_id=%d options=%d service_time_us=%d",
                 request_id, len(frame.options), int(service * 1e6))


def parse_bind(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected host:port, got {value!r}")
    return host or "0.0.0.0", int(port)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="accel-node", description=__doc__.splitlines()[0])
    parser.add_argument("--bind", type=parse_bind, default=("127.0.0.1", 9470), help="addr:port")
    parser.add_argument("--lanes", type=int, default=wire.DEFAULT_LANES)
    parser.add_argument("--rate", type=float, default=0.0, help="paths per second per lane")
    parser.add_argument("--pacing", choices=[p.value for p in Pacing], default="native")
    parser.add_argument("--max-inflight", type=int, default=4)
    parser.add_argument("--frame-latency", type=float, default=0.0,
                        help="fixed seconds added to every modeled frame")
    parser.add_argument("--stats-file", help="write the shutdown stats JSON here instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        config = NodeConfig(host=args.bind[0], port=args.bind[1], lane_count=args.lanes,
                            per_lane_rate=args.rate, pacing=args.pacing,
                            max_inflight=args.max_inflight, frame_latency=args.frame_latency)
    except ValueError as exc:
        parser.error(str(exc))

    node = AccelNode(config)
    try:
        node.start()
    except OSError as exc:
        print(f"accel-node: {exc}", file=sys.stderr)
        return 1
    print(f"listening {node.address[0]}:{node.address[1]}", flush=True)

    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    done.wait()
    stats = json.dumps(node.stop(), indent=2)
    if args.stats_file:
        with open(args.stats_file, "w") as fh:
            fh.write(stats + "\n")
    else:
        print(stats)
    return 0


if __name__ == "__main__":
    sys.exit(main())
