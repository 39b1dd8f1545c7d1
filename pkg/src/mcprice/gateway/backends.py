"""Pricing backends behind the worker pool.

Three kinds share one lifecycle. A fresh backend is ``UNINITIALIZED``; its
first call moves it to ``WARMING``, performs the kind-specific warm-up and
pays the configured cold cost, and only a successful call makes it ``WARM``.
The cold cost of the first call is ``cold_penalty`` seconds plus
``(cold_ratio - 1)`` times that call's own wall time, which lets a profile
state either an absolute start-up cost or a cold/hot ratio.
"""
from __future__ import annotations

import enum
import itertools
import logging
import random
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from mcprice import wire
from mcprice.gateway.models import (
    INVALID_OPTION,
    LANE_ERROR,
    OK,
    OptionResult,
    SubRequest,
)
from mcprice.pricing import OptionKind, SimParams, price_mc

log = logging.getLogger("mcprice.gateway")

_ID_MASK = (1 << 64) - 1


class BackendError(RuntimeError):
    """The backend could not serve a sub-batch."""


class BackendKind(enum.Enum):
    LOCAL_CPU = "local_cpu"
    REMOTE_ACCEL = "remote_accel"
    MODELED = "modeled"


class Lifecycle(enum.Enum):
    UNINITIALIZED = "uninitialized"
    WARMING = "warming"
    WARM = "warm"


_FORWARD = {
    Lifecycle.UNINITIALIZED: {Lifecycle.WARMING},
    Lifecycle.WARMING: {Lifecycle.WARM},
    Lifecycle.WARM: set(),
}


def parse_endpoint(value: Any) -> tuple[str, int]:
    if isinstance(value, (list, tuple)):
        host, port = value
        return str(host), int(port)
    host, sep, port = str(value).rpartition(":")
    if not sep:
        raise ValueError(f"endpoint must be host:port, got {value!r}")
    return host or "127.0.0.1", int(port)


@dataclass
class BackendProfile:
    name: str
    kind: BackendKind
    cold_penalty: float = 0.0
    cold_ratio: float = 1.0
    per_path_cost: float = 0.0
    per_request_overhead: float = 0.0
    chunk_size: int = wire.DEFAULT_LANES
    endpoint: Optional[tuple[str, int]] = None
    lane_count: int = wire.DEFAULT_LANES
    timeout: float = 2.0
    description: str = ""

    def __post_init__(self) -> None:
        self.kind = BackendKind(self.kind)
        if self.endpoint is not None:
            self.endpoint = parse_endpoint(self.endpoint)
        if self.cold_penalty < 0:
            raise ValueError(f"{self.name}: cold_penalty must be >= 0")
        if self.cold_ratio < 1:
            raise ValueError(f"{self.name}: cold_ratio must be >= 1")
        if self.per_path_cost < 0 or self.per_request_overhead < 0:
            raise ValueError(f"{self.name}: modeled costs must be >= 0")
        if self.chunk_size < 1:
            raise ValueError(f"{self.name}: chunk_size must be >= 1")
        if self.kind is BackendKind.REMOTE_ACCEL:
            if self.endpoint is None:
                raise ValueError(f"{self.name}: remote_accel needs an endpoint")
            if self.chunk_size > self.lane_count:
                raise ValueError(f"{self.name}: chunk_size {self.chunk_size} exceeds lane_count {self.lane_count}")
        if self.timeout <= 0:
            raise ValueError(f"{self.name}: timeout must be > 0")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BackendProfile":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known - {"provenance"}
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class BackendState:
    lifecycle: Lifecycle = Lifecycle.UNINITIALIZED
    served: int = 0

    def advance(self, to: Lifecycle) -> None:
        if to is self.lifecycle:
            return
        if to not in _FORWARD[self.lifecycle]:
            raise RuntimeError(f"illegal lifecycle transition {self.lifecycle.value} -> {to.value}")
        self.lifecycle = to


@dataclass
class BackendCall:
    results: list[OptionResult]
    processing_s: float
    cold: bool


def price_locally(sub: SubRequest) -> list[OptionResult]:
    out = []
    for spec, seed in zip(sub.options, sub.seeds):
        est = price_mc(spec, SimParams(sub.paths, seed))
        out.append(OptionResult(est.price, est.std_error, OK))
    return out


class Backend:
    """Base class; one instance belongs to one worker and serves one call at a time."""

    def __init__(self, profile: BackendProfile) -> None:
        self.profile = profile
        self.state = BackendState()
        self.history: list[Lifecycle] = [self.state.lifecycle]
        self._lock = threading.Lock()

    def _set(self, to: Lifecycle) -> None:
        self.state.advance(to)
        if self.history[-1] is not to:
            self.history.append(to)

    def price(self, sub: SubRequest) -> BackendCall:
        with self._lock:
            start = time.perf_counter()
            cold = self.state.lifecycle is not Lifecycle.WARM
            if cold:
                self._set(Lifecycle.WARMING)
                self._warm_up()
            results = self._compute(sub)
            if cold:
                elapsed = time.perf_counter() - start
                time.sleep(self.profile.cold_penalty + (self.profile.cold_ratio - 1.0) * elapsed)
                self._set(Lifecycle.WARM)
            self.state.served += 1
            return BackendCall(results, time.perf_counter() - start, cold)

    def _warm_up(self) -> None:
        pass

    def _compute(self, sub: SubRequest) -> list[OptionResult]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class LocalCpuBackend(Backend):
    def _compute(self, sub: SubRequest) -> list[OptionResult]:
        return price_locally(sub)


class ModeledBackend(Backend):
    """Stands in for an accelerator stack we do not run: sleeps its cost model, then prices on the CPU."""

    def _compute(self, sub: SubRequest) -> list[OptionResult]:
        p = self.profile
        time.sleep(p.per_request_overhead + sub.paths * len(sub) * p.per_path_cost)
        return price_locally(sub)


_WIRE_STATUS = {
    wire.Status.OK: OK,
    wire.Status.INVALID_OPTION: INVALID_OPTION,
    wire.Status.LANE_ERROR: LANE_ERROR,
}


class RemoteAccelBackend(Backend):
    """Client of the accelerator node: one frame per sub-batch, one retransmit on timeout.

    A retransmit carries a fresh request id; the old id is retired, and any
    datagram whose id is not the one currently awaited is discarded.
    """

    def __init__(self, profile: BackendProfile) -> None:
        super().__init__(profile)
        self._sock: Optional[socket.socket] = None
        self._ids = itertools.count(random.getrandbits(48))
        self.trace: deque[tuple[str, str, int]] = deque(maxlen=1024)
        self.discarded = 0

    def _warm_up(self) -> None:
        if self._sock is None:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        reply = self._exchange(lambda rid: wire.Ping(rid))
        if not isinstance(reply, wire.Pong):
            raise BackendError(f"warm-up expected Pong, got {type(reply).__name__}")

    def _send(self, frame: wire.Frame) -> None:
        data = wire.encode(frame, lane_count=self.profile.lane_count)
        self._sock.sendto(data, self.profile.endpoint)
        self.trace.append(("tx", type(frame).__name__, frame.request_id))

    def _await(self, request_id: int, deadline: float) -> Optional[wire.Frame]:
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            self._sock.settimeout(remaining)
            try:
                data, _ = self._sock.recvfrom(4096)
            except socket.timeout:
                return None
            try:
                frame = wire.decode(data)
            except wire.ProtocolError as exc:
                try:
                    _, rid = wire.decode_header(data)
                except wire.ProtocolError:
                    rid = None
                if rid == request_id:
                    raise BackendError(f"undecodable reply: {exc}") from exc
                self.discarded += 1
                continue
            if frame.request_id != request_id:
                self.discarded += 1
                continue
            self.trace.append(("rx", type(frame).__name__, frame.request_id))
            return frame

    def _exchange(self, build) -> wire.Frame:
        for _attempt in range(2):
            request_id = next(self._ids) & _ID_MASK
            self._send(build(request_id))
            reply = self._await(request_id, time.monotonic() + self.profile.timeout)
            if reply is None:
                continue
            if isinstance(reply, wire.ErrorFrame):
                raise BackendError(f"node error code={reply.code}: {reply.detail}")
            return reply
        raise BackendError(f"no reply from {self.profile.endpoint} after retransmit")

    def _compute(self, sub: SubRequest) -> list[OptionResult]:
        options = tuple(
            wire.WireOption(o.spot, o.strike, o.rate, o.volatility, o.expiry,
                            0 if o.kind is OptionKind.CALL else 1, sub.paths, seed)
            for o, seed in zip(sub.options, sub.seeds)
        )
        reply = self._exchange(lambda rid: wire.PriceRequest(rid, options))
        if not isinstance(reply, wire.PriceResponse) or len(reply.results) != len(options):
            raise BackendError(f"malformed reply to a {len(options)}-option frame")
        return [OptionResult(r.price, r.std_error, _WIRE_STATUS[r.status]) for r in reply.results]

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

_KINDS = {
    BackendKind.LOCAL_CPU: LocalCpuBackend,
    BackendKind.MODELED: ModeledBackend,
    BackendKind.REMOTE_ACCEL: RemoteAccelBackend,
}


def make_backend(profile: BackendProfile) -> Backend:
    return _KINDS[profile.kind](profile)
