"""Load generator: cold/hot measurement sweeps against a running gateway."""
from __future__ import annotations

import enum
import http.client
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional
from urllib.parse import urlsplit

from mcprice.gateway.models import PricingRequest, request_to_json
from mcprice.pricing import OptionKind, OptionSpec

log = logging.getLogger("mcprice.bench")


class Axis(enum.Enum):
    PATHS = "paths"
    BATCH = "batch"


class ServiceUnreachable(RuntimeError):
    pass


class RequestFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    axis: Axis
    values: tuple[int, ...]
    backends: tuple[str, ...]
    paths: int = 500_000
    batch: int = 7
    repetitions: int = 100
    concurrency: int = 1
    seed_base: int = 1
    max_warmup: int = 64
    # Independent cold samples per cell, each on freshly restarted workers.
    cold_runs: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "backends", tuple(self.backends))
        if not self.values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"values must be strictly increasing, got {self.values}")
        if self.values[0] < 1:
            raise ValueError("values must be >= 1")
        if not self.backends:
            raise ValueError("at least one backend is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.cold_runs < 1:
            raise ValueError("cold_runs must be >= 1")

    def cell_shape(self, value: int) -> tuple[int, int]:
        """``(batch, paths)`` for one value on the swept axis."""
        if self.axis is Axis.PATHS:
            return self.batch, value
        return value, self.paths


@dataclass(frozen=True)
class RunRecord:
    backend: str
    axis: str
    value: int
    repetition: int
    processing_s: float
    e2e_s: float
    cold: bool
    client_s: float = 0.0


@dataclass
class SweepResult:
    records: list[RunRecord] = field(default_factory=list)
    dropped: int = 0
    warmup_discarded: int = 0


def make_batch(count: int, paths: int, seed_base: int = 1) -> PricingRequest:
    """A deterministic spread of contracts around the money."""
    options = tuple(
        OptionSpec(
            spot=90.0 + (i % 21),
            strike=100.0,
            rate=0.03,
            volatility=0.15 + 0.05 * (i % 6),
            expiry=0.5 + 0.25 * (i % 4),
            kind=OptionKind.CALL if i % 2 == 0 else OptionKind.PUT,
        )
        for i in range(count)
    )
    return PricingRequest(options, paths, seed_base)


class ServiceClient:
    """Small JSON-over-HTTP client with one keep-alive connection per thread."""

    def __init__(self, base_url: str, timeout: float = 300.0) -> None:
        parts = urlsplit(base_url)
        if parts.scheme != "http" or not parts.hostname:
            raise ValueError(f"expected an http:// URL, got {base_url!r}")
        self.host = parts.hostname
        self.port = parts.port or 80
        self.timeout = timeout
        self._local = threading.local()

    def _conn(self) -> http.client.HTTPConnection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = http.client.HTTPConnection(self.host, self.port, timeout=self.timeout)
            self._local.conn = conn
        return conn

    def request(self, method: str, path: str, body: Any = None) -> tuple[int, Any]:
        payload = None if body is None else json.dumps(body).encode()
        headers = {"Content-Type": "application/json"} if payload is not None else {}
        for attempt in range(2):
            conn = self._conn()
            try:
                conn.request(method, path, body=payload, headers=headers)
                resp = conn.getresponse()
                data = resp.read()
                break
            except (ConnectionError, http.client.HTTPException, OSError) as exc:
                conn.close()
                self._local.conn = None
                if attempt == 1:
                    raise ServiceUnreachable(f"{method} http://{self.host}:{self.port}{path}: {exc}") from exc
        try:
            parsed = json.loads(data) if data else None
        except ValueError:
            parsed = {"error": data.decode(errors="replace")}
        return resp.status, parsed

    def get(self, path: str) -> tuple[int, Any]:
        return self.request("GET", path)

    def post(self, path: str, body: Any) -> tuple[int, Any]:
        return self.request("POST", path, body)


def _timed_price(client: ServiceClient, body: dict) -> tuple[dict, float]:
    start = time.perf_counter()
    status, reply = client.post("/v1/price", body)
    elapsed = time.perf_counter() - start
    if status != 200:
        raise RequestFailed(f"HTTP {status}: {reply}")
    bad = [r["status"] for r in reply["results"] if r["status"] != "OK"]
    if bad:
        raise RequestFailed(f"{len(bad)} options failed: {sorted(set(bad))}")
    return reply, elapsed


def run_sweep(spec: SweepSpec, target: str, client: Optional[ServiceClient] = None) -> SweepResult:
    """Measure every (backend, value) cell: cold run(s) on fresh workers, then hot runs.

    Hot replies that still report a cold backend (another pool worker warming
    up) are discarded as warm-up, not recorded.
    """
    client = client or ServiceClient(target)
    status, health = client.get("/v1/healthz")
    if status != 200:
        raise ServiceUnreachable(f"health check returned HTTP {status}")
    known = set(health.get("backends", {}))
    missing = [b for b in spec.backends if b not in known]
    if missing:
        raise ServiceUnreachable(f"service has no backend(s) {missing}; available {sorted(known)}")

    out = SweepResult()
    pool = ThreadPoolExecutor(spec.concurrency) if spec.concurrency > 1 else None
    try:
        for backend in spec.backends:
            for value in spec.values:
                _run_cell(spec, client, backend, value, out, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def _run_cell(spec: SweepSpec, client: ServiceClient, backend: str, value: int,
              out: SweepResult, pool: Optional[ThreadPoolExecutor]) -> None:
    batch, paths = spec.cell_shape(value)
    body = request_to_json(make_batch(batch, paths, spec.seed_base), backend)

    def record(rep: int, reply: dict, elapsed: float, cold: bool) -> RunRecord:
        t = reply["timing"]
        return RunRecord(backend, spec.axis.value, value, rep, t["processing_s"], t["e2e_s"], cold, elapsed)

    for rep in range(spec.cold_runs):
        status, reply = client.post("/v1/admin/restart", {"backend": backend})
        if status != 200:
            raise ServiceUnreachable(f"restart of {backend!r} failed: HTTP {status} {reply}")
        try:
            reply, elapsed = _timed_price(client, body)
            out.records.append(record(rep, reply, elapsed, True))
        except RequestFailed as exc:
            out.dropped += 1
            log.warning("%s@%d cold run dropped: %s", backend, value, exc)

    hot = 0
    attempts = 0
    limit = spec.repetitions + spec.max_warmup
    while hot < spec.repetitions and attempts < limit:
        wave = 1 if pool is None else min(spec.concurrency, spec.repetitions - hot)
        attempts += wave
        if pool is None:
            outcomes = [_attempt(client, body)]
        else:
            outcomes = list(pool.map(lambda _: _attempt(client, body), range(wave)))
        for outcome in outcomes:
            if isinstance(outcome, Exception):
                out.dropped += 1
                log.warning("%s@%d hot run dropped: %s", backend, value, outcome)
                continue
            reply, elapsed = outcome
            if reply["timing"].get("cold"):
                out.warmup_discarded += 1
                continue
            if hot < spec.repetitions:
                out.records.append(record(spec.cold_runs + hot, reply, elapsed, False))
                hot += 1
    log.info("%s@%d: %d hot runs", backend, value, hot)


def _attempt(client: ServiceClient, body: dict):
    try:
        return _timed_price(client, body)
    except RequestFailed as exc:
        return exc


def expected_records(spec: SweepSpec) -> int:
    return len(spec.backends) * len(spec.values) * (spec.cold_runs + spec.repetitions)


__all__ = [
    "Axis", "RunRecord", "ServiceClient", "ServiceUnreachable", "SweepResult", "SweepSpec",
    "expected_records", "make_batch", "run_sweep",
]
