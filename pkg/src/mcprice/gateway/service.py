"""The pricing service: backend pools, request handling and metrics."""
from __future__ import annotations

import json
import os
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Mapping, Optional

from mcprice.gateway.backends import BackendKind, BackendProfile, parse_endpoint
from mcprice.gateway.models import PriceResult, PricingRequest, RequestError
from mcprice.gateway.pool import ServiceUnavailable, WorkerPool
from mcprice.gateway.splitter import split

ENV_BIND = "MCPRICE_BIND"
ENV_ACCEL_ENDPOINT = "MCPRICE_ACCEL_ENDPOINT"


@dataclass
class GatewayConfig:
    profiles: dict[str, BackendProfile]
    default_backend: str
    workers: int = 4
    bind: tuple[str, int] = ("127.0.0.1", 8470)
    dispatch_threads: int = 32

    def __post_init__(self) -> None:
        if not self.profiles:
            raise ValueError("at least one backend profile is required")
        if self.default_backend not in self.profiles:
            raise ValueError(f"default_backend {self.default_backend!r} is not a configured profile")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], env: Optional[Mapping[str, str]] = None) -> "GatewayConfig":
        env = os.environ if env is None else env
        raw_profiles = [dict(p) for p in d.get("backends", [])]
        if env.get(ENV_ACCEL_ENDPOINT):
            for p in raw_profiles:
                if BackendKind(p.get("kind")) is BackendKind.REMOTE_ACCEL:
                    p["endpoint"] = env[ENV_ACCEL_ENDPOINT]
        profiles = {}
        for p in raw_profiles:
            prof = BackendProfile.from_dict(p)
            if prof.name in profiles:
                raise ValueError(f"duplicate backend name {prof.name!r}")
            profiles[prof.name] = prof
        balancer = d.get("balancer", {})
        bind = env.get(ENV_BIND) or d.get("bind", "127.0.0.1:8470")
        return cls(
            profiles=profiles,
            default_backend=d.get("default_backend", next(iter(profiles), "")),
            workers=int(balancer.get("workers", d.get("workers", 4))),
            bind=parse_endpoint(bind),
            dispatch_threads=int(balancer.get("dispatch_threads", 32)),
        )

    @classmethod
    def load(cls, path: Optional[str] = None, env: Optional[Mapping[str, str]] = None) -> "GatewayConfig":
        if path is None:
            text = resources.files("mcprice.gateway").joinpath("default_config.json").read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text), env)


@dataclass(frozen=True)
class ServiceRecord:
    backend: str
    options: int
    paths: int
    processing_s: float
    e2e_s: float
    cold: bool
    failed: int
    timestamp: float


@dataclass
class MetricsSink:
    records: list[ServiceRecord] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def append(self, record: ServiceRecord) -> None:
        with self._lock:
            self.records.append(record)

    def snapshot(self) -> dict:
        with self._lock:
            records = list(self.records)
        by_backend: dict[str, list[ServiceRecord]] = {}
        for r in records:
            by_backend.setdefault(r.backend, []).append(r)
        out = {}
        for name, rs in sorted(by_backend.items()):
            e2e = [r.e2e_s for r in rs]
            proc = [r.processing_s for r in rs]
            q = statistics.quantiles(e2e, n=100, method="inclusive") if len(e2e) > 1 else e2e * 99
            out[name] = {
                "requests": len(rs),
                "cold_requests": sum(r.cold for r in rs),
                "options": sum(r.options for r in rs),
                "failed_options": sum(r.failed for r in rs),
                "e2e_gmean_s": statistics.geometric_mean(e2e),
                "processing_gmean_s": statistics.geometric_mean([max(p, 1e-12) for p in proc]),
                "e2e_p50_s": q[49],
                "e2e_p95_s": q[94],
                "last": asdict(rs[-1]),
            }
        return {"total_requests": len(records), "backends": out}


class Gateway:
    """Splits each request, fans it out over a backend's worker pool and merges the answers."""

    def __init__(self, config: GatewayConfig) -> None:
        self.config = config
        self.pools = {name: WorkerPool(p, config.workers) for name, p in config.profiles.items()}
        self.metrics = MetricsSink()
        self._executor = ThreadPoolExecutor(config.dispatch_threads, thread_name_prefix="dispatch")

    def pool(self, backend: Optional[str]) -> WorkerPool:
        name = backend or self.config.default_backend
        try:
            return self.pools[name]
        except KeyError:
            raise RequestError("backend", f"unknown backend {name!r}; have {sorted(self.pools)}") from None

    def handle_price(self, request: PricingRequest, backend: Optional[str] = None,
                     received_at: Optional[float] = None) -> PriceResult:
        if received_at is None:
            received_at = time.perf_counter()
        pool = self.pool(backend)
        subs = split(request, pool.profile.chunk_size)
        outcome = pool.dispatch(subs, self._executor)
        result = PriceResult(
            results=outcome.results,
            processing_s=outcome.processing_s,
            e2e_s=0.0,
            backend=pool.profile.name,
            cold=outcome.cold,
            sub_batches=len(subs),
            processing_max_s=outcome.processing_max_s,
        )
        result.e2e_s = time.perf_counter() - received_at
        self.metrics.append(ServiceRecord(
            backend=pool.profile.name,
            options=len(request.options),
            paths=request.paths,
            processing_s=result.processing_s,
            e2e_s=result.e2e_s,
            cold=result.cold,
            failed=sum(r.status != "OK" for r in result.results),
            timestamp=time.time(),
        ))
        return result

    def restart(self, backend: Optional[str] = None) -> None:
        self.pool(backend).restart()

    def health(self) -> dict:
        backends = {}
        for name, pool in self.pools.items():
            backends[name] = {
                "kind": pool.profile.kind.value,
                "workers": len(pool.workers),
                "alive": sum(w.alive for w in pool.workers),
                "lifecycle": [w.backend.state.lifecycle.value for w in pool.workers],
            }
        ok = all(b["alive"] for b in backends.values())
        return {"status": "ok" if ok else "degraded", "backends": backends}

    def close(self) -> None:
        self._executor.shutdown(wait=False)
        for pool in self.pools.values():
            pool.close()


__all__ = ["Gateway", "GatewayConfig", "MetricsSink", "ServiceRecord", "ServiceUnavailable"]
