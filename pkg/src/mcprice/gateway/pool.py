"""Worker pool and round-robin balancer."""
from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from mcprice.gateway.backends import Backend, BackendCall, BackendError, BackendProfile, make_backend
from mcprice.gateway.models import BACKEND_ERROR, OptionResult, SubRequest
from mcprice.gateway.splitter import merge

log = logging.getLogger("mcprice.gateway")


class ServiceUnavailable(RuntimeError):
    """No worker in the pool can take requests."""


class Worker:
    def __init__(self, index: int, backend: Backend) -> None:
        self.index = index
        self.backend = backend
        self.alive = True

    def price(self, sub: SubRequest) -> BackendCall:
        if not self.alive:
            raise BackendError(f"worker {self.index} is down")
        return self.backend.price(sub)


@dataclass
class SubOutcome:
    sub: SubRequest
    results: list[OptionResult]
    processing_s: float
    cold: bool
    workers: tuple[int, ...]


@dataclass
class DispatchResult:
    results: list[OptionResult]
    outcomes: list[SubOutcome]

    @property
    def processing_s(self) -> float:
        return sum(o.processing_s for o in self.outcomes)

    @property
    def processing_max_s(self) -> float:
        return max((o.processing_s for o in self.outcomes), default=0.0)

    @property
    def cold(self) -> bool:
        return any(o.cold for o in self.outcomes)


class WorkerPool:
    def __init__(self, profile: BackendProfile, size: int,
                 factory: Callable[[BackendProfile], Backend] = make_backend) -> None:
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self.profile = profile
        self.size = size
        self._factory = factory
        self._lock = threading.Lock()
        self._next = 0
        self.workers = [Worker(i, factory(profile)) for i in range(size)]

    def restart(self) -> None:
        """Replace every worker with a fresh, uninitialized one."""
        with self._lock:
            old, self.workers = self.workers, [Worker(i, self._factory(self.profile)) for i in range(self.size)]
            self._next = 0
        for w in old:
            w.backend.close()

    def close(self) -> None:
        for w in self.workers:
            w.backend.close()

    def assign(self, count: int) -> list[int]:
        """Reserve ``count`` consecutive round-robin slots."""
        with self._lock:
            first = self._next
            self._next = (self._next + count) % self.size
        return [(first + i) % self.size for i in range(count)]

    def _run(self, sub: SubRequest, index: int, workers: Sequence[Worker]) -> SubOutcome:
        start = time.perf_counter()
        tried = []
        for attempt in range(2):
            w = workers[(index + attempt) % len(workers)]
            tried.append(w.index)
            try:
                call = w.price(sub)
            except BackendError as exc:
                log.warning("sub-batch @%d failed on worker %d: %s", sub.offset, w.index, exc)
                continue
            except Exception:
                log.exception("sub-batch @%d crashed worker %d", sub.offset, w.index)
                continue
            return SubOutcome(sub, call.results, call.processing_s, call.cold, tuple(tried))
        failed = [OptionResult(0.0, 0.0, BACKEND_ERROR)] * len(sub)
        return SubOutcome(sub, failed, time.perf_counter() - start, False, tuple(tried))

    def dispatch(self, subs: Sequence[SubRequest], executor: Optional[Executor] = None) -> DispatchResult:
        workers = list(self.workers)
        if not any(w.alive for w in workers):
            raise ServiceUnavailable(f"no live workers for backend {self.profile.name!r}")
        slots = self.assign(len(subs))
        if executor is None or len(subs) == 1:
            outcomes = [self._run(s, i, workers) for s, i in zip(subs, slots)]
        else:
            futures = [executor.submit(self._run, s, i, workers) for s, i in zip(subs, slots)]
            outcomes = [f.result() for f in futures]
        total = sum(len(s) for s in subs)
        results = merge(total, ((o.sub, o.results) for o in outcomes))
        return DispatchResult(results, outcomes)
