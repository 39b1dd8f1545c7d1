"""UDP relay that drops and duplicates datagrams, for exercising client retry logic."""
from __future__ import annotations

import random
import selectors
import socket
import threading
from typing import Optional

from mcprice import wire


class LossyRelay:
    """Forward datagrams between clients and ``target``, misbehaving on purpose.

    Clients send to ``relay.address``. Replies are routed back by request id.
    ``drop_requests``/``drop_responses`` are per-datagram loss probabilities and
    ``duplicate_responses`` the probability a reply is delivered twice. All
    decisions come from one seeded generator on a single thread, so a run is
    reproducible for a given datagram order.
    """

    def __init__(self, target: tuple[str, int], *, drop_requests: float = 0.0,
                 drop_responses: float = 0.0, duplicate_responses: float = 0.0,
                 seed: int = 0, host: str = "127.0.0.1") -> None:
        self.target = target
        self.drop_requests = drop_requests
        self.drop_responses = drop_responses
        self.duplicate_responses = duplicate_responses
        self.counts = {"forwarded": 0, "dropped": 0, "duplicated": 0}
        self._rng = random.Random(seed)
        self._front = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._front.bind((host, 0))
        self._back = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._back.bind((host, 0))
        self._clients: dict[int, tuple] = {}
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self._front.getsockname()[:2]

    def start(self) -> "LossyRelay":
        self._thread = threading.Thread(target=self._loop, name="lossy-relay", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        self._front.close()
        self._back.close()

    def __enter__(self) -> "LossyRelay":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def _loop(self) -> None:
        sel = selectors.DefaultSelector()
        sel.register(self._front, selectors.EVENT_READ)
        sel.register(self._back, selectors.EVENT_READ)
        while not self._stop.is_set():
            for key, _ in sel.select(timeout=0.05):
                sock = key.fileobj
                data, addr = sock.recvfrom(4096)
                try:
                    _, request_id = wire.decode_header(data)
                except wire.ProtocolError:
                    request_id = None
                if sock is self._front:
                    if request_id is not None:
                        self._clients[request_id] = addr
                    if self._rng.random() < self.drop_requests:
                        self.counts["dropped"] += 1
                        continue
                    self._back.sendto(data, self.target)
                    self.counts["forwarded"] += 1
                else:
                    client = self._clients.get(request_id)
                    if client is None:
                        continue
                    if self._rng.random() < self.drop_responses:
                        self.counts["dropped"] += 1
                        continue
                    self._front.sendto(data, client)
                    self.counts["forwarded"] += 1
                    if self._rng.random() < self.duplicate_responses:
                        self._front.sendto(data, client)
                        self.counts["duplicated"] += 1
        sel.close()
