import socket

import pytest

from mcprice import wire
from mcprice.node import AccelNode, NodeConfig


class UdpClient:
    def __init__(self, target, timeout=5.0):
        self.target = target
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(("127.0.0.1", 0))
        self.sock.settimeout(timeout)

    def send(self, frame, lane_count=wire.MAX_WIRE_OPTIONS):
        self.sock.sendto(wire.encode(frame, lane_count=lane_count), self.target)

    def send_raw(self, data: bytes):
        self.sock.sendto(data, self.target)

    def recv(self):
        data, _ = self.sock.recvfrom(4096)
        return wire.decode(data)

    def call(self, frame, **kw):
        self.send(frame, **kw)
        return self.recv()

    def close(self):
        self.sock.close()


@pytest.fixture
def native_node():
    with AccelNode(NodeConfig()) as node:
        yield node


@pytest.fixture
def udp_client(native_node):
    c = UdpClient(native_node.address)
    yield c
    c.close()


ACCEPTANCE_LINES: list[str] = []


class Criterion:
    """Context manager that records one PASS/FAIL line for an acceptance criterion."""

    def __init__(self, number: int, title: str, budget_s: float = None):
        self.number = number
        self.title = title
        self.budget_s = budget_s
        self.notes: list[str] = []

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        import time
        self._t0 = time.perf_counter()
        return self

    @property
    def elapsed(self) -> float:
        import time
        return time.perf_counter() - self._t0

    def check_budget(self) -> None:
        if self.budget_s is not None:
            assert self.elapsed < self.budget_s, f"took {self.elapsed:.1f}s, budget {self.budget_s:.0f}s"

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        budget = f" of {self.budget_s:.0f}s" if self.budget_s else ""
        line = f"criterion {self.number} [{status}] {self.title} ({self.elapsed:.1f}s{budget})"
        if self.notes:
            line += ": " + "; ".join(self.notes)
        if exc is not None:
            line += " | " + (str(exc).splitlines() or [exc_type.__name__])[0]
        ACCEPTANCE_LINES.append(line)
        print(line)
        return False


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
