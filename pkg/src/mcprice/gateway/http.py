"""HTTP front end for the pricing gateway (stdlib threading server).

Routes::

    GET  /v1/price?spot=&strike=&rate=&vol=&expiry=&kind=&paths=&seed=[&backend=]
    POST /v1/price          {"options": [...], "paths": N, "seed_base": S[, "backend": name]}
    GET  /v1/healthz
    GET  /v1/metrics
    POST /v1/admin/restart  {"backend": name}   fresh, uninitialized workers
"""
from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from mcprice.gateway.backends import parse_endpoint
from mcprice.gateway.models import RequestError, request_from_json, request_from_query
from mcprice.gateway.pool import ServiceUnavailable
from mcprice.gateway.service import Gateway, GatewayConfig

log = logging.getLogger("mcprice.gateway.http")

MAX_BODY = 8 << 20


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "mcprice-gateway/0.1"
    gateway: Gateway  # set on the subclass built by make_server

    def log_message(self, fmt, *args) -> None:
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, message: str, field: Optional[str] = None) -> None:
        body = {"error": message}
        if field is not None:
            body["field"] = field
        self._send(status, body)

    def _read_json(self):
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise RequestError("body", f"larger than {MAX_BODY} bytes")
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw or b"null")
        except ValueError as exc:
            raise RequestError("body", f"invalid JSON: {exc}") from None

    def _price(self, request, backend, received_at: float) -> None:
        try:
            result = self.gateway.handle_price(request, backend, received_at)
        except ServiceUnavailable as exc:
            self._error(503, str(exc))
            return
        self._send(200, result.to_json())

    def do_GET(self) -> None:
        received_at = time.perf_counter()
        url = urlsplit(self.path)
        try:
            if url.path == "/v1/healthz":
                self._send(200, self.gateway.health())
            elif url.path == "/v1/metrics":
                self._send(200, self.gateway.metrics.snapshot())
            elif url.path == "/v1/price":
                params = {k: v[-1] for k, v in parse_qs(url.query).items()}
                backend = params.pop("backend", None)
                self._price(request_from_query(params), backend, received_at)
            else:
                self._error(404, f"no route {url.path}")
        except RequestError as exc:
            self._error(400, str(exc), exc.field)
        except Exception as exc:
            log.exception("unhandled error on %s", self.path)
            self._error(500, f"internal error: {exc}")

    def do_POST(self) -> None:
        received_at = time.perf_counter()
        url = urlsplit(self.path)
        try:
            body = self._read_json()
            if url.path == "/v1/price":
                backend = body.get("backend") if isinstance(body, dict) else None
                self._price(request_from_json(body), backend, received_at)
            elif url.path == "/v1/admin/restart":
                backend = body.get("backend") if isinstance(body, dict) else None
                self.gateway.restart(backend)
                self._send(200, {"restarted": backend or self.gateway.config.default_backend})
            else:
                self._error(404, f"no route {url.path}")
        except RequestError as exc:
            self._error(400, str(exc), exc.field)
        except Exception as exc:
            log.exception("unhandled error on %s", self.path)
            self._error(500, f"internal error: {exc}")


def make_server(gateway: Gateway, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("GatewayHandler", (_Handler,), {"gateway": gateway})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


class GatewayServer:
    """Run a gateway HTTP server on a background thread."""

    def __init__(self, gateway: Gateway, host: str = "127.0.0.1", port: int = 0) -> None:
        self.gateway = gateway
        self.server = make_server(gateway, host, port)
        self._thread = threading.Thread(target=self.server.serve_forever, name="gateway-http", daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "GatewayServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.gateway.close()

    def __enter__(self) -> "GatewayServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="mcprice-gateway", description="Option pricing gateway")
    parser.add_argument("--config", help="JSON config file (default: bundled profiles)")
    parser.add_argument("--bind", help="addr:port, overrides config and MCPRICE_BIND")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    config = GatewayConfig.load(args.config)
    if args.bind:
        config.bind = parse_endpoint(args.bind)
    gateway = Gateway(config)
    try:
        server = make_server(gateway, *config.bind)
    except OSError as exc:
        print(f"mcprice-gateway: cannot bind {config.bind}: {exc}", file=sys.stderr)
        return 1
    host, port = server.server_address[:2]
    print(f"serving http://{host}:{port} backends={','.join(config.profiles)}", flush=True)
    signal.signal(signal.SIGTERM, lambda *_: threading.Thread(target=server.shutdown).start())
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        gateway.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
