"""A small virtual-host HTTP server for exercising the live fetch path offline.

Routes are keyed by (host, path). Pair it with ``LiveFetcher(host_map={"*":
server.address})`` so arbitrary fqdns land on this server.
"""

from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    def do_GET(self):
        server: "RouteServer" = self.server.owner  # type: ignore[attr-defined]
        host = (self.headers.get("Host") or "").split(":")[0].lower()
        path = urlsplit(self.path).path or "/"
        referer = self.headers.get("Referer", "")
        server.record(host, path, referer, self.headers.get("User-Agent", ""))
        route = server.routes.get((host, path))
        if route is None:
            self.send_response(404)
            self.end_headers()
            return
        body = route.get("body", "")
        by_ref = route.get("by_referer")
        if by_ref is not None:
            body = by_ref.get(referer, by_ref.get("*", body))
        data = body.encode("utf-8") if isinstance(body, str) else body
        self.send_response(int(route.get("status", 200)))
        for k, v in route.get("headers", {}).items():
            self.send_header(k, v)
        self.send_header("Content-Type", "text/html; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class RouteServer:
    def __init__(self, routes: dict | None = None):
        self.routes: dict[tuple[str, str], dict] = dict(routes or {})
        self.requests: list[tuple[str, str, str, str]] = []
        self._lock = threading.Lock()
        self._httpd = None
        self._thread = None

    def add(self, host: str, path: str, **response) -> None:
        self.routes[(host.lower(), path)] = response

    def record(self, host, path, referer, ua):
        with self._lock:
            self.requests.append((host, path, referer, ua))

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "RouteServer":
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self._httpd.owner = self
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
