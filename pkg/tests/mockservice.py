"""In-process HTTP server standing in for an external model service."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class MockModelService:
    """Serves scripted handlers per path and records every request body.

    Handlers take the parsed JSON body and return (status, payload).
    """

    def __init__(self, routes):
        self.routes = routes
        self.requests: list[tuple[str, dict]] = []
        service = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                service.requests.append((self.path, body))
                handler = service.routes.get(self.path)
                if handler is None:
                    status, payload = 404, {"error": "no route"}
                else:
                    status, payload = handler(body)
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
