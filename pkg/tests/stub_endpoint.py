"""A scriptable local chat-completions endpoint for exercising the client."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def completion_body(text: str) -> dict:
    return {"choices": [{"message": {"content": text}}]}


class StubEndpoint:
    """HTTP server that replays a script of canned responses.

    Script items are dicts: {"status": int, "body": str|dict, "delay": float}.
    When the script is empty, answers 200 with a completion built either by
    `decide(request_body)` or from `default_text`.
    """

    def __init__(self, default_text: str = '{"action": "stop", "reflection": "done"}'):
        self.script: list[dict] = []
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        self.default_text = default_text
        self.decide = None
        self._lock = threading.Lock()

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length)) if length else {}
                with stub._lock:
                    stub.requests.append(body)
                    stub.headers.append({k: v for k, v in self.headers.items()})
                    item = stub.script.pop(0) if stub.script else None

                if item is None:
                    text = stub.decide(body) if stub.decide else stub.default_text
                    item = {"status": 200, "body": completion_body(text)}
                if item.get("delay"):
                    time.sleep(item["delay"])
                payload = item.get("body", "")
                raw = (
                    json.dumps(payload) if isinstance(payload, (dict, list)) else str(payload)
                ).encode("utf-8")
                self.send_response(item.get("status", 200))
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1"

    def __enter__(self) -> "StubEndpoint":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
