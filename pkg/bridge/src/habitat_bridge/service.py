"""Wire protocol service: newline-delimited JSON over TCP or stdio.

Same request/response shapes as the harness's built-in simulator server,
with one difference required by the backing environment: reset takes an
episode_id (the environment owns its episode data), never an inline
episode object. One environment per process; connections are handled one
at a time, strictly in request order, and environment state persists
across connections.
"""

from __future__ import annotations

import json
import socketserver
import sys
from typing import IO

from habitat_bridge.env import EnvObservation, to_env_action
from habitat_bridge.frames import encode_frame


class BridgeService:
    """Dispatches parsed protocol requests onto one environment."""

    def __init__(self, env, frame_size: int = 256) -> None:
        self.env = env
        self.frame_size = frame_size

    def _observation_response(self, obs: EnvObservation) -> dict:
        return {
            "ok": True,
            "frame_png_base64": encode_frame(obs.rgb, self.frame_size),
            "pose": {"x": obs.x, "y": obs.y, "heading": obs.heading},
            "collided": obs.collided,
            "step": obs.step,
            "distance_to_goal": obs.distance_to_goal,
        }

    def handle(self, request: dict) -> dict:
        cmd = request.get("cmd")
        if cmd == "reset":
            if "episode_id" not in request:
                return {
                    "ok": False,
                    "error": "reset needs an 'episode_id'; this server owns "
                    "its episode data and takes no inline episodes",
                }
            return self._observation_response(
                self.env.reset(str(request["episode_id"]))
            )
        if cmd == "step":
            if "action" not in request:
                return {"ok": False, "error": "step needs an 'action' name"}
            return self._observation_response(
                self.env.step(to_env_action(str(request["action"])))
            )
        if cmd == "episodes":
            return {"ok": True, "episodes": self.env.episode_summaries()}
        if cmd == "close":
            return {"ok": True}
        return {"ok": False, "error": f"unknown cmd {cmd!r}"}

    def handle_line(self, line: str) -> tuple[dict, bool]:
        """One request line to one response object plus a close flag.

        Malformed requests answer ok=false and keep the connection alive.
        """
        try:
            request = json.loads(line)
        except ValueError as exc:
            return {"ok": False, "error": f"request is not valid JSON: {exc}"}, False
        if not isinstance(request, dict):
            return {"ok": False, "error": "request must be a JSON object"}, False
        if request.get("cmd") == "close":
            return {"ok": True}, True
        try:
            return self.handle(request), False
        except Exception as exc:  # noqa: BLE001 - the wire is the error boundary
            return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}, False


class _BridgeRequestHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        service: BridgeService = self.server.service  # type: ignore[attr-defined]
        for raw in self.rfile:
            response, should_close = service.handle_line(raw.decode("utf-8"))
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            if should_close:
                break


class BridgeTCPServer(socketserver.TCPServer):
    """Deliberately not threading: one environment, one client at a time."""

    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], service: BridgeService) -> None:
        super().__init__(address, _BridgeRequestHandler)
        self.service = service


def make_tcp_server(service: BridgeService, host: str, port: int) -> BridgeTCPServer:
    """Bind the server; port 0 picks a free port. serve_forever() to run."""
    return BridgeTCPServer((host, port), service)


def serve_stdio(
    service: BridgeService,
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
) -> None:
    """Run the same protocol over stdin/stdout until close or EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        response, should_close = service.handle_line(line)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
        if should_close:
            break
