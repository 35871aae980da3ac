"""Newline-delimited JSON protocol for driving a simulator out of process.

Requests are single-line JSON objects with a "cmd" key (reset, step,
episodes, close). Every response is a single line carrying "ok"; frames
travel as base64 PNG. One connection owns one simulator, so concurrent
clients never share state.
"""

from __future__ import annotations

import json
import socket
import socketserver
import sys
from pathlib import Path
from typing import IO

from vlnkit.core import Action, Episode, UnknownActionError, load_episodes
from vlnkit.imaging import frame_from_png_base64, frame_png_base64
from vlnkit.simworld.engine import LocalSimulator, MotionParams, StepResult


class ProtocolError(RuntimeError):
    """The remote side answered ok=false or broke the line protocol."""


class EpisodeNotFoundError(LookupError):
    """A reset named an episode_id the server does not serve."""


def step_result_response(result: StepResult) -> dict:
    return {
        "ok": True,
        "frame_png_base64": frame_png_base64(result.frame),
        "pose": result.pose.to_dict(),
        "collided": result.collided,
        "step": result.step,
        "distance_to_goal": result.distance_to_goal,
    }


class SimService:
    """Dispatches parsed protocol requests onto one simulator instance."""

    def __init__(self, sim: LocalSimulator, episodes: list[Episode] | None = None) -> None:
        self.sim = sim
        self.episodes = episodes or []

    def handle(self, request: dict) -> dict:
        cmd = request.get("cmd")
        if cmd == "reset":
            # Inline episodes serve clients that own the episode data;
            # reset-by-id serves clients that first list ours.
            if "episode" in request:
                episode = Episode.from_dict(request["episode"])
            elif "episode_id" in request:
                episode = self._episode_by_id(str(request["episode_id"]))
            else:
                return {
                    "ok": False,
                    "error": "reset needs an 'episode' object or an 'episode_id'",
                }
            return step_result_response(self.sim.reset(episode))
        if cmd == "step":
            if "action" not in request:
                return {"ok": False, "error": "step needs an 'action' name"}
            action = Action.from_text(str(request["action"]))
            return step_result_response(self.sim.step(action))
        if cmd == "episodes":
            return {"ok": True, "episodes": [e.to_dict() for e in self.episodes]}
        if cmd == "close":
            return {"ok": True}
        return {"ok": False, "error": f"unknown cmd {cmd!r}"}

    def _episode_by_id(self, episode_id: str) -> Episode:
        for episode in self.episodes:
            if episode.episode_id == episode_id:
                return episode
        raise EpisodeNotFoundError(f"episode not found: {episode_id!r}")

    def handle_line(self, line: str) -> tuple[dict, bool]:
        """One request line in, one response object out, plus a close flag.

        Everything recoverable becomes an ok=false response so a bad
        request never kills the connection.
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


class _SimRequestHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: SimTCPServer = self.server  # type: ignore[assignment]
        service = SimService(
            LocalSimulator(server.map_root, server.motion), episodes=server.episodes
        )
        for raw in self.rfile:
            response, should_close = service.handle_line(raw.decode("utf-8"))
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            if should_close:
                break


class SimTCPServer(socketserver.ThreadingTCPServer):
    """Simulator endpoint; each connection gets its own simulator."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        map_root: str | Path = ".",
        episodes: list[Episode] | None = None,
        motion: MotionParams | None = None,
    ) -> None:
        super().__init__(address, _SimRequestHandler)
        self.map_root = Path(map_root)
        self.episodes = episodes or []
        self.motion = motion or MotionParams()


def make_tcp_server(
    map_root: str | Path = ".",
    host: str = "127.0.0.1",
    port: int = 0,
    episodes_path: str | Path | None = None,
    motion: MotionParams | None = None,
) -> SimTCPServer:
    """Bind a simulator server; port 0 picks a free port. Call
    serve_forever() to run it and shutdown() to stop."""
    episodes = load_episodes(episodes_path) if episodes_path else []
    return SimTCPServer((host, port), map_root=map_root, episodes=episodes, motion=motion)


def serve_stdio(
    map_root: str | Path = ".",
    episodes_path: str | Path | None = None,
    motion: MotionParams | None = None,
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
) -> None:
    """Run the same protocol over stdin/stdout until close or EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    episodes = load_episodes(episodes_path) if episodes_path else []
    service = SimService(LocalSimulator(map_root, motion), episodes=episodes)
    for line in stdin:
        if not line.strip():
            continue
        response, should_close = service.handle_line(line)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
        if should_close:
            break


class RemoteSimulator:
    """Client-side simulator speaking the line protocol over TCP.

    Satisfies the same reset/step/close surface as LocalSimulator but has
    no world attribute, so map-reading policies cannot run against it.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0) -> None:
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def _call(self, request: dict) -> dict:
        self._file.write(json.dumps(request) + "\n")
        self._file.flush()
        line = self._file.readline()
        if not line:
            raise ProtocolError("simulator closed the connection")
        try:
            response = json.loads(line)
        except ValueError as exc:
            raise ProtocolError(f"simulator sent invalid JSON: {exc}") from exc
        if not isinstance(response, dict):
            raise ProtocolError("simulator response is not a JSON object")
        if not response.get("ok"):
            raise ProtocolError(str(response.get("error", "unknown remote error")))
        return response

    @staticmethod
    def _step_result(response: dict) -> StepResult:
        from vlnkit.core import Pose

        return StepResult(
            pose=Pose.from_dict(response["pose"]),
            frame=frame_from_png_base64(response["frame_png_base64"]),
            collided=bool(response["collided"]),
            step=int(response["step"]),
            distance_to_goal=float(response["distance_to_goal"]),
        )

    def reset(self, episode: Episode) -> StepResult:
        # Both forms travel: servers holding their own episode data key on
        # episode_id, self-contained servers use the inline object.
        return self._step_result(
            self._call(
                {
                    "cmd": "reset",
                    "episode_id": episode.episode_id,
                    "episode": episode.to_dict(),
                }
            )
        )

    def step(self, action: Action) -> StepResult:
        return self._step_result(self._call({"cmd": "step", "action": action.value}))

    def episodes(self) -> list[Episode]:
        response = self._call({"cmd": "episodes"})
        return [Episode.from_dict(e) for e in response.get("episodes", [])]

    def close(self) -> None:
        try:
            self._call({"cmd": "close"})
        except (ProtocolError, OSError):
            pass
        finally:
            self._file.close()
            self._sock.close()
