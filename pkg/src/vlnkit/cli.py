"""Command line: run episodes, score traces, verify replays, serve a sim.

Settings merge in precedence order: explicit flags, then a --config JSON
file, then built-in defaults. Navigation failures exit 0 (the report is
the result); configuration, IO, and protocol failures exit nonzero with
one machine-readable error line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from vlnkit import fixtures
from vlnkit.core import Episode, load_episodes
from vlnkit.gateway import (
    OraclePolicy,
    PolicyEndpointConfig,
    RemotePolicy,
    ZeroMovementPolicy,
)
from vlnkit.imaging import frame_to_png_bytes
from vlnkit.loop import LoopConfig, run_episode
from vlnkit.metrics import EpisodeScore, aggregate, emit_report, load_baselines
from vlnkit.prompts import default_prompt_config
from vlnkit.simworld.engine import LocalSimulator, MotionParams
from vlnkit.simworld.maps import load_map_file
from vlnkit.simworld.protocol import RemoteSimulator, make_tcp_server, serve_stdio
from vlnkit.trace import read_trace, replay_trace, write_trace


class CliError(ValueError):
    """Bad flags or config; the run never started."""


DEFAULTS: dict = {
    "episodes": "builtin",
    "limit": None,
    "policy": "oracle",
    "endpoint": None,
    "model": None,
    "sim": "local",
    "sim_addr": None,
    "max_steps": 50,
    "success_radius": 3.0,
    "window": 5,
    "out": "vlnkit-out",
    "parallel": 1,
    "seed": 0,
    "format": "table",
    "save_frames": False,
    "baselines": False,
    "goal_stop": True,
    "turn_angle": 15.0,
    "forward_step": 0.25,
    "clearance": 0.01,
    "temperature": 0.0,
    "timeout": 60.0,
    "max_retries": 2,
}


def _effective_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise CliError(f"config file not found: {config_path}") from exc
        except ValueError as exc:
            raise CliError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _resolve_episode_set(cfg: dict) -> tuple[list[Episode], Path]:
    ref = cfg["episodes"]
    path = fixtures.episode_set_path() if ref == "builtin" else Path(ref)
    if not path.is_file():
        raise CliError(f"episode file not found: {path}")
    episodes = load_episodes(path)
    if cfg["limit"] is not None:
        if cfg["limit"] < 1:
            raise CliError(f"--limit must be >= 1, got {cfg['limit']}")
        episodes = episodes[: cfg["limit"]]
    if not episodes:
        raise CliError(f"episode set {path} is empty")
    return episodes, path.resolve().parent


def _parse_addr(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not host:
        raise CliError(f"address must look like host:port, got {addr!r}")
    try:
        return host, int(port)
    except ValueError as exc:
        raise CliError(f"bad port in address {addr!r}") from exc


def _make_policy(cfg: dict):
    name = cfg["policy"]
    if name == "zero":
        return ZeroMovementPolicy()
    if name == "oracle":
        if cfg["sim"] != "local":
            raise CliError("the oracle policy needs map access; use --sim local")
        return OraclePolicy(
            success_radius=cfg["success_radius"], turn_angle=cfg["turn_angle"]
        )
    if name == "remote":
        if not cfg["endpoint"] or not cfg["model"]:
            raise CliError("the remote policy needs --endpoint and --model")
        endpoint = PolicyEndpointConfig(
            base_url=cfg["endpoint"],
            model_name=cfg["model"],
            temperature=cfg["temperature"],
            timeout=cfg["timeout"],
            max_retries=cfg["max_retries"],
        )
        prompts = default_prompt_config(
            turn_angle=cfg["turn_angle"],
            forward_step=cfg["forward_step"],
            window_size=cfg["window"],
        )
        return RemotePolicy(endpoint, prompts)
    raise CliError(f"unknown policy {name!r}; expected zero, oracle, or remote")


class _FrameSavingSim:
    """Simulator wrapper that writes every rendered frame as a PNG."""

    def __init__(self, inner, frames_dir: Path) -> None:
        self._inner = inner
        self._dir = frames_dir
        self._dir.mkdir(parents=True, exist_ok=True)

    @property
    def world(self):
        return getattr(self._inner, "world", None)

    def _save(self, result):
        path = self._dir / f"step_{result.step:04d}.png"
        path.write_bytes(frame_to_png_bytes(result.frame))
        return result

    def reset(self, episode):
        return self._save(self._inner.reset(episode))

    def step(self, action):
        return self._save(self._inner.step(action))

    def close(self):
        self._inner.close()


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    episodes, map_root = _resolve_episode_set(cfg)
    loop_cfg = LoopConfig(
        max_steps=cfg["max_steps"],
        success_radius=cfg["success_radius"],
        stop_on_goal_proximity=cfg["goal_stop"],
        window_w=cfg["window"],
    )
    motion = MotionParams(
        forward_step=cfg["forward_step"],
        turn_angle=cfg["turn_angle"],
        clearance=cfg["clearance"],
    )
    if cfg["sim"] == "local":
        sim_addr = None
    elif cfg["sim"] == "tcp":
        if not cfg["sim_addr"]:
            raise CliError("--sim tcp needs --sim-addr host:port")
        sim_addr = _parse_addr(cfg["sim_addr"])
    else:
        raise CliError(f"unknown sim {cfg['sim']!r}; expected local or tcp")
    _make_policy(cfg)  # surface config errors before anything connects

    out = Path(cfg["out"])
    traces_dir = out / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)

    def run_one(episode: Episode):
        sim = (
            LocalSimulator(map_root, motion)
            if sim_addr is None
            else RemoteSimulator(*sim_addr)
        )
        if cfg["save_frames"]:
            sim = _FrameSavingSim(sim, out / "frames" / episode.episode_id)
        try:
            result = run_episode(sim, _make_policy(cfg), episode, loop_cfg)
        finally:
            sim.close()
        write_trace(
            traces_dir / f"{episode.episode_id}.jsonl",
            episode,
            result,
            loop_cfg,
            motion,
            map_root=str(map_root),
        )
        return result

    if cfg["parallel"] > 1:
        with ThreadPoolExecutor(max_workers=cfg["parallel"]) as pool:
            results = list(pool.map(run_one, episodes))
    else:
        results = [run_one(e) for e in episodes]

    scores = [EpisodeScore.from_result(r, e) for r, e in zip(results, episodes)]
    report = aggregate(scores)
    baselines = load_baselines() if cfg["baselines"] else None
    (out / "report.json").write_text(
        emit_report(report, "json", baselines), encoding="utf-8"
    )
    sys.stdout.write(emit_report(report, cfg["format"], baselines))
    return 0


def _trace_files(traces: list[str]) -> list[Path]:
    files: list[Path] = []
    for ref in traces:
        path = Path(ref)
        if path.is_dir():
            files.extend(sorted(path.glob("*.jsonl")))
        elif path.is_file():
            files.append(path)
        else:
            raise CliError(f"trace path not found: {path}")
    if not files:
        raise CliError("no trace files found")
    return files


def _cmd_eval(args: argparse.Namespace) -> int:
    scores = []
    for path in _trace_files(args.traces):
        trace = read_trace(path)
        s = trace.summary
        scores.append(
            EpisodeScore(
                episode_id=s["episode_id"],
                distance_to_goal=s["distance_to_goal"],
                success=bool(s["success"]),
                path_length=s["path_length"],
                shortest_path_length=trace.header["shortest_path_length"],
                steps_taken=s["steps_taken"],
                stop_reason=s["stop_reason"],
            )
        )
    report = aggregate(scores)
    baselines = load_baselines() if args.baselines else None
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(emit_report(report, "json", baselines), encoding="utf-8")
    sys.stdout.write(emit_report(report, args.format or "table", baselines))
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    failures = 0
    for path in _trace_files(args.traces):
        trace = read_trace(path)
        _, mismatches = replay_trace(trace, map_root=args.maps)
        if mismatches:
            failures += 1
            line = {"trace": str(path), "ok": False, "mismatches": mismatches}
        else:
            line = {"trace": str(path), "ok": True}
        sys.stdout.write(json.dumps(line) + "\n")
    if failures:
        _error_line(CliError(f"{failures} trace(s) did not reproduce"))
        return 1
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    episodes_path = None
    if args.episodes:
        episodes_path = (
            fixtures.episode_set_path() if args.episodes == "builtin" else Path(args.episodes)
        )
    map_root = Path(args.maps) if args.maps else (
        episodes_path.resolve().parent if episodes_path else Path(".")
    )
    motion = MotionParams(
        forward_step=args.forward_step or DEFAULTS["forward_step"],
        turn_angle=args.turn_angle or DEFAULTS["turn_angle"],
    )
    if args.stdio:
        serve_stdio(map_root, episodes_path, motion)
        return 0
    server = make_tcp_server(
        map_root, host=args.host, port=args.port, episodes_path=episodes_path, motion=motion
    )
    host, port = server.server_address[:2]
    sys.stdout.write(json.dumps({"serving": {"host": host, "port": port}}) + "\n")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _cmd_validate_map(args: argparse.Namespace) -> int:
    bad = 0
    for ref in args.maps:
        try:
            world = load_map_file(ref)
        except Exception as exc:  # noqa: BLE001 - report per file, keep going
            bad += 1
            line = {"map": ref, "ok": False, "error": f"{type(exc).__name__}: {exc}"}
        else:
            rows, cols = world.grid.shape
            line = {
                "map": ref,
                "ok": True,
                "rows": int(rows),
                "cols": int(cols),
                "cell_size": world.cell_size,
                "free_cells": len(world.free_cells()),
            }
        sys.stdout.write(json.dumps(line) + "\n")
    return 1 if bad else 0


def _cmd_show_config(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    sys.stdout.write(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return 0


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--episodes", help="episode file, or 'builtin' for the bundled set")
    parser.add_argument("--limit", type=int, help="run only the first N episodes")
    parser.add_argument("--policy", choices=["zero", "oracle", "remote"])
    parser.add_argument("--endpoint", help="chat-completions base URL for --policy remote")
    parser.add_argument("--model", help="model name for --policy remote")
    parser.add_argument("--sim", choices=["local", "tcp"])
    parser.add_argument("--sim-addr", dest="sim_addr", help="host:port for --sim tcp")
    parser.add_argument("--max-steps", dest="max_steps", type=int)
    parser.add_argument("--success-radius", dest="success_radius", type=float)
    parser.add_argument("--window", type=int, help="history window size")
    parser.add_argument("--out", help="output directory for traces and report.json")
    parser.add_argument("--parallel", type=int, help="episodes to run concurrently")
    parser.add_argument("--seed", type=int, help="reserved for stochastic policies")
    parser.add_argument("--format", choices=["json", "csv", "table"])
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--save-frames", dest="save_frames", action="store_true", default=None)
    parser.add_argument("--baselines", action="store_true", default=None,
                        help="include reference systems in the report")
    parser.add_argument("--no-goal-stop", dest="goal_stop", action="store_false", default=None,
                        help="do not end episodes on goal proximity")
    parser.add_argument("--turn-angle", dest="turn_angle", type=float)
    parser.add_argument("--forward-step", dest="forward_step", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlnkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run episodes, write traces and a report")
    _add_run_options(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("eval", help="aggregate metrics from existing traces")
    p_eval.add_argument("traces", nargs="+", help="trace files or directories")
    p_eval.add_argument("--format", choices=["json", "csv", "table"])
    p_eval.add_argument("--baselines", action="store_true", default=None)
    p_eval.add_argument("--out", help="also write the report as JSON here")
    p_eval.set_defaults(func=_cmd_eval)

    p_replay = sub.add_parser("replay", help="re-run traces and verify they reproduce")
    p_replay.add_argument("traces", nargs="+", help="trace files or directories")
    p_replay.add_argument("--maps", help="map root override (default: recorded in trace)")
    p_replay.set_defaults(func=_cmd_replay)

    p_serve = sub.add_parser("serve", help="expose a simulator over TCP or stdio")
    p_serve.add_argument("--maps", help="directory map references resolve against")
    p_serve.add_argument("--episodes", help="episode file to serve, or 'builtin'")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=0)
    p_serve.add_argument("--stdio", action="store_true")
    p_serve.add_argument("--turn-angle", dest="turn_angle", type=float)
    p_serve.add_argument("--forward-step", dest="forward_step", type=float)
    p_serve.set_defaults(func=_cmd_serve)

    p_validate = sub.add_parser("validate-map", help="check map files and print their shape")
    p_validate.add_argument("maps", nargs="+", help="map files")
    p_validate.set_defaults(func=_cmd_validate_map)

    p_show = sub.add_parser("show-config", help="print the merged effective settings")
    _add_run_options(p_show)
    p_show.set_defaults(func=_cmd_show_config)

    return parser


def _error_line(exc: BaseException) -> None:
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _error_line(exc)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - the CLI is the error boundary
        _error_line(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
