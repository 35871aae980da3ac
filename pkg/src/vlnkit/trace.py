"""Episode traces: deterministic JSONL logs that replay byte-for-byte.

One file per episode: a header line, one line per decision, a summary
line. Nothing time-dependent goes in, so identical runs produce identical
bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from vlnkit.core import Action, Decision, Episode, Pose
from vlnkit.loop import EpisodeResult, LoopConfig, run_episode
from vlnkit.simworld.engine import LocalSimulator, MotionParams


class MalformedTraceError(ValueError):
    """A trace file breaks the header/steps/summary contract."""

    def __init__(self, path: str | Path, line_number: int, reason: str) -> None:
        super().__init__(f"{path}:{line_number}: {reason}")
        self.path = str(path)
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True)
class Trace:
    """Parsed trace file: raw header/step/summary records."""

    header: dict
    steps: tuple[dict, ...]
    summary: dict

    def decisions(self) -> list[Decision]:
        return [
            Decision(action=Action.from_text(s["action"]), reflection=s["reflection"])
            for s in self.steps
        ]

    def episode(self) -> Episode:
        h = self.header
        return Episode(
            episode_id=h["episode_id"],
            map_ref=h["map"],
            start=Pose.from_dict(h["start"]),
            goal=(h["goal"]["x"], h["goal"]["y"]),
            instruction=h["instruction"],
            shortest_path_length=h["shortest_path_length"],
        )

    def loop_config(self) -> LoopConfig:
        h = self.header
        return LoopConfig(
            max_steps=h["max_steps"],
            success_radius=h["success_radius"],
            stop_on_goal_proximity=h["stop_on_goal_proximity"],
            window_w=h["window_w"],
        )

    def motion_params(self) -> MotionParams:
        m = self.header["motion"]
        return MotionParams(
            forward_step=m["forward_step"],
            turn_angle=m["turn_angle"],
            clearance=m["clearance"],
        )


def _header_record(
    episode: Episode, cfg: LoopConfig, motion: MotionParams, map_root: str | None
) -> dict:
    return {
        "type": "header",
        "episode_id": episode.episode_id,
        "map": episode.map_ref,
        "map_root": map_root if map_root is not None else ".",
        "instruction": episode.instruction,
        "start": episode.start.to_dict(),
        "goal": {"x": episode.goal[0], "y": episode.goal[1]},
        "shortest_path_length": episode.shortest_path_length,
        "max_steps": cfg.max_steps,
        "success_radius": cfg.success_radius,
        "stop_on_goal_proximity": cfg.stop_on_goal_proximity,
        "window_w": cfg.window_w,
        "motion": {
            "forward_step": motion.forward_step,
            "turn_angle": motion.turn_angle,
            "clearance": motion.clearance,
        },
    }


def _step_record(record) -> dict:
    return {
        "type": "step",
        "step": record.step,
        "action": record.action.value,
        "reflection": record.reflection,
        "pose_before": record.pose_before.to_dict(),
        "pose_after": record.pose_after.to_dict(),
        "collided": record.collided,
        "distance_to_goal": record.distance_to_goal,
    }


def _summary_record(result: EpisodeResult) -> dict:
    return {
        "type": "summary",
        "episode_id": result.episode_id,
        "stop_reason": result.stop_reason.value,
        "steps_taken": result.steps_taken,
        "path_length": result.path_length,
        "final_pose": result.final_pose.to_dict(),
        "distance_to_goal": result.distance_to_goal,
        "success": result.success,
        "collisions": result.collisions,
        "parse_events": list(result.parse_events),
    }


def trace_lines(
    episode: Episode,
    result: EpisodeResult,
    cfg: LoopConfig,
    motion: MotionParams | None = None,
    map_root: str | None = None,
) -> list[str]:
    """The trace as JSONL lines, without trailing newlines."""
    motion = motion or MotionParams()
    records = [_header_record(episode, cfg, motion, map_root)]
    records.extend(_step_record(r) for r in result.records)
    records.append(_summary_record(result))
    return [json.dumps(r, ensure_ascii=False) for r in records]


def write_trace(
    path: str | Path,
    episode: Episode,
    result: EpisodeResult,
    cfg: LoopConfig,
    motion: MotionParams | None = None,
    map_root: str | None = None,
) -> None:
    lines = trace_lines(episode, result, cfg, motion, map_root)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace(path: str | Path) -> Trace:
    """Parse and structurally validate one trace file."""
    path = Path(path)
    raw_lines = path.read_text(encoding="utf-8").splitlines()
    records: list[tuple[int, dict]] = []
    for i, line in enumerate(raw_lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError as exc:
            raise MalformedTraceError(path, i, f"not valid JSON: {exc}") from exc
        if not isinstance(record, dict) or "type" not in record:
            raise MalformedTraceError(path, i, "record is not an object with a 'type'")
        records.append((i, record))

    if len(records) < 2:
        raise MalformedTraceError(path, 1, "trace needs at least a header and a summary")
    first_line, header = records[0]
    if header["type"] != "header":
        raise MalformedTraceError(path, first_line, f"first record is {header['type']!r}, not header")
    last_line, summary = records[-1]
    if summary["type"] != "summary":
        raise MalformedTraceError(path, last_line, f"last record is {summary['type']!r}, not summary")

    steps: list[dict] = []
    for line_no, record in records[1:-1]:
        if record["type"] != "step":
            raise MalformedTraceError(
                path, line_no, f"interior record is {record['type']!r}, not step"
            )
        if record.get("step") != len(steps):
            raise MalformedTraceError(
                path, line_no, f"expected step {len(steps)}, got {record.get('step')}"
            )
        steps.append(record)
    return Trace(header=header, steps=tuple(steps), summary=summary)


def replay_trace(
    trace: Trace,
    map_root: str | Path | None = None,
    tolerance: float = 1e-9,
) -> tuple[EpisodeResult, list[str]]:
    """Re-run a trace's decisions and diff the outcome against the file.

    Returns the fresh result plus a list of human-readable mismatches;
    an empty list means the trace reproduces exactly (within tolerance).
    map_root defaults to the root recorded in the trace header.
    """
    from vlnkit.gateway import ReplayPolicy

    if map_root is None:
        map_root = trace.header.get("map_root", ".")
    episode = trace.episode()
    sim = LocalSimulator(map_root=map_root, motion=trace.motion_params())
    result = run_episode(sim, ReplayPolicy(trace.decisions()), episode, trace.loop_config())

    mismatches: list[str] = []
    if len(result.records) != len(trace.steps):
        mismatches.append(
            f"step count: trace has {len(trace.steps)}, replay produced {len(result.records)}"
        )
    for recorded, fresh in zip(trace.steps, result.records):
        step = recorded["step"]
        if recorded["action"] != fresh.action.value:
            mismatches.append(
                f"step {step}: action {recorded['action']} replayed as {fresh.action.value}"
            )
            continue
        expected = Pose.from_dict(recorded["pose_after"])
        delta = max(
            abs(expected.x - fresh.pose_after.x),
            abs(expected.y - fresh.pose_after.y),
            abs(expected.heading - fresh.pose_after.heading),
        )
        if delta > tolerance:
            mismatches.append(f"step {step}: pose_after drifted by {delta}")
        if bool(recorded["collided"]) != fresh.collided:
            mismatches.append(f"step {step}: collided flag differs")
        if not math.isclose(
            recorded["distance_to_goal"], fresh.distance_to_goal, abs_tol=tolerance
        ):
            mismatches.append(f"step {step}: distance_to_goal differs")

    s = trace.summary
    if s["stop_reason"] != result.stop_reason.value:
        mismatches.append(
            f"summary: stop_reason {s['stop_reason']} replayed as {result.stop_reason.value}"
        )
    if s["steps_taken"] != result.steps_taken:
        mismatches.append(
            f"summary: steps_taken {s['steps_taken']} replayed as {result.steps_taken}"
        )
    if bool(s["success"]) != result.success:
        mismatches.append(f"summary: success {s['success']} replayed as {result.success}")
    if not math.isclose(s["path_length"], result.path_length, abs_tol=tolerance):
        mismatches.append("summary: path_length differs")
    if not math.isclose(s["distance_to_goal"], result.distance_to_goal, abs_tol=tolerance):
        mismatches.append("summary: distance_to_goal differs")
    return result, mismatches
