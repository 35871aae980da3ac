import json
import math

import pytest

from vlnkit.core import Action, Decision, Episode, Pose
from vlnkit.gateway import ReplayPolicy
from vlnkit.loop import LoopConfig, run_episode
from vlnkit.simworld.engine import LocalSimulator, MotionParams
from vlnkit.trace import (
    MalformedTraceError,
    read_trace,
    replay_trace,
    trace_lines,
    write_trace,
)

from .conftest import OPEN_ROOM_TEXT


@pytest.fixture()
def room_dir(tmp_path):
    (tmp_path / "room.txt").write_text(OPEN_ROOM_TEXT)
    return tmp_path


def _episode() -> Episode:
    return Episode(
        episode_id="tr1",
        map_ref="room.txt",
        start=Pose(2.0, 5.5, 0.0),
        goal=(9.0, 5.5),
        instruction="walk to the far side",
        shortest_path_length=7.0,
    )


def _run(room_dir, script=None, cfg=None):
    script = script or [Action.MOVE_FORWARD] * 3 + [Decision(Action.STOP, "here")]
    cfg = cfg or LoopConfig(stop_on_goal_proximity=False)
    sim = LocalSimulator(room_dir)
    result = run_episode(sim, ReplayPolicy(script), _episode(), cfg)
    return result, cfg


class TestWriteRead:
    def test_round_trip(self, room_dir, tmp_path):
        result, cfg = _run(room_dir)
        path = tmp_path / "tr1.jsonl"
        write_trace(path, _episode(), result, cfg, map_root=str(room_dir))
        trace = read_trace(path)
        assert trace.header["episode_id"] == "tr1"
        assert trace.header["map_root"] == str(room_dir)
        assert len(trace.steps) == 4
        assert trace.summary["steps_taken"] == 3
        assert trace.summary["stop_reason"] == "agent_stopped"
        assert trace.episode() == _episode()
        assert trace.loop_config() == cfg
        assert trace.motion_params() == MotionParams()
        decisions = trace.decisions()
        assert [d.action for d in decisions] == [
            Action.MOVE_FORWARD, Action.MOVE_FORWARD, Action.MOVE_FORWARD, Action.STOP
        ]
        assert decisions[-1].reflection == "here"

    def test_lines_are_deterministic(self, room_dir):
        result_a, cfg = _run(room_dir)
        result_b, _ = _run(room_dir)
        a = trace_lines(_episode(), result_a, cfg, map_root="x")
        b = trace_lines(_episode(), result_b, cfg, map_root="x")
        assert a == b

    def test_no_timing_fields(self, room_dir):
        result, cfg = _run(room_dir)
        for line in trace_lines(_episode(), result, cfg):
            record = json.loads(line)
            for key in record:
                assert "time" not in key and "latency" not in key

    def test_step_records_carry_poses(self, room_dir, tmp_path):
        result, cfg = _run(room_dir)
        path = tmp_path / "t.jsonl"
        write_trace(path, _episode(), result, cfg)
        trace = read_trace(path)
        first = trace.steps[0]
        assert first["pose_before"] == {"x": 2.0, "y": 5.5, "heading": 0.0}
        assert first["pose_after"]["x"] == pytest.approx(2.25)


class TestMalformed:
    def _write(self, tmp_path, lines):
        path = tmp_path / "bad.jsonl"
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_bad_json_names_file_and_line(self, tmp_path):
        path = self._write(tmp_path, ['{"type": "header"}', "{oops", '{"type": "summary"}'])
        with pytest.raises(MalformedTraceError) as excinfo:
            read_trace(path)
        assert excinfo.value.line_number == 2
        assert str(path) in str(excinfo.value)

    def test_first_record_must_be_header(self, tmp_path):
        path = self._write(tmp_path, ['{"type": "step"}', '{"type": "summary"}'])
        with pytest.raises(MalformedTraceError):
            read_trace(path)

    def test_last_record_must_be_summary(self, tmp_path):
        path = self._write(tmp_path, ['{"type": "header"}', '{"type": "step", "step": 0}'])
        with pytest.raises(MalformedTraceError):
            read_trace(path)

    def test_steps_must_be_contiguous(self, tmp_path):
        path = self._write(
            tmp_path,
            ['{"type": "header"}', '{"type": "step", "step": 1}', '{"type": "summary"}'],
        )
        with pytest.raises(MalformedTraceError) as excinfo:
            read_trace(path)
        assert "expected step 0" in str(excinfo.value)

    def test_needs_header_and_summary(self, tmp_path):
        path = self._write(tmp_path, ['{"type": "header"}'])
        with pytest.raises(MalformedTraceError):
            read_trace(path)

    def test_non_object_line(self, tmp_path):
        path = self._write(tmp_path, ['{"type": "header"}', "[1,2]", '{"type": "summary"}'])
        with pytest.raises(MalformedTraceError):
            read_trace(path)


class TestReplayTrace:
    def test_faithful_trace_reproduces(self, room_dir, tmp_path):
        result, cfg = _run(room_dir)
        path = tmp_path / "t.jsonl"
        write_trace(path, _episode(), result, cfg, map_root=str(room_dir))
        fresh, mismatches = replay_trace(read_trace(path))
        assert mismatches == []
        assert fresh.final_pose == result.final_pose

    def test_tampered_pose_detected(self, room_dir, tmp_path):
        result, cfg = _run(room_dir)
        path = tmp_path / "t.jsonl"
        write_trace(path, _episode(), result, cfg, map_root=str(room_dir))
        lines = path.read_text().splitlines()
        record = json.loads(lines[1])
        record["pose_after"]["x"] += 0.5
        lines[1] = json.dumps(record)
        path.write_text("\n".join(lines) + "\n")
        _, mismatches = replay_trace(read_trace(path))
        assert any("pose_after" in m for m in mismatches)

    def test_tampered_summary_detected(self, room_dir, tmp_path):
        result, cfg = _run(room_dir)
        path = tmp_path / "t.jsonl"
        write_trace(path, _episode(), result, cfg, map_root=str(room_dir))
        lines = path.read_text().splitlines()
        summary = json.loads(lines[-1])
        summary["success"] = True
        summary["distance_to_goal"] = 0.1
        lines[-1] = json.dumps(summary)
        path.write_text("\n".join(lines) + "\n")
        _, mismatches = replay_trace(read_trace(path))
        assert any("success" in m for m in mismatches)
        assert any("distance_to_goal" in m for m in mismatches)

    def test_map_root_override(self, room_dir, tmp_path):
        result, cfg = _run(room_dir)
        path = tmp_path / "t.jsonl"
        # header records a bogus root; the explicit argument must win
        write_trace(path, _episode(), result, cfg, map_root="/nowhere")
        _, mismatches = replay_trace(read_trace(path), map_root=room_dir)
        assert mismatches == []
