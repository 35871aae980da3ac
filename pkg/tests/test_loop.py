import math

import pytest

from vlnkit.core import Action, Decision, Episode, Pose
from vlnkit.gateway import ReplayExhaustedError, ReplayPolicy, ZeroMovementPolicy
from vlnkit.loop import (
    LoopConfig,
    StopReason,
    check_stop,
    run_episode,
)
from vlnkit.simworld.engine import LocalSimulator

from .conftest import OPEN_ROOM_TEXT


@pytest.fixture()
def room_sim(tmp_path):
    (tmp_path / "room.txt").write_text(OPEN_ROOM_TEXT)
    return LocalSimulator(tmp_path)


def episode(start=(2.0, 5.5, 0.0), goal=(9.0, 5.5), eid="e1") -> Episode:
    return Episode(
        episode_id=eid,
        map_ref="room.txt",
        start=Pose(*start),
        goal=goal,
        instruction="go to the goal",
        shortest_path_length=math.dist(start[:2], goal),
    )


class TestCheckStop:
    def test_priority_order(self):
        cfg = LoopConfig(max_steps=10, success_radius=3.0)
        # all three conditions at once: explicit stop wins
        assert check_stop(Action.STOP, 1.0, 10, cfg) is StopReason.AGENT_STOPPED
        # proximity beats the step budget
        assert check_stop(None, 1.0, 10, cfg) is StopReason.GOAL_REACHED
        assert check_stop(None, 9.0, 10, cfg) is StopReason.MAX_STEPS_REACHED
        assert check_stop(None, 9.0, 3, cfg) is None

    def test_radius_boundary_counts_as_reached(self):
        cfg = LoopConfig(success_radius=3.0)
        assert check_stop(None, 3.0, 0, cfg) is StopReason.GOAL_REACHED
        assert check_stop(None, 3.0 + 1e-9, 0, cfg) is None

    def test_proximity_can_be_disabled(self):
        cfg = LoopConfig(stop_on_goal_proximity=False)
        assert check_stop(None, 0.5, 0, cfg) is None
        # the explicit stop decision still ends the episode
        assert check_stop(Action.STOP, 0.5, 0, cfg) is StopReason.AGENT_STOPPED

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LoopConfig(max_steps=0)
        with pytest.raises(ValueError):
            LoopConfig(success_radius=0.0)
        with pytest.raises(ValueError):
            LoopConfig(window_w=0)


class TestRunEpisode:
    def test_agent_stop_recorded_but_not_simulated(self, room_sim):
        script = [Action.MOVE_FORWARD, Action.MOVE_FORWARD,
                  Decision(Action.STOP, "calling it here")]
        result = run_episode(room_sim, ReplayPolicy(script), episode(),
                             LoopConfig(stop_on_goal_proximity=False))
        assert result.stop_reason is StopReason.AGENT_STOPPED
        assert result.steps_taken == 2          # the stop decision is not a sim step
        assert len(result.records) == 3         # but it is recorded
        stop = result.records[-1]
        assert stop.action is Action.STOP
        assert stop.pose_after == stop.pose_before
        assert not stop.collided
        assert stop.reflection == "calling it here"

    def test_goal_proximity_ends_episode(self, room_sim):
        # straight shot: proximity triggers once within 3 m of the goal
        policy = ReplayPolicy([Action.MOVE_FORWARD] * 50)
        result = run_episode(room_sim, policy, episode(), LoopConfig())
        assert result.stop_reason is StopReason.GOAL_REACHED
        assert result.success
        assert result.distance_to_goal <= 3.0
        # 7 m gap, stop at <= 3 m: exactly ceil(4 / 0.25) = 16 forward steps
        assert result.steps_taken == 16

    def test_initial_proximity_means_zero_steps(self, room_sim):
        result = run_episode(
            room_sim, ZeroMovementPolicy(), episode(start=(8.0, 5.5, 0.0)), LoopConfig()
        )
        assert result.stop_reason is StopReason.GOAL_REACHED
        assert result.steps_taken == 0
        assert result.records == ()
        assert result.success

    def test_max_steps_reached(self, room_sim):
        policy = ReplayPolicy([Action.TURN_LEFT] * 100)
        result = run_episode(room_sim, policy, episode(), LoopConfig(max_steps=7))
        assert result.stop_reason is StopReason.MAX_STEPS_REACHED
        assert result.steps_taken == 7
        assert len(result.records) == 7
        assert not result.success

    def test_path_length_accumulates_forward_motion(self, room_sim):
        policy = ReplayPolicy([Action.MOVE_FORWARD] * 4 + [Action.STOP])
        result = run_episode(room_sim, policy, episode(),
                             LoopConfig(stop_on_goal_proximity=False))
        assert result.path_length == pytest.approx(1.0)
        assert result.final_pose.x == pytest.approx(3.0)

    def test_turns_add_no_path_length(self, room_sim):
        policy = ReplayPolicy([Action.TURN_LEFT, Action.TURN_RIGHT, Action.STOP])
        result = run_episode(room_sim, policy, episode(),
                             LoopConfig(stop_on_goal_proximity=False))
        assert result.path_length == 0.0

    def test_success_is_final_distance_within_radius(self, room_sim):
        policy = ReplayPolicy([Decision(Action.STOP, "too early")])
        result = run_episode(room_sim, policy, episode(), LoopConfig())
        assert not result.success
        assert result.distance_to_goal == pytest.approx(7.0)

    def test_history_window_passed_to_policy(self, room_sim):
        seen = []

        class Probe:
            def decide(self, ctx):
                seen.append([e.step for e in ctx.history])
                return Decision(Action.TURN_LEFT, f"turn {ctx.step}")

        run_episode(room_sim, Probe(), episode(), LoopConfig(max_steps=5, window_w=2))
        assert seen == [[], [0], [0, 1], [1, 2], [2, 3]]

    def test_frames_single_then_pairs(self, room_sim):
        seen = []

        class Probe:
            def decide(self, ctx):
                prev = ctx.frames.previous
                seen.append((None if prev is None else prev.step, ctx.frames.current.step))
                return Decision(Action.MOVE_FORWARD, "go")

        run_episode(room_sim, Probe(), episode(), LoopConfig(max_steps=4))
        assert seen == [(None, 0), (0, 1), (1, 2), (2, 3)]

    def test_parse_events_surface_in_result(self, room_sim):
        class Noisy:
            def decide(self, ctx):
                ctx.parse_events.append(f"step {ctx.step}: synthetic event")
                return Decision(Action.STOP, "stop")

        result = run_episode(room_sim, Noisy(), episode(), LoopConfig())
        assert result.parse_events == ("step 0: synthetic event",)

    def test_policy_errors_propagate(self, room_sim):
        policy = ReplayPolicy([Action.MOVE_FORWARD])  # runs dry on step 1
        with pytest.raises(ReplayExhaustedError):
            run_episode(room_sim, policy, episode(),
                        LoopConfig(stop_on_goal_proximity=False))

    def test_collision_flag_recorded(self, room_sim):
        # start facing the near wall: first forward step collides
        policy = ReplayPolicy([Action.MOVE_FORWARD, Action.STOP])
        result = run_episode(
            room_sim, policy, episode(start=(1.1, 5.5, 180.0)),
            LoopConfig(stop_on_goal_proximity=False),
        )
        assert result.records[0].collided
        assert result.collisions == 1
        # stopped at the wall minus clearance, still in free space
        assert result.records[0].pose_after.x == pytest.approx(1.01)

    def test_distance_to_goal_in_records_tracks_pose(self, room_sim):
        policy = ReplayPolicy([Action.MOVE_FORWARD] * 3 + [Action.STOP])
        result = run_episode(room_sim, policy, episode(),
                             LoopConfig(stop_on_goal_proximity=False))
        for record in result.records:
            expected = math.dist(record.pose_after.xy, (9.0, 5.5))
            assert record.distance_to_goal == pytest.approx(expected)
