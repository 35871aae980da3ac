"""Episode loop: decision/actuation split, stop criteria, step records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, runtime_checkable

from vlnkit.core import Action, Decision, Episode, HistoryBuffer, HistoryEntry, Pose
from vlnkit.prompts import FramePair
from vlnkit.simworld.engine import Observation, StepResult
from vlnkit.simworld.maps import WorldMap


class StopReason(str, Enum):
    """Why an episode ended, in priority order when several apply at once."""

    AGENT_STOPPED = "agent_stopped"
    GOAL_REACHED = "goal_reached"
    MAX_STEPS_REACHED = "max_steps_reached"


@dataclass(frozen=True)
class LoopConfig:
    """Episode loop knobs; defaults match the evaluation protocol."""

    max_steps: int = 50
    success_radius: float = 3.0
    stop_on_goal_proximity: bool = True
    window_w: int = 5

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.success_radius <= 0.0:
            raise ValueError(f"success_radius must be > 0, got {self.success_radius}")
        if self.window_w < 1:
            raise ValueError(f"window_w must be >= 1, got {self.window_w}")


def check_stop(
    action: Action | None,
    distance_to_goal: float,
    steps_taken: int,
    cfg: LoopConfig,
) -> StopReason | None:
    """Evaluate the three stop criteria in fixed priority order.

    An explicit stop decision wins over goal proximity, which wins over the
    step budget. `action` is None when checking between decisions.
    """
    if action is Action.STOP:
        return StopReason.AGENT_STOPPED
    if cfg.stop_on_goal_proximity and distance_to_goal <= cfg.success_radius:
        return StopReason.GOAL_REACHED
    if steps_taken >= cfg.max_steps:
        return StopReason.MAX_STEPS_REACHED
    return None


@dataclass(frozen=True)
class StepRecord:
    """One decision and what it did to the world.

    A stop decision is recorded too: its pose_after equals pose_before and
    it never reaches the simulator.
    """

    step: int
    pose_before: Pose
    action: Action
    reflection: str
    pose_after: Pose
    collided: bool
    distance_to_goal: float


@dataclass
class StepContext:
    """Everything a policy may look at when making one decision.

    pose and distance_to_goal are harness-side ground truth for scripted
    baselines and stop logic; prompt assembly must never include them.
    parse_events is append-only: policies push one short string per
    recoverable parsing incident and the loop carries them into the result.
    """

    episode: Episode
    step: int
    frames: FramePair
    history: tuple[HistoryEntry, ...]
    pose: Pose
    distance_to_goal: float
    world: WorldMap | None = None
    parse_events: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one episode run, with the full step-by-step record."""

    episode_id: str
    stop_reason: StopReason
    steps_taken: int
    path_length: float
    final_pose: Pose
    distance_to_goal: float
    success: bool
    records: tuple[StepRecord, ...]
    parse_events: tuple[str, ...] = ()

    @property
    def collisions(self) -> int:
        return sum(1 for r in self.records if r.collided)


@runtime_checkable
class SimulatorProtocol(Protocol):
    def reset(self, episode: Episode) -> StepResult: ...

    def step(self, action: Action) -> StepResult: ...

    def close(self) -> None: ...


@runtime_checkable
class PolicyProtocol(Protocol):
    def decide(self, ctx: StepContext) -> Decision: ...


def run_episode(
    sim: SimulatorProtocol,
    policy: PolicyProtocol,
    episode: Episode,
    cfg: LoopConfig | None = None,
) -> EpisodeResult:
    """Run one episode to completion.

    Stop criteria are checked before every decision; a stop decision is
    recorded but not simulated, and steps_taken counts simulated actions
    only. Policy and simulator errors propagate to the caller.
    """
    cfg = cfg or LoopConfig()
    result = sim.reset(episode)
    history = HistoryBuffer()
    records: list[StepRecord] = []
    parse_events: list[str] = []
    path_length = 0.0
    pose = result.pose
    dtg = result.distance_to_goal
    prev_obs: Observation | None = None
    cur_obs = Observation(frame=result.frame, step=result.step)
    sim_steps = 0
    stop_reason: StopReason | None = None

    while stop_reason is None:
        stop_reason = check_stop(None, dtg, sim_steps, cfg)
        if stop_reason is not None:
            break

        ctx = StepContext(
            episode=episode,
            step=sim_steps,
            frames=FramePair(current=cur_obs, previous=prev_obs),
            history=history.window(cfg.window_w),
            pose=pose,
            distance_to_goal=dtg,
            world=getattr(sim, "world", None),
            parse_events=parse_events,
        )
        decision = policy.decide(ctx)

        if decision.action is Action.STOP:
            records.append(
                StepRecord(
                    step=sim_steps,
                    pose_before=pose,
                    action=Action.STOP,
                    reflection=decision.reflection,
                    pose_after=pose,
                    collided=False,
                    distance_to_goal=dtg,
                )
            )
            stop_reason = check_stop(decision.action, dtg, sim_steps, cfg)
            break

        step_result = sim.step(decision.action)
        history.append(
            HistoryEntry(step=sim_steps, action=decision.action, reflection=decision.reflection)
        )
        records.append(
            StepRecord(
                step=sim_steps,
                pose_before=pose,
                action=decision.action,
                reflection=decision.reflection,
                pose_after=step_result.pose,
                collided=step_result.collided,
                distance_to_goal=step_result.distance_to_goal,
            )
        )
        path_length += math.dist(pose.xy, step_result.pose.xy)
        prev_obs = cur_obs
        cur_obs = Observation(frame=step_result.frame, step=step_result.step)
        pose = step_result.pose
        dtg = step_result.distance_to_goal
        sim_steps += 1

    final_dtg = math.dist(pose.xy, episode.goal)
    return EpisodeResult(
        episode_id=episode.episode_id,
        stop_reason=stop_reason,
        steps_taken=sim_steps,
        path_length=path_length,
        final_pose=pose,
        distance_to_goal=final_dtg,
        success=final_dtg <= cfg.success_radius,
        records=tuple(records),
        parse_events=tuple(parse_events),
    )
