"""Point-agent motion on a WorldMap: exact turns, raycast collision stops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from vlnkit.core import Action, Episode, Pose
from vlnkit.simworld.maps import WorldMap, load_map_file


class StartInWallError(ValueError):
    """Episode start pose lies inside a wall cell."""


class StopNotASimActionError(ValueError):
    """stop is a loop-level decision; the simulator never executes it."""


@dataclass(frozen=True)
class MotionParams:
    """Actuation constants. Turns are exact in degrees; collisions stop the
    agent at the contact point minus `clearance` (no sliding)."""

    forward_step: float = 0.25
    turn_angle: float = 15.0
    clearance: float = 0.01


@dataclass(frozen=True)
class Observation:
    """One rendered RGB frame, fixed at 256x256x3 uint8."""

    frame: np.ndarray
    step: int

    def __post_init__(self) -> None:
        if self.frame.shape != (256, 256, 3) or self.frame.dtype != np.uint8:
            raise ValueError(
                f"observation frame must be 256x256x3 uint8, got "
                f"{self.frame.shape} {self.frame.dtype}"
            )


@dataclass
class SimState:
    """Mutable per-episode simulator state; pose is always in free space."""

    pose: Pose
    step_count: int
    episode: Episode
    last_collided: bool = False


@dataclass(frozen=True)
class StepResult:
    """What a simulator hands back to the loop after reset or one action.

    distance_to_goal is harness-side ground truth; it steers stop criteria
    and metrics and must never reach a prompt.
    """

    pose: Pose
    frame: np.ndarray
    collided: bool
    step: int
    distance_to_goal: float


def cast_ray(world: WorldMap, x: float, y: float, heading_deg: float) -> tuple[float, tuple[int, int], int]:
    """March a ray from (x, y) to the first wall cell.

    Returns (distance in meters, hit cell, side) where side is 0 when the
    ray entered the cell through a vertical (x) face and 1 through a
    horizontal (y) face. The closed border guarantees a hit. Ties at cell
    corners step through the x face first.
    """
    s = world.cell_size
    px, py = x / s, y / s  # cell units
    theta = math.radians(heading_deg)
    dx, dy = math.cos(theta), math.sin(theta)

    col, row = int(px), int(py)
    inf = math.inf
    delta_x = abs(1.0 / dx) if dx != 0.0 else inf
    delta_y = abs(1.0 / dy) if dy != 0.0 else inf

    if dx > 0.0:
        step_col, side_x = 1, (col + 1.0 - px) * delta_x
    elif dx < 0.0:
        step_col, side_x = -1, (px - col) * delta_x
    else:
        step_col, side_x = 0, inf
    if dy > 0.0:
        step_row, side_y = 1, (row + 1.0 - py) * delta_y
    elif dy < 0.0:
        step_row, side_y = -1, (py - row) * delta_y
    else:
        step_row, side_y = 0, inf

    while True:
        if side_x <= side_y:
            dist = side_x
            side_x += delta_x
            col += step_col
            side = 0
        else:
            dist = side_y
            side_y += delta_y
            row += step_row
            side = 1
        if world.is_wall(row, col):
            return dist * s, (row, col), side


def move_forward(world: WorldMap, pose: Pose, params: MotionParams) -> tuple[Pose, bool]:
    """Advance along the heading, stopping short of the first wall contact."""
    hit_dist, _, _ = cast_ray(world, pose.x, pose.y, pose.heading)
    if hit_dist > params.forward_step:
        travel = params.forward_step
        collided = False
    else:
        travel = max(hit_dist - params.clearance, 0.0)
        collided = True
    theta = math.radians(pose.heading)
    return (
        Pose(pose.x + travel * math.cos(theta), pose.y + travel * math.sin(theta), pose.heading),
        collided,
    )


def apply_action(world: WorldMap, pose: Pose, action: Action, params: MotionParams) -> tuple[Pose, bool]:
    """Apply one non-stop action; returns (new pose, collided)."""
    if action is Action.TURN_LEFT:
        return Pose(pose.x, pose.y, pose.heading + params.turn_angle), False
    if action is Action.TURN_RIGHT:
        return Pose(pose.x, pose.y, pose.heading - params.turn_angle), False
    if action is Action.MOVE_FORWARD:
        return move_forward(world, pose, params)
    raise StopNotASimActionError("stop must be handled by the loop, not the simulator")


class Simulator:
    """Deterministic simulator for one WorldMap; state is passed explicitly."""

    def __init__(self, world: WorldMap, motion: MotionParams | None = None) -> None:
        self.world = world
        self.motion = motion or MotionParams()

    def reset(self, episode: Episode) -> tuple[SimState, Observation]:
        if not self.world.is_free_point(episode.start.x, episode.start.y):
            raise StartInWallError(
                f"episode {episode.episode_id!r} starts inside a wall cell at "
                f"({episode.start.x}, {episode.start.y})"
            )
        state = SimState(pose=episode.start, step_count=0, episode=episode)
        from vlnkit.simworld.render import render

        return state, render(self.world, state.pose, step=0)

    def step(self, state: SimState, action: Action) -> tuple[SimState, Observation, bool]:
        new_pose, collided = apply_action(self.world, state.pose, action, self.motion)
        new_state = replace(state, pose=new_pose, step_count=state.step_count + 1, last_collided=collided)
        from vlnkit.simworld.render import render

        return new_state, render(self.world, new_pose, step=new_state.step_count), collided


class LocalSimulator:
    """Loop-facing adapter around Simulator: owns map loading and state.

    Relative map references resolve against `map_root` (normally the
    directory of the episode file).
    """

    def __init__(self, map_root: str | Path = ".", motion: MotionParams | None = None) -> None:
        self.map_root = Path(map_root)
        self.motion = motion or MotionParams()
        self._maps: dict[str, WorldMap] = {}
        self._sim: Simulator | None = None
        self._state: SimState | None = None
        self.world: WorldMap | None = None

    def _load_world(self, map_ref: str) -> WorldMap:
        path = Path(map_ref)
        if not path.is_absolute():
            path = self.map_root / path
        key = str(path)
        if key not in self._maps:
            self._maps[key] = load_map_file(path)
        return self._maps[key]

    def _distance_to_goal(self, pose: Pose) -> float:
        assert self._state is not None
        return math.dist(pose.xy, self._state.episode.goal)

    def reset(self, episode: Episode) -> StepResult:
        self.world = self._load_world(episode.map_ref)
        self._sim = Simulator(self.world, self.motion)
        self._state, obs = self._sim.reset(episode)
        return StepResult(
            pose=self._state.pose,
            frame=obs.frame,
            collided=False,
            step=0,
            distance_to_goal=self._distance_to_goal(self._state.pose),
        )

    def step(self, action: Action) -> StepResult:
        if self._sim is None or self._state is None:
            raise RuntimeError("step before reset")
        self._state, obs, collided = self._sim.step(self._state, action)
        return StepResult(
            pose=self._state.pose,
            frame=obs.frame,
            collided=collided,
            step=self._state.step_count,
            distance_to_goal=self._distance_to_goal(self._state.pose),
        )

    def close(self) -> None:
        pass
