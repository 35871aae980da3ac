"""Environment adapter: action-name mapping and the Habitat-Lab wrapper.

The bridge is strictly a simulator adapter. It never sees prompts,
policies, or model output; it maps the harness's four action names onto
the environment's discrete action set and translates observations into
the wire protocol's vocabulary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from habitat_bridge.config import BridgeConfig


class BridgeError(RuntimeError):
    """Base class for bridge failures."""


class AssetMissingError(BridgeError):
    """Habitat-Lab or its scene assets are not available."""


class EpisodeNotFoundError(LookupError):
    """A reset named an episode_id the environment does not have."""


class UnknownActionNameError(ValueError):
    """An action name outside the four the protocol speaks."""


# One-to-one, both ways: the harness's action names against the
# environment's discrete action set.
ACTION_TO_ENV = {
    "stop": "STOP",
    "move_forward": "MOVE_FORWARD",
    "turn_left": "TURN_LEFT",
    "turn_right": "TURN_RIGHT",
}
ENV_TO_ACTION = {env: harness for harness, env in ACTION_TO_ENV.items()}


def to_env_action(name: str) -> str:
    key = name.strip().lower()
    if key not in ACTION_TO_ENV:
        raise UnknownActionNameError(
            f"unknown action {name!r}; expected one of {sorted(ACTION_TO_ENV)}"
        )
    return ACTION_TO_ENV[key]


def to_harness_action(env_name: str) -> str:
    if env_name not in ENV_TO_ACTION:
        raise UnknownActionNameError(
            f"unknown environment action {env_name!r}; "
            f"expected one of {sorted(ENV_TO_ACTION)}"
        )
    return ENV_TO_ACTION[env_name]


@dataclass(frozen=True)
class EnvObservation:
    """What the service needs from an environment after reset or step.

    `rgb` may be any size; the service re-encodes to the protocol frame
    size. Positions are planar meters, heading degrees in [0, 360).
    """

    rgb: np.ndarray
    x: float
    y: float
    heading: float
    collided: bool
    step: int
    distance_to_goal: float


def _quaternion_heading(w: float, x: float, y: float, z: float) -> float:
    """Planar heading of the rotated forward vector (0, 0, -1).

    Habitat's world is y-up with forward along -z; the harness plane maps
    x -> x and -z -> y, so heading 0 is +x and 90 is +y (counterclockwise).
    """
    # rotate (0, 0, -1) by the unit quaternion, then project
    fx = -(2.0 * (x * z + w * y))
    fz = -(1.0 - 2.0 * (x * x + y * y))
    heading = math.degrees(math.atan2(-fz, fx)) % 360.0
    if heading >= 360.0:
        heading = 0.0
    return heading


class HabitatEnv:
    """A Habitat-Lab environment behind the EnvObservation surface.

    Imports habitat lazily so the bridge package (and its tests, which use
    a stub environment) work on machines without Habitat installed. All
    sensor and agent specifics come from the user's own config file; the
    bridge does not guess values the config leaves out.
    """

    def __init__(self, config: BridgeConfig) -> None:
        if not Path(config.habitat_config_path).is_file():
            raise AssetMissingError(
                f"habitat config not found: {config.habitat_config_path}"
            )
        try:
            import habitat
        except ImportError as exc:
            raise AssetMissingError(
                "habitat-lab is not installed; install it (and the scene "
                "assets your config references) to serve a real environment"
            ) from exc

        try:
            habitat_config = habitat.get_config(config.habitat_config_path)
            try:  # split override; config layouts differ between releases
                with habitat.config.read_write(habitat_config):
                    habitat_config.habitat.dataset.split = config.episode_split
            except Exception:  # noqa: BLE001 - optional override only
                pass
            self._env = habitat.Env(config=habitat_config)
        except AssetMissingError:
            raise
        except Exception as exc:  # noqa: BLE001 - startup is the boundary
            raise AssetMissingError(
                f"could not start the Habitat environment: {exc}"
            ) from exc
        self._step = 0

    # -- episode data ------------------------------------------------

    def _episodes(self):
        return list(self._env.episodes)

    def episode_summaries(self) -> list[dict]:
        out = []
        for episode in self._episodes():
            instruction = getattr(episode, "instruction", None)
            text = getattr(instruction, "instruction_text", "") if instruction else ""
            out.append({"episode_id": str(episode.episode_id), "instruction": text})
        return out

    # -- protocol operations ------------------------------------------

    def reset(self, episode_id: str) -> EnvObservation:
        wanted = None
        for episode in self._episodes():
            if str(episode.episode_id) == episode_id:
                wanted = episode
                break
        if wanted is None:
            raise EpisodeNotFoundError(f"episode not found: {episode_id!r}")
        self._env.episode_iterator = iter([wanted])
        observations = self._env.reset()
        self._step = 0
        return self._observe(observations, collided=False)

    def step(self, env_action: str) -> EnvObservation:
        if env_action not in ENV_TO_ACTION:
            raise UnknownActionNameError(f"unknown environment action {env_action!r}")
        observations = self._env.step(env_action)
        self._step += 1
        return self._observe(observations, collided=self._collided())

    def close(self) -> None:
        self._env.close()

    # -- translation ---------------------------------------------------

    def _collided(self) -> bool:
        sim = self._env.sim
        collided = getattr(sim, "previous_step_collided", None)
        if collided is not None:
            return bool(collided)
        metrics = self._env.get_metrics()
        return bool(metrics.get("collisions", {}).get("is_collision", False))

    def _distance_to_goal(self, position) -> float:
        metrics = self._env.get_metrics()
        if "distance_to_goal" in metrics:
            return float(metrics["distance_to_goal"])
        goals = self._env.current_episode.goals
        return float(
            self._env.sim.geodesic_distance(position, [g.position for g in goals])
        )

    def _observe(self, observations: dict, collided: bool) -> EnvObservation:
        state = self._env.sim.get_agent_state()
        px, _, pz = (float(v) for v in state.position)
        rotation = state.rotation
        heading = _quaternion_heading(
            float(rotation.w), float(rotation.x), float(rotation.y), float(rotation.z)
        )
        return EnvObservation(
            rgb=np.asarray(observations["rgb"], dtype=np.uint8),
            x=px,
            y=-pz,
            heading=heading,
            collided=collided,
            step=self._step,
            distance_to_goal=self._distance_to_goal(state.position),
        )
