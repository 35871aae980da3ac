"""Shared domain types: poses, actions, episodes, history, decisions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator


class UnknownActionError(ValueError):
    """A string does not name one of the four navigation actions."""


class StepMismatchError(ValueError):
    """A history entry's step index breaks the 0..n-1 contiguity contract."""


class EpisodeFormatError(ValueError):
    """An episode file is structurally invalid."""


class Action(str, Enum):
    """The four-action discrete navigation space."""

    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    MOVE_FORWARD = "move_forward"
    STOP = "stop"

    @classmethod
    def from_text(cls, text: str) -> "Action":
        """Parse an action name, ignoring case and surrounding whitespace."""
        name = text.strip().lower()
        for action in cls:
            if action.value == name:
                return action
        known = ", ".join(a.value for a in cls)
        raise UnknownActionError(f"unknown action {text!r}; expected one of: {known}")


def action_from_text(text: str) -> Action:
    return Action.from_text(text)


@dataclass(frozen=True)
class Pose:
    """Planar agent pose: meters, plus heading in degrees.

    Heading is normalized to [0, 360); 0 points along +x and positive turns
    are counterclockwise.
    """

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.heading})")
        heading = self.heading % 360.0
        # a tiny negative heading rounds up to exactly 360.0 under fmod
        if heading >= 360.0:
            heading = 0.0
        object.__setattr__(self, "heading", heading)

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "heading": self.heading}

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        return cls(x=float(data["x"]), y=float(data["y"]), heading=float(data["heading"]))


@dataclass(frozen=True)
class HistoryEntry:
    """One step of the episode log: what was done and what the agent noted."""

    step: int
    action: Action
    reflection: str

    def __post_init__(self) -> None:
        if self.step < 0:
            raise ValueError(f"negative history step {self.step}")


class HistoryBuffer:
    """Append-only per-episode log of (step, action, reflection) entries.

    Steps must arrive contiguously from 0. Retrieval never mutates; the
    buffer is reset between episodes by constructing a fresh one (or via
    clear()).
    """

    def __init__(self, entries: tuple[HistoryEntry, ...] | list[HistoryEntry] = ()) -> None:
        self._entries: list[HistoryEntry] = []
        for entry in entries:
            self.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[HistoryEntry]:
        return iter(tuple(self._entries))

    @property
    def entries(self) -> tuple[HistoryEntry, ...]:
        return tuple(self._entries)

    def append(self, entry: HistoryEntry) -> None:
        if entry.step != len(self._entries):
            raise StepMismatchError(
                f"expected step {len(self._entries)}, got {entry.step}; "
                "history steps must be contiguous from 0"
            )
        self._entries.append(entry)

    def window(self, size: int) -> tuple[HistoryEntry, ...]:
        """Last min(size, len) entries in chronological order."""
        if size < 1:
            raise ValueError(f"window size must be >= 1, got {size}")
        return tuple(self._entries[-size:])

    def clear(self) -> None:
        self._entries.clear()


@dataclass(frozen=True)
class Decision:
    """Parsed policy output: one action plus one free-text reflection."""

    action: Action
    reflection: str


@dataclass(frozen=True)
class Episode:
    """One navigation task.

    map_ref is a path to the map file, resolved relative to the episode
    file that referenced it. shortest_path_length is the precomputed
    obstacle-avoiding start-to-goal distance used by the SPL metric.
    """

    episode_id: str
    map_ref: str
    start: Pose
    goal: tuple[float, float]
    instruction: str
    shortest_path_length: float

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "map": self.map_ref,
            "start": self.start.to_dict(),
            "goal": {"x": self.goal[0], "y": self.goal[1]},
            "instruction": self.instruction,
            "shortest_path_length": self.shortest_path_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Episode":
        try:
            episode = cls(
                episode_id=str(data["episode_id"]),
                map_ref=str(data["map"]),
                start=Pose.from_dict(data["start"]),
                goal=(float(data["goal"]["x"]), float(data["goal"]["y"])),
                instruction=str(data["instruction"]),
                shortest_path_length=float(data["shortest_path_length"]),
            )
        except (KeyError, TypeError) as exc:
            raise EpisodeFormatError(f"bad episode record: {exc!r}") from exc
        straight = math.dist(episode.start.xy, episode.goal)
        # The shortest free path can never beat the straight line.
        if episode.shortest_path_length < straight - 1e-9:
            raise EpisodeFormatError(
                f"episode {episode.episode_id!r}: shortest_path_length "
                f"{episode.shortest_path_length} is below the straight-line "
                f"start-goal distance {straight}"
            )
        return episode


def load_episodes(path: str | Path) -> list[Episode]:
    """Load an episode-set file: a JSON array of episode records."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise EpisodeFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise EpisodeFormatError(f"{path}: episode set must be a JSON array")
    return [Episode.from_dict(record) for record in data]


def save_episodes(path: str | Path, episodes: list[Episode]) -> None:
    """Write an episode-set file."""
    payload = [episode.to_dict() for episode in episodes]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
