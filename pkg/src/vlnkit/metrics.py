"""Evaluation metrics and report emission.

Three headline numbers: mean distance to goal in meters, success rate as
a percentage, and success weighted by path length (also a percentage,
each episode's term S*l/max(p, l)).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from vlnkit.core import Episode
from vlnkit.loop import EpisodeResult


class EmptyResultsError(ValueError):
    """Aggregation over zero episodes has no defined value."""


class InvalidEpisodeError(ValueError):
    """An episode score carries values the metrics cannot use."""


class UnknownFormatError(ValueError):
    """Report format is not one of json, csv, table."""


@dataclass(frozen=True)
class EpisodeScore:
    """Per-episode inputs to the aggregate metrics."""

    episode_id: str
    distance_to_goal: float
    success: bool
    path_length: float
    shortest_path_length: float
    steps_taken: int
    stop_reason: str

    def __post_init__(self) -> None:
        if self.shortest_path_length <= 0.0:
            raise InvalidEpisodeError(
                f"episode {self.episode_id!r}: shortest_path_length must be > 0, "
                f"got {self.shortest_path_length}"
            )
        if self.path_length < 0.0 or self.distance_to_goal < 0.0:
            raise InvalidEpisodeError(
                f"episode {self.episode_id!r}: negative path_length or distance_to_goal"
            )

    @property
    def spl_term(self) -> float:
        if not self.success:
            return 0.0
        return self.shortest_path_length / max(self.path_length, self.shortest_path_length)

    @classmethod
    def from_result(cls, result: EpisodeResult, episode: Episode) -> "EpisodeScore":
        if result.episode_id != episode.episode_id:
            raise InvalidEpisodeError(
                f"result is for {result.episode_id!r}, episode is {episode.episode_id!r}"
            )
        return cls(
            episode_id=result.episode_id,
            distance_to_goal=result.distance_to_goal,
            success=result.success,
            path_length=result.path_length,
            shortest_path_length=episode.shortest_path_length,
            steps_taken=result.steps_taken,
            stop_reason=result.stop_reason.value,
        )


@dataclass(frozen=True)
class Report:
    """Aggregate metrics plus the per-episode scores they came from."""

    episodes: tuple[EpisodeScore, ...]
    dtg: float
    sr: float
    spl: float

    @property
    def n_episodes(self) -> int:
        return len(self.episodes)

    def to_dict(self) -> dict:
        reasons: dict[str, int] = {}
        for score in self.episodes:
            reasons[score.stop_reason] = reasons.get(score.stop_reason, 0) + 1
        return {
            "n_episodes": self.n_episodes,
            "dtg": self.dtg,
            "sr": self.sr,
            "spl": self.spl,
            "stop_reasons": {k: reasons[k] for k in sorted(reasons)},
            "episodes": [
                {
                    "episode_id": s.episode_id,
                    "distance_to_goal": s.distance_to_goal,
                    "success": s.success,
                    "path_length": s.path_length,
                    "shortest_path_length": s.shortest_path_length,
                    "spl_term": s.spl_term,
                    "steps_taken": s.steps_taken,
                    "stop_reason": s.stop_reason,
                }
                for s in self.episodes
            ],
        }


def distance_to_goal_mean(scores: Sequence[EpisodeScore]) -> float:
    if not scores:
        raise EmptyResultsError("no episode scores to aggregate")
    return sum(s.distance_to_goal for s in scores) / len(scores)


def success_rate(scores: Sequence[EpisodeScore]) -> float:
    """Percentage of episodes that ended within the success radius."""
    if not scores:
        raise EmptyResultsError("no episode scores to aggregate")
    return 100.0 * sum(1 for s in scores if s.success) / len(scores)


def spl(scores: Sequence[EpisodeScore]) -> float:
    """Success weighted by inverse path length, as a percentage."""
    if not scores:
        raise EmptyResultsError("no episode scores to aggregate")
    return 100.0 * sum(s.spl_term for s in scores) / len(scores)


def aggregate(scores: Iterable[EpisodeScore]) -> Report:
    """Build a report; episodes are ordered by episode_id for stable output."""
    ordered = tuple(sorted(scores, key=lambda s: s.episode_id))
    if not ordered:
        raise EmptyResultsError("no episode scores to aggregate")
    ids = [s.episode_id for s in ordered]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InvalidEpisodeError(f"duplicate episode ids in results: {dupes}")
    return Report(
        episodes=ordered,
        dtg=distance_to_goal_mean(ordered),
        sr=success_rate(ordered),
        spl=spl(ordered),
    )


def load_baselines() -> dict[str, dict[str, float]]:
    """Published reference numbers for the same three metrics."""
    text = (resources.files("vlnkit") / "data" / "baselines.json").read_text(encoding="utf-8")
    return json.loads(text)


def _emit_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "episode_id",
            "distance_to_goal",
            "success",
            "path_length",
            "shortest_path_length",
            "spl_term",
            "steps_taken",
            "stop_reason",
        ]
    )
    for s in report.episodes:
        writer.writerow(
            [
                s.episode_id,
                repr(s.distance_to_goal),
                int(s.success),
                repr(s.path_length),
                repr(s.shortest_path_length),
                repr(s.spl_term),
                s.steps_taken,
                s.stop_reason,
            ]
        )
    return buf.getvalue()


def _emit_table(report: Report, baselines: dict[str, dict[str, float]] | None) -> str:
    rows = [("episode", "dtg", "ok", "path", "steps", "stop_reason")]
    for s in report.episodes:
        rows.append(
            (
                s.episode_id,
                f"{s.distance_to_goal:.3f}",
                "yes" if s.success else "no",
                f"{s.path_length:.3f}",
                str(s.steps_taken),
                s.stop_reason,
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    lines.append("")
    lines.append(
        f"episodes {report.n_episodes}  DTG {report.dtg:.3f} m  "
        f"SR {report.sr:.1f}%  SPL {report.spl:.1f}%"
    )
    if baselines:
        lines.append("")
        lines.append("reference systems:")
        for name in sorted(baselines):
            b = baselines[name]
            lines.append(
                f"  {name}: DTG {b['dtg']:.2f} m  SR {b['sr']:.1f}%  SPL {b['spl']:.1f}%"
            )
    return "\n".join(lines) + "\n"


def emit_report(
    report: Report,
    fmt: str = "json",
    baselines: dict[str, dict[str, float]] | None = None,
) -> str:
    """Serialize a report as json, csv (per-episode rows), or a text table."""
    if fmt == "json":
        payload = report.to_dict()
        if baselines:
            payload["baselines"] = {k: baselines[k] for k in sorted(baselines)}
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        return _emit_csv(report)
    if fmt == "table":
        return _emit_table(report, baselines)
    raise UnknownFormatError(f"unknown report format {fmt!r}; expected json, csv, or table")
