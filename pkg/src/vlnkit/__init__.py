"""Vision-language navigation harness: simulator, policies, loop, metrics."""

from vlnkit.core import (
    Action,
    Decision,
    Episode,
    HistoryBuffer,
    HistoryEntry,
    Pose,
    load_episodes,
    save_episodes,
)
from vlnkit.loop import EpisodeResult, LoopConfig, StopReason, run_episode
from vlnkit.metrics import EpisodeScore, Report, aggregate, emit_report

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Decision",
    "Episode",
    "EpisodeResult",
    "EpisodeScore",
    "HistoryBuffer",
    "HistoryEntry",
    "LoopConfig",
    "Pose",
    "Report",
    "StopReason",
    "aggregate",
    "emit_report",
    "load_episodes",
    "run_episode",
    "save_episodes",
    "__version__",
]
