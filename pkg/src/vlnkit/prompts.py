"""Deterministic prompt assembly: system sections, user text, frame pairs."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from vlnkit.core import Action, HistoryEntry
from vlnkit.simworld.engine import Observation

ACTION_NAMES: tuple[str, ...] = tuple(a.value for a in Action)

NO_HISTORY_LINE = "No history yet."


class FramePairError(ValueError):
    """Frames handed to the prompt builder are not consecutive."""


def _template(name: str) -> str:
    return (resources.files("vlnkit") / "templates" / name).read_text(encoding="utf-8")


def _format_meters(value: float) -> str:
    return f"{value:g}"


@dataclass(frozen=True)
class PromptConfig:
    """Everything the prompt builders need, with texts fully resolved."""

    persona_text: str
    common_sense_text: str
    turn_angle: float
    forward_step: float
    output_schema_text: str
    action_names: tuple[str, ...] = ACTION_NAMES
    window_size: int = 5

    def __post_init__(self) -> None:
        for label, text in (
            ("persona_text", self.persona_text),
            ("common_sense_text", self.common_sense_text),
            ("output_schema_text", self.output_schema_text),
        ):
            if not text.strip():
                raise ValueError(f"{label} must be nonempty")
        if set(self.action_names) != set(ACTION_NAMES) or len(self.action_names) != 4:
            raise ValueError(f"action_names must be exactly {ACTION_NAMES}")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")


def default_prompt_config(
    turn_angle: float = 15.0,
    forward_step: float = 0.25,
    window_size: int = 5,
    persona_text: str | None = None,
    common_sense_text: str | None = None,
) -> PromptConfig:
    """Config backed by the shipped template files."""
    actions = ", ".join(ACTION_NAMES)
    return PromptConfig(
        persona_text=(persona_text or _template("persona.txt")).strip(),
        common_sense_text=(common_sense_text or _template("common_sense.txt")).strip(),
        turn_angle=turn_angle,
        forward_step=forward_step,
        output_schema_text=_template("output_schema.txt").format(actions=actions).strip(),
        window_size=window_size,
    )


@dataclass(frozen=True)
class FramePair:
    """Visual input for one decision: the current frame, and, after the
    first action, also the frame captured just before it."""

    current: Observation
    previous: Observation | None = None

    def __post_init__(self) -> None:
        if self.previous is not None and self.previous.step != self.current.step - 1:
            raise FramePairError(
                f"previous frame step {self.previous.step} is not one before "
                f"current frame step {self.current.step}"
            )

    @property
    def images(self) -> tuple[np.ndarray, ...]:
        """Frames in send order, older first."""
        if self.previous is None:
            return (self.current.frame,)
        return (self.previous.frame, self.current.frame)


@dataclass(frozen=True)
class VLMRequest:
    """One fully assembled model call: texts, ordered images, decode knobs."""

    system_text: str
    user_text: str
    images: tuple[np.ndarray, ...]
    temperature: float = 0.0
    max_output_tokens: int = 512


def _agent_params_text(cfg: PromptConfig) -> str:
    return (
        _template("agent_params.txt")
        .format(
            turn_angle=_format_meters(cfg.turn_angle),
            forward_step=_format_meters(cfg.forward_step),
            actions=", ".join(cfg.action_names),
        )
        .strip()
    )


def render_history_lines(history: Sequence[HistoryEntry]) -> str:
    if not history:
        return NO_HISTORY_LINE
    return "\n".join(
        f"step {e.step}: action={e.action.value}; reflection={e.reflection}" for e in history
    )


def build_system_prompt(cfg: PromptConfig, history: Sequence[HistoryEntry]) -> str:
    """Four labeled sections, in order: persona, parameters, common sense,
    history context. `history` is expected to already be a window."""
    return "\n".join(
        [
            "## Persona",
            cfg.persona_text,
            "",
            "## Agent Parameters",
            _agent_params_text(cfg),
            "",
            "## Human Common Sense",
            cfg.common_sense_text,
            "",
            "## History Context",
            render_history_lines(history),
        ]
    )


def build_user_prompt(
    instruction: str,
    step: int,
    last_reflection: str | None = None,
    output_schema_text: str | None = None,
) -> str:
    """Instruction verbatim, optional reflection reactivation, output format."""
    if output_schema_text is None:
        output_schema_text = (
            _template("output_schema.txt").format(actions=", ".join(ACTION_NAMES)).strip()
        )
    if step == 0:
        frames_line = "You are given the current camera frame."
    else:
        frames_line = (
            "You are given two camera frames: first the view before your last "
            "action, then the current view."
        )
    parts = [
        f"Navigation instruction: {instruction}",
        "",
        f"This is decision step {step}. {frames_line}",
    ]
    if last_reflection is not None:
        parts += [
            "",
            f'Your previous reflection was: "{last_reflection}". Continue from '
            "that line of thought.",
        ]
    parts += ["", output_schema_text]
    return "\n".join(parts)


def assemble_request(
    cfg: PromptConfig,
    instruction: str,
    history: Sequence[HistoryEntry],
    frames: FramePair,
    step: int,
    temperature: float = 0.0,
    max_output_tokens: int = 512,
) -> VLMRequest:
    """Compose both prompts and attach the frame pair, older image first."""
    last_reflection = history[-1].reflection if history else None
    return VLMRequest(
        system_text=build_system_prompt(cfg, history),
        user_text=build_user_prompt(
            instruction, step, last_reflection, cfg.output_schema_text
        ),
        images=frames.images,
        temperature=temperature,
        max_output_tokens=max_output_tokens,
    )
