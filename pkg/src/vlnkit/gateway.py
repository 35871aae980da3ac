"""Policy implementations: remote VLM endpoint, scripted baselines, replay.

The remote side speaks an OpenAI-compatible chat completions API, with
frames inlined as base64 PNG data URLs. Model text is parsed leniently
(three extraction stages) because VLM output wraps JSON in prose or fences
more often than not.
"""

from __future__ import annotations

import json
import math
import os
import re
import time
from dataclasses import dataclass

import requests

from vlnkit.core import Action, Decision, UnknownActionError
from vlnkit.imaging import frame_png_base64
from vlnkit.loop import StepContext
from vlnkit.prompts import PromptConfig, VLMRequest, assemble_request
from vlnkit.simworld.geodesic import shortest_cell_path

NO_REFLECTION = "(no reflection)"
PARSE_FALLBACK_REFLECTION = "(parse failure fallback)"

CORRECTIVE_SENTENCE = (
    "Your previous reply could not be parsed. Reply with exactly one JSON "
    'object with the keys "action" and "reflection" and nothing else.'
)


class GatewayError(Exception):
    """Base class for remote-endpoint failures."""


class TransportError(GatewayError):
    """Connection-level failure that survived all retries."""


class InferenceTimeoutError(GatewayError):
    """The endpoint did not answer within the timeout, on every attempt."""


class HTTPStatusError(GatewayError):
    """The endpoint rejected the request (4xx); retrying cannot help."""

    def __init__(self, status_code: int, body: str) -> None:
        super().__init__(f"endpoint returned HTTP {status_code}: {body[:200]}")
        self.status_code = status_code
        self.body = body


class MalformedResponseError(GatewayError):
    """HTTP succeeded but the body is not a usable chat completion."""


class DecisionParseError(ValueError):
    """Model text could not be turned into a Decision; carries the raw text."""

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw


class NoJsonFoundError(DecisionParseError):
    """No JSON object anywhere in the model text."""


class InvalidActionError(DecisionParseError):
    """JSON found, but its action is missing or not one of the four."""


class ReplayExhaustedError(ValueError):
    """A replay policy was asked for more decisions than it holds."""


@dataclass(frozen=True)
class PolicyEndpointConfig:
    """Where and how to call the vision-language endpoint."""

    base_url: str
    model_name: str
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 2
    retry_backoff: float = 0.25
    max_output_tokens: int = 512
    api_key_env: str = "VLN_API_KEY"

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("base_url must be nonempty")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.timeout <= 0.0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}")


@dataclass(frozen=True)
class RawModelOutput:
    """Unparsed endpoint reply. latency is diagnostic only and must stay
    out of traces and reports."""

    text: str
    latency: float


def build_chat_payload(cfg: PolicyEndpointConfig, request: VLMRequest) -> dict:
    """Chat-completions body: system text, then user text plus ordered images."""
    user_content: list[dict] = [{"type": "text", "text": request.user_text}]
    for frame in request.images:
        user_content.append(
            {
                "type": "image_url",
                "image_url": {"url": "data:image/png;base64," + frame_png_base64(frame)},
            }
        )
    return {
        "model": cfg.model_name,
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
        "messages": [
            {"role": "system", "content": [{"type": "text", "text": request.system_text}]},
            {"role": "user", "content": user_content},
        ],
    }


def _extract_completion_text(body: dict) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(
            f"completion body missing choices[0].message.content: {exc!r}"
        ) from exc
    if isinstance(content, str):
        return content
    if isinstance(content, list):
        texts = [part.get("text", "") for part in content if isinstance(part, dict)]
        if texts:
            return "".join(texts)
    raise MalformedResponseError(f"unsupported content payload: {type(content).__name__}")


def infer_remote(
    cfg: PolicyEndpointConfig,
    request: VLMRequest,
    session: requests.Session | None = None,
) -> RawModelOutput:
    """POST one chat completion, retrying transient failures.

    Connection errors, timeouts, and 5xx responses are retried with
    exponential backoff up to max_retries; 4xx responses and malformed
    bodies fail immediately.
    """
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    payload = build_chat_payload(cfg, request)
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    post = session.post if session is not None else requests.post
    last_error: GatewayError | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            time.sleep(cfg.retry_backoff * (2 ** (attempt - 1)))
        start = time.monotonic()
        try:
            response = post(url, json=payload, headers=headers, timeout=cfg.timeout)
        except requests.Timeout as exc:
            last_error = InferenceTimeoutError(f"no reply within {cfg.timeout}s: {exc}")
            continue
        except requests.ConnectionError as exc:
            last_error = TransportError(f"connection failed: {exc}")
            continue
        latency = time.monotonic() - start

        if 400 <= response.status_code < 500:
            raise HTTPStatusError(response.status_code, response.text)
        if response.status_code >= 500:
            last_error = TransportError(
                f"endpoint returned HTTP {response.status_code}: {response.text[:200]}"
            )
            continue
        try:
            body = response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"completion body is not JSON: {exc}") from exc
        return RawModelOutput(text=_extract_completion_text(body), latency=latency)

    assert last_error is not None
    raise last_error


_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_+-]*)\s*\n(.*?)```", re.DOTALL)


def _balanced_objects(text: str) -> list[str]:
    """Every top-level {...} span with brace depth tracked through strings."""
    spans: list[str] = []
    depth = 0
    start = -1
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    spans.append(text[start : i + 1])
    return spans


def _decision_from_object(obj: dict, raw: str) -> Decision:
    if "action" not in obj:
        raise InvalidActionError("JSON object has no 'action' key", raw)
    try:
        action = Action.from_text(str(obj["action"]))
    except UnknownActionError as exc:
        raise InvalidActionError(str(exc), raw) from exc
    reflection = obj.get("reflection")
    if not isinstance(reflection, str) or not reflection.strip():
        reflection = NO_REFLECTION
    return Decision(action=action, reflection=reflection)


def parse_decision(text: str) -> Decision:
    """Extract {"action", "reflection"} from model text.

    Tries, in order: the whole text as JSON, the contents of each code
    fence, then every balanced brace span. The first JSON object carrying
    an 'action' key decides; a parsable object without one only counts if
    nothing better shows up.
    """
    candidates: list[dict] = []

    def consider(snippet: str) -> dict | None:
        try:
            obj = json.loads(snippet)
        except (ValueError, RecursionError):
            # RecursionError: absurdly nested input must degrade to
            # "no JSON found", not escape as a crash
            return None
        if isinstance(obj, dict):
            candidates.append(obj)
            if "action" in obj:
                return obj
        return None

    hit = consider(text.strip())
    if hit is None:
        for fence in _FENCE_RE.findall(text):
            hit = consider(fence.strip())
            if hit is not None:
                break
    if hit is None:
        for span in _balanced_objects(text):
            hit = consider(span)
            if hit is not None:
                break

    if hit is not None:
        return _decision_from_object(hit, text)
    if candidates:
        return _decision_from_object(candidates[0], text)
    raise NoJsonFoundError("no JSON object found in model text", text)


def wrap180(angle_deg: float) -> float:
    """Fold an angle difference into (-180, 180]."""
    folded = ((angle_deg + 180.0) % 360.0) - 180.0
    return 180.0 if folded == -180.0 else folded


class ZeroMovementPolicy:
    """Stops immediately; the do-nothing reference point for metrics."""

    def decide(self, ctx: StepContext) -> Decision:
        return Decision(action=Action.STOP, reflection="baseline")


class OraclePolicy:
    """Greedy shortest-path follower with full map access.

    Upper-bounds what any policy can score on a fixture set; needs a
    simulator that exposes its world.
    """

    def __init__(self, success_radius: float = 3.0, turn_angle: float = 15.0) -> None:
        self.success_radius = success_radius
        self.turn_angle = turn_angle

    def decide(self, ctx: StepContext) -> Decision:
        if ctx.world is None:
            raise ValueError("oracle policy needs a simulator that exposes its world")
        goal = ctx.episode.goal
        if math.dist(ctx.pose.xy, goal) <= self.success_radius:
            return Decision(action=Action.STOP, reflection="within goal radius")

        cells = shortest_cell_path(
            ctx.world, ctx.world.cell_of(*ctx.pose.xy), ctx.world.cell_of(*goal)
        )
        if len(cells) >= 2:
            waypoint = ctx.world.cell_center(*cells[1])
        else:
            waypoint = goal
        bearing = wrap180(
            math.degrees(math.atan2(waypoint[1] - ctx.pose.y, waypoint[0] - ctx.pose.x))
            - ctx.pose.heading
        )
        if abs(bearing) <= self.turn_angle / 2.0:
            return Decision(action=Action.MOVE_FORWARD, reflection="waypoint ahead; advancing")
        if bearing > 0.0:
            return Decision(action=Action.TURN_LEFT, reflection="waypoint to the left; turning")
        return Decision(action=Action.TURN_RIGHT, reflection="waypoint to the right; turning")


class ReplayPolicy:
    """Feeds back a prerecorded decision sequence, indexed by decision step.

    Accepts one flat sequence or a per-episode mapping; items may be
    Decision objects, Action values, or action-name strings.
    """

    def __init__(
        self,
        script: list[Decision | Action | str] | dict[str, list[Decision | Action | str]],
    ) -> None:
        self._script = script

    @staticmethod
    def _normalize(item: Decision | Action | str) -> Decision:
        if isinstance(item, Decision):
            return item
        if isinstance(item, Action):
            return Decision(action=item, reflection="(replay)")
        return Decision(action=Action.from_text(item), reflection="(replay)")

    def decide(self, ctx: StepContext) -> Decision:
        if isinstance(self._script, dict):
            if ctx.episode.episode_id not in self._script:
                raise ReplayExhaustedError(
                    f"no replay script for episode {ctx.episode.episode_id!r}"
                )
            seq = self._script[ctx.episode.episode_id]
        else:
            seq = self._script
        if ctx.step >= len(seq):
            raise ReplayExhaustedError(
                f"replay script for episode {ctx.episode.episode_id!r} has "
                f"{len(seq)} decisions; step {ctx.step} requested"
            )
        return self._normalize(seq[ctx.step])


class RemotePolicy:
    """Vision-language policy behind an HTTP endpoint.

    On unparseable output it re-queries once with a corrective sentence,
    then falls back to turn_left so the episode keeps moving. Transport
    failures propagate; they are infrastructure, not policy.
    """

    def __init__(
        self,
        endpoint: PolicyEndpointConfig,
        prompts: PromptConfig,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.prompts = prompts
        self._session = session

    def _query(self, request: VLMRequest) -> RawModelOutput:
        return infer_remote(self.endpoint, request, session=self._session)

    def decide(self, ctx: StepContext) -> Decision:
        request = assemble_request(
            self.prompts,
            ctx.episode.instruction,
            ctx.history,
            ctx.frames,
            ctx.step,
            temperature=self.endpoint.temperature,
            max_output_tokens=self.endpoint.max_output_tokens,
        )
        raw = self._query(request)
        try:
            return parse_decision(raw.text)
        except DecisionParseError as exc:
            ctx.parse_events.append(f"step {ctx.step}: {type(exc).__name__}; re-querying")

        retry_request = VLMRequest(
            system_text=request.system_text,
            user_text=request.user_text + "\n\n" + CORRECTIVE_SENTENCE,
            images=request.images,
            temperature=request.temperature,
            max_output_tokens=request.max_output_tokens,
        )
        raw = self._query(retry_request)
        try:
            return parse_decision(raw.text)
        except DecisionParseError as exc:
            ctx.parse_events.append(
                f"step {ctx.step}: {type(exc).__name__} after corrective re-query; "
                "falling back to turn_left"
            )
            return Decision(action=Action.TURN_LEFT, reflection=PARSE_FALLBACK_REFLECTION)
