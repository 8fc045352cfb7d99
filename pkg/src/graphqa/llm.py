"""Chat-completion gateway shared by every LLM role in the pipeline.

Two implementations sit behind one interface: `OpenAiChatGateway` talks to
any OpenAI-compatible chat-completions endpoint, `ReplayGateway` serves
canned responses keyed by role tag for fully offline, deterministic runs.

Every call is appended to an in-memory transcript, which tests use for
call-count assertions and which never contains credential values.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from typing import Optional

import requests

ROLE_TAGS = (
    "generator",
    "evaluator",
    "extractor",
    "semantic_ranker",
    "instructions",
    "aggregator",
    "interpreter",
    "judge",
)


class TransportError(Exception):
    """Endpoint unreachable or persistently failing after retries."""


class LlmFormatError(Exception):
    """The model's output did not match the required structure, even after one retry."""


class ReplayExhausted(Exception):
    """A replay script had no entry left for the requested role tag."""


@dataclass(frozen=True)
class ChatTurn:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} turns require non-empty content")


@dataclass
class LlmConfig:
    endpoint: str = "http://localhost:8000/v1"
    model: str = "default"
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout: float = 60.0
    retries: int = 2
    api_key_env: str = "LLM_API_KEY"

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


@dataclass
class TranscriptEntry:
    role_tag: str
    turns: list[ChatTurn]
    response: str


class ChatGateway:
    """Base gateway: transcript bookkeeping plus structured-output parsing."""

    def __init__(self) -> None:
        self.transcript: list[TranscriptEntry] = []

    def complete(self, turns: list[ChatTurn], role_tag: str) -> str:
        response = self._complete(turns, role_tag)
        self.transcript.append(TranscriptEntry(role_tag, list(turns), response))
        return response

    def _complete(self, turns: list[ChatTurn], role_tag: str) -> str:
        raise NotImplementedError

    def complete_structured(
        self,
        turns: list[ChatTurn],
        role_tag: str,
        expected_keys: list[str],
        validate=None,
    ) -> object:
        """Request JSON output; on a malformed reply, ask once for a reformat.

        `validate`, when given, maps the parsed object to the final result and
        may raise ValueError to reject it; a rejection also counts as
        malformed and consumes the single retry.
        """
        response = self.complete(turns, role_tag)
        ok, parsed = self._parse_structured(response, expected_keys, validate)
        if ok:
            return parsed
        retry_turns = list(turns) + [
            ChatTurn("assistant", response or "(empty)"),
            ChatTurn(
                "user",
                "Your previous reply was not a valid JSON object with the keys "
                f"{', '.join(expected_keys)}. Reply with only that JSON object.",
            ),
        ]
        response = self.complete(retry_turns, role_tag)
        ok, parsed = self._parse_structured(response, expected_keys, validate)
        if ok:
            return parsed
        raise LlmFormatError(
            f"{role_tag} reply lacks a valid JSON object with keys {expected_keys}"
        )

    @staticmethod
    def _parse_structured(response: str, expected_keys: list[str], validate):
        parsed = extract_json_object(response)
        if parsed is None or not all(key in parsed for key in expected_keys):
            return False, None
        if validate is None:
            return True, parsed
        try:
            return True, validate(parsed)
        except ValueError:
            return False, None

    def calls_for(self, role_tag: str) -> int:
        return sum(1 for entry in self.transcript if entry.role_tag == role_tag)


_FENCED = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json_object(text: str) -> Optional[dict]:
    """First JSON object found in `text`: direct, fenced, or embedded."""
    candidates = [text.strip()]
    candidates.extend(match.strip() for match in _FENCED.findall(text))
    start = text.find("{")
    if start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
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
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    candidates.append(text[start : i + 1])
                    break
    for candidate in candidates:
        try:
            parsed = json.loads(candidate)
        except (json.JSONDecodeError, TypeError):
            continue
        if isinstance(parsed, dict):
            return parsed
    return None


class OpenAiChatGateway(ChatGateway):
    """Client for the de-facto OpenAI-compatible chat completions API."""

    def __init__(self, config: LlmConfig, session: Optional[requests.Session] = None) -> None:
        super().__init__()
        self.config = config
        self._session = session or requests.Session()

    def _url(self) -> str:
        endpoint = self.config.endpoint.rstrip("/")
        if endpoint.endswith("/chat/completions"):
            return endpoint
        return endpoint + "/chat/completions"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _complete(self, turns: list[ChatTurn], role_tag: str) -> str:
        body = {
            "model": self.config.model,
            "messages": [{"role": turn.role, "content": turn.content} for turn in turns],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        last_error: Optional[Exception] = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                time.sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            try:
                response = self._session.post(
                    self._url(), json=body, headers=self._headers(), timeout=self.config.timeout
                )
                if response.status_code >= 500:
                    last_error = TransportError(f"HTTP {response.status_code}")
                    continue
                if response.status_code >= 400:
                    raise TransportError(
                        f"chat endpoint rejected the request: HTTP {response.status_code}"
                    )
                payload = response.json()
                return payload["choices"][0]["message"]["content"]
            except requests.RequestException as exc:
                last_error = exc
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise TransportError(f"malformed chat completion response: {exc}") from exc
        raise TransportError(f"chat endpoint unreachable after retries: {last_error}")


class ReplayGateway(ChatGateway):
    """Serves scripted responses per role tag, in order, for offline runs."""

    def __init__(self, script: dict[str, list[str]]) -> None:
        super().__init__()
        self._script = {tag: list(entries) for tag, entries in script.items()}
        self._cursor = {tag: 0 for tag in self._script}

    def _complete(self, turns: list[ChatTurn], role_tag: str) -> str:
        entries = self._script.get(role_tag)
        index = self._cursor.get(role_tag, 0)
        if entries is None or index >= len(entries):
            raise ReplayExhausted(
                f"replay script has no response for role {role_tag!r} (call #{index + 1})"
            )
        self._cursor[role_tag] = index + 1
        return entries[index]

    def remaining(self) -> dict[str, int]:
        return {
            tag: len(entries) - self._cursor[tag]
            for tag, entries in self._script.items()
            if len(entries) - self._cursor[tag] > 0
        }

    def assert_fully_consumed(self) -> None:
        leftover = self.remaining()
        if leftover:
            raise AssertionError(f"unconsumed replay entries: {leftover}")


def load_replay_script(path: str) -> dict:
    """Load a replay script file.

    Either a flat {role_tag: [response, ...]} object, or
    {"default": {...}, "per_question": {qid: {...}}} for batch evaluation.
    """
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("replay script must be a JSON object")
    return data


def replay_gateway_for(script: dict, qid: Optional[str] = None) -> ReplayGateway:
    if "per_question" in script or "default" in script:
        per_question = script.get("per_question", {})
        if qid is not None and qid in per_question:
            return ReplayGateway(per_question[qid])
        return ReplayGateway(script.get("default", {}))
    return ReplayGateway(script)
