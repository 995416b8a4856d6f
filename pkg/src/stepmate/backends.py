"""Pluggable chat backends: a remote chat-completions client plus local mocks."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from typing import Protocol

import httpx

from .convo import Conversation, Speaker
from .prompts import TriggerContext

log = logging.getLogger(__name__)


class BackendError(RuntimeError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class BackendTimeout(BackendError):
    pass


class BadConfig(ValueError):
    pass


@dataclass(frozen=True)
class AssistRequest:
    system: str
    user: str
    # Absent for one-shot uses (e.g. whole-conversation generation).
    context: TriggerContext | None = None


class ChatBackend(Protocol):
    kind: str

    def generate(self, request: AssistRequest) -> str: ...


class OracleAssistant:
    """Speaks the tracker's suggested message and nothing else.

    With answer_user=True it also replies to user comments, echoing any
    pending suggestion or a short acknowledgement.
    """

    kind = "oracle"

    def __init__(self, answer_user: bool = False):
        self.answer_user = answer_user

    def generate(self, request: AssistRequest) -> str:
        ctx = request.context
        if ctx.trigger_speaker is Speaker.WEARABLE:
            return ctx.suggested_message or ""
        if not self.answer_user:
            return ""
        if ctx.suggested_message:
            return ctx.suggested_message
        return f"You're on track. {ctx.step_note}"


class ChattyAssistant:
    """Never shuts up; responds to every trigger. Exists to exercise TNR."""

    kind = "chatty"

    _FILLER = (
        "Keep going, you're doing great!",
        "Nice progress so far.",
        "Looking good, carry on.",
    )

    def generate(self, request: AssistRequest) -> str:
        ctx = request.context
        if ctx.suggested_message:
            return ctx.suggested_message
        return self._FILLER[ctx.trigger_ordinal % len(self._FILLER)]


class ScriptedAssistant:
    """Replays the assistant lines of a recorded conversation.

    The nth trigger (Wearable or User dialogue) answers with whatever
    assistant text immediately follows that trigger in the recording.
    """

    kind = "scripted"

    def __init__(self, conversation: Conversation):
        self._by_ordinal: dict[int, str] = {}
        ordinal = 0
        dialogues = conversation.dialogues
        for i, d in enumerate(dialogues):
            if d.speaker is Speaker.ASSISTANT:
                continue
            parts = []
            j = i + 1
            while j < len(dialogues) and dialogues[j].speaker is Speaker.ASSISTANT:
                parts.append(dialogues[j].text)
                j += 1
            self._by_ordinal[ordinal] = " ".join(parts)
            ordinal += 1

    def generate(self, request: AssistRequest) -> str:
        return self._by_ordinal.get(request.context.trigger_ordinal, "")


class RemoteChat:
    """Chat-completions client over HTTP.

    Credentials come from the environment variable named by auth_env; the
    secret itself is never part of configuration.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        temperature: float = 0.0,
        client: httpx.Client | None = None,
    ):
        if not endpoint:
            raise BadConfig("remote backend needs an endpoint URL")
        if not model:
            raise BadConfig("remote backend needs a model id")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.auth_env = auth_env
        self.timeout = timeout
        self.retries = retries
        self.temperature = temperature
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def generate(self, request: AssistRequest) -> str:
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        }
        url = f"{self.endpoint}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.post(
                    url, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(f"chat backend timed out: {exc}")
            except httpx.HTTPError as exc:
                last_error = BackendError(f"chat backend unreachable: {exc}")
            else:
                if response.status_code >= 500:
                    last_error = BackendError(
                        f"chat backend returned {response.status_code}",
                        status=response.status_code,
                    )
                elif response.status_code >= 400:
                    raise BackendError(
                        f"chat backend rejected the request: {response.text[:200]}",
                        status=response.status_code,
                    )
                else:
                    data = response.json()
                    content = data["choices"][0]["message"].get("content")
                    return content or ""
            if attempt < self.retries:
                time.sleep(min(0.25 * 2**attempt, 2.0))
        assert last_error is not None
        raise last_error


def make_backend(name: str, config: "EngineConfig | None" = None) -> ChatBackend:
    """Instantiate a backend by its registry name."""
    from .engine import EngineConfig

    config = config or EngineConfig()
    if name == "oracle":
        return OracleAssistant()
    if name == "oracle-answers":
        return OracleAssistant(answer_user=True)
    if name == "chatty":
        return ChattyAssistant()
    if name == "remote":
        return RemoteChat(
            endpoint=config.endpoint or "",
            model=config.model or "",
            auth_env=config.auth_env,
            timeout=config.timeout,
            retries=config.retries,
            temperature=config.temperature,
        )
    raise BadConfig(f"unknown backend: {name!r}")
