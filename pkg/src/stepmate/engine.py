"""Event-driven session orchestration.

Each Wearable or User dialogue triggers one backend call. The tracker
advances on Wearable events; its suggestion (if any) stays pending until an
assistant line lands or the next Wearable event supersedes it, so user
comments in between still see it.
"""

from __future__ import annotations

import json
import logging
import os
import time as _time
from dataclasses import dataclass, fields, replace

from .backends import AssistRequest, BackendError, ChatBackend, make_backend
from .convo import (
    ClockTime,
    Conversation,
    Dialogue,
    Speaker,
    normalize_silence,
    parse_conversation,
    recent_window,
    strip_generated_prefix,
)
from .evaluation import EvalRecord
from .prompts import TriggerContext, build_system_prompt, build_user_prompt
from .sim import ActivityLog, ScriptedUser
from .task import TaskDefinition, example_conversation_text, load_task
from .tracker import (
    StepInfo,
    SuggestionContext,
    advance,
    classify_response,
    derive_step,
    initial_state,
    initial_step_info,
    progress_note,
)

log = logging.getLogger(__name__)

ENV_PREFIX = "STEPMATE_"


class OutOfOrderTime(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    """Session configuration; auth_env names an environment variable, never a secret."""

    backend: str = "oracle"
    endpoint: str | None = None
    model: str | None = None
    auth_env: str | None = None
    timeout: float = 30.0
    retries: int = 2
    temperature: float = 0.0
    shots: int = 0
    window_size: int = 5
    task_path: str | None = None

    @classmethod
    def from_sources(cls, path: str | None = None, env=os.environ) -> "EngineConfig":
        """Config file first, then STEPMATE_* environment overrides."""
        data: dict = {}
        if path:
            data.update(json.loads(open(path, encoding="utf-8").read()))
        casts = {f.name: f.type for f in fields(cls)}
        for name in casts:
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is None:
                continue
            if name in ("timeout", "temperature"):
                data[name] = float(raw)
            elif name in ("retries", "shots", "window_size"):
                data[name] = int(raw)
            else:
                data[name] = raw
        return cls(**data)


class Session:
    """One live assistant session over a single conversation."""

    def __init__(
        self,
        config: EngineConfig | None = None,
        backend: ChatBackend | None = None,
        task: TaskDefinition | None = None,
        examples: list[Conversation] | None = None,
        source: str = "live",
    ):
        self.config = config or EngineConfig()
        self.task = task or load_task(self.config.task_path)
        self.backend = backend or make_backend(self.config.backend, self.config)
        if examples is None and self.config.shots > 0:
            example = parse_conversation(example_conversation_text(self.task))
            examples = [example] * self.config.shots
        self.system_prompt = build_system_prompt(
            self.task, self.config.shots, examples or []
        )
        self.conversation = Conversation(source=source)
        self.tracker = initial_state(self.task)
        self.latencies: list[float] = []
        self.records: list[EvalRecord] = []
        self._pending: StepInfo | None = None
        self._ordinal = 0
        self._started = False

    def start(self, time: ClockTime) -> tuple[Dialogue, StepInfo]:
        """Open the session with the greeting that sets up the first step."""
        if self._started:
            raise RuntimeError("session already started")
        self._started = True
        info = initial_step_info(self.task)
        greeting = Dialogue(time, Speaker.ASSISTANT, info.suggested_message)
        self.conversation.dialogues.append(greeting)
        return greeting, info

    def step_info(self) -> StepInfo:
        """Current pending suggestion, or a plain progress snapshot."""
        if self._pending is not None:
            return self._pending
        return StepInfo(derive_step(self.tracker), progress_note(self.tracker, self.task))

    def handle_event(
        self, d: Dialogue
    ) -> tuple[Dialogue | None, StepInfo, EvalRecord]:
        if d.speaker is Speaker.ASSISTANT:
            raise ValueError("assistant dialogues are outputs, not events")
        last = self.conversation.last_time()
        if last is not None and d.time < last:
            raise OutOfOrderTime(f"event at {d.time} precedes transcript end {last}")

        self.conversation.dialogues.append(d)
        if d.speaker is Speaker.WEARABLE:
            self.tracker, info = advance(self.tracker, d.activity, d.time, self.task)
            self._pending = info if info.suggested_message else None
        else:
            info = self.step_info()

        ctx = TriggerContext(
            history_window=tuple(
                recent_window(self.conversation, self.config.window_size)
            ),
            step_id=info.step_id,
            step_note=info.step_note,
            suggested_message=info.suggested_message,
            suggestion_is_corrective=info.mistake is not None,
            trigger_index=len(self.conversation) - 1,
            trigger_ordinal=self._ordinal,
            trigger_speaker=d.speaker,
            trigger_time=d.time,
            window_size=self.config.window_size,
        )
        self._ordinal += 1

        user_prompt = build_user_prompt(ctx)
        started = _time.perf_counter()
        try:
            raw = self.backend.generate(AssistRequest(self.system_prompt, user_prompt, ctx))
        except BackendError as exc:
            log.warning("backend failed at trigger %d: %s", ctx.trigger_ordinal, exc)
            raw = ""
        latency = _time.perf_counter() - started
        self.latencies.append(latency)

        text = normalize_silence(strip_generated_prefix(raw))
        assistant: Dialogue | None = None
        if text:
            assistant = Dialogue(d.time.plus_seconds(1), Speaker.ASSISTANT, text)
            self.conversation.dialogues.append(assistant)
            self._pending = None

        category = classify_response(
            SuggestionContext(
                advance_suggested=info.suggested_message is not None
                and info.mistake is None,
                corrective_suggested=info.mistake is not None,
                trigger_speaker=d.speaker,
            ),
            text,
        )
        record = EvalRecord(
            conversation=self.conversation.source or "live",
            trigger_index=ctx.trigger_index,
            trigger_ordinal=ctx.trigger_ordinal,
            category=category,
            gt_text="",
            gen_text=text,
            scores=None,
            correct=None,
            latency=latency,
        )
        self.records.append(record)
        return assistant, info, record


def run_closed_loop(
    activity_log: ActivityLog,
    user: ScriptedUser | None = None,
    backend: ChatBackend | None = None,
    config: EngineConfig | None = None,
    task: TaskDefinition | None = None,
) -> Conversation:
    """Interleave wearable events, scripted user comments, and responses.

    User comments land 2 s after their trigger; with default duration
    profiles the next wearable event is always at least 5 s out.
    """
    events = activity_log.conversation.dialogues
    if not events:
        raise ValueError("activity log has no events")
    session = Session(
        config=config,
        backend=backend,
        task=task,
        source=activity_log.conversation.source or "closed-loop",
    )
    greeting_at = ClockTime.from_day_seconds(max(0, events[0].time.day_seconds() - 2))
    session.start(greeting_at)

    prev_step = session.task.steps[0].id
    for d in events:
        _, info, _ = session.handle_event(d)
        if user is not None:
            comment = user.maybe_comment(info, crossed_boundary=info.step_id != prev_step)
            if comment:
                session.handle_event(
                    Dialogue(d.time.plus_seconds(2), Speaker.USER, comment)
                )
        prev_step = info.step_id
    return session.conversation
