"""Prompt assembly for the assistant model and for conversation generation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .convo import ClockTime, Conversation, Dialogue, Speaker, serialize_conversation
from .task import TaskDefinition, load_task, prompt_asset
from .tracker import MistakeEvent

VALID_SHOTS = (0, 1, 4)
DEFAULT_WINDOW = 5


class InsufficientExamples(ValueError):
    pass


@dataclass(frozen=True)
class TriggerContext:
    """Everything the prompt builder needs about one triggering dialogue."""

    history_window: tuple[Dialogue, ...]
    step_id: str
    step_note: str
    suggested_message: str | None
    suggestion_is_corrective: bool
    trigger_index: int
    trigger_ordinal: int
    trigger_speaker: Speaker
    trigger_time: ClockTime
    window_size: int = DEFAULT_WINDOW

    def __post_init__(self):
        if len(self.history_window) > self.window_size:
            raise ValueError("history window exceeds the configured window size")


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    shots: int = 0
    window_size: int = DEFAULT_WINDOW


def build_system_prompt(
    task: TaskDefinition | None,
    shots: int = 0,
    examples: list[Conversation] | None = None,
) -> str:
    """System prompt: manual, notes, then `shots` example conversations."""
    task = task or load_task()
    examples = examples or []
    if shots not in VALID_SHOTS:
        raise ValueError(f"shots must be one of {VALID_SHOTS}, got {shots}")
    if len(examples) < shots:
        raise InsufficientExamples(
            f"need {shots} example conversations, have {len(examples)}"
        )
    text = prompt_asset(task, "system")
    if shots == 0:
        return text
    if shots == 1:
        header = "Below is an example of a conversation between a user and an assistant:"
    else:
        header = "Below are examples of conversations between a user and an assistant:"
    blocks = [serialize_conversation(c).rstrip("\n") for c in examples[:shots]]
    return text + "\n" + header + "\n\n" + "\n\n".join(blocks) + "\n"


def build_user_prompt(ctx: TriggerContext) -> str:
    """User prompt: recent history, the step note, and any suggested message."""
    lines = ["Recent conversation history:"]
    lines.extend(d.render() for d in ctx.history_window)
    lines.append("")
    lines.append(f"Current step: {ctx.step_note}")
    if ctx.suggested_message:
        lines.append(f"Suggested message: {ctx.suggested_message}")
    return "\n".join(lines) + "\n"


def build_datagen_prompt(
    task: TaskDefinition | None, mistakes: list[MistakeEvent]
) -> str:
    """Conversation-generation system prompt with the mistake list filled in.

    The activity log itself travels as the user message, not here.
    """
    task = task or load_task()
    template = prompt_asset(task, "datagen")
    if mistakes:
        rendered = "\n".join(
            f"At {m.time.render()}, the user {task.mistake(m.kind.value).description}."
            for m in mistakes
        )
    else:
        rendered = "The user made no mistakes."
    return template.replace("<mistake list>", rendered)
