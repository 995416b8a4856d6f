"""Conversation document model: timestamped dialogue lines and their text form.

A conversation is a plain-text document, one dialogue per line:

    HH:MM:SS AM/PM - <Speaker>: <text>

Speakers are Assistant, User, and Wearable. Wearable text must be one of the
canonical activity surface strings. Timestamps are 12-hour clock times within
a single day and must be non-decreasing down the document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering

from .activities import ActivityClass


class Speaker(Enum):
    ASSISTANT = "Assistant"
    USER = "User"
    WEARABLE = "Wearable"


class ConversationError(ValueError):
    """Positioned parse failure; line_no is 1-based within the document."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class MalformedLine(ConversationError):
    pass


class NonMonotonicTimestamp(ConversationError):
    pass


class UnknownActivity(ConversationError):
    pass


@total_ordering
@dataclass(frozen=True)
class ClockTime:
    """A 12-hour wall-clock time of day, second resolution."""

    hour: int
    minute: int
    second: int
    meridiem: str

    def __post_init__(self):
        if not 1 <= self.hour <= 12:
            raise ValueError(f"hour out of range: {self.hour}")
        if not 0 <= self.minute <= 59:
            raise ValueError(f"minute out of range: {self.minute}")
        if not 0 <= self.second <= 59:
            raise ValueError(f"second out of range: {self.second}")
        if self.meridiem not in ("AM", "PM"):
            raise ValueError(f"meridiem must be AM or PM, got {self.meridiem!r}")

    _RE = re.compile(r"^(\d{2}):(\d{2}):(\d{2}) (AM|PM)$")

    @classmethod
    def parse(cls, text: str) -> "ClockTime":
        m = cls._RE.match(text)
        if not m:
            raise ValueError(f"not a clock time: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4))

    @classmethod
    def from_day_seconds(cls, total: int) -> "ClockTime":
        if not 0 <= total <= 86399:
            raise ValueError(f"seconds-of-day out of range: {total}")
        h24, rem = divmod(total, 3600)
        minute, second = divmod(rem, 60)
        meridiem = "PM" if h24 >= 12 else "AM"
        hour = h24 % 12 or 12
        return cls(hour, minute, second, meridiem)

    def day_seconds(self) -> int:
        h24 = self.hour % 12 + (12 if self.meridiem == "PM" else 0)
        return (h24 * 60 + self.minute) * 60 + self.second

    def plus_seconds(self, delta: int) -> "ClockTime":
        return ClockTime.from_day_seconds(self.day_seconds() + delta)

    def __lt__(self, other: "ClockTime") -> bool:
        return self.day_seconds() < other.day_seconds()

    def render(self) -> str:
        return f"{self.hour:02d}:{self.minute:02d}:{self.second:02d} {self.meridiem}"

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Dialogue:
    """One conversation line."""

    time: ClockTime
    speaker: Speaker
    text: str

    def __post_init__(self):
        if not self.text or self.text != self.text.strip():
            raise ValueError(f"dialogue text must be non-empty and trimmed: {self.text!r}")
        if "\n" in self.text:
            raise ValueError("dialogue text must be a single line")
        if self.speaker is Speaker.WEARABLE:
            ActivityClass.from_surface(self.text)

    @property
    def activity(self) -> ActivityClass:
        if self.speaker is not Speaker.WEARABLE:
            raise ValueError("only wearable dialogues carry an activity")
        return ActivityClass.from_surface(self.text)

    def render(self) -> str:
        return f"{self.time.render()} - {self.speaker.value}: {self.text}"


@dataclass
class Conversation:
    dialogues: list[Dialogue] = field(default_factory=list)
    source: str | None = None

    def __len__(self) -> int:
        return len(self.dialogues)

    def __iter__(self):
        return iter(self.dialogues)

    def last_time(self) -> ClockTime | None:
        return self.dialogues[-1].time if self.dialogues else None


_LINE_RE = re.compile(
    r"^(\d{2}:\d{2}:\d{2} (?:AM|PM)) - (Assistant|User|Wearable): (.*)$"
)


def parse_conversation(document: str, source: str | None = None) -> Conversation:
    """Parse a conversation document, skipping blank lines.

    Raises MalformedLine, NonMonotonicTimestamp, or UnknownActivity with the
    1-based line number of the offending line.
    """
    dialogues: list[Dialogue] = []
    prev: ClockTime | None = None
    for line_no, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip():
            continue
        m = _LINE_RE.match(raw.rstrip())
        if not m:
            raise MalformedLine(f"unparseable dialogue line: {raw!r}", line_no)
        text = m.group(3).strip()
        if not text:
            raise MalformedLine("dialogue text is empty", line_no)
        try:
            time = ClockTime.parse(m.group(1))
        except ValueError as exc:
            raise MalformedLine(str(exc), line_no) from None
        speaker = Speaker(m.group(2))
        if speaker is Speaker.WEARABLE:
            try:
                ActivityClass.from_surface(text)
            except ValueError as exc:
                raise UnknownActivity(str(exc), line_no) from None
        if prev is not None and time < prev:
            raise NonMonotonicTimestamp(
                f"timestamp {time} precedes {prev}", line_no
            )
        prev = time
        dialogues.append(Dialogue(time, speaker, text))
    return Conversation(dialogues, source=source)


def serialize_conversation(conversation: Conversation) -> str:
    """Render back to document text; inverse of parse_conversation."""
    if not conversation.dialogues:
        return ""
    return "\n".join(d.render() for d in conversation.dialogues) + "\n"


def recent_window(conversation: Conversation, n: int = 5) -> list[Dialogue]:
    """The most recent n dialogues, oldest first. n=0 gives an empty list."""
    if n < 0:
        raise ValueError("window size must be non-negative")
    if n == 0:
        return []
    return list(conversation.dialogues[-n:])


# Models often echo the line prefix of the dialogue they were asked to continue.
_GENERATED_PREFIX_RE = re.compile(
    r"^\s*\d{2}:\d{2}:\d{2} (?:AM|PM)\s*-\s*Assistant:\s*"
)

SILENCE_MARKERS = ("(silence)", "(silent)", "(no response)", "(none)")


def strip_generated_prefix(response: str) -> str:
    """Drop a leading 'HH:MM:SS AM/PM - Assistant:' echo from model output."""
    return _GENERATED_PREFIX_RE.sub("", response, count=1).strip()


def normalize_silence(response: str, markers: tuple[str, ...] = SILENCE_MARKERS) -> str:
    """Map placeholder silence markers to the empty string."""
    if response.strip().lower() in markers:
        return ""
    return response
