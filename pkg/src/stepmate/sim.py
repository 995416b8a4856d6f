"""Seeded activity-log generator and a scripted user for closed-loop runs.

The generator walks the nominal assembly sequence and, depending on skill,
injects out-of-order events at their opportunity points, recording each
injected mistake. Inter-event gaps model how long the preceding activity
takes, plus occasional rest pauses.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .activities import ActivityClass
from .convo import ClockTime, Conversation, Dialogue, Speaker, parse_conversation, serialize_conversation
from .task import TaskDefinition, load_task
from .tracker import MistakeEvent, MistakeKind, StepInfo


class InvalidProfile(ValueError):
    pass


# Seconds each activity occupies once started, i.e. the gap until the next
# event can fire. Sanding dominates; drilling is quick.
DEFAULT_DURATIONS: dict[ActivityClass, tuple[int, int]] = {
    ActivityClass.NONE: (5, 15),
    ActivityClass.HAMMER: (5, 15),
    ActivityClass.SAND: (180, 240),
    ActivityClass.DRILL: (6, 9),
    ActivityClass.SCREW: (15, 25),
    ActivityClass.UNSCREW: (15, 25),
    ActivityClass.LIFT_FLOOR_CHEST_HEAVY: (10, 25),
    ActivityClass.LIFT_FLOOR_CHEST_LIGHT: (8, 15),
    ActivityClass.LIFT_CHEST_CHEST_HEAVY: (10, 25),
    ActivityClass.LIFT_KNEE_CHEST_HEAVY: (10, 25),
    ActivityClass.LIFT_CHEST_KNEE_HEAVY: (10, 25),
}


@dataclass(frozen=True)
class SkillProfile:
    skill: float = 0.5
    per_mistake_prob: dict[MistakeKind, float] = field(
        default_factory=lambda: {kind: 0.5 for kind in MistakeKind}
    )
    pause_prob: float = 0.15
    pause_range: tuple[int, int] = (30, 120)
    duration_params: dict[ActivityClass, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_DURATIONS)
    )
    comment_prob: float = 0.0

    def validate(self) -> None:
        probs = [self.skill, self.pause_prob, self.comment_prob]
        probs.extend(self.per_mistake_prob.get(kind, 0.0) for kind in MistakeKind)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InvalidProfile("probabilities must lie in [0, 1]")
        ranges = [self.pause_range, *self.duration_params.values()]
        for lo, hi in ranges:
            if lo < 0 or hi < lo:
                raise InvalidProfile(f"bad seconds range ({lo}, {hi})")
        for activity in ActivityClass:
            lo, _ = self.duration_params.get(activity, (0, 0))
            if activity in self.duration_params and lo < 1:
                raise InvalidProfile(f"{activity.surface} duration must be >= 1 s")

    def mistake_chance(self, kind: MistakeKind) -> float:
        return (1.0 - self.skill) * self.per_mistake_prob.get(kind, 0.0)


def default_profile(skill: float = 0.5, comment_prob: float = 0.0) -> SkillProfile:
    return SkillProfile(skill=skill, comment_prob=comment_prob)


@dataclass
class ActivityLog:
    conversation: Conversation
    mistakes: list[MistakeEvent]
    seed: int
    profile: SkillProfile

    def save(self, directory: str | Path, stem: str) -> tuple[Path, Path]:
        """Write <stem>.txt (the log) and <stem>.mistakes.json (the sidecar)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        log_path = directory / f"{stem}.txt"
        side_path = directory / f"{stem}.mistakes.json"
        log_path.write_text(serialize_conversation(self.conversation), encoding="utf-8")
        sidecar = {
            "seed": self.seed,
            "skill": self.profile.skill,
            "mistakes": [
                {"kind": m.kind.value, "time": m.time.render()} for m in self.mistakes
            ],
        }
        side_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
        return log_path, side_path


def load_log(log_path: str | Path) -> ActivityLog:
    log_path = Path(log_path)
    conversation = parse_conversation(
        log_path.read_text(encoding="utf-8"), source=log_path.stem
    )
    side_path = log_path.with_suffix("").with_suffix(".mistakes.json")
    mistakes: list[MistakeEvent] = []
    seed = 0
    skill = 0.5
    if side_path.exists():
        data = json.loads(side_path.read_text(encoding="utf-8"))
        seed = data.get("seed", 0)
        skill = data.get("skill", 0.5)
        mistakes = [
            MistakeEvent(MistakeKind(m["kind"]), ClockTime.parse(m["time"]))
            for m in data.get("mistakes", [])
        ]
    return ActivityLog(conversation, mistakes, seed, default_profile(skill=skill))


def _plan_events(
    profile: SkillProfile, rng: random.Random
) -> tuple[list[ActivityClass], list[tuple[int, MistakeKind]]]:
    """Nominal sequence with injected out-of-order events.

    Returns the event list plus (position, kind) for each injected mistake.
    """
    inject = {
        kind: rng.random() < profile.mistake_chance(kind) for kind in MistakeKind
    }
    events: list[ActivityClass] = []
    mistakes: list[tuple[int, MistakeKind]] = []

    events += [
        ActivityClass.LIFT_FLOOR_CHEST_HEAVY,
        ActivityClass.SAND,
        ActivityClass.LIFT_CHEST_CHEST_HEAVY,
    ]

    # Frame placement, optionally interrupted by a premature frame screw.
    frame_screws = 0
    if inject[MistakeKind.SCREW_FRAME_BEFORE_ALL_PLACED]:
        early = rng.choice([2, 3])
        events += [ActivityClass.LIFT_FLOOR_CHEST_LIGHT] * early
        mistakes.append((len(events), MistakeKind.SCREW_FRAME_BEFORE_ALL_PLACED))
        events.append(ActivityClass.SCREW)
        frame_screws = 1
        events += [ActivityClass.LIFT_FLOOR_CHEST_LIGHT] * (4 - early)
        if rng.random() < 0.5:
            # Misaligned: back the screw out and redo it.
            events += [ActivityClass.UNSCREW, ActivityClass.SCREW]
    else:
        events += [ActivityClass.LIFT_FLOOR_CHEST_LIGHT] * 4

    # Frame screwing, optionally interrupted by a premature leg.
    legs_done = 0
    leg_interrupt = inject[MistakeKind.SCREW_LEG_BEFORE_FRAMES_DONE]
    leg_at = rng.randint(max(frame_screws + 1, 4), 7) if leg_interrupt else None
    while frame_screws < 8:
        if leg_interrupt and frame_screws == leg_at:
            events.append(ActivityClass.LIFT_KNEE_CHEST_HEAVY)
            mistakes.append((len(events), MistakeKind.SCREW_LEG_BEFORE_FRAMES_DONE))
            events.append(ActivityClass.SCREW)
            if rng.random() < 0.5:
                # Undo the premature leg screw; the follow-up screw lands on a
                # frame, so the leg still needs its own pair later.
                events += [ActivityClass.UNSCREW, ActivityClass.SCREW]
                frame_screws += 1
            else:
                legs_done = 1
            leg_interrupt = False
            continue
        events.append(ActivityClass.SCREW)
        frame_screws += 1

    # Legs, optionally interrupted by a premature drill.
    drill_interrupt = inject[MistakeKind.DRILL_BEFORE_ALL_SCREWS]
    drilled = 0
    drill_at = rng.randint(max(legs_done, 1), 3) if drill_interrupt else None
    while legs_done < 4:
        if drill_interrupt and legs_done == drill_at:
            mistakes.append((len(events), MistakeKind.DRILL_BEFORE_ALL_SCREWS))
            events.append(ActivityClass.DRILL)
            drilled = 1
            drill_interrupt = False
            continue
        events += [ActivityClass.LIFT_KNEE_CHEST_HEAVY, ActivityClass.SCREW]
        legs_done += 1

    events += [ActivityClass.DRILL] * (12 - drilled)
    events.append(ActivityClass.LIFT_CHEST_KNEE_HEAVY)
    return events, mistakes


def generate_log(
    profile: SkillProfile,
    seed: int,
    start_time: ClockTime = ClockTime(9, 0, 0, "AM"),
    task: TaskDefinition | None = None,
) -> ActivityLog:
    """One seeded activity log: wearable dialogues plus its mistake list."""
    profile.validate()
    rng = random.Random(seed)
    events, mistake_positions = _plan_events(profile, rng)

    dialogues: list[Dialogue] = []
    t = start_time.day_seconds()
    prev: ActivityClass | None = None
    for event in events:
        gap = rng.randint(2, 10) if prev is None else rng.randint(*profile.duration_params[prev])
        if rng.random() < profile.pause_prob:
            gap += rng.randint(*profile.pause_range)
        t += gap
        if t > 86399:
            raise InvalidProfile("activity log runs past the end of the day")
        dialogues.append(
            Dialogue(ClockTime.from_day_seconds(t), Speaker.WEARABLE, event.surface)
        )
        prev = event

    mistakes = [
        MistakeEvent(kind, dialogues[pos].time) for pos, kind in mistake_positions
    ]
    return ActivityLog(Conversation(dialogues), mistakes, seed, profile)


def generate_corpus(
    count: int,
    seed: int,
    profile_sampler=None,
    start_time: ClockTime = ClockTime(9, 0, 0, "AM"),
    task: TaskDefinition | None = None,
) -> list[ActivityLog]:
    """Generate `count` logs with per-log seeds drawn from one master seed."""
    if count < 0:
        raise ValueError("count must be non-negative")
    master = random.Random(seed)
    if profile_sampler is None:
        profile_sampler = lambda rng: default_profile(skill=rng.random())
    logs: list[ActivityLog] = []
    for i in range(count):
        log_seed = master.getrandbits(32)
        profile = profile_sampler(master)
        log = generate_log(profile, log_seed, start_time=start_time, task=task)
        log.conversation.source = f"log{i:04d}"
        logs.append(log)
    return logs


BOUNDARY_COMMENTS = (
    "Okay done, what's next?",
    "Alright, that step is finished.",
    "Done with that. What should I do now?",
    "That part is in place.",
)

MISTAKE_COMMENTS = (
    "Oops, I made a mistake.",
    "Hmm, I think I jumped ahead there.",
)


class ScriptedUser:
    """Deterministic user who sometimes comments at step boundaries."""

    def __init__(
        self,
        comment_prob: float,
        seed: int,
        pool: tuple[str, ...] = BOUNDARY_COMMENTS,
        mistake_pool: tuple[str, ...] = MISTAKE_COMMENTS,
    ):
        if not 0.0 <= comment_prob <= 1.0:
            raise InvalidProfile("comment_prob must lie in [0, 1]")
        self.comment_prob = comment_prob
        self.pool = pool
        self.mistake_pool = mistake_pool
        self._rng = random.Random(seed)

    def maybe_comment(self, info: StepInfo, crossed_boundary: bool) -> str | None:
        """A comment after the dialogue that produced `info`, or None."""
        if info.mistake is not None:
            pool = self.mistake_pool
        elif crossed_boundary:
            pool = self.pool
        else:
            return None
        if not pool or self._rng.random() >= self.comment_prob:
            return None
        return self._rng.choice(pool)
