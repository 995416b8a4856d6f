"""Rule-based step tracker for the assembly task.

Consumes wearable activity events, maintains part counters, derives the
current step, emits suggested messages at step boundaries and on mistakes,
and classifies assistant responses into evaluation categories.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .activities import ActivityClass
from .convo import ClockTime, Conversation, Speaker
from .task import TaskDefinition, load_task


class MistakeKind(Enum):
    SCREW_FRAME_BEFORE_ALL_PLACED = "screw-frame-before-all-placed"
    SCREW_LEG_BEFORE_FRAMES_DONE = "screw-leg-before-frames-done"
    DRILL_BEFORE_ALL_SCREWS = "drill-before-all-screws"


@dataclass(frozen=True)
class MistakeEvent:
    kind: MistakeKind
    time: ClockTime


class ResponseCategory(Enum):
    KEY_INSTRUCTION = "key_instruction"
    MISTAKE_CORRECTION = "mistake_correction"
    ANSWER = "answer"
    MISCELLANEOUS = "miscellaneous"


# Events that say nothing about assembly progress.
_INERT = frozenset({ActivityClass.NONE, ActivityClass.HAMMER})


@dataclass(frozen=True)
class TrackerState:
    tabletop_lifted: bool = False
    sanded: bool = False
    flipped: bool = False
    frames_placed: int = 0
    frame_screws: int = 0
    legs_lifted: int = 0
    leg_screws: int = 0
    drilled: int = 0
    table_placed: bool = False
    mistakes: tuple[MistakeEvent, ...] = ()
    # Step id of the most recent suggestion. A boundary whose step was already
    # suggested (e.g. by a corrective) stays silent instead of repeating it.
    last_suggested_step: str | None = None
    # Most recent non-inert activity; disambiguates leg screws from frame screws.
    last_event: ActivityClass | None = None
    # Which counter the latest Screw fed, so Unscrew can undo it.
    last_screw_target: str | None = None


@dataclass(frozen=True)
class StepInfo:
    step_id: str
    step_note: str
    suggested_message: str | None = None
    mistake: MistakeKind | None = None

    def __post_init__(self):
        if self.mistake is not None and not self.suggested_message:
            raise ValueError("a flagged mistake must carry a corrective suggestion")


def derive_step(state: TrackerState) -> str:
    """Current step id, by the furthest milestone the counters support."""
    if state.table_placed:
        return "done"
    if state.drilled >= 12:
        return "5"
    if state.frame_screws >= 8 and state.leg_screws >= 4:
        return "4"
    if state.frame_screws >= 8:
        return "3"
    if state.frames_placed >= 4:
        return "2.2"
    if state.flipped:
        return "2.1"
    if state.sanded:
        return "1.3"
    if state.tabletop_lifted:
        return "1.2"
    return "1.1"


def progress_note(state: TrackerState, task: TaskDefinition | None = None) -> str:
    """Mid-step progress sentence for the current step."""
    step = derive_step(state)
    if step == "done":
        return "Task complete: the table is assembled and standing on its legs."
    if step == "2.1":
        return f"On step 2.1: placed {state.frames_placed} of 4 metal frames."
    if step == "2.2":
        return f"On step 2.2: screwed in {state.frame_screws} of 8 frame screws."
    if step == "3":
        return f"On step 3: screwed in {state.leg_screws} of 4 legs."
    if step == "4":
        return f"On step 4: tightened {state.drilled} of 12 screws with the drill."
    return f"On step {step}: in progress."


def initial_state(task: TaskDefinition | None = None) -> TrackerState:
    # The session greeting suggests step 1.1, so it starts marked as suggested.
    return TrackerState(last_suggested_step="1.1")


def initial_step_info(task: TaskDefinition | None = None) -> StepInfo:
    task = task or load_task()
    first = task.steps[0]
    return StepInfo(
        step_id=first.id,
        step_note=f"Starting step {first.id}.",
        suggested_message=first.instruction,
    )


def _apply_event(
    state: TrackerState, event: ActivityClass, time: ClockTime
) -> tuple[TrackerState, MistakeKind | None]:
    """Counter updates plus the mistake fired by this event, if any."""
    mistake: MistakeKind | None = None
    changes: dict = {}

    if event is ActivityClass.LIFT_FLOOR_CHEST_HEAVY:
        changes["tabletop_lifted"] = True
    elif event is ActivityClass.SAND:
        changes["sanded"] = True
    elif event is ActivityClass.LIFT_CHEST_CHEST_HEAVY:
        changes["flipped"] = True
    elif event is ActivityClass.LIFT_FLOOR_CHEST_LIGHT:
        changes["frames_placed"] = min(4, state.frames_placed + 1)
    elif event is ActivityClass.LIFT_KNEE_CHEST_HEAVY:
        changes["legs_lifted"] = min(4, state.legs_lifted + 1)
    elif event is ActivityClass.LIFT_CHEST_KNEE_HEAVY:
        # Lowering the table only completes the task once drilling is done.
        if state.drilled >= 12:
            changes["table_placed"] = True
    elif event is ActivityClass.SCREW:
        leg_screw = state.frame_screws >= 8 or (
            state.last_event is ActivityClass.LIFT_KNEE_CHEST_HEAVY
        )
        if leg_screw:
            if state.frame_screws < 8:
                mistake = MistakeKind.SCREW_LEG_BEFORE_FRAMES_DONE
            changes["leg_screws"] = min(4, state.leg_screws + 1)
            changes["last_screw_target"] = "leg"
        else:
            if state.flipped and state.frames_placed < 4:
                mistake = MistakeKind.SCREW_FRAME_BEFORE_ALL_PLACED
            changes["frame_screws"] = min(8, state.frame_screws + 1)
            changes["last_screw_target"] = "frame"
    elif event is ActivityClass.UNSCREW:
        target = state.last_screw_target
        if target == "leg" and state.leg_screws > 0:
            changes["leg_screws"] = state.leg_screws - 1
        elif state.frame_screws > 0:
            changes["frame_screws"] = state.frame_screws - 1
        elif state.leg_screws > 0:
            changes["leg_screws"] = state.leg_screws - 1
    elif event is ActivityClass.DRILL:
        if state.frame_screws < 8 or state.leg_screws < 4:
            mistake = MistakeKind.DRILL_BEFORE_ALL_SCREWS
        changes["drilled"] = min(12, state.drilled + 1)

    if mistake is not None:
        changes["mistakes"] = state.mistakes + (MistakeEvent(mistake, time),)
    changes["last_event"] = event
    return replace(state, **changes), mistake


def advance(
    state: TrackerState,
    event: ActivityClass,
    time: ClockTime,
    task: TaskDefinition | None = None,
) -> tuple[TrackerState, StepInfo]:
    """Consume one wearable event; report the resulting step and suggestion."""
    task = task or load_task()
    if event in _INERT:
        return state, StepInfo(derive_step(state), progress_note(state, task))

    before = derive_step(state)
    new_state, mistake = _apply_event(state, event, time)
    after = derive_step(new_state)

    if mistake is not None:
        spec = task.mistake(mistake.value)
        # The corrective already tells the user what the implied step requires,
        # so the eventual boundary into that step need not repeat it.
        new_state = replace(new_state, last_suggested_step=spec.implies_step)
        note = progress_note(new_state, task)
        return new_state, StepInfo(after, note, spec.corrective, mistake)

    if after != before:
        if after == "done":
            note = f"Finished step {before}: {task.step(before).finished}"
            new_state = replace(new_state, last_suggested_step="done")
            return new_state, StepInfo(after, note, task.completion_message)
        note = f"Finished step {before}: {task.step(before).finished}"
        if new_state.last_suggested_step == after:
            # Already suggested (typically by a corrective); stay quiet.
            return new_state, StepInfo(after, note)
        new_state = replace(new_state, last_suggested_step=after)
        return new_state, StepInfo(after, note, task.step(after).instruction)

    return new_state, StepInfo(after, progress_note(new_state, task))


@dataclass(frozen=True)
class SuggestionContext:
    """What the tracker had to say at a trigger, for response classification."""

    advance_suggested: bool = False
    corrective_suggested: bool = False
    trigger_speaker: Speaker = Speaker.WEARABLE


def classify_response(
    context: SuggestionContext, response: str
) -> ResponseCategory | None:
    """Bucket a response by what kind of message the trigger called for."""
    if not response.strip():
        return None
    if context.corrective_suggested:
        return ResponseCategory.MISTAKE_CORRECTION
    if context.advance_suggested:
        return ResponseCategory.KEY_INSTRUCTION
    if context.trigger_speaker is Speaker.USER:
        return ResponseCategory.ANSWER
    return ResponseCategory.MISCELLANEOUS


def replay(
    conversation: Conversation, task: TaskDefinition | None = None
) -> tuple[TrackerState, list[tuple[int, StepInfo]]]:
    """Run the tracker over a conversation's wearable lines.

    Returns the final state and one (dialogue index, StepInfo) per wearable
    dialogue, in order.
    """
    task = task or load_task()
    state = initial_state(task)
    infos: list[tuple[int, StepInfo]] = []
    for i, d in enumerate(conversation.dialogues):
        if d.speaker is Speaker.WEARABLE:
            state, info = advance(state, d.activity, d.time, task)
            infos.append((i, info))
    return state, infos
