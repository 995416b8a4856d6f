"""Finetuning-dataset construction, including the whim-agnostic target rule.

A trigger point is any Wearable or User dialogue in a ground-truth
conversation. The plain target at a trigger is whatever the assistant said
immediately after it (possibly nothing). The whim-agnostic substitution
additionally trains the model to speak at triggers where the recorded
assistant stayed silent despite an active suggestion, merely because the
user happened to comment first: the deferred reply is pulled back to the
trigger that earned it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .convo import ClockTime, Conversation, Speaker, recent_window
from .prompts import (
    DEFAULT_WINDOW,
    TriggerContext,
    build_system_prompt,
    build_user_prompt,
)
from .task import TaskDefinition, load_task
from .tracker import (
    StepInfo,
    SuggestionContext,
    advance,
    classify_response,
    derive_step,
    initial_state,
    progress_note,
)


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class TriggerPoint:
    index: int
    ordinal: int
    context: TriggerContext
    gt_target: str
    next_speaker: Speaker | None
    next_time: ClockTime | None
    following_assistant_text: str | None


@dataclass(frozen=True)
class TrainingExample:
    system: str
    user: str
    target: str
    uwa_substituted: bool
    source: str
    trigger_index: int
    trigger_ordinal: int
    category: str | None
    deferred_duplicate: bool = False


@dataclass(frozen=True)
class UwaConfig:
    # A trailing user comment only counts as the interrupting whim if it
    # lands soon after the trigger; a minutes-later remark is unrelated.
    whim_gap_seconds: int = 30
    # The completion message is always worth saying; never retarget it.
    exclude_completion: bool = True


def _consecutive_assistant_text(dialogues, start: int) -> str:
    parts = []
    j = start
    while j < len(dialogues) and dialogues[j].speaker is Speaker.ASSISTANT:
        parts.append(dialogues[j].text)
        j += 1
    return " ".join(parts)


def enumerate_triggers(
    conversation: Conversation,
    task: TaskDefinition | None = None,
    window_size: int = DEFAULT_WINDOW,
) -> list[TriggerPoint]:
    """One TriggerPoint per Wearable/User dialogue, teacher-forced.

    The tracker context at each trigger comes from replaying the ground-truth
    history only; a suggestion stays pending for user triggers until an
    assistant line lands or a newer wearable event replaces it.
    """
    task = task or load_task()
    state = initial_state(task)
    pending: StepInfo | None = None
    triggers: list[TriggerPoint] = []
    dialogues = conversation.dialogues
    ordinal = 0
    prefix = Conversation()

    for i, d in enumerate(dialogues):
        prefix.dialogues.append(d)
        if d.speaker is Speaker.ASSISTANT:
            pending = None
            continue
        if d.speaker is Speaker.WEARABLE:
            state, info = advance(state, d.activity, d.time, task)
            pending = info if info.suggested_message else None
        else:
            info = pending or StepInfo(derive_step(state), progress_note(state, task))

        ctx = TriggerContext(
            history_window=tuple(recent_window(prefix, window_size)),
            step_id=info.step_id,
            step_note=info.step_note,
            suggested_message=info.suggested_message,
            suggestion_is_corrective=info.mistake is not None,
            trigger_index=i,
            trigger_ordinal=ordinal,
            trigger_speaker=d.speaker,
            trigger_time=d.time,
            window_size=window_size,
        )
        nxt = dialogues[i + 1] if i + 1 < len(dialogues) else None
        following = None
        if nxt is not None and nxt.speaker is Speaker.USER:
            text = _consecutive_assistant_text(dialogues, i + 2)
            following = text or None
        triggers.append(
            TriggerPoint(
                index=i,
                ordinal=ordinal,
                context=ctx,
                gt_target=_consecutive_assistant_text(dialogues, i + 1),
                next_speaker=nxt.speaker if nxt else None,
                next_time=nxt.time if nxt else None,
                following_assistant_text=following,
            )
        )
        ordinal += 1
    return triggers


def uwa_applies(tp: TriggerPoint, config: UwaConfig | None = None) -> bool:
    """All conditions for retargeting a silent trigger with the deferred reply."""
    config = config or UwaConfig()
    if tp.gt_target:
        return False
    if not tp.context.suggested_message:
        return False
    if tp.next_speaker is not Speaker.USER or not tp.following_assistant_text:
        return False
    if config.exclude_completion and tp.context.step_id == "done":
        return False
    gap = tp.next_time.day_seconds() - tp.context.trigger_time.day_seconds()
    return gap <= config.whim_gap_seconds


def _category_of(tp: TriggerPoint, target: str) -> str | None:
    category = classify_response(
        SuggestionContext(
            advance_suggested=tp.context.suggested_message is not None
            and not tp.context.suggestion_is_corrective,
            corrective_suggested=tp.context.suggestion_is_corrective,
            trigger_speaker=tp.context.trigger_speaker,
        ),
        target,
    )
    return category.value if category else None


def apply_uwa(
    tp: TriggerPoint,
    system: str,
    source: str,
    config: UwaConfig | None = None,
) -> TrainingExample:
    substituted = uwa_applies(tp, config)
    target = tp.following_assistant_text if substituted else tp.gt_target
    return TrainingExample(
        system=system,
        user=build_user_prompt(tp.context),
        target=target,
        uwa_substituted=substituted,
        source=source,
        trigger_index=tp.index,
        trigger_ordinal=tp.ordinal,
        category=_category_of(tp, target),
    )


def plain_example(tp: TriggerPoint, system: str, source: str) -> TrainingExample:
    return TrainingExample(
        system=system,
        user=build_user_prompt(tp.context),
        target=tp.gt_target,
        uwa_substituted=False,
        source=source,
        trigger_index=tp.index,
        trigger_ordinal=tp.ordinal,
        category=_category_of(tp, tp.gt_target),
    )


# Recommended adapter-training settings echoed into the stats sidecar for
# whoever runs the finetuning externally.
RECOMMENDED_FINETUNE = {
    "method": "lora",
    "rank": 8,
    "alpha": 16,
    "dropout": 0.075,
    "learning_rate": 3e-5,
    "batch_size": 8,
    "epochs": 2,
}


@dataclass
class DatasetBuildResult:
    train_path: Path
    eval_path: Path
    stats_path: Path
    stats: dict = field(default_factory=dict)


def _example_line(ex: TrainingExample) -> str:
    record = {
        "system": ex.system,
        "user": ex.user,
        "assistant": ex.target,
        "meta": {
            "conversation": ex.source,
            "trigger_index": ex.trigger_index,
            "trigger_ordinal": ex.trigger_ordinal,
            "uwa_substituted": ex.uwa_substituted,
            "category": ex.category,
            "deferred_duplicate": ex.deferred_duplicate,
        },
    }
    return json.dumps(record, ensure_ascii=False)


def conversation_examples(
    conversation: Conversation,
    mode: str,
    task: TaskDefinition | None = None,
    window_size: int = DEFAULT_WINDOW,
    uwa_config: UwaConfig | None = None,
    system: str | None = None,
) -> list[TrainingExample]:
    """All training examples for one conversation, in trigger order."""
    if mode not in ("plain", "uwa"):
        raise ValueError(f"mode must be 'plain' or 'uwa', got {mode!r}")
    task = task or load_task()
    system = system if system is not None else build_system_prompt(task, 0, [])
    source = conversation.source or "conversation"
    triggers = enumerate_triggers(conversation, task, window_size)
    examples: list[TrainingExample] = []
    substituted_targets: dict[int, str] = {}
    for tp in triggers:
        if mode == "plain":
            ex = plain_example(tp, system, source)
        else:
            ex = apply_uwa(tp, system, source, uwa_config)
            if ex.uwa_substituted:
                substituted_targets[tp.ordinal] = ex.target
            # The user turn right after a substituted trigger trains on the
            # same reply at its recorded position; mark the duplication.
            prev = substituted_targets.get(tp.ordinal - 1)
            if prev is not None and ex.target == prev:
                ex = replace(ex, deferred_duplicate=True)
        examples.append(ex)
    return examples


def split_corpus(
    corpus: list[Conversation], split: float | tuple = 0.9
) -> tuple[list[str], list[str]]:
    """Deterministic train/eval partition of conversation ids."""
    ids = [c.source or f"conv{i:04d}" for i, c in enumerate(corpus)]
    if len(set(ids)) != len(ids):
        raise ValueError("conversation ids must be unique for splitting")
    if isinstance(split, tuple):
        train_ids, eval_ids = list(split[0]), list(split[1])
        if set(train_ids) | set(eval_ids) != set(ids) or set(train_ids) & set(eval_ids):
            raise ValueError("explicit split must partition the corpus ids")
        return train_ids, eval_ids
    if not 0.0 < split <= 1.0:
        raise ValueError("train fraction must lie in (0, 1]")
    ordered = sorted(ids)
    n_train = round(len(ordered) * split)
    train = set(ordered[:n_train])
    return [i for i in ids if i in train], [i for i in ids if i not in train]


def build_dataset(
    corpus: list[Conversation],
    mode: str = "plain",
    split: float | tuple = 0.9,
    out_dir: str | Path = ".",
    task: TaskDefinition | None = None,
    window_size: int = DEFAULT_WINDOW,
    uwa_config: UwaConfig | None = None,
) -> DatasetBuildResult:
    """Write train/eval JSONL files plus a stats sidecar."""
    if not corpus:
        raise EmptyCorpus("no conversations to build from")
    task = task or load_task()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for i, c in enumerate(corpus):
        if c.source is None:
            c.source = f"conv{i:04d}"
    train_ids, eval_ids = split_corpus(corpus, split)
    train_set = set(train_ids)

    system = build_system_prompt(task, 0, [])
    stats = {
        "mode": mode,
        "examples": 0,
        "train_examples": 0,
        "eval_examples": 0,
        "uwa_substituted": 0,
        "category_histogram": {},
        "train_conversations": len(train_ids),
        "eval_conversations": len(eval_ids),
        "recommended_finetune": RECOMMENDED_FINETUNE,
    }

    train_path = out_dir / f"train.{mode}.jsonl"
    eval_path = out_dir / f"eval.{mode}.jsonl"
    stats_path = out_dir / f"stats.{mode}.json"
    with open(train_path, "w", encoding="utf-8") as train_f, open(
        eval_path, "w", encoding="utf-8"
    ) as eval_f:
        for conversation in corpus:
            examples = conversation_examples(
                conversation, mode, task, window_size, uwa_config, system
            )
            sink = train_f if conversation.source in train_set else eval_f
            for ex in examples:
                sink.write(_example_line(ex) + "\n")
                stats["examples"] += 1
                key = "train_examples" if conversation.source in train_set else "eval_examples"
                stats[key] += 1
                if ex.uwa_substituted:
                    stats["uwa_substituted"] += 1
                bucket = ex.category or "silence"
                stats["category_histogram"][bucket] = (
                    stats["category_histogram"].get(bucket, 0) + 1
                )

    stats_path.write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    return DatasetBuildResult(train_path, eval_path, stats_path, stats)
