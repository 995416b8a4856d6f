"""Task definitions: step texts, part counts, and mistake metadata.

The definition file carries everything worded (instructions, step-finished
phrasings, corrective messages) plus the part counts that parameterize step
completion. Progression and mistake-detection semantics live in the tracker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


class BadTaskDefinition(ValueError):
    pass


@dataclass(frozen=True)
class StepSpec:
    id: str
    instruction: str
    finished: str


@dataclass(frozen=True)
class MistakeSpec:
    kind: str
    corrective: str
    implies_step: str
    description: str


@dataclass(frozen=True)
class TaskDefinition:
    id: str
    name: str
    materials: str
    steps: tuple[StepSpec, ...]
    mistakes: tuple[MistakeSpec, ...]
    completion_message: str
    counts: dict[str, int]
    system_prompt_asset: str
    datagen_prompt_asset: str
    example_conversation_asset: str

    def step(self, step_id: str) -> StepSpec:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)

    def step_after(self, step_id: str) -> StepSpec | None:
        ids = [s.id for s in self.steps]
        i = ids.index(step_id)
        return self.steps[i + 1] if i + 1 < len(self.steps) else None

    def mistake(self, kind: str) -> MistakeSpec:
        for m in self.mistakes:
            if m.kind == kind:
                return m
        raise KeyError(kind)

    def count(self, name: str) -> int:
        return self.counts[name]


def _asset_text(relative: str) -> str:
    return (resources.files("stepmate") / "assets" / relative).read_text(encoding="utf-8")


def load_task(path: str | Path | None = None) -> TaskDefinition:
    """Load a task definition; the packaged table-assembly task by default."""
    if path is None:
        raw = _asset_text("tasks/table_assembly.json")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise BadTaskDefinition(f"task definition is not valid JSON: {exc}") from None

    try:
        steps = tuple(
            StepSpec(s["id"], s["instruction"], s["finished"]) for s in data["steps"]
        )
        mistakes = tuple(
            MistakeSpec(m["kind"], m["corrective"], m["implies_step"], m["description"])
            for m in data["mistakes"]
        )
        task = TaskDefinition(
            id=data["id"],
            name=data["name"],
            materials=data["materials"],
            steps=steps,
            mistakes=mistakes,
            completion_message=data["completion_message"],
            counts={k: int(v) for k, v in data["counts"].items()},
            system_prompt_asset=data["system_prompt_asset"],
            datagen_prompt_asset=data["datagen_prompt_asset"],
            example_conversation_asset=data["example_conversation_asset"],
        )
    except (KeyError, TypeError) as exc:
        raise BadTaskDefinition(f"task definition missing field: {exc}") from None

    if not task.steps:
        raise BadTaskDefinition("task needs at least one step")
    seen = set()
    for s in task.steps:
        if s.id in seen:
            raise BadTaskDefinition(f"duplicate step id {s.id}")
        seen.add(s.id)
    for m in task.mistakes:
        if m.implies_step not in seen:
            raise BadTaskDefinition(f"mistake {m.kind} implies unknown step {m.implies_step}")
    required_kinds = {
        "screw-frame-before-all-placed",
        "screw-leg-before-frames-done",
        "drill-before-all-screws",
    }
    missing = required_kinds - {m.kind for m in task.mistakes}
    if missing:
        raise BadTaskDefinition(f"task definition lacks mistake kinds: {sorted(missing)}")
    return task


def prompt_asset(task: TaskDefinition, which: str) -> str:
    """Raw prompt template text for 'system' or 'datagen'."""
    if which == "system":
        rel = task.system_prompt_asset
    elif which == "datagen":
        rel = task.datagen_prompt_asset
    else:
        raise KeyError(f"unknown prompt asset: {which!r}")
    return _asset_text(rel)


def example_conversation_text(task: TaskDefinition) -> str:
    return _asset_text(task.example_conversation_asset)
