"""Teacher-forced evaluation of chat backends against ground-truth conversations.

Prompts are always built from the ground-truth history, so per-turn
comparison is well-defined and one bad generation cannot poison later turns.
"""

from __future__ import annotations

import json
import logging
import time as _time
from dataclasses import dataclass, field

from .backends import AssistRequest, BackendError
from .convo import Conversation, normalize_silence, strip_generated_prefix
from .dataset import TriggerPoint, enumerate_triggers
from .prompts import DEFAULT_WINDOW, build_system_prompt, build_user_prompt
from .scoring import ScoreTriple, Scorer, judge_correct
from .task import TaskDefinition, load_task
from .tracker import ResponseCategory, SuggestionContext, classify_response

log = logging.getLogger(__name__)

CATEGORY_ORDER = (
    ResponseCategory.KEY_INSTRUCTION,
    ResponseCategory.MISTAKE_CORRECTION,
    ResponseCategory.ANSWER,
    ResponseCategory.MISCELLANEOUS,
)

CATEGORY_LABELS = {
    ResponseCategory.KEY_INSTRUCTION: "Key instruction",
    ResponseCategory.MISTAKE_CORRECTION: "Mistake correction",
    ResponseCategory.ANSWER: "Answer",
    ResponseCategory.MISCELLANEOUS: "Miscellaneous",
}


class EmptyEvaluation(ValueError):
    pass


@dataclass(frozen=True)
class EvalRecord:
    conversation: str
    trigger_index: int
    trigger_ordinal: int
    category: ResponseCategory | None
    gt_text: str
    gen_text: str
    scores: ScoreTriple | None
    correct: bool | None
    latency: float

    def __post_init__(self):
        both = bool(self.gt_text) and bool(self.gen_text)
        if both != (self.scores is not None):
            raise ValueError("scores must be present exactly when both texts are")
        if (self.scores is None) != (self.correct is None):
            raise ValueError("correct is defined exactly when scores are")

    def to_dict(self) -> dict:
        return {
            "conversation": self.conversation,
            "trigger_index": self.trigger_index,
            "trigger_ordinal": self.trigger_ordinal,
            "category": self.category.value if self.category else None,
            "gt_text": self.gt_text,
            "gen_text": self.gen_text,
            "scores": (
                {
                    "similarity": self.scores.similarity,
                    "bertscore_f1": self.scores.bertscore_f1,
                    "entailment": self.scores.entailment,
                }
                if self.scores
                else None
            ),
            "correct": self.correct,
            "latency": self.latency,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        scores = None
        if data.get("scores") is not None:
            s = data["scores"]
            scores = ScoreTriple(
                similarity=s["similarity"],
                bertscore_f1=s.get("bertscore_f1"),
                entailment=s.get("entailment"),
            )
        return cls(
            conversation=data["conversation"],
            trigger_index=data["trigger_index"],
            trigger_ordinal=data["trigger_ordinal"],
            category=(
                ResponseCategory(data["category"]) if data.get("category") else None
            ),
            gt_text=data["gt_text"],
            gen_text=data["gen_text"],
            scores=scores,
            correct=data.get("correct"),
            latency=data["latency"],
        )


@dataclass(frozen=True)
class CategoryMetrics:
    support: int
    correct: int
    recall: float | None
    mean_similarity: float | None
    mean_entailment: float | None


@dataclass(frozen=True)
class MetricsReport:
    backend: str
    scorer: str
    categories: dict[str, CategoryMetrics]
    tnr: float | None
    overall_recall: float | None
    overall_precision: float | None
    f_score: float | None
    mean_latency: float
    counts: dict[str, int]
    include_miscellaneous: bool = True

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "scorer": self.scorer,
            "categories": {
                name: {
                    "support": m.support,
                    "correct": m.correct,
                    "recall": m.recall,
                    "mean_similarity": m.mean_similarity,
                    "mean_entailment": m.mean_entailment,
                }
                for name, m in self.categories.items()
            },
            "tnr": self.tnr,
            "overall_recall": self.overall_recall,
            "overall_precision": self.overall_precision,
            "f_score": self.f_score,
            "mean_latency": self.mean_latency,
            "counts": self.counts,
            "include_miscellaneous": self.include_miscellaneous,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            backend=data["backend"],
            scorer=data["scorer"],
            categories={
                name: CategoryMetrics(
                    support=m["support"],
                    correct=m["correct"],
                    recall=m["recall"],
                    mean_similarity=m["mean_similarity"],
                    mean_entailment=m["mean_entailment"],
                )
                for name, m in data["categories"].items()
            },
            tnr=data["tnr"],
            overall_recall=data["overall_recall"],
            overall_precision=data["overall_precision"],
            f_score=data["f_score"],
            mean_latency=data["mean_latency"],
            counts=dict(data["counts"]),
            include_miscellaneous=data.get("include_miscellaneous", True),
        )


@dataclass(frozen=True)
class EvalConfig:
    sim_threshold: float = 0.3
    ent_threshold: float = 0.0
    shots: int = 0
    window_size: int = DEFAULT_WINDOW
    include_miscellaneous: bool = True
    examples: tuple = ()


def f_score(recall: float, precision: float) -> float:
    """Harmonic mean; zero when both rates are zero."""
    if recall + precision == 0.0:
        return 0.0
    return 2.0 * recall * precision / (recall + precision)


def _category_context(tp: TriggerPoint) -> SuggestionContext:
    return SuggestionContext(
        advance_suggested=tp.context.suggested_message is not None
        and not tp.context.suggestion_is_corrective,
        corrective_suggested=tp.context.suggestion_is_corrective,
        trigger_speaker=tp.context.trigger_speaker,
    )


def evaluate(
    backend,
    gt_conversations: list[Conversation],
    scorer: Scorer,
    config: EvalConfig | None = None,
    task: TaskDefinition | None = None,
) -> tuple[MetricsReport, list[EvalRecord]]:
    """Score a backend's replies at every ground-truth trigger."""
    if not gt_conversations:
        raise EmptyEvaluation("no ground-truth conversations to evaluate")
    config = config or EvalConfig()
    task = task or load_task()
    system = build_system_prompt(task, config.shots, list(config.examples))

    records: list[EvalRecord] = []
    for conversation in gt_conversations:
        source = conversation.source or "conversation"
        for tp in enumerate_triggers(conversation, task, config.window_size):
            user_prompt = build_user_prompt(tp.context)
            started = _time.perf_counter()
            try:
                raw = backend.generate(AssistRequest(system, user_prompt, tp.context))
            except BackendError as exc:
                log.warning("backend failed at %s#%d: %s", source, tp.ordinal, exc)
                raw = ""
            latency = _time.perf_counter() - started

            gen = normalize_silence(strip_generated_prefix(raw))
            category = classify_response(_category_context(tp), tp.gt_target)
            scores = None
            correct = None
            if tp.gt_target and gen:
                scores = scorer.score(gen, tp.gt_target)
                correct = judge_correct(scores, config.sim_threshold, config.ent_threshold)
            records.append(
                EvalRecord(
                    conversation=source,
                    trigger_index=tp.index,
                    trigger_ordinal=tp.ordinal,
                    category=category,
                    gt_text=tp.gt_target,
                    gen_text=gen,
                    scores=scores,
                    correct=correct,
                    latency=latency,
                )
            )

    report = aggregate(
        records,
        backend_name=getattr(backend, "kind", type(backend).__name__),
        scorer_name=getattr(scorer, "name", type(scorer).__name__),
        include_miscellaneous=config.include_miscellaneous,
        n_conversations=len(gt_conversations),
    )
    return report, records


def aggregate(
    records: list[EvalRecord],
    backend_name: str = "backend",
    scorer_name: str = "scorer",
    include_miscellaneous: bool = True,
    n_conversations: int | None = None,
) -> MetricsReport:
    """Fold per-trigger records into the report; pure and deterministic."""
    if not records:
        raise EmptyEvaluation("no records to aggregate")

    def mean(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    categories: dict[str, CategoryMetrics] = {}
    for cat in CATEGORY_ORDER:
        bucket = [r for r in records if r.category is cat]
        sims = [r.scores.similarity for r in bucket if r.scores]
        ents = [
            r.scores.entailment
            for r in bucket
            if r.scores and r.scores.entailment is not None
        ]
        n_correct = sum(1 for r in bucket if r.correct)
        categories[cat.value] = CategoryMetrics(
            support=len(bucket),
            correct=n_correct,
            recall=(n_correct / len(bucket)) if bucket else None,
            mean_similarity=mean(sims),
            mean_entailment=mean(ents),
        )

    scored_cats = [
        c for c in CATEGORY_ORDER
        if include_miscellaneous or c is not ResponseCategory.MISCELLANEOUS
    ]
    support = sum(categories[c.value].support for c in scored_cats)
    n_correct = sum(categories[c.value].correct for c in scored_cats)
    overall_recall = n_correct / support if support else None

    gen_nonempty = [
        r for r in records
        if r.gen_text
        and (include_miscellaneous or r.category is not ResponseCategory.MISCELLANEOUS)
    ]
    overall_precision = (
        sum(1 for r in gen_nonempty if r.correct) / len(gen_nonempty)
        if gen_nonempty
        else None
    )

    gt_empty = [r for r in records if not r.gt_text]
    true_negatives = sum(1 for r in gt_empty if not r.gen_text)
    tnr = true_negatives / len(gt_empty) if gt_empty else None

    score = (
        f_score(overall_recall, overall_precision)
        if overall_recall is not None and overall_precision is not None
        else None
    )

    counts = {
        "triggers": len(records),
        "gt_nonempty": len(records) - len(gt_empty),
        "gt_empty": len(gt_empty),
        "gen_nonempty": sum(1 for r in records if r.gen_text),
        "true_negatives": true_negatives,
    }
    if n_conversations is not None:
        counts["conversations"] = n_conversations

    return MetricsReport(
        backend=backend_name,
        scorer=scorer_name,
        categories=categories,
        tnr=tnr,
        overall_recall=overall_recall,
        overall_precision=overall_precision,
        f_score=score,
        mean_latency=sum(r.latency for r in records) / len(records),
        counts=counts,
        include_miscellaneous=include_miscellaneous,
    )


def _cell(value: float | None, width: int = 6) -> str:
    return f"{value:.2f}".ljust(width) if value is not None else "-".ljust(width)


def render_report(report: MetricsReport, format: str = "table") -> str:
    if format == "structured":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if format != "table":
        raise ValueError(f"unknown report format: {format!r}")

    group_width = 3 * 6 + 2
    name_width = max(12, len(report.backend) + 2)
    header1 = " " * name_width
    for cat in CATEGORY_ORDER:
        header1 += CATEGORY_LABELS[cat].ljust(group_width)
    header1 += "TNR".ljust(7) + "Overall"
    header2 = " " * name_width
    for _ in CATEGORY_ORDER:
        header2 += ("Rcl".ljust(6) + "Sbrt".ljust(6) + "Ent".ljust(6)).ljust(group_width)
    header2 += " " * 7 + "Rcl".ljust(6) + "Prec".ljust(6) + "FSc".ljust(6) + "Tm"

    row = report.backend.ljust(name_width)
    for cat in CATEGORY_ORDER:
        m = report.categories[cat.value]
        row += (
            _cell(m.recall) + _cell(m.mean_similarity) + _cell(m.mean_entailment)
        ).ljust(group_width)
    row += _cell(report.tnr, 7)
    row += _cell(report.overall_recall) + _cell(report.overall_precision)
    row += _cell(report.f_score)
    row += f"{report.mean_latency:.2f} s"

    misc_note = "including" if report.include_miscellaneous else "excluding"
    footer = [
        f"scorer: {report.scorer} | counts: {report.counts}",
        "correct = similarity > threshold or entailment > threshold; "
        f"overall Rcl/Prec are micro-averages {misc_note} miscellaneous turns.",
    ]
    return "\n".join([header1, header2, row, "", *footer]) + "\n"


def parse_structured_report(text: str) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(text))


def save_records(records: list[EvalRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def load_records(path) -> list[EvalRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                records.append(EvalRecord.from_dict(json.loads(line)))
    return records
