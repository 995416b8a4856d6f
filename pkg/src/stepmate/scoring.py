"""Response scorers and the correctness judge.

The lexical scorer keeps everything runnable with no model downloads; the
remote scorer speaks the sidecar protocol for semantic metrics.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Protocol

import httpx


class ScorerUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class ScoreTriple:
    similarity: float
    bertscore_f1: float | None = None
    entailment: float | None = None


def judge_correct(
    scores: ScoreTriple, sim_threshold: float = 0.3, ent_threshold: float = 0.0
) -> bool:
    """A response counts as correct on high similarity or positive entailment."""
    if scores.similarity > sim_threshold:
        return True
    return scores.entailment is not None and scores.entailment > ent_threshold


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _vectorize(text: str) -> Counter:
    return Counter(_TOKEN_RE.findall(text.lower()))


def lexical_similarity(a: str, b: str) -> float:
    """Cosine similarity of case-folded token count vectors; in [0, 1]."""
    if not a or not b:
        raise ValueError("both texts must be non-empty")
    va, vb = _vectorize(a), _vectorize(b)
    if not va or not vb:
        return 0.0
    dot = sum(va[token] * vb[token] for token in va.keys() & vb.keys())
    norm = math.sqrt(sum(c * c for c in va.values())) * math.sqrt(
        sum(c * c for c in vb.values())
    )
    return dot / norm if norm else 0.0


class Scorer(Protocol):
    name: str

    def score(self, candidate: str, reference: str) -> ScoreTriple: ...

    def score_batch(self, pairs: list[tuple[str, str]]) -> list[ScoreTriple]: ...


class LexicalScorer:
    """Deterministic offline scorer; similarity only, no entailment."""

    name = "lexical"

    def score(self, candidate: str, reference: str) -> ScoreTriple:
        return ScoreTriple(similarity=lexical_similarity(candidate, reference))

    def score_batch(self, pairs: list[tuple[str, str]]) -> list[ScoreTriple]:
        return [self.score(c, r) for c, r in pairs]


class RemoteScorer:
    """Client for the scoring-service protocol.

    POST {base}/v1/score        {candidate, reference, metrics, premise}
    POST {base}/v1/score/batch  {pairs: [{candidate, reference}], metrics, premise}

    Responses carry {similarity, bertscore_f1?, entailment?}. The premise
    field picks which side is the entailment premise (default: candidate).
    """

    name = "remote"

    METRICS = ("similarity", "bertscore", "entailment")

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        premise: str = "candidate",
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.premise = premise
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(
                f"{self.base_url}{path}", json=payload, timeout=self.timeout
            )
        except httpx.HTTPError as exc:
            raise ScorerUnavailable(f"scorer unreachable: {exc}") from None
        if response.status_code != 200:
            raise ScorerUnavailable(
                f"scorer returned {response.status_code}: {response.text[:200]}"
            )
        return response.json()

    @staticmethod
    def _triple(data: dict) -> ScoreTriple:
        try:
            return ScoreTriple(
                similarity=float(data["similarity"]),
                bertscore_f1=(
                    float(data["bertscore_f1"])
                    if data.get("bertscore_f1") is not None
                    else None
                ),
                entailment=(
                    float(data["entailment"])
                    if data.get("entailment") is not None
                    else None
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScorerUnavailable(f"malformed scorer response: {exc}") from None

    def score(self, candidate: str, reference: str) -> ScoreTriple:
        data = self._post(
            "/v1/score",
            {
                "candidate": candidate,
                "reference": reference,
                "metrics": list(self.METRICS),
                "premise": self.premise,
            },
        )
        return self._triple(data)

    def score_batch(self, pairs: list[tuple[str, str]]) -> list[ScoreTriple]:
        if not pairs:
            return []
        data = self._post(
            "/v1/score/batch",
            {
                "pairs": [{"candidate": c, "reference": r} for c, r in pairs],
                "metrics": list(self.METRICS),
                "premise": self.premise,
            },
        )
        results = data.get("results")
        if not isinstance(results, list) or len(results) != len(pairs):
            raise ScorerUnavailable("batch scorer response has wrong cardinality")
        return [self._triple(item) for item in results]


def make_scorer(name: str, url: str | None = None, premise: str = "candidate") -> Scorer:
    if name == "lexical":
        return LexicalScorer()
    if name == "remote":
        if not url:
            raise ValueError("remote scorer needs a base URL")
        return RemoteScorer(url, premise=premise)
    raise ValueError(f"unknown scorer: {name!r}")
