"""Shared test engine: deterministic, model-free, interface-identical."""

import math
import re
from collections import Counter

import pytest

from stepmate_scorer.engine import METRICS, EmptyBatch, ScoreResult

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class FakeEngine:
    """Token-overlap similarity plus an intentionally asymmetric entailment.

    Entailment is coverage of the hypothesis by the premise, rescaled to
    [-2, 2]: identical pairs land at 2, token-disjoint pairs at -2.
    """

    loaded_models = {"embedding": "fake-embed", "nli": "fake-nli", "bertscore": "fake-bert"}
    token_limit_chars = 256

    def score(self, candidate, reference, metrics=METRICS, premise="candidate"):
        return self.score_batch([(candidate, reference)], metrics, premise)[0]

    def score_batch(self, pairs, metrics=METRICS, premise="candidate"):
        if not pairs:
            raise EmptyBatch("no pairs to score")
        unknown = set(metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        results = []
        for i, (candidate, reference) in enumerate(pairs):
            if not candidate or not reference:
                raise ValueError(f"pair {i}: both texts must be non-empty")
            results.append(self._one(candidate, reference, metrics, premise))
        return results

    def _one(self, candidate, reference, metrics, premise):
        ca = Counter(_TOKEN_RE.findall(candidate.lower()))
        cb = Counter(_TOKEN_RE.findall(reference.lower()))
        dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
        norm = math.sqrt(sum(v * v for v in ca.values())) * math.sqrt(
            sum(v * v for v in cb.values())
        )
        similarity = dot / norm if norm else 0.0

        entailment = None
        if "entailment" in metrics:
            prem, hypo = (
                (candidate, reference) if premise == "candidate" else (reference, candidate)
            )
            prem_tokens = set(_TOKEN_RE.findall(prem.lower()))
            hypo_tokens = set(_TOKEN_RE.findall(hypo.lower()))
            coverage = len(prem_tokens & hypo_tokens) / len(hypo_tokens) if hypo_tokens else 0.0
            entailment = 4.0 * coverage - 2.0

        bertscore_f1 = 0.5 + 0.5 * similarity if "bertscore" in metrics else None

        return ScoreResult(
            similarity=similarity,
            bertscore_f1=bertscore_f1,
            entailment=entailment,
            truncated=len(candidate) > self.token_limit_chars
            or len(reference) > self.token_limit_chars,
        )


@pytest.fixture()
def fake_engine():
    return FakeEngine()
