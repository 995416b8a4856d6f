"""Model-backed scoring engine.

All three models load at service startup; a service that cannot resolve its
models refuses to start rather than serving partial metrics. ML imports stay
inside the loaders so the protocol layer is importable without them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import ScorerConfig

log = logging.getLogger(__name__)

METRICS = ("similarity", "bertscore", "entailment")


class ModelNotLoaded(RuntimeError):
    pass


class EmptyBatch(ValueError):
    pass


@dataclass(frozen=True)
class ScoreResult:
    similarity: float
    bertscore_f1: float | None = None
    entailment: float | None = None
    truncated: bool = False


def entailment_value(class_scores: dict[str, float], mode: str) -> float:
    """Collapse NLI class scores to one number.

    raw: the entailment-class score, so the published ">0" judge rule
    applies directly. margin: entailment minus contradiction.
    """
    entail = class_scores["entailment"]
    if mode == "raw":
        return entail
    return entail - class_scores["contradiction"]


def _label_index(id2label: dict, needle: str) -> int:
    for idx, label in id2label.items():
        if needle in str(label).lower():
            return int(idx)
    raise ModelNotLoaded(f"NLI model labels {id2label} lack a {needle!r} class")


def _load_embedder(config: ScorerConfig):
    from sentence_transformers import SentenceTransformer

    return SentenceTransformer(config.embedding_model_id, device=config.device)


def _load_nli(config: ScorerConfig):
    from sentence_transformers import CrossEncoder

    return CrossEncoder(config.nli_model_id, device=config.device)


def _load_bertscorer(config: ScorerConfig):
    from bert_score import BERTScorer

    return BERTScorer(
        model_type=config.bertscore_model_id, lang="en", device=config.device
    )


class ModelEngine:
    """Scores text pairs with real models; deterministic at fixed versions."""

    def __init__(self, config: ScorerConfig | None = None):
        self.config = config or ScorerConfig()
        loaders = {
            "embedding": (_load_embedder, self.config.embedding_model_id),
            "nli": (_load_nli, self.config.nli_model_id),
            "bertscore": (_load_bertscorer, self.config.bertscore_model_id),
        }
        loaded = {}
        for name, (loader, model_id) in loaders.items():
            try:
                loaded[name] = loader(self.config)
            except Exception as exc:
                raise ModelNotLoaded(f"cannot load {name} model {model_id!r}: {exc}") from exc
        self._embedder = loaded["embedding"]
        self._nli = loaded["nli"]
        self._bert = loaded["bertscore"]
        self.loaded_models = {
            "embedding": self.config.embedding_model_id,
            "nli": self.config.nli_model_id,
            "bertscore": self.config.bertscore_model_id,
        }

    def _exceeds_limit(self, text: str) -> bool:
        tokenizer = self._embedder.tokenizer
        limit = int(self._embedder.max_seq_length)
        return len(tokenizer.encode(text)) > limit

    def _nli_scores(self, premise_text: str, hypothesis_text: str) -> list[dict]:
        return self._nli_scores_batch([(premise_text, hypothesis_text)])

    def _nli_scores_batch(self, ordered_pairs: list[tuple[str, str]]) -> list[dict]:
        import numpy as np

        logits = self._nli.predict(
            ordered_pairs, batch_size=self.config.batch_size, apply_softmax=False
        )
        logits = np.atleast_2d(np.asarray(logits))
        model_config = getattr(self._nli, "config", None) or self._nli.model.config
        id2label = dict(model_config.id2label)
        ent = _label_index(id2label, "entail")
        con = _label_index(id2label, "contradiction")
        return [
            {"entailment": float(row[ent]), "contradiction": float(row[con])}
            for row in logits
        ]

    def _similarities(self, candidates: list[str], references: list[str]) -> list[float]:
        from sentence_transformers import util

        embeddings = self._embedder.encode(
            candidates + references,
            batch_size=self.config.batch_size,
            convert_to_tensor=True,
            normalize_embeddings=True,
        )
        n = len(candidates)
        sims = util.cos_sim(embeddings[:n], embeddings[n:])
        return [float(sims[i][i]) for i in range(n)]

    def score(
        self,
        candidate: str,
        reference: str,
        metrics: tuple[str, ...] = METRICS,
        premise: str = "candidate",
    ) -> ScoreResult:
        return self.score_batch([(candidate, reference)], metrics, premise)[0]

    def score_batch(
        self,
        pairs: list[tuple[str, str]],
        metrics: tuple[str, ...] = METRICS,
        premise: str = "candidate",
    ) -> list[ScoreResult]:
        if not pairs:
            raise EmptyBatch("no pairs to score")
        for i, (candidate, reference) in enumerate(pairs):
            if not candidate or not reference:
                raise ValueError(f"pair {i}: both texts must be non-empty")
        unknown = set(metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")

        candidates = [c for c, _ in pairs]
        references = [r for _, r in pairs]
        similarities = self._similarities(candidates, references)

        entailments: list[float | None] = [None] * len(pairs)
        if "entailment" in metrics:
            ordered = [
                (c, r) if premise == "candidate" else (r, c)
                for c, r in pairs
            ]
            entailments = [
                entailment_value(scores, self.config.entailment_mode)
                for scores in self._nli_scores_batch(ordered)
            ]

        f1s: list[float | None] = [None] * len(pairs)
        if "bertscore" in metrics:
            _, _, f1 = self._bert.score(candidates, references)
            f1s = [float(v) for v in f1]

        return [
            ScoreResult(
                similarity=similarities[i],
                bertscore_f1=f1s[i],
                entailment=entailments[i],
                truncated=self._exceeds_limit(candidates[i])
                or self._exceeds_limit(references[i]),
            )
            for i in range(len(pairs))
        ]
