"""HTTP face of the scoring engine.

Response bodies carry only the protocol fields; truncation is reported
out-of-band in an X-Truncated header so bodies stay schema-exact.
"""

import threading
from typing import Literal

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, ConfigDict, Field

from .config import ScorerConfig
from .engine import METRICS, EmptyBatch, ModelEngine, ModelNotLoaded

Metric = Literal["similarity", "bertscore", "entailment"]
Premise = Literal["candidate", "reference"]


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    candidate: str = Field(min_length=1)
    reference: str = Field(min_length=1)
    metrics: list[Metric] | None = None
    premise: Premise = "candidate"


class Pair(BaseModel):
    model_config = ConfigDict(extra="forbid")

    candidate: str = Field(min_length=1)
    reference: str = Field(min_length=1)


class BatchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pairs: list[Pair] = Field(min_length=1)
    metrics: list[Metric] | None = None
    premise: Premise = "candidate"


class ScoreResponse(BaseModel):
    similarity: float
    bertscore_f1: float | None = None
    entailment: float | None = None


class BatchResponse(BaseModel):
    results: list[ScoreResponse]


def create_app(engine=None, config: ScorerConfig | None = None) -> FastAPI:
    """Engine injection is for tests; by default models load here, at startup."""
    config = config or ScorerConfig.from_sources()
    if engine is None:
        engine = ModelEngine(config)

    app = FastAPI(title="stepmate-scorer", version="0.1.0")
    # model inference is serialized; handlers stay stateless
    lock = threading.Lock()

    def run_batch(pairs, metrics, premise):
        chosen = tuple(metrics) if metrics is not None else METRICS
        try:
            with lock:
                return engine.score_batch(pairs, chosen, premise)
        except EmptyBatch as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except ModelNotLoaded as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "models": engine.loaded_models}

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(request: ScoreRequest, response: Response):
        result = run_batch(
            [(request.candidate, request.reference)], request.metrics, request.premise
        )[0]
        if result.truncated:
            response.headers["X-Truncated"] = "0"
        return ScoreResponse(
            similarity=result.similarity,
            bertscore_f1=result.bertscore_f1,
            entailment=result.entailment,
        )

    @app.post("/v1/score/batch", response_model=BatchResponse)
    def score_batch(request: BatchRequest, response: Response):
        pairs = [(p.candidate, p.reference) for p in request.pairs]
        results = run_batch(pairs, request.metrics, request.premise)
        clipped = [str(i) for i, r in enumerate(results) if r.truncated]
        if clipped:
            response.headers["X-Truncated"] = ",".join(clipped)
        return BatchResponse(
            results=[
                ScoreResponse(
                    similarity=r.similarity,
                    bertscore_f1=r.bertscore_f1,
                    entailment=r.entailment,
                )
                for r in results
            ]
        )

    return app
