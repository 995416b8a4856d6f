"""Service configuration: model ids, device, batching.

Values come from an optional JSON file with STEPMATE_SCORER_* environment
overrides on top, mirroring the main workbench's config convention.
"""

import json
import os
from dataclasses import dataclass, fields

ENV_PREFIX = "STEPMATE_SCORER_"

ENTAILMENT_MODES = ("raw", "margin")


@dataclass(frozen=True)
class ScorerConfig:
    embedding_model_id: str = "all-MiniLM-L6-v2"
    nli_model_id: str = "cross-encoder/nli-deberta-v3-base"
    bertscore_model_id: str = "roberta-large"
    device: str = "cpu"
    batch_size: int = 16
    # "raw" exposes the entailment-class score directly so the ">0" judge
    # rule applies as published; "margin" reports entailment minus
    # contradiction instead.
    entailment_mode: str = "raw"

    def __post_init__(self):
        if self.entailment_mode not in ENTAILMENT_MODES:
            raise ValueError(f"entailment_mode must be one of {ENTAILMENT_MODES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @classmethod
    def from_sources(cls, path: str | None = None, env=os.environ) -> "ScorerConfig":
        data: dict = {}
        if path:
            data.update(json.loads(open(path, encoding="utf-8").read()))
        for field in fields(cls):
            raw = env.get(ENV_PREFIX + field.name.upper())
            if raw is None:
                continue
            data[field.name] = int(raw) if field.name == "batch_size" else raw
        return cls(**data)
