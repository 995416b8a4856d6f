from .config import ScorerConfig
from .engine import EmptyBatch, ModelEngine, ModelNotLoaded, ScoreResult

__all__ = [
    "EmptyBatch",
    "ModelEngine",
    "ModelNotLoaded",
    "ScoreResult",
    "ScorerConfig",
]
