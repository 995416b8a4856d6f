"""Request/response bodies for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..convo import Dialogue
from ..tracker import StepInfo, TrackerState


class CreateSessionRequest(BaseModel):
    backend: str = "oracle"
    shots: int = 0
    window_size: int = Field(default=5, ge=0, le=50)
    endpoint: str | None = None
    model: str | None = None
    auth_env: str | None = None
    temperature: float = 0.0
    nonce: str | None = None


class DialogueOut(BaseModel):
    time: str
    speaker: str
    text: str

    @classmethod
    def from_dialogue(cls, d: Dialogue) -> "DialogueOut":
        return cls(time=d.time.render(), speaker=d.speaker.value, text=d.text)


class StepInfoOut(BaseModel):
    step_id: str
    step_note: str
    suggested_message: str | None = None
    mistake: str | None = None

    @classmethod
    def from_info(cls, info: StepInfo) -> "StepInfoOut":
        return cls(
            step_id=info.step_id,
            step_note=info.step_note,
            suggested_message=info.suggested_message,
            mistake=info.mistake.value if info.mistake else None,
        )


class TrackerStateOut(BaseModel):
    step_id: str
    tabletop_lifted: bool
    sanded: bool
    flipped: bool
    frames_placed: int
    frame_screws: int
    legs_lifted: int
    leg_screws: int
    drilled: int
    table_placed: bool
    mistakes: list[dict]

    @classmethod
    def from_state(cls, state: TrackerState, step_id: str) -> "TrackerStateOut":
        return cls(
            step_id=step_id,
            tabletop_lifted=state.tabletop_lifted,
            sanded=state.sanded,
            flipped=state.flipped,
            frames_placed=state.frames_placed,
            frame_screws=state.frame_screws,
            legs_lifted=state.legs_lifted,
            leg_screws=state.leg_screws,
            drilled=state.drilled,
            table_placed=state.table_placed,
            mistakes=[
                {"kind": m.kind.value, "time": m.time.render()} for m in state.mistakes
            ],
        )


class SessionOut(BaseModel):
    id: str
    created_at: float
    backend: str
    shots: int
    task: str
    greeting: DialogueOut
    step: StepInfoOut
    nonce: str | None = None


class PostEventRequest(BaseModel):
    speaker: str = Field(pattern="^(User|Wearable)$")
    text: str = Field(min_length=1, max_length=2000)
    client_time: str | None = None
    nonce: str | None = None


class PostEventResponse(BaseModel):
    responses: list[DialogueOut]
    step: StepInfoOut
    state: TrackerStateOut
    latency: float
    nonce: str | None = None


class TranscriptResponse(BaseModel):
    id: str
    dialogues: list[DialogueOut]
    step: StepInfoOut
    state: TrackerStateOut


class GenerateJobRequest(BaseModel):
    count: int = Field(default=10, ge=1, le=2000)
    seed: int = 0
    skill: float | None = Field(default=None, ge=0.0, le=1.0)
    comment_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    backend: str = "oracle"
    mode: str = Field(default="logs", pattern="^(logs|convos)$")


class GenerateJobResponse(BaseModel):
    out_dir: str
    files: list[str]
    mistakes_total: int


class DatasetJobRequest(BaseModel):
    convos_dir: str
    mode: str = Field(default="uwa", pattern="^(plain|uwa)$")
    train_frac: float = Field(default=0.9, gt=0.0, le=1.0)


class DatasetJobResponse(BaseModel):
    train_path: str
    eval_path: str
    stats_path: str
    stats: dict


class EvaluateJobRequest(BaseModel):
    convos_dir: str
    backend: str = "oracle"
    scorer: str = Field(default="lexical", pattern="^(lexical|remote)$")
    scorer_url: str | None = None
    shots: int = 0
    limit: int | None = Field(default=None, ge=1)


class EvaluateJobResponse(BaseModel):
    report: dict
    table: str
    records_path: str
