"""HTTP service hosting live assistant sessions and batch jobs.

Sessions live in memory. Every appended dialogue and step change is recorded
in a per-session event log which the SSE stream replays and follows; the
transcript is always the fold of that log.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from dataclasses import replace
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import StreamingResponse

from ..backends import BadConfig, make_backend
from ..convo import ClockTime, Dialogue, Speaker, parse_conversation, serialize_conversation
from ..dataset import build_dataset
from ..engine import EngineConfig, OutOfOrderTime, Session
from ..evaluation import EvalConfig, evaluate, render_report, save_records
from ..scoring import make_scorer
from ..sim import ScriptedUser, default_profile, generate_corpus
from ..engine import run_closed_loop
from ..task import TaskDefinition, load_task
from ..tracker import derive_step
from ..activities import ALL_SURFACES
from .schemas import (
    CreateSessionRequest,
    DatasetJobRequest,
    DatasetJobResponse,
    DialogueOut,
    EvaluateJobRequest,
    EvaluateJobResponse,
    GenerateJobRequest,
    GenerateJobResponse,
    PostEventRequest,
    PostEventResponse,
    SessionOut,
    StepInfoOut,
    TranscriptResponse,
    TrackerStateOut,
)

log = logging.getLogger(__name__)

TOKEN_ENV = "STEPMATE_SERVER_TOKEN"


class ServerSession:
    def __init__(self, session: Session, backend_name: str, shots: int):
        self.id = uuid.uuid4().hex
        self.session = session
        self.backend_name = backend_name
        self.shots = shots
        self.created_at = time.time()
        self.last_access = self.created_at
        self.lock = threading.RLock()
        self.cond = threading.Condition(self.lock)
        self.events: list[dict] = []
        self.last_step: StepInfoOut | None = None

    def publish(self, kind: str, data: dict) -> None:
        with self.cond:
            self.events.append({"seq": len(self.events), "event": kind, "data": data})
            self.cond.notify_all()


def _now_clock() -> ClockTime:
    lt = time.localtime()
    return ClockTime(
        lt.tm_hour % 12 or 12,
        lt.tm_min,
        lt.tm_sec,
        "PM" if lt.tm_hour >= 12 else "AM",
    )


def create_app(
    config: EngineConfig | None = None,
    task: TaskDefinition | None = None,
    workspace: str | Path = "stepmate-workspace",
    session_ttl: float = 1800.0,
    token_env: str = TOKEN_ENV,
) -> FastAPI:
    base_config = config or EngineConfig()
    task = task or load_task(base_config.task_path)
    workspace = Path(workspace)
    app = FastAPI(title="stepmate", version="0.1.0")
    sessions: dict[str, ServerSession] = {}
    registry_lock = threading.Lock()

    def check_auth(request: Request) -> None:
        token = os.environ.get(token_env, "")
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    def evict_idle() -> None:
        cutoff = time.time() - session_ttl
        with registry_lock:
            stale = [sid for sid, s in sessions.items() if s.last_access < cutoff]
            for sid in stale:
                del sessions[sid]
                log.info("evicted idle session %s", sid)

    def get_session(session_id: str) -> ServerSession:
        evict_idle()
        with registry_lock:
            record = sessions.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        record.last_access = time.time()
        return record

    def resolve_dir(raw: str) -> Path:
        p = Path(raw)
        return p if p.is_absolute() else workspace / p

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/v1/task", dependencies=[Depends(check_auth)])
    def task_definition() -> dict:
        return {
            "id": task.id,
            "name": task.name,
            "materials": task.materials,
            "steps": [
                {"id": s.id, "instruction": s.instruction, "finished": s.finished}
                for s in task.steps
            ],
            "mistakes": [
                {"kind": m.kind, "corrective": m.corrective, "implies_step": m.implies_step}
                for m in task.mistakes
            ],
            "activities": list(ALL_SURFACES),
            "completion_message": task.completion_message,
        }

    @app.post("/v1/sessions", dependencies=[Depends(check_auth)], status_code=201)
    def create_session(body: CreateSessionRequest) -> SessionOut:
        evict_idle()
        session_config = replace(
            base_config,
            backend=body.backend,
            shots=body.shots,
            window_size=body.window_size,
            endpoint=body.endpoint or base_config.endpoint,
            model=body.model or base_config.model,
            auth_env=body.auth_env or base_config.auth_env,
            temperature=body.temperature,
        )
        try:
            backend = make_backend(body.backend, session_config)
            session = Session(config=session_config, backend=backend, task=task)
        except (BadConfig, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        greeting, info = session.start(_now_clock())
        record = ServerSession(session, body.backend, body.shots)
        with registry_lock:
            sessions[record.id] = record
        step_out = StepInfoOut.from_info(info)
        record.last_step = step_out
        record.publish("dialogue", DialogueOut.from_dialogue(greeting).model_dump())
        record.publish("step", step_out.model_dump())
        return SessionOut(
            id=record.id,
            created_at=record.created_at,
            backend=body.backend,
            shots=body.shots,
            task=task.id,
            greeting=DialogueOut.from_dialogue(greeting),
            step=step_out,
            nonce=body.nonce,
        )

    @app.post("/v1/sessions/{session_id}/events", dependencies=[Depends(check_auth)])
    def post_event(session_id: str, body: PostEventRequest) -> PostEventResponse:
        record = get_session(session_id)
        speaker = Speaker(body.speaker)
        when: ClockTime | None = None
        if body.client_time is not None:
            try:
                when = ClockTime.parse(body.client_time)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))

        with record.lock:
            session = record.session
            if when is None:
                # Assistant replies are stamped a second after their trigger,
                # so a rapid next event can trail the transcript end; clamp
                # server-assigned stamps rather than reject our own clock.
                when = _now_clock()
                last = session.conversation.last_time()
                if last is not None and when < last:
                    when = last
            try:
                event = Dialogue(when, speaker, body.text.strip())
            except ValueError as exc:
                # wearable text outside the activity vocabulary, or empty text
                raise HTTPException(status_code=422, detail=str(exc))
            before = len(session.conversation.dialogues)
            try:
                assistant, info, eval_record = session.handle_event(event)
            except OutOfOrderTime as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            appended = session.conversation.dialogues[before:]
            step_out = StepInfoOut.from_info(info)
            state_out = TrackerStateOut.from_state(
                session.tracker, derive_step(session.tracker)
            )
            for i, d in enumerate(appended):
                payload = DialogueOut.from_dialogue(d).model_dump()
                if i == 0 and body.nonce:
                    payload["nonce"] = body.nonce
                record.publish("dialogue", payload)
            if record.last_step is None or step_out != record.last_step:
                record.last_step = step_out
                record.publish("step", step_out.model_dump())
        return PostEventResponse(
            responses=[DialogueOut.from_dialogue(assistant)] if assistant else [],
            step=step_out,
            state=state_out,
            latency=eval_record.latency,
            nonce=body.nonce,
        )

    @app.get("/v1/sessions/{session_id}/transcript", dependencies=[Depends(check_auth)])
    def transcript(session_id: str) -> TranscriptResponse:
        record = get_session(session_id)
        with record.lock:
            session = record.session
            dialogues = [DialogueOut.from_dialogue(d) for d in session.conversation]
            step = record.last_step or StepInfoOut.from_info(session.step_info())
            state = TrackerStateOut.from_state(
                session.tracker, derive_step(session.tracker)
            )
        return TranscriptResponse(
            id=record.id, dialogues=dialogues, step=step, state=state
        )

    @app.get("/v1/sessions/{session_id}/stream", dependencies=[Depends(check_auth)])
    def stream(
        session_id: str,
        limit: int | None = Query(default=None, ge=1),
    ) -> StreamingResponse:
        record = get_session(session_id)

        def sse():
            with record.lock:
                session = record.session
                snapshot = {
                    "dialogues": [
                        DialogueOut.from_dialogue(d).model_dump()
                        for d in session.conversation
                    ],
                    "step": (
                        record.last_step or StepInfoOut.from_info(session.step_info())
                    ).model_dump(),
                    "next_seq": len(record.events),
                }
                cursor = len(record.events)
            yield f"event: snapshot\ndata: {json.dumps(snapshot)}\n\n"
            sent = 0
            while limit is None or sent < limit:
                with record.cond:
                    while cursor >= len(record.events):
                        if not record.cond.wait(timeout=0.5):
                            break
                    batch = record.events[cursor:]
                    cursor = len(record.events)
                if not batch:
                    yield ": keep-alive\n\n"
                    continue
                for entry in batch:
                    yield (
                        f"id: {entry['seq']}\n"
                        f"event: {entry['event']}\n"
                        f"data: {json.dumps(entry['data'])}\n\n"
                    )
                    sent += 1
                    if limit is not None and sent >= limit:
                        return

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.post("/v1/jobs/generate", dependencies=[Depends(check_auth)])
    def job_generate(body: GenerateJobRequest) -> GenerateJobResponse:
        sampler = None
        if body.skill is not None:
            skill = body.skill
            sampler = lambda rng: default_profile(skill=skill)
        logs = generate_corpus(body.count, body.seed, profile_sampler=sampler)
        stamp = f"{body.mode}-{body.seed}"
        out_dir = workspace / "jobs" / stamp
        out_dir.mkdir(parents=True, exist_ok=True)
        backend = None
        if body.mode == "convos":
            try:
                backend = make_backend(body.backend, base_config)
            except BadConfig as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        files: list[str] = []
        mistakes_total = 0
        for i, activity_log in enumerate(logs):
            mistakes_total += len(activity_log.mistakes)
            if body.mode == "logs":
                log_path, _ = activity_log.save(out_dir, f"log{i:04d}")
                files.append(str(log_path))
            else:
                user = (
                    ScriptedUser(body.comment_prob, seed=body.seed * 100003 + i)
                    if body.comment_prob > 0
                    else None
                )
                conversation = run_closed_loop(
                    activity_log, user=user, backend=backend, task=task
                )
                path = out_dir / f"conv{i:04d}.txt"
                path.write_text(serialize_conversation(conversation), encoding="utf-8")
                files.append(str(path))
        return GenerateJobResponse(
            out_dir=str(out_dir), files=files, mistakes_total=mistakes_total
        )

    def _load_conversations(directory: Path, limit: int | None = None):
        if not directory.is_dir():
            raise HTTPException(status_code=400, detail=f"not a directory: {directory}")
        paths = sorted(directory.glob("*.txt"))
        if limit is not None:
            paths = paths[:limit]
        conversations = []
        for p in paths:
            conversations.append(
                parse_conversation(p.read_text(encoding="utf-8"), source=p.stem)
            )
        if not conversations:
            raise HTTPException(status_code=400, detail=f"no conversations in {directory}")
        return conversations

    @app.post("/v1/jobs/dataset", dependencies=[Depends(check_auth)])
    def job_dataset(body: DatasetJobRequest) -> DatasetJobResponse:
        conversations = _load_conversations(resolve_dir(body.convos_dir))
        out_dir = workspace / "jobs" / f"dataset-{body.mode}"
        result = build_dataset(
            conversations,
            mode=body.mode,
            split=body.train_frac,
            out_dir=out_dir,
            task=task,
        )
        return DatasetJobResponse(
            train_path=str(result.train_path),
            eval_path=str(result.eval_path),
            stats_path=str(result.stats_path),
            stats=result.stats,
        )

    @app.post("/v1/jobs/evaluate", dependencies=[Depends(check_auth)])
    def job_evaluate(body: EvaluateJobRequest) -> EvaluateJobResponse:
        conversations = _load_conversations(resolve_dir(body.convos_dir), body.limit)
        try:
            backend = make_backend(body.backend, base_config)
            scorer = make_scorer(body.scorer, body.scorer_url)
        except (BadConfig, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        report, records = evaluate(
            backend,
            conversations,
            scorer,
            EvalConfig(shots=body.shots),
            task=task,
        )
        out_dir = workspace / "jobs" / "evaluate"
        out_dir.mkdir(parents=True, exist_ok=True)
        records_path = out_dir / f"records-{body.backend}-{body.scorer}.jsonl"
        save_records(records, records_path)
        return EvaluateJobResponse(
            report=report.to_dict(),
            table=render_report(report, "table"),
            records_path=str(records_path),
        )

    return app
