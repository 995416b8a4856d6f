"""Command-line entry points; thin wrappers over the package modules."""

from __future__ import annotations

import logging
from pathlib import Path

import click

from .backends import AssistRequest, BackendError, make_backend
from .convo import ClockTime, ConversationError, parse_conversation, serialize_conversation
from .dataset import build_dataset
from .engine import EngineConfig, run_closed_loop
from .evaluation import EvalConfig, evaluate, render_report, save_records
from .prompts import build_datagen_prompt
from .scoring import make_scorer
from .sim import ScriptedUser, default_profile, generate_corpus, generate_log, load_log
from .task import load_task

log = logging.getLogger(__name__)


def _engine_config(ctx_params: dict) -> EngineConfig:
    return EngineConfig(
        backend=ctx_params.get("backend", "oracle"),
        endpoint=ctx_params.get("endpoint"),
        model=ctx_params.get("model"),
        auth_env=ctx_params.get("auth_env"),
        shots=ctx_params.get("shots", 0),
    )


def _load_convos(directory: str, limit: int | None = None):
    paths = sorted(Path(directory).glob("*.txt"))
    if limit is not None:
        paths = paths[:limit]
    conversations = []
    for p in paths:
        conversations.append(parse_conversation(p.read_text(encoding="utf-8"), source=p.stem))
    if not conversations:
        raise click.ClickException(f"no .txt conversations found in {directory}")
    return conversations


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Proactive assembly assistant workbench."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command("gen-logs")
@click.option("--count", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--skill", default=None, type=click.FloatRange(0.0, 1.0),
              help="Fixed skill; omitted means uniform random per log.")
@click.option("--start", default="09:00:00 AM", show_default=True,
              help="Start-of-session clock time.")
def gen_logs(count: int, seed: int, out: str, skill: float | None, start: str) -> None:
    """Generate seeded activity logs with recorded mistake lists."""
    start_time = ClockTime.parse(start)
    sampler = None
    if skill is not None:
        fixed = skill
        sampler = lambda rng: default_profile(skill=fixed)
    logs = generate_corpus(count, seed, profile_sampler=sampler, start_time=start_time)
    total_mistakes = 0
    for i, activity_log in enumerate(logs):
        activity_log.save(out, f"log{i:04d}")
        total_mistakes += len(activity_log.mistakes)
    click.echo(f"wrote {count} logs to {out} ({total_mistakes} mistakes total)")


@main.command("gen-convos")
@click.option("--logs", "logs_dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Use pre-generated logs; otherwise generate --count fresh ones.")
@click.option("--count", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--backend", default="oracle", show_default=True,
              help="oracle | oracle-answers | chatty | remote | datagen")
@click.option("--comment-prob", default=0.3, show_default=True, type=click.FloatRange(0.0, 1.0))
@click.option("--endpoint", default=None, help="Chat-completions base URL for remote/datagen.")
@click.option("--model", default=None)
@click.option("--auth-env", default=None, help="Name of the env var holding the API token.")
def gen_convos(
    logs_dir: str | None,
    count: int,
    seed: int,
    out: str,
    backend: str,
    comment_prob: float,
    endpoint: str | None,
    model: str | None,
    auth_env: str | None,
) -> None:
    """Turn activity logs into full conversations.

    Local backends run the closed assistant loop; the 'datagen' backend asks
    a remote LLM to write the whole conversation from the activity log.
    """
    task = load_task()
    if logs_dir:
        logs = [load_log(p) for p in sorted(Path(logs_dir).glob("*.txt"))]
        if not logs:
            raise click.ClickException(f"no logs found in {logs_dir}")
    else:
        logs = generate_corpus(count, seed)

    out_path = Path(out)
    out_path.mkdir(parents=True, exist_ok=True)
    written = 0
    failures = 0

    if backend == "datagen":
        chat = make_backend(
            "remote",
            EngineConfig(backend="remote", endpoint=endpoint, model=model, auth_env=auth_env),
        )
        for i, activity_log in enumerate(logs):
            system = build_datagen_prompt(task, activity_log.mistakes)
            user = serialize_conversation(activity_log.conversation)
            try:
                raw = chat.generate(AssistRequest(system, user))
                conversation = parse_conversation(raw, source=f"conv{i:04d}")
            except (BackendError, ConversationError) as exc:
                log.warning("conversation %d rejected: %s", i, exc)
                failures += 1
                continue
            (out_path / f"conv{i:04d}.txt").write_text(
                serialize_conversation(conversation), encoding="utf-8"
            )
            written += 1
    else:
        config = EngineConfig(backend=backend, endpoint=endpoint, model=model, auth_env=auth_env)
        chat = make_backend(backend, config)
        for i, activity_log in enumerate(logs):
            user = ScriptedUser(comment_prob, seed=seed * 100003 + i) if comment_prob > 0 else None
            conversation = run_closed_loop(activity_log, user=user, backend=chat, task=task)
            (out_path / f"conv{i:04d}.txt").write_text(
                serialize_conversation(conversation), encoding="utf-8"
            )
            written += 1

    click.echo(f"wrote {written} conversations to {out} ({failures} rejected)")


@main.command("build-dataset")
@click.option("--convos", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--mode", default="uwa", show_default=True, type=click.Choice(["plain", "uwa"]))
@click.option("--split", default=0.9, show_default=True, type=click.FloatRange(0.0, 1.0, min_open=True))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def build_dataset_cmd(convos: str, mode: str, split: float, out: str) -> None:
    """Build finetuning JSONL files (train/eval) plus a stats sidecar."""
    corpus = _load_convos(convos)
    result = build_dataset(corpus, mode=mode, split=split, out_dir=out)
    click.echo(
        f"wrote {result.stats['train_examples']} train / "
        f"{result.stats['eval_examples']} eval examples "
        f"({result.stats['uwa_substituted']} whim-substituted) to {out}"
    )


@main.command("evaluate")
@click.option("--convos", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--backend", default="oracle", show_default=True)
@click.option("--scorer", default="lexical", show_default=True, type=click.Choice(["lexical", "remote"]))
@click.option("--scorer-url", default=None, help="Base URL of the scoring service.")
@click.option("--shots", default=0, show_default=True, type=click.Choice(["0", "1", "4"]))
@click.option("--limit", default=None, type=click.IntRange(min=1), help="Evaluate at most N conversations.")
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--auth-env", default=None)
@click.option("--report-out", default=None, type=click.Path(dir_okay=False),
              help="Write the structured report here.")
@click.option("--records-out", default=None, type=click.Path(dir_okay=False),
              help="Write per-trigger records (JSONL) here.")
def evaluate_cmd(
    convos: str,
    backend: str,
    scorer: str,
    scorer_url: str | None,
    shots: str,
    limit: int | None,
    endpoint: str | None,
    model: str | None,
    auth_env: str | None,
    report_out: str | None,
    records_out: str | None,
) -> None:
    """Teacher-forced evaluation of a backend over ground-truth conversations."""
    conversations = _load_convos(convos, limit)
    config = EngineConfig(backend=backend, endpoint=endpoint, model=model, auth_env=auth_env)
    chat = make_backend(backend, config)
    judge = make_scorer(scorer, scorer_url)
    report, records = evaluate(chat, conversations, judge, EvalConfig(shots=int(shots)))
    click.echo(render_report(report, "table"))
    if report_out:
        Path(report_out).write_text(render_report(report, "structured"), encoding="utf-8")
        click.echo(f"report: {report_out}")
    if records_out:
        save_records(records, records_out)
        click.echo(f"records: {records_out}")


@main.command("simulate")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--skill", default=0.5, show_default=True, type=click.FloatRange(0.0, 1.0))
@click.option("--backend", default="oracle", show_default=True)
@click.option("--comment-prob", default=0.3, show_default=True, type=click.FloatRange(0.0, 1.0))
@click.option("--start", default="09:00:00 AM", show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
def simulate(seed: int, skill: float, backend: str, comment_prob: float, start: str, out: str | None) -> None:
    """Run one closed-loop session and print (or save) the conversation."""
    activity_log = generate_log(default_profile(skill=skill), seed, ClockTime.parse(start))
    user = ScriptedUser(comment_prob, seed=seed) if comment_prob > 0 else None
    chat = make_backend(backend, EngineConfig(backend=backend))
    conversation = run_closed_loop(activity_log, user=user, backend=chat)
    text = serialize_conversation(conversation)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)
    if activity_log.mistakes:
        click.echo(
            "mistakes: " + ", ".join(f"{m.kind.value}@{m.time.render()}" for m in activity_log.mistakes),
            err=True,
        )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Engine config JSON; STEPMATE_* env vars override.")
@click.option("--workspace", default="stepmate-workspace", show_default=True)
@click.option("--session-ttl", default=1800.0, show_default=True, type=float)
def serve(host: str, port: int, config_path: str | None, workspace: str, session_ttl: float) -> None:
    """Run the HTTP session server."""
    import uvicorn

    from .server import create_app

    config = EngineConfig.from_sources(config_path)
    app = create_app(config=config, workspace=workspace, session_ttl=session_ttl)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
