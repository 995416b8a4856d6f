"""Shared fixtures: parsed transcripts, task definition, corpus builders."""

from pathlib import Path

import pytest
from hypothesis import settings

from stepmate.convo import parse_conversation
from stepmate.engine import run_closed_loop
from stepmate.sim import ScriptedUser, generate_corpus
from stepmate.task import example_conversation_text, load_task

settings.register_profile("repo", deadline=None)
settings.load_profile("repo")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def task():
    return load_task()


@pytest.fixture(scope="session")
def example_text(task):
    return example_conversation_text(task)


@pytest.fixture(scope="session")
def example_convo(task, example_text):
    return parse_conversation(example_text, source="example")


@pytest.fixture(scope="session")
def guided_text():
    return (FIXTURES / "guided_session.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def guided_convo(guided_text):
    return parse_conversation(guided_text, source="guided")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


def build_oracle_corpus(count, seed, comment_prob=0.3, comment_seed=11):
    """Closed-loop conversations driven by the oracle backend."""
    conversations = []
    for log in generate_corpus(count, seed):
        user = ScriptedUser(comment_prob=comment_prob, seed=comment_seed)
        conversations.append(run_closed_loop(log, user=user))
    return conversations


@pytest.fixture(scope="session")
def oracle_corpus_small():
    return build_oracle_corpus(4, seed=21)
