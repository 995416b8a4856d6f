"""Scoring, the correctness judge, aggregation, and report rendering."""

import json
import math

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stepmate.backends import AssistRequest, ChattyAssistant, OracleAssistant
from stepmate.evaluation import (
    EmptyEvaluation,
    EvalConfig,
    EvalRecord,
    aggregate,
    evaluate,
    f_score,
    load_records,
    parse_structured_report,
    render_report,
    save_records,
)
from stepmate.scoring import (
    LexicalScorer,
    RemoteScorer,
    ScorerUnavailable,
    ScoreTriple,
    judge_correct,
    lexical_similarity,
    make_scorer,
)


@pytest.fixture(scope="module")
def hand_scored(fixtures_dir):
    path = fixtures_dir / "eval_records.json"
    return [EvalRecord.from_dict(d) for d in json.loads(path.read_text())]


@pytest.fixture(scope="module")
def golden_report(fixtures_dir):
    from stepmate.evaluation import MetricsReport

    path = fixtures_dir / "metrics_report_golden.json"
    return MetricsReport.from_dict(json.loads(path.read_text()))


class TestJudge:
    def test_high_similarity_suffices(self):
        assert judge_correct(ScoreTriple(similarity=0.9, entailment=-3.0))

    def test_positive_entailment_rescues_low_similarity(self):
        assert judge_correct(ScoreTriple(similarity=0.1, entailment=0.4))

    def test_both_low_fails(self):
        assert not judge_correct(ScoreTriple(similarity=0.1, entailment=-0.4))

    def test_thresholds_are_strict(self):
        assert not judge_correct(ScoreTriple(similarity=0.3, entailment=0.0))

    def test_missing_entailment_leaves_similarity_alone(self):
        assert judge_correct(ScoreTriple(similarity=0.5))
        assert not judge_correct(ScoreTriple(similarity=0.2))

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.one_of(st.none(), st.floats(min_value=-5.0, max_value=5.0)),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=-1.0, max_value=1.0),
    )
    def test_judge_is_the_disjunction(self, sim, ent, sim_t, ent_t):
        triple = ScoreTriple(similarity=sim, entailment=ent)
        expected = sim > sim_t or (ent is not None and ent > ent_t)
        assert judge_correct(triple, sim_t, ent_t) == expected


class TestLexicalSimilarity:
    def test_identical_texts_score_one(self):
        assert lexical_similarity("Sand the top.", "Sand the top.") == pytest.approx(1.0)

    def test_disjoint_texts_score_zero(self):
        assert lexical_similarity("drill the screws", "lift every leg") == 0.0

    def test_partial_overlap(self):
        # "sand the top" vs "sand the leg": two of three unit counts shared.
        value = lexical_similarity("sand the top", "sand the leg")
        assert value == pytest.approx(2 / 3)

    def test_case_and_punctuation_insensitive(self):
        assert lexical_similarity("Sand, the TOP!", "sand the top") == pytest.approx(1.0)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            lexical_similarity("", "x")

    def test_tokenless_text_scores_zero(self):
        assert lexical_similarity("?!", "sand") == 0.0

    @given(
        st.text(alphabet="abcdefg ", min_size=1).filter(str.strip),
        st.text(alphabet="abcdefg ", min_size=1).filter(str.strip),
    )
    def test_symmetry_and_range(self, a, b):
        ab = lexical_similarity(a, b)
        assert 0.0 <= ab <= 1.0 + 1e-12
        assert ab == pytest.approx(lexical_similarity(b, a))


class TestFScore:
    def test_harmonic_mean(self):
        assert f_score(1.0, 1.0) == 1.0
        assert f_score(0.0, 0.0) == 0.0
        assert f_score(1.0, 0.5) == pytest.approx(2 / 3)

    def test_published_operating_point(self):
        assert f_score(0.72, 0.74) == pytest.approx(0.73, abs=0.005)

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_bounded_by_min_and_max(self, r, p):
        f = f_score(r, p)
        assert 0.0 <= f <= 1.0 + 1e-12
        assert f <= max(r, p) + 1e-12
        if r > 0 and p > 0:
            assert f >= min(r, p) * 2 * max(r, p) / (r + p) - 1e-12
            assert f == pytest.approx(2 * r * p / (r + p))


class TestEvalRecordValidation:
    def test_scores_required_exactly_when_both_texts_present(self):
        with pytest.raises(ValueError):
            EvalRecord("c", 0, 0, None, "gt", "gen", None, None, 0.1)
        with pytest.raises(ValueError):
            EvalRecord("c", 0, 0, None, "", "", ScoreTriple(1.0), True, 0.1)

    def test_correct_tied_to_scores(self):
        with pytest.raises(ValueError):
            EvalRecord("c", 0, 0, None, "gt", "gen", ScoreTriple(1.0), None, 0.1)

    def test_round_trips_through_dict(self, hand_scored):
        for record in hand_scored:
            assert EvalRecord.from_dict(record.to_dict()) == record


class TestAggregate:
    def test_reproduces_hand_computed_report(self, hand_scored, golden_report):
        report = aggregate(hand_scored, backend_name="stub", scorer_name="manual")
        assert report.backend == golden_report.backend
        got, want = report.to_dict(), golden_report.to_dict()

        def walk(a, b, path=""):
            if isinstance(a, dict):
                assert set(a) == set(b), path
                for key in a:
                    walk(a[key], b[key], f"{path}/{key}")
            elif isinstance(a, float) and isinstance(b, float):
                assert a == pytest.approx(b, rel=1e-12), path
            else:
                assert a == b, path

        walk(got, want)

    def test_recall_none_without_support(self, hand_scored):
        report = aggregate(hand_scored)
        misc = report.categories["miscellaneous"]
        assert misc.support == 0
        assert misc.recall is None
        assert misc.mean_similarity is None

    def test_tnr_counts_silent_agreement(self, hand_scored):
        report = aggregate(hand_scored)
        assert report.tnr == pytest.approx(0.5)
        assert report.counts["gt_empty"] == 2
        assert report.counts["true_negatives"] == 1

    def test_precision_counts_every_spoken_turn(self, hand_scored):
        report = aggregate(hand_scored)
        # 5 generated turns, 3 of them correct.
        assert report.counts["gen_nonempty"] == 5
        assert report.overall_precision == pytest.approx(0.6)

    def test_f_combines_micro_rates(self, hand_scored):
        report = aggregate(hand_scored)
        assert report.f_score == pytest.approx(
            f_score(report.overall_recall, report.overall_precision)
        )

    def test_no_records_rejected(self):
        with pytest.raises(EmptyEvaluation):
            aggregate([])

    def test_tnr_none_without_silent_turns(self, hand_scored):
        spoken = [r for r in hand_scored if r.gt_text]
        report = aggregate(spoken)
        assert report.tnr is None


class TestRenderReport:
    def test_table_matches_frozen_layout(self, hand_scored, fixtures_dir):
        golden = (fixtures_dir / "report_table_golden.txt").read_text(encoding="utf-8")
        report = aggregate(hand_scored, backend_name="stub", scorer_name="manual")
        assert render_report(report, "table") == golden

    def test_structured_round_trips(self, hand_scored):
        report = aggregate(hand_scored, backend_name="stub", scorer_name="manual")
        text = render_report(report, "structured")
        assert parse_structured_report(text) == report

    def test_unknown_format_rejected(self, hand_scored):
        report = aggregate(hand_scored)
        with pytest.raises(ValueError):
            render_report(report, "yaml")

    def test_empty_cells_render_as_dashes(self, hand_scored):
        report = aggregate(hand_scored)
        table = render_report(report, "table")
        row = table.splitlines()[2]
        assert "-" in row  # miscellaneous has no support


class TestRecordsFile:
    def test_save_load_round_trip(self, tmp_path, hand_scored):
        path = tmp_path / "records.jsonl"
        save_records(hand_scored, path)
        assert load_records(path) == hand_scored


class TestRemoteScorer:
    @staticmethod
    def make(handler):
        transport = httpx.MockTransport(handler)
        return RemoteScorer(
            "http://scorer.example", client=httpx.Client(transport=transport)
        )

    def test_single_score_request_shape(self):
        seen = {}

        def handler(request):
            seen["path"] = request.url.path
            seen["body"] = json.loads(request.content)
            return httpx.Response(
                200, json={"similarity": 0.8, "bertscore_f1": 0.9, "entailment": 1.5}
            )

        scorer = self.make(handler)
        triple = scorer.score("candidate text", "reference text")
        assert triple == ScoreTriple(0.8, 0.9, 1.5)
        assert seen["path"] == "/v1/score"
        assert seen["body"]["candidate"] == "candidate text"
        assert seen["body"]["reference"] == "reference text"
        assert seen["body"]["premise"] == "candidate"
        assert set(seen["body"]["metrics"]) == {"similarity", "bertscore", "entailment"}

    def test_batch_cardinality_enforced(self):
        def handler(request):
            return httpx.Response(200, json={"results": [{"similarity": 1.0}]})

        scorer = self.make(handler)
        with pytest.raises(ScorerUnavailable):
            scorer.score_batch([("a", "b"), ("c", "d")])

    def test_http_error_surfaces_as_unavailable(self):
        scorer = self.make(lambda r: httpx.Response(503, text="loading"))
        with pytest.raises(ScorerUnavailable):
            scorer.score("a", "b")

    def test_malformed_payload_surfaces_as_unavailable(self):
        scorer = self.make(lambda r: httpx.Response(200, json={"sim": 1.0}))
        with pytest.raises(ScorerUnavailable):
            scorer.score("a", "b")

    def test_empty_batch_needs_no_network(self):
        def handler(request):  # pragma: no cover - must never run
            raise AssertionError("no request expected")

        assert self.make(handler).score_batch([]) == []


class TestMakeScorer:
    def test_lexical(self):
        assert make_scorer("lexical").name == "lexical"

    def test_remote_requires_url(self):
        with pytest.raises(ValueError):
            make_scorer("remote")
        assert make_scorer("remote", "http://x").name == "remote"

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            make_scorer("bert")


class TestEvaluateLoop:
    def test_oracle_is_perfect_on_its_own_conversations(self, oracle_corpus_small, task):
        report, records = evaluate(
            OracleAssistant(), oracle_corpus_small, LexicalScorer(), task=task
        )
        assert report.overall_recall == 1.0
        assert report.overall_precision == 1.0
        assert report.f_score == 1.0
        assert report.tnr == 1.0
        assert len(records) == report.counts["triggers"]

    def test_chatty_never_earns_tnr(self, oracle_corpus_small, task):
        report, _ = evaluate(
            ChattyAssistant(), oracle_corpus_small, LexicalScorer(), task=task
        )
        assert report.tnr == 0.0
        assert report.counts["gen_nonempty"] == report.counts["triggers"]

    def test_prompts_are_teacher_forced(self, oracle_corpus_small, task):
        class Probe:
            kind = "probe"

            def __init__(self, reply):
                self.reply = reply
                self.prompts = []

            def generate(self, request: AssistRequest) -> str:
                self.prompts.append(request.user)
                return self.reply

        quiet = Probe("")
        loud = Probe("I interject after every trigger!")
        convos = oracle_corpus_small[:2]
        evaluate(quiet, convos, LexicalScorer(), task=task)
        evaluate(loud, convos, LexicalScorer(), task=task)
        # The generated replies never leak into subsequent prompts.
        assert quiet.prompts == loud.prompts

    def test_latency_is_recorded(self, oracle_corpus_small, task):
        report, records = evaluate(
            OracleAssistant(), oracle_corpus_small[:1], LexicalScorer(), task=task
        )
        assert report.mean_latency >= 0.0
        assert report.mean_latency == pytest.approx(
            sum(r.latency for r in records) / len(records)
        )

    def test_empty_corpus_rejected(self, task):
        with pytest.raises(EmptyEvaluation):
            evaluate(OracleAssistant(), [], LexicalScorer(), task=task)

    def test_scorer_outage_propagates(self, oracle_corpus_small, task):
        class DeadScorer:
            name = "dead"

            def score(self, candidate, reference):
                raise ScorerUnavailable("no models")

            def score_batch(self, pairs):
                raise ScorerUnavailable("no models")

        with pytest.raises(ScorerUnavailable):
            evaluate(
                OracleAssistant(), oracle_corpus_small, DeadScorer(), task=task
            )

    def test_excluding_miscellaneous_is_config_driven(self, oracle_corpus_small, task):
        config = EvalConfig(include_miscellaneous=False)
        report, _ = evaluate(
            ChattyAssistant(), oracle_corpus_small, LexicalScorer(),
            config=config, task=task,
        )
        assert report.include_miscellaneous is False
        assert "excluding miscellaneous" in render_report(report, "table")
