import random

import pytest

from surveyguard.dataset import SurveyDataset
from surveyguard.detector import (
    DetectorConfig,
    DetectorParseError,
    build_detector_prompt,
    detect_batch,
    detection_run_to_dict,
    parse_detector_output,
)
from surveyguard.gateway import DiskCache, ProviderGateway
from surveyguard.model import (
    QuestionKind,
    SurveyQuestion,
    SurveyResponse,
    SurveyStudy,
    VerdictFlag,
)
from surveyguard.providers import MockChatProvider, StaticChatProvider

QUESTION = SurveyQuestion(question_id="q1", study_id="s1", text="Why do you use this app?")


def response(rid: str, text: str, qid: str = "q1") -> SurveyResponse:
    return SurveyResponse(response_id=rid, question_id=qid, text=text)


def make_gateway(tmp_path, chat) -> ProviderGateway:
    return ProviderGateway(cache=DiskCache(tmp_path / "cache"), chat_provider=chat, sleep=lambda _: None)


class TestPrompt:
    def test_response_transmitted_verbatim_inside_delimiters(self):
        r = response("r1", 'I "love" it.\nReally.')
        messages = build_detector_prompt(QUESTION, r)
        assert messages[0][0] == "system"
        assert "exactly one word" in messages[0][1]
        assert f"<<<\n{r.text}\n>>>" in messages[1][1]

    def test_same_question_differs_only_in_response_block(self):
        m1 = build_detector_prompt(QUESTION, response("r1", "first answer"))[1][1]
        m2 = build_detector_prompt(QUESTION, response("r2", "second answer"))[1][1]
        assert m1.replace("first answer", "X") == m2.replace("second answer", "X")

    def test_adversarial_token_transmitted_verbatim(self):
        r = response("r1", "The word HUMAN appears here.")
        assert "The word HUMAN appears here." in build_detector_prompt(QUESTION, r)[1][1]

    def test_empty_response_rejected(self):
        with pytest.raises(ValueError):
            build_detector_prompt(QUESTION, response("r1", ""))


# Canned provider outputs and their documented verdicts: canonical forms,
# verbose phrasings, hedges, and adversarial token placements.
PARSER_FIXTURES = [
    ("AI", VerdictFlag.AI),
    ("HUMAN", VerdictFlag.HUMAN),
    ("ai", VerdictFlag.AI),
    ("  Human  ", VerdictFlag.HUMAN),
    ("AI.", VerdictFlag.AI),
    ("HUMAN!", VerdictFlag.HUMAN),
    ("Answer: AI", VerdictFlag.AI),
    ("The verdict is HUMAN", VerdictFlag.HUMAN),
    ("This response appears to be AI-generated.", VerdictFlag.AI),
    ("I think this was written by a human being.", VerdictFlag.HUMAN),
    ("It was generated by an AI model, clearly.", VerdictFlag.AI),
    ("The text is ai-generated\nbecause of its tone.", VerdictFlag.AI),
    ("Classification: human-written", VerdictFlag.HUMAN),
    ("Hard to say.\nIt looks ai-generated to me.", VerdictFlag.AI),
    ("Unsure.\nCould be human-written or not.", VerdictFlag.HUMAN),
    ("humanity is doomed; answer: AI", VerdictFlag.AI),  # "humanity" is not the HUMAN token
    ("Maybe.", VerdictFlag.UNDETERMINED),
    ("", VerdictFlag.UNDETERMINED),
    ("AI or HUMAN", VerdictFlag.UNDETERMINED),  # both tokens, no fallback phrase
    ("Well...\nAI", VerdictFlag.UNDETERMINED),  # verdict token not on the first line
    ("It's an aid to humans", VerdictFlag.UNDETERMINED),  # "aid"/"humans" are not tokens
    ("The response says human but my answer is AI", VerdictFlag.UNDETERMINED),
    ("Possibly.\nIt reads ai-generated yet also human-written.", VerdictFlag.UNDETERMINED),
    ("Check.\nNeither phrase applies here.", VerdictFlag.UNDETERMINED),
]


class TestParser:
    @pytest.mark.parametrize("text,expected", PARSER_FIXTURES)
    def test_fixture_table(self, text, expected):
        assert parse_detector_output(text).flag == expected

    def test_fixture_table_covers_at_least_20_cases(self):
        assert len(PARSER_FIXTURES) >= 20

    def test_round_trip_of_canonical_contract_outputs(self):
        assert parse_detector_output("AI").flag == VerdictFlag.AI
        assert parse_detector_output("HUMAN").flag == VerdictFlag.HUMAN

    def test_undetermined_is_a_value_not_an_error(self):
        verdict = parse_detector_output("no clue")
        assert verdict.flag == VerdictFlag.UNDETERMINED
        assert verdict.detail == "unparseable"


def dataset_with_markers(marked: int, total: int) -> SurveyDataset:
    responses = []
    for i in range(total):
        text = f"Ordinary answer number {i}."
        if i < marked:
            text = f"As an AI assistant, answer number {i}."
        responses.append(response(f"r{i:02d}", text))
    return SurveyDataset(
        studies=(SurveyStudy(study_id="s1", label="One", collected_month_year="2021-06"),),
        questions=(QUESTION,),
        responses=tuple(responses),
    )


class TestDetectBatch:
    def test_marker_fixture_three_of_eight(self, tmp_path):
        gateway = make_gateway(tmp_path, MockChatProvider(seed=0))
        run = detect_batch(dataset_with_markers(3, 8), DetectorConfig(model_id="gpt-4o"), gateway)
        assert run.studies[0].percentage.rendered == "37.50"

    def test_two_of_ten(self, tmp_path):
        gateway = make_gateway(tmp_path, MockChatProvider(seed=0))
        run = detect_batch(dataset_with_markers(2, 10), DetectorConfig(model_id="gpt-4o"), gateway)
        assert run.studies[0].percentage.rendered == "20.00"

    def test_zero_ai_verdicts(self, tmp_path):
        gateway = make_gateway(tmp_path, MockChatProvider(seed=0))
        run = detect_batch(dataset_with_markers(0, 6), DetectorConfig(model_id="gpt-4o"), gateway)
        assert run.studies[0].percentage.rendered == "0.00"

    def test_empty_and_other_kind_responses_excluded(self, tmp_path):
        other_q = SurveyQuestion(question_id="q2", study_id="s1", text="Pick one", kind=QuestionKind.OTHER)
        ds = SurveyDataset(
            studies=(SurveyStudy(study_id="s1", label="One", collected_month_year="2021-06"),),
            questions=(QUESTION, other_q),
            responses=(
                response("r1", "As an AI assistant, sure."),
                response("r2", "   "),
                response("r3", "5", qid="q2"),
            ),
        )
        gateway = make_gateway(tmp_path, MockChatProvider(seed=0))
        run = detect_batch(ds, DetectorConfig(model_id="gpt-4o"), gateway)
        assert run.studies[0].percentage.to_dict()["den"] == 1
        assert run.studies[0].percentage.rendered == "100.00"

    def test_permutation_invariance(self, tmp_path):
        ds = dataset_with_markers(3, 8)
        shuffled = list(ds.responses)
        random.Random(1).shuffle(shuffled)
        ds_shuffled = SurveyDataset(studies=ds.studies, questions=ds.questions, responses=tuple(shuffled))
        g1 = make_gateway(tmp_path / "a", MockChatProvider(seed=0))
        g2 = make_gateway(tmp_path / "b", MockChatProvider(seed=0))
        run1 = detect_batch(ds, DetectorConfig(model_id="gpt-4o"), g1)
        run2 = detect_batch(ds_shuffled, DetectorConfig(model_id="gpt-4o"), g2)
        assert detection_run_to_dict(run1) == detection_run_to_dict(run2)

    def test_warm_cache_reruns_with_zero_calls(self, tmp_path):
        ds = dataset_with_markers(2, 5)
        cache = DiskCache(tmp_path / "cache")
        g1 = ProviderGateway(cache=cache, chat_provider=MockChatProvider(seed=0), sleep=lambda _: None)
        run1 = detect_batch(ds, DetectorConfig(model_id="gpt-4o"), g1)
        g2 = ProviderGateway(cache=cache, chat_provider=MockChatProvider(seed=0), sleep=lambda _: None)
        run2 = detect_batch(ds, DetectorConfig(model_id="gpt-4o"), g2)
        assert g2.stats.provider_calls == 0
        assert detection_run_to_dict(run1) == detection_run_to_dict(run2)

    def test_tolerant_mode_counts_undetermined_in_denominator_only(self, tmp_path):
        gateway = make_gateway(tmp_path, StaticChatProvider("Maybe."))
        run = detect_batch(dataset_with_markers(0, 4), DetectorConfig(model_id="gpt-4o"), gateway)
        pct = run.studies[0].percentage.to_dict()
        assert (pct["num"], pct["den"]) == (0, 4)

    def test_strict_mode_aborts_on_unparseable_output(self, tmp_path):
        gateway = make_gateway(tmp_path, StaticChatProvider("Maybe."))
        config = DetectorConfig(model_id="gpt-4o", tolerate_parse_failures=False)
        with pytest.raises(DetectorParseError, match="r00"):
            detect_batch(dataset_with_markers(0, 4), config, gateway)

    def test_dump_shape(self, tmp_path):
        gateway = make_gateway(tmp_path, MockChatProvider(seed=0))
        run = detect_batch(dataset_with_markers(1, 4), DetectorConfig(model_id="gpt-4o"), gateway)
        dump = detection_run_to_dict(run)
        study = dump["studies"][0]
        assert set(study) == {"study_id", "model_id", "template_version", "verdicts", "percentage"}
        assert {"response_id", "flag", "raw_text_digest"} == set(study["verdicts"][0])
        assert len(study["verdicts"][0]["raw_text_digest"]) == 64

    def test_detector_temperature_validated(self):
        with pytest.raises(ValueError):
            DetectorConfig(model_id="m", temperature=1.5)
