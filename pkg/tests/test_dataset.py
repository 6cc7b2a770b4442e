import json
from fractions import Fraction

import pytest

from conftest import write_bundle
from surveyguard.dataset import (
    DatasetFormat,
    ReportFormat,
    detect_format,
    load_dataset,
    write_dataset,
    write_report,
)
from surveyguard.errors import DataError
from surveyguard.model import Cohort, QuestionKind
from surveyguard.report import DetectionReport, Percent


def minimal_bundle(tmp_path):
    return write_bundle(
        tmp_path / "bundle",
        studies=[["s1", "Study one", "2021-06", "software", "mturk"]],
        questions=[["q1", "s1", "open_ended", "Why do you use this app?"]],
        responses=[
            ["r1", "q1", "Because it is quick.", "2021-06-01"],
            ["r2", "q1", "For work.", "2021-06-02"],
        ],
    )


class TestLoadBundle:
    def test_minimal_valid_bundle(self, tmp_path):
        ds = load_dataset(minimal_bundle(tmp_path), DatasetFormat.CSV_BUNDLE)
        assert len(ds.studies) == 1
        assert len(ds.questions) == 1
        assert len(ds.responses) == 2
        assert ds.studies[0].cohort == Cohort.PRE_2022
        assert ds.responses[0].word_count == 4

    def test_dangling_question_reference(self, tmp_path):
        path = write_bundle(
            tmp_path / "bundle",
            studies=[["s1", "Study", "2021-06", "d", "p"]],
            questions=[["q1", "s1", "open_ended", "Question?"]],
            responses=[["r1", "q9", "text", ""]],
        )
        with pytest.raises(DataError, match='"q9"'):
            load_dataset(path, DatasetFormat.CSV_BUNDLE)

    def test_duplicate_response_id(self, tmp_path):
        path = write_bundle(
            tmp_path / "bundle",
            studies=[["s1", "Study", "2021-06", "d", "p"]],
            questions=[["q1", "s1", "open_ended", "Question?"]],
            responses=[["r1", "q1", "a", ""], ["r1", "q1", "b", ""]],
        )
        with pytest.raises(DataError, match='duplicate response_id "r1"'):
            load_dataset(path, DatasetFormat.CSV_BUNDLE)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="missing file"):
            load_dataset(tmp_path / "nope", DatasetFormat.CSV_BUNDLE)

    def test_bad_header_reports_schema_violation(self, tmp_path):
        path = tmp_path / "bundle"
        write_bundle(
            path,
            studies=[["s1", "Study", "2021-06", "d", "p"]],
            questions=[["q1", "s1", "open_ended", "Question?"]],
            responses=[["r1", "q1", "a", ""]],
        )
        (path / "studies.csv").write_text("wrong,header\nrow,two\n", encoding="utf-8")
        with pytest.raises(DataError, match="expected header"):
            load_dataset(path, DatasetFormat.CSV_BUNDLE)

    def test_bad_month_names_study_and_row(self, tmp_path):
        path = write_bundle(
            tmp_path / "bundle",
            studies=[["s1", "Study", "junk", "d", "p"]],
            questions=[],
            responses=[],
        )
        with pytest.raises(DataError, match="bad date"):
            load_dataset(path, DatasetFormat.CSV_BUNDLE)

    def test_unknown_question_kind(self, tmp_path):
        path = write_bundle(
            tmp_path / "bundle",
            studies=[["s1", "Study", "2021-06", "d", "p"]],
            questions=[["q1", "s1", "multiple_choice", "Pick one"]],
            responses=[],
        )
        with pytest.raises(DataError, match='column "kind"'):
            load_dataset(path, DatasetFormat.CSV_BUNDLE)

    def test_empty_response_text_is_legal(self, tmp_path):
        path = write_bundle(
            tmp_path / "bundle",
            studies=[["s1", "Study", "2021-06", "d", "p"]],
            questions=[["q1", "s1", "open_ended", "Question?"]],
            responses=[["r1", "q1", "", ""]],
        )
        ds = load_dataset(path, DatasetFormat.CSV_BUNDLE)
        assert ds.responses[0].text == ""

    def test_seven_hundred_word_corpus_shape(self, tmp_path):
        # three studies whose response counts are 170, 313, 160
        counts = {"s2": 170, "s3": 313, "s4": 160}
        responses = []
        for sid, n in counts.items():
            for i in range(n):
                responses.append([f"{sid}-r{i:03d}", f"{sid}-q", f"answer {i}", ""])
        path = write_bundle(
            tmp_path / "bundle",
            studies=[
                ["s2", "Two", "2021-06", "software", "reddit"],
                ["s3", "Three", "2021-06", "software", "reddit"],
                ["s4", "Four", "2021-09", "marketplace", "mturk"],
            ],
            questions=[[f"{sid}-q", sid, "open_ended", "How was it?"] for sid in counts],
            responses=responses,
        )
        ds = load_dataset(path, DatasetFormat.CSV_BUNDLE)
        assert len(ds.responses) == 643
        per_study = {}
        questions = ds.question_index()
        for r in ds.responses:
            sid = questions[r.question_id].study_id
            per_study[sid] = per_study.get(sid, 0) + 1
        assert per_study == counts


class TestRoundTrip:
    def test_bundle_round_trip_fixed_point(self, tmp_path, corpus_path):
        ds = load_dataset(corpus_path, DatasetFormat.CSV_BUNDLE)
        echo_dir = tmp_path / "echo"
        write_dataset(ds, echo_dir, DatasetFormat.CSV_BUNDLE)
        assert load_dataset(echo_dir, DatasetFormat.CSV_BUNDLE) == ds

    def test_json_round_trip_fixed_point(self, tmp_path, corpus_path):
        ds = load_dataset(corpus_path, DatasetFormat.CSV_BUNDLE)
        out = tmp_path / "ds.json"
        write_dataset(ds, out, DatasetFormat.SINGLE_JSON)
        assert load_dataset(out, DatasetFormat.SINGLE_JSON) == ds

    def test_write_twice_is_byte_identical(self, tmp_path, corpus_path):
        ds = load_dataset(corpus_path, DatasetFormat.CSV_BUNDLE)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_dataset(ds, a, DatasetFormat.SINGLE_JSON)
        write_dataset(ds, b, DatasetFormat.SINGLE_JSON)
        assert a.read_bytes() == b.read_bytes()

    def test_detect_format(self, tmp_path, corpus_path):
        assert detect_format(corpus_path) == DatasetFormat.CSV_BUNDLE
        assert detect_format(tmp_path / "x.json") == DatasetFormat.SINGLE_JSON


class TestSingleJson:
    def test_load(self, tmp_path):
        payload = {
            "studies": [
                {"study_id": "s1", "label": "One", "month_year": "2023-03", "domain": "d", "platform": "p"}
            ],
            "questions": [{"question_id": "q1", "study_id": "s1", "kind": "open_ended", "text": "Why?"}],
            "responses": [{"response_id": "r1", "question_id": "q1", "text": "Because."}],
        }
        path = tmp_path / "ds.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        ds = load_dataset(path, DatasetFormat.SINGLE_JSON)
        assert ds.studies[0].cohort == Cohort.POST_2022
        assert ds.questions[0].kind == QuestionKind.OPEN_ENDED

    def test_missing_column(self, tmp_path):
        payload = {"studies": [{"study_id": "s1"}], "questions": [], "responses": []}
        path = tmp_path / "ds.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(DataError, match="missing column"):
            load_dataset(path, DatasetFormat.SINGLE_JSON)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "ds.json"
        path.write_text("{nope", encoding="utf-8")
        with pytest.raises(DataError, match="invalid JSON"):
            load_dataset(path, DatasetFormat.SINGLE_JSON)


def tiny_report() -> DetectionReport:
    sweep = {
        "convention": "pooled_weighted",
        "thresholds": [0.7, 0.8, 0.9],
        "strategies": ["basic"],
        "study_order": ["s1"],
        "cohorts": {"s1": "pre_2022"},
        "rows": [
            {
                "threshold": th,
                "strategy": "basic",
                "per_study": {"s1": {"num": 1, "den": 4, "rendered": "25.00"}},
                "averages": {"pre_2022": {"num": 1, "den": 4, "rendered": "25.00"}},
            }
            for th in (0.7, 0.8, 0.9)
        ],
    }
    return DetectionReport(
        provenance={"seed": 0},
        llm_detection=(),
        signature_detection={"sweep": sweep},
    )


class TestWriteReport:
    def test_markdown_has_one_row_per_threshold_strategy(self, tmp_path):
        path = tmp_path / "report.md"
        write_report(tiny_report(), path, ReportFormat.MARKDOWN_TABLE)
        text = path.read_text(encoding="utf-8")
        data_rows = [l for l in text.splitlines() if l.startswith("| 0.")]
        assert len(data_rows) == 3  # one per (threshold, strategy)

    def test_json_written_twice_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_report(tiny_report(), a, ReportFormat.JSON)
        write_report(tiny_report(), b, ReportFormat.JSON)
        assert a.read_bytes() == b.read_bytes()
        payload = json.loads(a.read_text(encoding="utf-8"))
        assert payload["signature_detection"]["sweep"]["rows"][0]["per_study"]["s1"]["rendered"] == "25.00"

    def test_percentage_rendering_two_decimal_half_up(self):
        assert Percent(value=Fraction("6.155")).rendered == "6.16"

    def test_csv_output(self, tmp_path):
        path = tmp_path / "report.csv"
        write_report(tiny_report(), path, ReportFormat.CSV)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("section,")
        assert any("signature_detection,basic,0.7,s1,1,4,25.00" == l for l in lines)
