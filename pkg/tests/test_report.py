"""Report rendering: exact table shape, lossless JSON, stable CSV."""
import csv
import io
import json
import re

import pytest

from chunkbench.chunkers import ChunkConfig, ChunkMethod
from chunkbench.corpus import load_mini_corpus
from chunkbench.embedding import ProviderConfig
from chunkbench.evaluation import run_evaluation
from chunkbench.metrics import METRIC_KEYS
from chunkbench.report import (
    REPORT_FORMATS,
    REPORT_SCHEMA,
    SUMMARY_COLUMNS,
    parse_report,
    render_csv,
    render_json,
    render_markdown,
    render_report,
    report_from_dict,
    report_to_dict,
)


@pytest.fixture(scope="module")
def report():
    docs, qa = load_mini_corpus()
    return run_evaluation(docs, qa, list(ChunkMethod), ChunkConfig(),
                          ProviderConfig(dim=256), k_retrieve=3, folds=3, seed=42)


def _summary_header(md: str):
    for line in md.splitlines():
        if line.startswith("| Method"):
            return [c.strip() for c in line.strip("|").split("|")]
    raise AssertionError("summary table header not found")


class TestMarkdown:
    def test_exact_summary_columns(self, report):
        md = render_markdown(report)
        assert _summary_header(md) == list(SUMMARY_COLUMNS) == [
            "Method", "Chunks QTY", "Avg Retr. (L2)↓", "Khmer Cov.↑",
            "Ans. Rel. (Cos)↑", "Khmer IoU↑"]

    def test_mean_pm_std_cells(self, report):
        md = render_markdown(report)
        row = next(l for l in md.splitlines() if l.startswith("| Recursive"))
        cells = [c.strip() for c in row.strip("|").split("|")]
        assert len(cells) == 6
        assert cells[1].isdigit()
        for cell in cells[2:]:
            assert re.fullmatch(r"-?\d+\.\d{4} ± \d+\.\d{4}", cell), cell

    def test_method_display_names(self, report):
        md = render_markdown(report)
        for name in ("Recursive", "Khmer-Aware", "Sentence-based", "LLM"):
            assert f"| {name} " in md

    def test_t_test_section_present(self, report):
        md = render_markdown(report)
        assert "## Paired t-tests" in md
        n_pairs = len(list(ChunkMethod)) * (len(list(ChunkMethod)) - 1) // 2
        body = md.split("## Paired t-tests", 1)[1]
        rows = [l for l in body.splitlines() if l.startswith("|") and "---" not in l]
        assert len(rows) == 1 + n_pairs * len(METRIC_KEYS)  # header + data

    def test_render_deterministic(self, report):
        assert render_markdown(report) == render_markdown(report)


class TestJson:
    def test_schema_and_losslessness(self, report):
        text = render_json(report)
        obj = json.loads(text)
        assert obj["schema"] == REPORT_SCHEMA
        back = parse_report(text)
        assert back == report

    def test_parse_then_markdown_identical(self, report):
        direct = render_markdown(report)
        via_json = render_markdown(parse_report(render_json(report)))
        assert via_json == direct

    def test_sorted_keys_and_trailing_newline(self, report):
        text = render_json(report)
        assert text.endswith("\n")
        obj = json.loads(text)
        assert text == json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def test_khmer_not_escaped(self, report):
        assert "\\u17" not in render_json(report)

    def test_schema_mismatch_rejected(self, report):
        obj = report_to_dict(report)
        obj["schema"] = "chunkbench-report/999"
        with pytest.raises(ValueError):
            report_from_dict(obj)

    def test_byte_stable(self, report):
        assert render_json(report) == render_json(report)


class TestCsv:
    def test_summary_rows_only(self, report):
        rows = list(csv.reader(io.StringIO(render_csv(report))))
        assert rows[0] == ["method", "chunk_count"] + [
            f"{k}_{s}" for k in METRIC_KEYS for s in ("mean", "std")]
        assert len(rows) == 1 + len(report.summaries)
        assert [r[0] for r in rows[1:]] == [s.method for s in report.summaries]

    def test_floats_roundtrip_exactly(self, report):
        rows = list(csv.reader(io.StringIO(render_csv(report))))
        header = rows[0]
        for row, summary in zip(rows[1:], report.summaries):
            assert int(row[1]) == summary.chunk_count
            for k in METRIC_KEYS:
                mean = float(row[header.index(f"{k}_mean")])
                assert mean == summary.metrics[k].mean  # repr round-trip is exact

    def test_unix_line_endings(self, report):
        text = render_csv(report)
        assert "\r" not in text


class TestDispatch:
    def test_formats_tuple(self):
        assert REPORT_FORMATS == ("md", "json", "csv")

    def test_render_report_dispatches(self, report):
        assert render_report(report, "md") == render_markdown(report)
        assert render_report(report, "json") == render_json(report)
        assert render_report(report, "csv") == render_csv(report)

    def test_unknown_format_rejected(self, report):
        with pytest.raises(ValueError):
            render_report(report, "yaml")
