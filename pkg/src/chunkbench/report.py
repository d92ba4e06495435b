"""Report rendering: markdown for reading, JSON for fidelity, CSV for spreadsheets.

The JSON form is lossless (config echo, per-fold means, per-question records,
t-tests); markdown and CSV are projections of it. Rendering is byte-stable:
the same report object always produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Dict, List

from .evaluation import (EvaluationReport, MetricAggregate, MethodSummary, TTestResult)
from .metrics import METRIC_KEYS, METRIC_LABELS, record_from_dict, record_to_dict

REPORT_SCHEMA = "chunkbench-report/1"
REPORT_FORMATS = ("md", "json", "csv")

SUMMARY_COLUMNS = ("Method", "Chunks QTY") + tuple(METRIC_LABELS[k] for k in METRIC_KEYS)


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _md_table(header: List[str], rows: List[List[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join("---" for _ in header) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def render_markdown(report: EvaluationReport) -> str:
    meta = report.meta
    prov = meta.get("provider", {})
    lines = ["# Chunking strategy evaluation", ""]
    lines.append(
        "provider={kind} dim={dim} normalize={norm} k_retrieve={k} folds={folds} seed={seed}".format(
            kind=prov.get("kind"), dim=prov.get("dim"),
            norm=str(bool(prov.get("normalize"))).lower(),
            k=meta.get("k_retrieve"), folds=meta.get("folds"), seed=meta.get("seed")))
    lines.append("")
    rows = []
    for s in report.summaries:
        row = [s.display, str(s.chunk_count)]
        for key in METRIC_KEYS:
            agg = s.metrics[key]
            row.append(f"{_fmt(agg.mean)} ± {_fmt(agg.std)}")
        rows.append(row)
    lines.extend(_md_table(list(SUMMARY_COLUMNS), rows))
    if report.tests:
        lines.append("")
        lines.append("## Paired t-tests")
        lines.append("")
        display = {s.method: s.display for s in report.summaries}
        t_rows = []
        for t in report.tests:
            t_rows.append([METRIC_LABELS[t.metric], display.get(t.method_a, t.method_a),
                           display.get(t.method_b, t.method_b), _fmt(t.t), str(t.df),
                           _fmt(t.p), t.pairing + (" (degenerate)" if t.degenerate else "")])
        lines.extend(_md_table(["Metric", "Method A", "Method B", "t", "df", "p", "Pairing"],
                               t_rows))
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvaluationReport) -> Dict:
    return {
        "schema": REPORT_SCHEMA,
        "meta": report.meta,
        "summaries": [
            {
                "method": s.method,
                "display": s.display,
                "chunk_count": s.chunk_count,
                "metrics": {
                    key: {"mean": agg.mean, "std": agg.std, "fold_means": list(agg.fold_means)}
                    for key, agg in s.metrics.items()
                },
            }
            for s in report.summaries
        ],
        "tests": [
            {"metric": t.metric, "method_a": t.method_a, "method_b": t.method_b,
             "t": t.t, "df": t.df, "p": t.p, "pairing": t.pairing, "degenerate": t.degenerate}
            for t in report.tests
        ],
        "records": {
            method: [record_to_dict(r) for r in records]
            for method, records in report.records.items()
        },
    }


def report_from_dict(obj: Dict) -> EvaluationReport:
    if obj.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unknown report schema {obj.get('schema')!r}")
    summaries = [
        MethodSummary(
            method=s["method"], display=s["display"], chunk_count=s["chunk_count"],
            metrics={key: MetricAggregate(mean=m["mean"], std=m["std"],
                                          fold_means=tuple(m["fold_means"]))
                     for key, m in s["metrics"].items()},
        )
        for s in obj["summaries"]
    ]
    tests = [
        TTestResult(metric=t["metric"], method_a=t["method_a"], method_b=t["method_b"],
                    t=t["t"], df=t["df"], p=t["p"], pairing=t["pairing"],
                    degenerate=t.get("degenerate", False))
        for t in obj["tests"]
    ]
    records = {method: [record_from_dict(r) for r in recs]
               for method, recs in obj["records"].items()}
    return EvaluationReport(meta=obj["meta"], summaries=summaries, tests=tests, records=records)


def render_json(report: EvaluationReport) -> str:
    return json.dumps(report_to_dict(report), ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def parse_report(text: str) -> EvaluationReport:
    return report_from_dict(json.loads(text))


def render_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["method", "chunk_count"]
    for key in METRIC_KEYS:
        header.extend([f"{key}_mean", f"{key}_std"])
    writer.writerow(header)
    for s in report.summaries:
        row: List = [s.method, s.chunk_count]
        for key in METRIC_KEYS:
            agg = s.metrics[key]
            row.extend([repr(agg.mean), repr(agg.std)])
        writer.writerow(row)
    return buf.getvalue()


def render_report(report: EvaluationReport, fmt: str = "md") -> str:
    """Render to one of REPORT_FORMATS; only "json" is lossless."""
    if fmt == "md":
        return render_markdown(report)
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")
