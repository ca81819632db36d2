"""
Report export
- JSON array of reports (indent 2)
- CSV summary with a fixed header
- JSONL rows for the gamma deficit trace
- Plain-text table for single verifications
"""

import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Sequence

from identities import VerificationReport

logger = logging.getLogger(__name__)

CSV_HEADER = ("identity", "params", "verdict", "abs_gap", "J")


def report_to_dict(report: VerificationReport) -> Dict[str, Any]:
    return report.to_dict()


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def reports_json(reports: Sequence[VerificationReport]) -> str:
    return json.dumps([report_to_dict(r) for r in reports], indent=2)


def write_json_reports(path: str, reports: Sequence[VerificationReport]) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(reports_json(reports))
        f.write("\n")
    logger.info("wrote %d reports to %s", len(reports), path)
    return path


def csv_row(report: VerificationReport) -> List[Any]:
    J = report.truncation["J"] if report.truncation else ""
    params = json.dumps(report.parameters, sort_keys=True, separators=(",", ":"))
    return [report.identity_id, params, report.verdict, repr(report.abs_gap), J]


def write_csv_summary(path: str, reports: Sequence[VerificationReport]) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for report in reports:
            writer.writerow(csv_row(report))
    logger.info("wrote CSV summary to %s", path)
    return path


def deficit_trace_rows(reports: Iterable[VerificationReport]) -> List[Dict[str, Any]]:
    """One row per (report, series order) for every report that carries a trace"""
    rows = []
    for index, report in enumerate(reports):
        for j, deficit in enumerate(report.trace):
            rows.append({
                "report": index,
                "identity": report.identity_id,
                "params": report.parameters,
                "J": j,
                "deficit": deficit,
            })
    return rows


def write_jsonl(path: str, rows: Iterable[Dict[str, Any]]) -> str:
    _ensure_parent(path)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
            count += 1
    logger.info("wrote %d rows to %s", count, path)
    return path


def format_report_table(report: VerificationReport) -> str:
    """Aligned key/value listing of one report"""
    data = report.to_dict()
    rows = [
        ("identity", data["identity"]),
        ("params", json.dumps(data["params"])),
        ("lhs", data["lhs"]),
        ("rhs", data["rhs"]),
        ("mode", data["mode"]),
        ("verdict", data["verdict"]),
        ("abs_gap", f"{data['abs_gap']:.3e}"),
        ("tolerance", f"{data['tolerance']:.1e}"),
    ]
    if report.truncation:
        t = report.truncation
        rows.append(("truncation", f"J={t['J']} deficit={t['deficit']:.3e} envelope={t['envelope']:.3e}"))
    for name, value in report.extra.items():
        if name == "mc":
            rows.append(("monte carlo", f"m={value['m']} mean={value['mean']:.6g} "
                                        f"se={value['std_error']:.3g} z={value['z']} -> {value['verdict']}"))
        elif isinstance(value, dict) and "agree" in value:
            rows.append((name, f"{value['value']} ({'agrees' if value['agree'] else 'DISAGREES'})"))
        else:
            rows.append((name, str(value)))
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
