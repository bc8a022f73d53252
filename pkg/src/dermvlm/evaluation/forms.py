"""Questionnaire form, rating records, and record I/O.

The seven items and the five-level agreement scale are fixed protocol text.
Records travel as CSV (one row per rater x case) or JSONL; both carry the
same fields.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InvalidInputError

EVAL_FORM_ITEMS: tuple[str, ...] = (
    "SkinGPT-4's diagnosis is correct or relevant.",
    "SkinGPT-4's description is informative.",
    "SkinGPT-4's suggestions are useful.",
    "SkinGPT-4 can help doctors with diagnosis.",
    "SkinGPT-4 can help patients to understand their disease better.",
    "If SkinGPT-4 can be deployed locally, it protects patients' privacy.",
    "Willingness to use SkinGPT-4.",
)

LIKERT_LEVELS: tuple[str, ...] = (
    "strongly agree",
    "agree",
    "neutral",
    "disagree",
    "strongly disagree",
)

POSITIVE_LEVELS = ("strongly agree", "agree")

N_ITEMS = len(EVAL_FORM_ITEMS)


@dataclass
class EvalRecord:
    case_id: str
    rater_id: str
    ratings: dict[int, str]  # item number (1-based) -> level
    latency_s: float = 0.0
    transcript_ref: str | None = None

    def to_dict(self) -> dict:
        d = {
            "case_id": self.case_id,
            "rater_id": self.rater_id,
            "ratings": {str(k): v for k, v in sorted(self.ratings.items())},
            "latency_s": self.latency_s,
        }
        if self.transcript_ref is not None:
            d["transcript_ref"] = self.transcript_ref
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        return cls(
            case_id=str(d["case_id"]),
            rater_id=str(d.get("rater_id", "")),
            ratings={int(k): v for k, v in dict(d.get("ratings", {})).items()},
            latency_s=float(d.get("latency_s", 0.0)),
            transcript_ref=d.get("transcript_ref"),
        )


def validate_record(record: EvalRecord) -> None:
    """All seven items rated on the five-level scale; latency non-negative."""
    missing = [i for i in range(1, N_ITEMS + 1) if i not in record.ratings]
    if missing:
        raise InvalidInputError(
            f"record {record.case_id!r}/{record.rater_id!r} missing items: {missing}"
        )
    bad = {i: v for i, v in record.ratings.items() if v not in LIKERT_LEVELS}
    if bad:
        raise InvalidInputError(f"invalid rating levels: {bad}")
    if record.latency_s < 0:
        raise InvalidInputError("latency_s must be >= 0")


_CSV_FIELDS = (
    ["case_id", "rater_id"]
    + [f"item_{i}" for i in range(1, N_ITEMS + 1)]
    + ["latency_s", "transcript_ref"]
)


def write_records_csv(records: list[EvalRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for r in records:
            row = {"case_id": r.case_id, "rater_id": r.rater_id, "latency_s": r.latency_s,
                   "transcript_ref": r.transcript_ref or ""}
            for i in range(1, N_ITEMS + 1):
                row[f"item_{i}"] = r.ratings.get(i, "")
            writer.writerow(row)


def read_records_csv(path: str | Path) -> list[EvalRecord]:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"records file not found: {path}")
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ratings = {
                i: row[f"item_{i}"].strip()
                for i in range(1, N_ITEMS + 1)
                if row.get(f"item_{i}", "").strip()
            }
            records.append(
                EvalRecord(
                    case_id=row.get("case_id", ""),
                    rater_id=row.get("rater_id", ""),
                    ratings=ratings,
                    latency_s=float(row["latency_s"]) if row.get("latency_s") else 0.0,
                    transcript_ref=row.get("transcript_ref") or None,
                )
            )
    return records


def write_records_jsonl(records: list[EvalRecord], path: str | Path) -> None:
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_records_jsonl(path: str | Path) -> list[EvalRecord]:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"records file not found: {path}")
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(EvalRecord.from_dict(json.loads(line)))
    return records
