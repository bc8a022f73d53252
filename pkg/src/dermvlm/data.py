"""Shared training-pair record and JSONL helpers.

A CaptionPair is the unit of training: an image reference, the target text,
and the stage tag. Ground-truth fields ride along when known so behavioral
probes can score generated text without re-reading the source dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class CaptionPair:
    image: str
    text: str
    stage: int
    concepts: list[str] | None = None
    disease: str | None = None
    flags: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {"image": self.image, "text": self.text, "stage": self.stage}
        if self.concepts is not None:
            rec["concepts"] = list(self.concepts)
        if self.disease is not None:
            rec["disease"] = self.disease
        if self.flags:
            rec["flags"] = dict(self.flags)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "CaptionPair":
        return cls(
            image=rec["image"],
            text=rec["text"],
            stage=int(rec["stage"]),
            concepts=list(rec["concepts"]) if "concepts" in rec else None,
            disease=rec.get("disease"),
            flags=dict(rec.get("flags", {})),
        )


def write_jsonl(pairs: list[CaptionPair], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(p.to_record(), sort_keys=True) for p in pairs]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_jsonl(path: str | Path) -> list[CaptionPair]:
    path = Path(path)
    pairs = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pairs.append(CaptionPair.from_record(json.loads(line)))
    return pairs
