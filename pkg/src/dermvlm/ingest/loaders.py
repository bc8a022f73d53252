"""Loaders for real-world-shaped datasets.

Two shapes are supported: a concept-annotation CSV (first column image path,
one 0/1 column per clinical concept) producing stage-1 pairs, and a
folder-per-class image tree with optional sidecar ``<image>.txt`` notes
producing stage-2 pairs. Both emit the same JSONL records as the synthetic
corpus. Loaders are deterministic: rerunning on unchanged inputs yields
byte-identical output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from ..data import CaptionPair
from ..errors import EmptyDatasetError, InvalidInputError
from ..prompts import CLASS_ONLY_TEMPLATE, NO_CONCEPT_CAPTION, stage1_caption
from ..taxonomy import OTHERS_CLASS, ConceptTaxonomy, DiseaseTaxonomy

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class ConceptLoadSummary:
    concept_counts: dict[str, int]
    input_rows: int = 0
    used: int = 0
    skipped: int = 0
    flagged_empty: int = 0
    unknown_columns: list[str] = field(default_factory=list)
    missing_images: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "concept_counts": dict(self.concept_counts),
            "input_rows": self.input_rows,
            "used": self.used,
            "skipped": self.skipped,
            "flagged_empty": self.flagged_empty,
            "unknown_columns": list(self.unknown_columns),
            "missing_images": list(self.missing_images),
        }


def load_concept_dataset(
    csv_path: str | Path,
    images_root: str | Path | None = None,
    taxonomy: ConceptTaxonomy | None = None,
    column_map: dict[str, str] | None = None,
) -> tuple[list[CaptionPair], ConceptLoadSummary]:
    """Concept-annotation CSV -> stage-1 caption pairs plus a summary.

    Unknown columns are reported, not fatal. Rows with unparseable flags are
    skipped and counted; rows with zero positive concepts are kept with a
    placeholder caption and flagged.
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise InvalidInputError(f"annotation table not found: {csv_path}")
    taxonomy = taxonomy or ConceptTaxonomy()
    column_map = {k.casefold(): v for k, v in (column_map or {}).items()}
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{csv_path} has no header row") from None
        rows = list(reader)
    if not header:
        raise EmptyDatasetError(f"{csv_path} has an empty header row")
    concept_cols: dict[int, str] = {}
    unknown: list[str] = []
    for idx, col in enumerate(header[1:], start=1):
        name = column_map.get(col.strip().casefold(), col.strip())
        if name in taxonomy:
            concept_cols[idx] = taxonomy.canonical(name)
        else:
            unknown.append(col)
    summary = ConceptLoadSummary(
        concept_counts={name: 0 for name in taxonomy.names}, unknown_columns=unknown
    )
    pairs: list[CaptionPair] = []
    images_root = Path(images_root) if images_root is not None else None
    for row in rows:
        summary.input_rows += 1
        if not row or not row[0].strip():
            summary.skipped += 1
            continue
        image = row[0].strip()
        concepts = []
        valid = True
        for idx, name in concept_cols.items():
            value = row[idx].strip() if idx < len(row) else "0"
            if value in ("0", "0.0", ""):
                continue
            if value in ("1", "1.0"):
                concepts.append(name)
            else:
                valid = False
                break
        if not valid:
            summary.skipped += 1
            continue
        if images_root is not None and not (images_root / image).exists():
            summary.missing_images.append(image)
        concepts = taxonomy.sort_canonical(concepts)
        for name in concepts:
            summary.concept_counts[name] += 1
        flags = {}
        if concepts:
            text = stage1_caption(concepts)
        else:
            text = NO_CONCEPT_CAPTION
            flags["no_concepts"] = True
            summary.flagged_empty += 1
        pairs.append(CaptionPair(image, text, 1, concepts=concepts, flags=flags))
        summary.used += 1
    if not pairs:
        raise EmptyDatasetError(f"{csv_path} yielded zero parseable rows")
    return pairs, summary


@dataclass
class ClassTreeSummary:
    class_counts: dict[str, int]
    input_images: int = 0
    used: int = 0
    truncated_notes: int = 0
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "class_counts": dict(self.class_counts),
            "input_images": self.input_images,
            "used": self.used,
            "truncated_notes": self.truncated_notes,
            "warnings": list(self.warnings),
        }


def load_class_tree(
    root: str | Path,
    taxonomy: DiseaseTaxonomy | None = None,
    max_text_len: int = 160,
) -> tuple[list[CaptionPair], ClassTreeSummary]:
    """Folder-per-class image tree -> stage-2 caption pairs plus counts.

    Unknown class directories map to the reserved catch-all with a warning.
    A sidecar ``<image>.txt`` note replaces the class-template caption
    verbatim, truncated at ``max_text_len`` whitespace tokens.
    """
    root = Path(root)
    if not root.is_dir():
        raise InvalidInputError(f"class tree root not found: {root}")
    taxonomy = taxonomy or DiseaseTaxonomy()
    summary = ClassTreeSummary(class_counts={})
    pairs: list[CaptionPair] = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if class_dir.name in taxonomy:
            disease = taxonomy.canonical(class_dir.name)
        else:
            disease = OTHERS_CLASS
            summary.warnings.append(
                f"unknown class directory {class_dir.name!r} mapped to {OTHERS_CLASS!r}"
            )
        summary.class_counts.setdefault(disease, 0)
        images = sorted(
            p for p in class_dir.iterdir()
            if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
        )
        if not images:
            summary.warnings.append(f"class directory {class_dir.name!r} has no images")
            continue
        for image in images:
            summary.input_images += 1
            flags = {}
            note = image.with_suffix(image.suffix + ".txt")
            if note.exists():
                words = note.read_text(encoding="utf-8").split()
                if len(words) > max_text_len:
                    words = words[:max_text_len]
                    flags["truncated"] = True
                    summary.truncated_notes += 1
                text = " ".join(words)
            else:
                text = CLASS_ONLY_TEMPLATE.format(disease=disease)
            rel = image.relative_to(root).as_posix()
            pairs.append(CaptionPair(rel, text, 2, disease=disease, flags=flags))
            summary.class_counts[disease] += 1
            summary.used += 1
    if not pairs:
        raise EmptyDatasetError(f"{root} yielded zero images")
    return pairs, summary


@dataclass
class MergeReport:
    source_sizes: list[int]
    merged: int = 0
    duplicates: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "source_sizes": list(self.source_sizes),
            "merged": self.merged,
            "duplicates": list(self.duplicates),
        }


def merge_stage2(*sources: list[CaptionPair]) -> tuple[list[CaptionPair], MergeReport]:
    """Concatenate stage-2 sources, deduplicating by image path (kept-first)."""
    if not sources:
        raise InvalidInputError("merge_stage2 needs at least one source")
    report = MergeReport(source_sizes=[len(s) for s in sources])
    seen: set[str] = set()
    merged: list[CaptionPair] = []
    for source in sources:
        for pair in source:
            if pair.image in seen:
                report.duplicates.append(pair.image)
                continue
            seen.add(pair.image)
            merged.append(pair)
    report.merged = len(merged)
    return merged, report
