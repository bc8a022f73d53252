"""Synthetic corpus generation and on-disk layout.

The corpus is fully verifiable: every image's concepts are recoverable by
the pixel oracle, stage-1 captions name exactly the planted concepts, and
stage-2 captions carry the rule-table class. Identical seeds produce
identical bytes.

On disk::

    images/NNNNN.png
    stage1.jsonl      one CaptionPair record per line
    stage2.jsonl
    manifest.json     spec echo + per-image ground truth + format version
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..data import CaptionPair, read_jsonl, write_jsonl
from ..errors import InvalidInputError
from ..prompts import stage1_caption, stage2_caption
from ..taxonomy import ConceptTaxonomy
from .motifs import DEFAULT_SUPPORTED_CONCEPTS, MOTIFS, render_image
from .rules import DEFAULT_CLASSES, DiagnosisRule, build_rule

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class SynthSpec:
    n_images: int = 200
    min_concepts: int = 1
    max_concepts: int = 3
    supported_concepts: tuple[str, ...] = DEFAULT_SUPPORTED_CONCEPTS
    classes: tuple[str, ...] = DEFAULT_CLASSES
    image_size: int = 64
    seed: int = 0
    class_balance: bool = True

    def __post_init__(self):
        if self.n_images < 1:
            raise InvalidInputError("n_images must be >= 1")
        if not (1 <= self.min_concepts <= self.max_concepts <= 3):
            raise InvalidInputError("concepts per image must satisfy 1 <= min <= max <= 3")
        taxonomy = ConceptTaxonomy()
        for name in self.supported_concepts:
            canon = taxonomy.canonical(name)  # raises for non-taxonomy names
            if canon not in MOTIFS:
                raise InvalidInputError(f"unsupported concept (no motif): {name!r}")

    def to_dict(self) -> dict:
        return {
            "n_images": self.n_images,
            "min_concepts": self.min_concepts,
            "max_concepts": self.max_concepts,
            "supported_concepts": list(self.supported_concepts),
            "classes": list(self.classes),
            "image_size": self.image_size,
            "seed": self.seed,
            "class_balance": self.class_balance,
        }


@dataclass
class CorpusBundle:
    spec: SynthSpec
    rule: DiagnosisRule
    images: dict[str, np.ndarray]  # path key -> uint8 array
    records: list[dict]  # {"path", "concepts", "disease"}
    stage1: list[CaptionPair] = field(default_factory=list)
    stage2: list[CaptionPair] = field(default_factory=list)

    @property
    def supported_concepts(self) -> list[str]:
        return list(self.spec.supported_concepts)

    @property
    def classes(self) -> list[str]:
        return list(self.spec.classes)

    def manifest(self) -> dict:
        return {
            "format_version": MANIFEST_VERSION,
            "spec": self.spec.to_dict(),
            "supported_concepts": self.supported_concepts,
            "classes": self.classes,
            "rule": self.rule.to_dict(),
            "images": self.records,
        }


def _pick_concepts(
    spec: SynthSpec, rule: DiagnosisRule, ordered: list[str], index: int,
    rng: np.random.Generator,
) -> list[str]:
    position = {c: i for i, c in enumerate(ordered)}
    if spec.class_balance:
        target = spec.classes[index % len(spec.classes)]
        candidates = [c for c in ordered if rule.concept_to_class[c] == target]
        primary = candidates[int(rng.integers(len(candidates)))]
        later = [c for c in ordered if position[c] > position[primary]]
        k_extra = int(rng.integers(0, min(spec.max_concepts - 1, len(later)) + 1))
        extras = [str(c) for c in rng.choice(later, size=k_extra, replace=False)] if k_extra else []
        chosen = [primary] + extras
    else:
        k = int(rng.integers(spec.min_concepts, spec.max_concepts + 1))
        chosen = [str(c) for c in rng.choice(ordered, size=min(k, len(ordered)), replace=False)]
    return sorted(chosen, key=position.__getitem__)


def generate_corpus(spec: SynthSpec) -> CorpusBundle:
    taxonomy = ConceptTaxonomy()
    ordered = taxonomy.sort_canonical(spec.supported_concepts)
    rule = build_rule(ordered, spec.classes)
    rng = np.random.default_rng(spec.seed)
    bundle = CorpusBundle(spec=spec, rule=rule, images={}, records=[])
    for i in range(spec.n_images):
        concepts = _pick_concepts(spec, rule, ordered, i, rng)
        disease = rule.class_for(concepts)
        noise_rng = np.random.default_rng([spec.seed, i])
        img = render_image(concepts, ordered, spec.image_size, noise_rng)
        path = f"images/{i:05d}.png"
        bundle.images[path] = img
        bundle.records.append({"path": path, "concepts": concepts, "disease": disease})
        bundle.stage1.append(
            CaptionPair(path, stage1_caption(concepts), 1, concepts=concepts, disease=disease)
        )
        bundle.stage2.append(
            CaptionPair(
                path, stage2_caption(disease, concepts), 2, concepts=concepts, disease=disease
            )
        )
    return bundle


def write_corpus(bundle: CorpusBundle, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    for path, img in bundle.images.items():
        Image.fromarray(img).save(out / path, format="PNG")
    write_jsonl(bundle.stage1, out / "stage1.jsonl")
    write_jsonl(bundle.stage2, out / "stage2.jsonl")
    (out / "manifest.json").write_text(
        json.dumps(bundle.manifest(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return out


def load_corpus(corpus_dir: str | Path) -> CorpusBundle:
    """Read a corpus back; images load lazily into memory (desk scale)."""
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / "manifest.json"
    if not manifest_path.exists():
        raise InvalidInputError(f"no manifest.json under {corpus_dir}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise InvalidInputError(
            f"unsupported corpus manifest version {manifest.get('format_version')!r}"
        )
    spec = SynthSpec(
        n_images=manifest["spec"]["n_images"],
        min_concepts=manifest["spec"]["min_concepts"],
        max_concepts=manifest["spec"]["max_concepts"],
        supported_concepts=tuple(manifest["spec"]["supported_concepts"]),
        classes=tuple(manifest["spec"]["classes"]),
        image_size=manifest["spec"]["image_size"],
        seed=manifest["spec"]["seed"],
        class_balance=manifest["spec"]["class_balance"],
    )
    rule = DiagnosisRule(tuple(manifest["classes"]), dict(manifest["rule"]))
    images = {}
    for rec in manifest["images"]:
        with Image.open(corpus_dir / rec["path"]) as im:
            images[rec["path"]] = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return CorpusBundle(
        spec=spec,
        rule=rule,
        images=images,
        records=manifest["images"],
        stage1=read_jsonl(corpus_dir / "stage1.jsonl"),
        stage2=read_jsonl(corpus_dir / "stage2.jsonl"),
    )
