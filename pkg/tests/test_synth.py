import hashlib
import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from dermvlm.errors import InvalidInputError, OracleInapplicableError
from dermvlm.synth import (
    DEFAULT_CLASSES,
    DEFAULT_SUPPORTED_CONCEPTS,
    SynthSpec,
    build_rule,
    decode_oracle,
    generate_corpus,
    load_corpus,
    render_image,
    write_corpus,
)
from dermvlm.synth.motifs import BORDER, cell_layout


def _tree_digest(root: Path) -> dict:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "run_manifest.json":
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_identical_seed_identical_bytes(tmp_path):
    spec = SynthSpec(n_images=12, seed=7)
    write_corpus(generate_corpus(spec), tmp_path / "a")
    write_corpus(generate_corpus(spec), tmp_path / "b")
    assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")


def test_different_seed_different_images(tmp_path):
    a = generate_corpus(SynthSpec(n_images=3, seed=1))
    b = generate_corpus(SynthSpec(n_images=3, seed=2))
    assert any(
        not np.array_equal(a.images[k1], b.images[k2])
        for k1, k2 in zip(a.images, b.images)
    )


def test_stage1_caption_names_exactly_the_planted_concepts():
    bundle = generate_corpus(SynthSpec(n_images=40, seed=3))
    for rec, pair in zip(bundle.records, bundle.stage1):
        named = pair.text.removeprefix("This image shows ").removesuffix(".")
        assert named.split(", ") == rec["concepts"]
        for other in DEFAULT_SUPPORTED_CONCEPTS:
            if other not in rec["concepts"]:
                assert other not in pair.text


def test_stage2_caption_class_matches_rule():
    bundle = generate_corpus(SynthSpec(n_images=40, seed=4))
    for rec, pair in zip(bundle.records, bundle.stage2):
        assert bundle.rule.class_for(rec["concepts"]) == rec["disease"]
        assert pair.text.startswith(f"The diagnosis is {rec['disease']}.")


def test_class_balance_counts_within_band():
    bundle = generate_corpus(SynthSpec(n_images=200, seed=5, class_balance=True))
    counts = Counter(rec["disease"] for rec in bundle.records)
    assert set(counts) == set(DEFAULT_CLASSES)
    for cls, count in counts.items():
        assert 36 <= count <= 44, (cls, count)


def test_oracle_matches_manifest_over_500_samples():
    bundle = generate_corpus(SynthSpec(n_images=500, seed=6))
    for rec in bundle.records:
        got = decode_oracle(bundle.images[rec["path"]], bundle.supported_concepts)
        assert got == set(rec["concepts"]), rec["path"]


def test_oracle_rejects_all_black_image():
    with pytest.raises(OracleInapplicableError):
        decode_oracle(np.zeros((64, 64, 3), dtype=np.uint8))


def test_oracle_rejects_non_rgb():
    with pytest.raises(OracleInapplicableError):
        decode_oracle(np.zeros((64, 64), dtype=np.uint8))


def test_zeroed_motif_region_removes_concept():
    supported = list(DEFAULT_SUPPORTED_CONCEPTS)
    cells = cell_layout(64)
    for concepts in (["Plaque", "Erythema"], ["Vesicle", "Nodule"], ["Ulcer"]):
        rng = np.random.default_rng(0)
        img = render_image(concepts, supported, 64, rng)
        victim = concepts[0]
        cell = cells[supported.index(victim)]
        img = img.copy()
        img[cell.y0 : cell.y0 + cell.h, cell.x0 : cell.x0 + cell.w] = 0
        got = decode_oracle(img, supported)
        assert got == set(concepts) - {victim}


def test_unsupported_concept_rejected():
    with pytest.raises(InvalidInputError, match="no motif"):
        SynthSpec(n_images=1, supported_concepts=("Comedo",))
    with pytest.raises(InvalidInputError, match="unknown clinical concept"):
        SynthSpec(n_images=1, supported_concepts=("NotAConcept",))


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        SynthSpec(n_images=0)
    with pytest.raises(InvalidInputError):
        SynthSpec(min_concepts=2, max_concepts=1)


def test_border_frame_is_clean():
    bundle = generate_corpus(SynthSpec(n_images=5, seed=9))
    for img in bundle.images.values():
        assert (img[:BORDER] == 128).all()
        assert (img[-BORDER:] == 128).all()


def test_rule_is_deterministic_and_total():
    rule = build_rule(DEFAULT_SUPPORTED_CONCEPTS)
    assert rule.class_for(["Erythema", "Vesicle"]) == rule.class_for(["Vesicle", "Erythema"])
    for concept in DEFAULT_SUPPORTED_CONCEPTS:
        assert rule.class_for([concept]) in DEFAULT_CLASSES
    with pytest.raises(InvalidInputError):
        rule.class_for([])


def test_corpus_roundtrip(tmp_path):
    bundle = generate_corpus(SynthSpec(n_images=8, seed=11))
    write_corpus(bundle, tmp_path)
    loaded = load_corpus(tmp_path)
    assert loaded.records == bundle.records
    assert [p.text for p in loaded.stage1] == [p.text for p in bundle.stage1]
    assert [p.text for p in loaded.stage2] == [p.text for p in bundle.stage2]
    for key, img in bundle.images.items():
        assert np.array_equal(loaded.images[key], img)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["format_version"] == 1
    assert manifest["spec"]["seed"] == 11
