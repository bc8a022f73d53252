import pytest

from dermvlm.errors import InvalidInputError
from dermvlm.taxonomy import (
    CONCEPTS,
    DISEASE_CLASSES,
    REFERENCE_CLASS_COUNTS,
    REFERENCE_CLASS_TREE_TOTAL,
    REFERENCE_CONCEPT_COUNTS,
    REFERENCE_NOTES_TOTAL,
    ConceptTaxonomy,
    DiseaseTaxonomy,
)


def test_concept_taxonomy_has_48_unique_entries():
    assert len(CONCEPTS) == 48
    assert len(set(CONCEPTS)) == 48


def test_concept_taxonomy_exact_strings():
    assert CONCEPTS[0] == "Vesicle"
    assert CONCEPTS[-1] == "Cyst"
    for name in (
        "Purpura/Petechiae",
        "Exophytic/Fungating",
        "Warty/Papillomatous",
        "Dome-shaped",
        "Flat topped",
        "Brown(Hyperpigmentation)",
        "White(Hypopigmentation)",
        "Erythema",
        "Telangiectasia",
        "Lichenification",
    ):
        assert name in CONCEPTS


def test_disease_taxonomy_is_15_plus_others():
    assert len(DISEASE_CLASSES) == 16
    assert DISEASE_CLASSES[-1] == "Others"
    assert DISEASE_CLASSES[0] == "Acne and Rosacea"
    assert "Melanoma Skin Cancer, Nevi, Moles" in DISEASE_CLASSES
    assert (
        "Malignant Lesions (Actinic Keratosis, Basal Cell Carcinoma, etc.)"
        in DISEASE_CLASSES
    )
    assert "Urticaria Hives" in DISEASE_CLASSES
    assert "Herpes" in DISEASE_CLASSES


def test_case_insensitive_lookup_preserves_canonical_casing():
    tax = ConceptTaxonomy()
    assert tax.canonical("erythema") == "Erythema"
    assert tax.canonical("ERYTHEMA") == "Erythema"
    assert "plaque" in tax
    with pytest.raises(InvalidInputError):
        tax.canonical("acne")
    diseases = DiseaseTaxonomy()
    assert diseases.canonical("herpes") == "Herpes"
    assert diseases.canonical("OTHERS") == "Others"


def test_taxonomy_sort_is_stable_by_position():
    tax = ConceptTaxonomy()
    assert tax.sort_canonical(["Erythema", "papule", "Vesicle"]) == [
        "Vesicle",
        "Papule",
        "Erythema",
    ]


def test_reference_counts_are_consistent():
    # combined diagnosis corpus size equals tree + notes sources
    assert sum(REFERENCE_CLASS_COUNTS.values()) == 49043
    assert REFERENCE_CLASS_TREE_TOTAL + REFERENCE_NOTES_TOTAL == 49043
    assert REFERENCE_CONCEPT_COUNTS["Erythema"] == 2139
    assert REFERENCE_CONCEPT_COUNTS["Plaque"] == 1966
    assert set(REFERENCE_CONCEPT_COUNTS) == set(CONCEPTS)
    assert set(REFERENCE_CLASS_COUNTS) == set(DISEASE_CLASSES)
    assert REFERENCE_CLASS_COUNTS["Acne and Rosacea"] == 840
