"""Deterministic concept-set -> disease-class rule table.

Every generated image's class is a pure function of its planted concepts:
the concept earliest in taxonomy order decides, via a fixed round-robin
assignment of concepts to classes. The generator only ever adds secondary
concepts later in taxonomy order than the primary, so the rule is trivially
recoverable from the manifest.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidInputError
from ..taxonomy import ConceptTaxonomy, DiseaseTaxonomy

DEFAULT_CLASSES: tuple[str, ...] = (
    "Acne and Rosacea",
    "Bullous Disease",
    "Urticaria Hives",
    "Vascular Tumors",
    "Herpes",
)


@dataclass(frozen=True)
class DiagnosisRule:
    classes: tuple[str, ...]
    concept_to_class: dict[str, str]

    def class_for(self, concepts) -> str:
        taxonomy = ConceptTaxonomy()
        ordered = taxonomy.sort_canonical(concepts)
        if not ordered:
            raise InvalidInputError("cannot classify an empty concept set")
        primary = ordered[0]
        if primary not in self.concept_to_class:
            raise InvalidInputError(f"concept {primary!r} not covered by the rule table")
        return self.concept_to_class[primary]

    def concepts_of(self, disease: str) -> list[str]:
        return [c for c, d in self.concept_to_class.items() if d == disease]

    def to_dict(self) -> dict[str, str]:
        return dict(self.concept_to_class)


def build_rule(
    supported_concepts, classes: tuple[str, ...] = DEFAULT_CLASSES
) -> DiagnosisRule:
    """Round-robin assignment over taxonomy-ordered supported concepts."""
    taxonomy = ConceptTaxonomy()
    diseases = DiseaseTaxonomy()
    for cls in classes:
        diseases.canonical(cls)  # validates membership
    ordered = taxonomy.sort_canonical(supported_concepts)
    if len(classes) > len(ordered):
        raise InvalidInputError("more classes than supported concepts")
    mapping = {c: classes[i % len(classes)] for i, c in enumerate(ordered)}
    return DiagnosisRule(tuple(classes), mapping)
