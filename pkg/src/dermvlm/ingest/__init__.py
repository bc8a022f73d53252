from ..taxonomy import (
    CONCEPTS,
    DISEASE_CLASSES,
    OTHERS_CLASS,
    REFERENCE_CLASS_COUNTS,
    REFERENCE_CONCEPT_COUNTS,
    ConceptTaxonomy,
    DiseaseTaxonomy,
)
from .loaders import (
    ClassTreeSummary,
    ConceptLoadSummary,
    MergeReport,
    load_class_tree,
    load_concept_dataset,
    merge_stage2,
)

__all__ = [
    "CONCEPTS",
    "ClassTreeSummary",
    "ConceptLoadSummary",
    "ConceptTaxonomy",
    "DISEASE_CLASSES",
    "DiseaseTaxonomy",
    "MergeReport",
    "OTHERS_CLASS",
    "REFERENCE_CLASS_COUNTS",
    "REFERENCE_CONCEPT_COUNTS",
    "load_class_tree",
    "load_concept_dataset",
    "merge_stage2",
]
