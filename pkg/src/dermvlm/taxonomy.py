"""Clinical concept and disease-class vocabularies.

The 48 morphological concept names and the 15 disease classes (plus the
reserved ``Others`` bucket) are fixed reference data: loaders, the synthetic
corpus, and the behavioral probes all resolve label names against them.
Lookup is case-insensitive; canonical casing is preserved on output.
"""

from __future__ import annotations

from .errors import InvalidInputError

# 48 clinical concepts, ordered Vesicle .. Cyst.
CONCEPTS: tuple[str, ...] = (
    "Vesicle",
    "Papule",
    "Macule",
    "Plaque",
    "Abscess",
    "Pustule",
    "Bulla",
    "Patch",
    "Nodule",
    "Ulcer",
    "Crust",
    "Erosion",
    "Excoriation",
    "Atrophy",
    "Exudate",
    "Purpura/Petechiae",
    "Fissure",
    "Induration",
    "Xerosis",
    "Telangiectasia",
    "Scale",
    "Scar",
    "Friable",
    "Sclerosis",
    "Pedunculated",
    "Exophytic/Fungating",
    "Warty/Papillomatous",
    "Dome-shaped",
    "Flat topped",
    "Brown(Hyperpigmentation)",
    "Translucent",
    "White(Hypopigmentation)",
    "Purple",
    "Yellow",
    "Black",
    "Erythema",
    "Comedo",
    "Lichenification",
    "Blue",
    "Umbilicated",
    "Poikiloderma",
    "Salmon",
    "Wheal",
    "Acuminate",
    "Burrow",
    "Gray",
    "Pigmented",
    "Cyst",
)

# 15 major disease classes plus the reserved catch-all.
DISEASE_CLASSES: tuple[str, ...] = (
    "Acne and Rosacea",
    "Malignant Lesions (Actinic Keratosis, Basal Cell Carcinoma, etc.)",
    "Dermatitis (Atopic Dermatitis, Eczema, Exanthems, Drug Eruptions, Contact Dermatitis, etc.)",
    "Bullous Disease",
    "Bacterial Infections (Cellulitis, Impetigo, etc.)",
    "Light Diseases (vitiligo, sun damaged skin, etc.)",
    "Connective Tissue diseases (Lupus, etc.)",
    "Benign Tumors (Seborrheic Keratoses, etc.)",
    "Melanoma Skin Cancer, Nevi, Moles",
    "Fungal Infections (Nail Fungus, Tinea Ringworm, Candidiasis, etc.)",
    "Psoriasis and Lichen Planus",
    "Infestations and Bites (Scabies, Lyme Disease, etc.)",
    "Urticaria Hives",
    "Vascular Tumors",
    "Herpes",
    "Others",
)

OTHERS_CLASS = "Others"

# Published per-concept annotation counts for the reference concept dataset
# (3886 images total, multi-label). Used only to sanity-check a user-supplied
# copy of that dataset; nothing in the pipeline depends on these numbers.
REFERENCE_CONCEPT_COUNTS: dict[str, int] = {
    "Erythema": 2139,
    "Plaque": 1966,
    "Papule": 1169,
    "Brown(Hyperpigmentation)": 759,
    "Scale": 686,
    "Crust": 497,
    "White(Hypopigmentation)": 257,
    "Yellow": 245,
    "Erosion": 200,
    "Nodule": 189,
    "Ulcer": 154,
    "Friable": 153,
    "Patch": 149,
    "Dome-shaped": 146,
    "Exudate": 144,
    "Scar": 123,
    "Pustule": 103,
    "Telangiectasia": 100,
    "Black": 90,
    "Purple": 85,
    "Atrophy": 69,
    "Bulla": 64,
    "Umbilicated": 49,
    "Vesicle": 46,
    "Warty/Papillomatous": 46,
    "Excoriation": 46,
    "Exophytic/Fungating": 42,
    "Xerosis": 35,
    "Induration": 33,
    "Fissure": 32,
    "Sclerosis": 27,
    "Pedunculated": 26,
    "Lichenification": 25,
    "Comedo": 24,
    "Wheal": 21,
    "Flat topped": 18,
    "Translucent": 16,
    "Macule": 13,
    "Salmon": 10,
    "Purpura/Petechiae": 10,
    "Acuminate": 8,
    "Cyst": 6,
    "Blue": 5,
    "Abscess": 5,
    "Poikiloderma": 5,
    "Burrow": 5,
    "Gray": 5,
    "Pigmented": 5,
}

REFERENCE_CONCEPT_IMAGE_TOTAL = 3886  # 3230 + 656 source images

# Published per-class sizes of the combined diagnosis-notes training set
# (folder-tree source 18,856 images + a private notes collection of 30,187).
REFERENCE_CLASS_COUNTS: dict[str, int] = {
    "Acne and Rosacea": 840,
    "Malignant Lesions (Actinic Keratosis, Basal Cell Carcinoma, etc.)": 8166,
    "Dermatitis (Atopic Dermatitis, Eczema, Exanthems, Drug Eruptions, Contact Dermatitis, etc.)": 5262,
    "Bullous Disease": 448,
    "Bacterial Infections (Cellulitis, Impetigo, etc.)": 228,
    "Light Diseases (vitiligo, sun damaged skin, etc.)": 568,
    "Connective Tissue diseases (Lupus, etc.)": 420,
    "Benign Tumors (Seborrheic Keratoses, etc.)": 1916,
    "Melanoma Skin Cancer, Nevi, Moles": 23373,
    "Fungal Infections (Nail Fungus, Tinea Ringworm, Candidiasis, etc.)": 2340,
    "Psoriasis and Lichen Planus": 3460,
    "Infestations and Bites (Scabies, Lyme Disease, etc.)": 431,
    "Urticaria Hives": 212,
    "Vascular Tumors": 735,
    "Herpes": 405,
    "Others": 239,
}

REFERENCE_CLASS_TREE_TOTAL = 18856
REFERENCE_NOTES_TOTAL = 30187


class ConceptTaxonomy:
    """The 48-concept vocabulary with case-insensitive lookup."""

    def __init__(self, names: tuple[str, ...] = CONCEPTS):
        if len(names) != len(set(names)):
            raise InvalidInputError("concept taxonomy contains duplicates")
        self.names = tuple(names)
        self._by_folded = {n.casefold(): n for n in self.names}
        self._index = {n: i for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name.casefold() in self._by_folded

    def canonical(self, name: str) -> str:
        """Return canonical casing for ``name``; raises if unknown."""
        key = name.casefold()
        if key not in self._by_folded:
            raise InvalidInputError(f"unknown clinical concept: {name!r}")
        return self._by_folded[key]

    def index(self, name: str) -> int:
        return self._index[self.canonical(name)]

    def sort_canonical(self, names) -> list[str]:
        """Canonicalize and order a set of names by taxonomy position."""
        return sorted((self.canonical(n) for n in names), key=self._index.__getitem__)


class DiseaseTaxonomy:
    """The 15 disease classes plus the reserved ``Others`` bucket."""

    def __init__(self, names: tuple[str, ...] = DISEASE_CLASSES):
        if len(names) != len(set(names)):
            raise InvalidInputError("disease taxonomy contains duplicates")
        if OTHERS_CLASS not in names:
            raise InvalidInputError(f"disease taxonomy must include {OTHERS_CLASS!r}")
        self.names = tuple(names)
        self._by_folded = {n.casefold(): n for n in self.names}

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name.casefold() in self._by_folded

    def canonical(self, name: str) -> str:
        key = name.casefold()
        if key not in self._by_folded:
            raise InvalidInputError(f"unknown disease class: {name!r}")
        return self._by_folded[key]
