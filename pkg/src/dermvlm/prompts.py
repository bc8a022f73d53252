"""Fixed dialogue texts and the conversation template.

The four canonical user prompts drive a standardized diagnosis session and
are served verbatim by the HTTP API. The template constants define how an
image and a dialogue are rendered into one token stream for the decoder;
training and serving share this rendering.
"""

CANONICAL_PROMPTS: tuple[str, ...] = (
    "Could you describe the skin disease in this image for me?",
    "Please provide a paragraph listing additional features you observed in the image.",
    "Based on the previous information, please provide a detailed explanation of the cause of this skin disease.",
    "What treatment and medication should be recommended for this case?",
)

# Prompt used for diagnosis-focused training pairs and the class-accuracy probe.
DIAGNOSIS_QUERY = "What is the diagnosis?"

# Token-level wrapper around the image prefix: the projected image vectors are
# inserted between these two marker tokens.
IMAGE_OPEN = "[IMG]"
IMAGE_CLOSE = "[/IMG]"

USER_TAG = "User:"
ASSISTANT_TAG = "Assistant:"

# Caption templates for the synthetic corpus and the dataset loaders.
STAGE1_TEMPLATE = "This image shows {concepts}."
STAGE2_TEMPLATE = "The diagnosis is {disease}. Features include {concepts}."
CLASS_ONLY_TEMPLATE = "The diagnosis is {disease}."
NO_CONCEPT_CAPTION = "No clinical concept annotated."


def stage1_caption(concepts: list[str]) -> str:
    return STAGE1_TEMPLATE.format(concepts=", ".join(concepts))


def stage2_caption(disease: str, concepts: list[str]) -> str:
    return STAGE2_TEMPLATE.format(disease=disease, concepts=", ".join(concepts))


def template_texts() -> list[str]:
    """All fixed texts a tokenizer must cover regardless of corpus content."""
    return [
        IMAGE_OPEN,
        IMAGE_CLOSE,
        USER_TAG,
        ASSISTANT_TAG,
        DIAGNOSIS_QUERY,
        NO_CONCEPT_CAPTION,
        *CANONICAL_PROMPTS,
    ]
