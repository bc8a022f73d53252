from .checkpoint import load_checkpoint, save_checkpoint
from .patches import PatchGrid, normalize_array, patchify, preprocess_image_bytes, unpatchify
from .pipeline import (
    COMPONENTS,
    FreezeFlags,
    GenerationResult,
    PipelineModel,
    PrefixEmbedding,
    QueryEmbedding,
    align,
    build_model,
    decode_loss,
    embed_image,
    encode_queries,
    encode_vision,
    generate,
    masked_lm_loss,
)
from .tokenizer import EOS, PAD, RESERVED, UNK, TokenSequence, Tokenizer, build_tokenizer

__all__ = [
    "COMPONENTS",
    "EOS",
    "FreezeFlags",
    "GenerationResult",
    "PAD",
    "PatchGrid",
    "PipelineModel",
    "PrefixEmbedding",
    "QueryEmbedding",
    "RESERVED",
    "TokenSequence",
    "Tokenizer",
    "UNK",
    "align",
    "build_model",
    "build_tokenizer",
    "decode_loss",
    "embed_image",
    "encode_queries",
    "encode_vision",
    "generate",
    "load_checkpoint",
    "masked_lm_loss",
    "normalize_array",
    "patchify",
    "preprocess_image_bytes",
    "save_checkpoint",
    "unpatchify",
]
