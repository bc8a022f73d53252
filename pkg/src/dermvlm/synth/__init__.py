from .corpus import CorpusBundle, SynthSpec, generate_corpus, load_corpus, write_corpus
from .motifs import DEFAULT_SUPPORTED_CONCEPTS, MOTIFS, decode_oracle, render_image
from .rules import DEFAULT_CLASSES, DiagnosisRule, build_rule

__all__ = [
    "CorpusBundle",
    "DEFAULT_CLASSES",
    "DEFAULT_SUPPORTED_CONCEPTS",
    "DiagnosisRule",
    "MOTIFS",
    "SynthSpec",
    "build_rule",
    "decode_oracle",
    "generate_corpus",
    "load_corpus",
    "render_image",
    "write_corpus",
]
