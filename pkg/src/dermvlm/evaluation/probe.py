"""Behavioral probes: score generated text against synthetic ground truth.

Concept recall comes from the describe-prompt reply; class accuracy from the
diagnosis-query reply. Matching is case-insensitive substring on the label
names, which is exact for the template-generated corpus vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..config import GenerationSettings
from ..errors import ConfigurationError, InvalidInputError
from ..model.patches import normalize_array
from ..model.pipeline import PipelineModel, embed_image, generate
from ..dialogue import prompt_sequence
from ..prompts import CANONICAL_PROMPTS, DIAGNOSIS_QUERY
from ..synth.corpus import CorpusBundle

PROBE_SETTINGS = GenerationSettings(mode="greedy", max_new_tokens=32)


@dataclass
class ProbeReport:
    concept_recall: float
    class_accuracy: float
    n_cases: int
    rows: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "concept_recall": self.concept_recall,
            "class_accuracy": self.class_accuracy,
            "n_cases": self.n_cases,
        }


def _check_vocabulary(model: PipelineModel, bundle: CorpusBundle) -> None:
    """Labels the split will score must be expressible under the checkpoint."""
    vocab_text = " ".join(model.tokenizer.vocab).casefold()
    concepts = sorted({c for rec in bundle.records for c in rec["concepts"]})
    diseases = sorted({rec["disease"] for rec in bundle.records})
    missing = [c for c in concepts if c.casefold() not in vocab_text]
    missing += [
        d for d in diseases if any(w not in vocab_text for w in d.casefold().split())
    ]
    if missing:
        raise ConfigurationError(
            f"checkpoint vocabulary does not cover the eval split labels: {missing}"
        )


def probe_behavior(
    model: PipelineModel,
    bundle: CorpusBundle,
    gen: GenerationSettings | None = None,
) -> ProbeReport:
    if not bundle.records:
        raise InvalidInputError("eval split is empty")
    _check_vocabulary(model, bundle)
    gen = gen or PROBE_SETTINGS
    tok = model.tokenizer
    describe = prompt_sequence(tok, CANONICAL_PROMPTS[0])
    diagnose = prompt_sequence(tok, DIAGNOSIS_QUERY)
    rows = []
    recall_sum, hits = 0.0, 0
    for rec in bundle.records:
        prefix = embed_image(model, normalize_array(bundle.images[rec["path"]]))
        reply_desc = generate(prefix, describe, model, gen).text
        reply_diag = generate(prefix, diagnose, model, gen).text
        planted = rec["concepts"]
        named = [c for c in planted if c.casefold() in reply_desc.casefold()]
        recall = len(named) / len(planted)
        hit = rec["disease"].casefold() in reply_diag.casefold()
        recall_sum += recall
        hits += int(hit)
        rows.append(
            {
                "path": rec["path"],
                "planted": planted,
                "named": named,
                "disease": rec["disease"],
                "class_hit": hit,
                "reply_describe": reply_desc,
                "reply_diagnose": reply_diag,
            }
        )
    n = len(bundle.records)
    return ProbeReport(
        concept_recall=recall_sum / n,
        class_accuracy=hits / n,
        n_cases=n,
        rows=rows,
    )
