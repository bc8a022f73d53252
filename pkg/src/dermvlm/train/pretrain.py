"""Backbone preparation ahead of the two fine-tuning stages.

At desk scale there are no pretrained weights to download, so the roles the
full-size system gets for free are reproduced locally:

* vision side: the patch encoder and query transformer train against a
  temporary multi-label concept head on the synthetic corpus; the head is
  then discarded and both components frozen.
* decoder: trained as a plain next-token language model over the corpus
  caption texts (rendered with the same dialogue template, image prefix
  zeroed), then frozen. This supplies the language competence a pretrained
  decoder would otherwise contribute.

After preparation only the alignment layer remains trainable, which is the
default regime for both fine-tuning stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..dialogue import prompt_sequence, target_sequence
from ..model.patches import normalize_array, patchify
from ..model.pipeline import PipelineModel, batched_masked_lm_loss
from ..synth.corpus import CorpusBundle
from .loop import STAGE_PROMPTS


@dataclass(frozen=True)
class PretrainConfig:
    vision_steps: int = 500
    decoder_steps: int = 1500
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0


def _batches(seed: int, tag: int, n: int, batch: int, steps: int):
    for step in range(steps):
        rng = np.random.default_rng([seed, tag, step])
        yield step, rng.integers(0, n, size=batch)


def pretrain_vision(
    model: PipelineModel, bundle: CorpusBundle, cfg: PretrainConfig
) -> dict:
    """Concept-classification pretraining of the vision side.

    Returns {"final_loss", "exact_match"} measured on the training corpus.
    """
    concepts = bundle.supported_concepts
    index = {c: i for i, c in enumerate(concepts)}
    keys = [rec["path"] for rec in bundle.records]
    labels = torch.zeros(len(keys), len(concepts))
    for row, rec in enumerate(bundle.records):
        for c in rec["concepts"]:
            labels[row, index[c]] = 1.0
    grids = torch.stack(
        [
            torch.from_numpy(
                patchify(normalize_array(bundle.images[k]), model.config).patches
            )
            for k in keys
        ]
    )
    head = nn.Linear(model.config.n_queries * model.config.d_vision, len(concepts))
    gen = torch.Generator().manual_seed(cfg.seed + 101)
    with torch.no_grad():
        head.weight.normal_(mean=0.0, std=0.02, generator=gen)
        head.bias.zero_()
    model.set_freeze(vision_encoder=False, query_transformer=False)
    params = list(model.vision.parameters()) + list(model.queries.parameters()) + list(
        head.parameters()
    )
    optimizer = torch.optim.Adam(params, lr=cfg.lr)
    final_loss = float("nan")
    for _, idx in _batches(cfg.seed, 11, len(keys), cfg.batch_size, cfg.vision_steps):
        optimizer.zero_grad(set_to_none=True)
        q = model.queries(model.vision(grids[idx]))
        logits = head(q.reshape(q.shape[0], -1))
        loss = F.binary_cross_entropy_with_logits(logits, labels[idx])
        loss.backward()
        optimizer.step()
        final_loss = float(loss.detach())
    with torch.no_grad():
        q = model.queries(model.vision(grids))
        preds = head(q.reshape(q.shape[0], -1))
        exact = float(((preds > 0) == labels.bool()).all(dim=1).float().mean())
    # head is discarded here; the encoder and query transformer freeze
    model.set_freeze(vision_encoder=True, query_transformer=True)
    return {"final_loss": final_loss, "exact_match": exact}


def pretrain_decoder_lm(
    model: PipelineModel, texts_by_stage: dict[int, list[str]], cfg: PretrainConfig
) -> dict:
    """Next-token pretraining of the decoder over rendered caption pairs."""
    tok = model.tokenizer
    rendered = []
    for stage, texts in sorted(texts_by_stage.items()):
        prompt = prompt_sequence(tok, STAGE_PROMPTS[stage])
        for text in texts:
            target, _ = target_sequence(tok, text, max_len=model.config.max_text_len - len(prompt))
            rendered.append(
                (
                    list(prompt.ids) + list(target.ids),
                    [0] * len(prompt.ids) + [1] * len(target.ids),
                )
            )
    model.set_freeze(decoder=False)
    optimizer = torch.optim.Adam(model.decoder.parameters(), lr=cfg.lr)
    final_loss = float("nan")
    k, d = model.config.n_queries, model.config.d_decoder
    for _, idx in _batches(cfg.seed, 13, len(rendered), cfg.batch_size, cfg.decoder_steps):
        optimizer.zero_grad(set_to_none=True)
        zero_prefixes = torch.zeros(len(idx), k, d)
        loss = batched_masked_lm_loss(
            model,
            zero_prefixes,
            [rendered[i][0] for i in idx],
            [rendered[i][1] for i in idx],
        ).mean()
        loss.backward()
        optimizer.step()
        final_loss = float(loss.detach())
    model.set_freeze(decoder=True)
    return {"final_loss": final_loss}


def prepare_base(
    model: PipelineModel, bundle: CorpusBundle, cfg: PretrainConfig | None = None
) -> dict:
    """Run both preparation steps; leaves only the alignment layer trainable."""
    cfg = cfg or PretrainConfig()
    vision_report = pretrain_vision(model, bundle, cfg)
    texts = {1: [p.text for p in bundle.stage1], 2: [p.text for p in bundle.stage2]}
    decoder_report = pretrain_decoder_lm(model, texts, cfg)
    model.set_freeze(
        vision_encoder=True, query_transformer=True, alignment=False, decoder=True
    )
    return {"vision": vision_report, "decoder": decoder_report}
