"""The four-stage pipeline: patches -> features -> queries -> prefix -> text.

A :class:`PipelineModel` bundles the vision encoder, query transformer,
alignment layer, text decoder and tokenizer, with a per-component freeze
flag. Conditioning renders one embedding sequence::

    <bos> [IMG] <K projected image vectors> [/IMG] <dialogue tokens...>

and the decoder attends causally over the whole thing. Loss and generation
both go through this rendering, so trained behavior transfers to serving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import GenerationSettings, ModelConfig
from ..errors import InvalidInputError, NumericalError
from ..prompts import IMAGE_CLOSE, IMAGE_OPEN
from .net import QueryTransformer, TextDecoder, VisionEncoder, init_parameters
from .patches import PatchGrid, patchify
from .tokenizer import TokenSequence, Tokenizer

COMPONENTS = ("vision_encoder", "query_transformer", "alignment", "decoder")


@dataclass
class FreezeFlags:
    """True = parameters receive no gradient and no optimizer update."""

    vision_encoder: bool = True
    query_transformer: bool = True
    alignment: bool = False
    decoder: bool = True

    def as_dict(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in COMPONENTS}


@dataclass
class QueryEmbedding:
    vectors: torch.Tensor  # (n_queries, d_vision)


@dataclass
class PrefixEmbedding:
    vectors: torch.Tensor  # (n_queries, d_decoder)


@dataclass
class GenerationResult:
    text: str
    token_ids: list[int]
    stopped: str  # "eos" | "length"
    truncated: bool

    @property
    def metadata(self) -> dict:
        return {"stopped": self.stopped, "truncated": self.truncated}


class PipelineModel(nn.Module):
    def __init__(self, config: ModelConfig, tokenizer: Tokenizer):
        super().__init__()
        if config.vocab_size and config.vocab_size != tokenizer.vocab_size:
            raise InvalidInputError(
                f"config.vocab_size {config.vocab_size} != tokenizer {tokenizer.vocab_size}"
            )
        self.config = config.replace(vocab_size=tokenizer.vocab_size)
        self.tokenizer = tokenizer
        self.vision = VisionEncoder(
            config.patch_dim, config.n_patches, config.d_vision,
            config.n_vision_layers, config.n_heads,
        )
        self.queries = QueryTransformer(
            config.d_vision, config.n_queries, config.n_vision_layers, config.n_heads
        )
        self.align = nn.Linear(config.d_vision, config.d_decoder)
        self.decoder = TextDecoder(
            tokenizer.vocab_size, config.d_decoder, config.max_positions,
            config.n_decoder_layers, config.n_heads,
        )
        self.freeze = FreezeFlags()
        init_parameters(self, config.seed)
        self.apply_freeze()
        self._img_open_id = tokenizer.tokenize(IMAGE_OPEN).ids[0]
        self._img_close_id = tokenizer.tokenize(IMAGE_CLOSE).ids[0]

    def component(self, name: str) -> nn.Module:
        return {
            "vision_encoder": self.vision,
            "query_transformer": self.queries,
            "alignment": self.align,
            "decoder": self.decoder,
        }[name]

    def apply_freeze(self) -> None:
        for name in COMPONENTS:
            frozen = getattr(self.freeze, name)
            for p in self.component(name).parameters():
                p.requires_grad_(not frozen)

    def set_freeze(self, **flags: bool) -> None:
        for name, value in flags.items():
            if name not in COMPONENTS:
                raise InvalidInputError(f"unknown component {name!r}")
            setattr(self.freeze, name, value)
        self.apply_freeze()

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]

    def component_bytes(self, name: str) -> bytes:
        """Serialized parameter bytes, for bitwise freeze checks."""
        chunks = []
        for key, tensor in sorted(self.component(name).state_dict().items()):
            chunks.append(tensor.detach().cpu().numpy().tobytes())
        return b"".join(chunks)


def build_model(config: ModelConfig, tokenizer: Tokenizer) -> PipelineModel:
    return PipelineModel(config, tokenizer)


def encode_vision(patches: PatchGrid, model: PipelineModel) -> torch.Tensor:
    """(n_patches, patch_dim) -> (n_patches, d_vision) feature vectors."""
    if patches.patches.shape[0] != model.config.n_patches:
        raise InvalidInputError(
            f"expected {model.config.n_patches} patches, got {patches.patches.shape[0]}"
        )
    x = torch.from_numpy(np.ascontiguousarray(patches.patches, dtype=np.float32))
    features = model.vision(x.unsqueeze(0)).squeeze(0)
    if not torch.isfinite(features).all():
        raise NumericalError("vision encoder produced non-finite features")
    return features


def encode_queries(features: torch.Tensor, model: PipelineModel) -> QueryEmbedding:
    """Compress patch features into the K learned-query embedding."""
    out = model.queries(features.unsqueeze(0)).squeeze(0)
    if not torch.isfinite(out).all():
        raise NumericalError("query transformer produced non-finite embedding")
    return QueryEmbedding(out)


def align(q: QueryEmbedding, model: PipelineModel) -> PrefixEmbedding:
    """Linear projection of each query vector into decoder space."""
    if q.vectors.shape[0] != model.config.n_queries:
        raise InvalidInputError(
            f"expected {model.config.n_queries} query vectors, got {q.vectors.shape[0]}"
        )
    return PrefixEmbedding(model.align(q.vectors))


def embed_image(model: PipelineModel, image: np.ndarray) -> PrefixEmbedding:
    """Full vision path: normalized image array -> prefix embedding."""
    grid = patchify(image, model.config)
    return align(encode_queries(encode_vision(grid, model), model), model)


def _conditioning_embeddings(
    model: PipelineModel, prefix: PrefixEmbedding, text_ids: list[int]
) -> torch.Tensor:
    tok = model.tokenizer
    head_ids = [tok.bos_id, model._img_open_id]
    tail_ids = [model._img_close_id] + list(text_ids)
    return torch.cat(
        [
            model.decoder.embed_tokens(head_ids),
            prefix.vectors,
            model.decoder.embed_tokens(tail_ids),
        ]
    )


def text_base_offset(model: PipelineModel) -> int:
    """Position of the first dialogue token in the rendered sequence."""
    return 3 + model.config.n_queries  # bos, [IMG], K vectors, [/IMG]


def masked_lm_loss(
    model: PipelineModel, prefix: PrefixEmbedding, ids: list[int], mask: list[int]
) -> torch.Tensor:
    """Mean next-token cross-entropy over positions where mask == 1."""
    if len(ids) != len(mask):
        raise InvalidInputError("ids and mask must have equal length")
    if sum(mask) == 0:
        raise InvalidInputError("loss mask selects no positions")
    embs = _conditioning_embeddings(model, prefix, ids)
    if embs.shape[0] > model.decoder.max_positions:
        raise InvalidInputError(
            f"rendered sequence length {embs.shape[0]} exceeds capacity "
            f"{model.decoder.max_positions}"
        )
    logits = model.decoder(embs.unsqueeze(0)).squeeze(0)
    base = text_base_offset(model)
    scored = [j for j, m in enumerate(mask) if m == 1]
    pred_positions = torch.tensor([base + j - 1 for j in scored], dtype=torch.long)
    targets = torch.tensor([ids[j] for j in scored], dtype=torch.long)
    return F.cross_entropy(logits[pred_positions], targets)


def batched_masked_lm_loss(
    model: PipelineModel,
    prefixes: torch.Tensor,  # (B, K, d_decoder)
    id_lists: list[list[int]],
    mask_lists: list[list[int]],
) -> torch.Tensor:
    """Per-sample masked cross-entropy, shape (B,). Same math as
    :func:`masked_lm_loss` per sample, one padded decoder forward."""
    b = prefixes.shape[0]
    base = text_base_offset(model)
    embs = [
        _conditioning_embeddings(model, PrefixEmbedding(prefixes[i]), id_lists[i])
        for i in range(b)
    ]
    t_max = max(e.shape[0] for e in embs)
    if t_max > model.decoder.max_positions:
        raise InvalidInputError(
            f"rendered sequence length {t_max} exceeds capacity {model.decoder.max_positions}"
        )
    padded = torch.zeros(b, t_max, model.config.d_decoder)
    labels = torch.full((b, t_max), -100, dtype=torch.long)
    for i, e in enumerate(embs):
        padded[i, : e.shape[0]] = e
        for j, m in enumerate(mask_lists[i]):
            if m == 1:
                labels[i, base + j - 1] = id_lists[i][j]
    logits = model.decoder(padded)
    ce = F.cross_entropy(
        logits.transpose(1, 2), labels, ignore_index=-100, reduction="none"
    )
    counts = (labels != -100).sum(dim=1)
    if (counts == 0).any():
        raise InvalidInputError("a sample's loss mask selects no positions")
    return ce.sum(dim=1) / counts


def decode_loss(
    prefix: PrefixEmbedding,
    prompt: TokenSequence,
    target: TokenSequence,
    model: PipelineModel,
) -> torch.Tensor:
    """Cross-entropy of ``target`` given image prefix and ``prompt`` context."""
    if len(target) == 0:
        raise InvalidInputError("empty target sequence")
    if any(m != 0 for m in prompt.mask):
        raise InvalidInputError("prompt mask must be all-zero")
    if any(m != 1 for m in target.mask):
        raise InvalidInputError("target mask must be all-one")
    if len(prompt) + len(target) > model.config.max_text_len:
        raise InvalidInputError(
            f"prompt+target length {len(prompt) + len(target)} exceeds "
            f"max_text_len {model.config.max_text_len}"
        )
    return masked_lm_loss(
        model, prefix, list(prompt.ids) + list(target.ids), list(prompt.mask) + list(target.mask)
    )


def generate(
    prefix: PrefixEmbedding,
    prompt: TokenSequence,
    model: PipelineModel,
    gen: GenerationSettings | None = None,
) -> GenerationResult:
    """Autoregressive continuation after the rendered prompt.

    Greedy mode is deterministic; sampled mode is reproducible for a fixed
    seed. Stops at <eos> or after ``max_new_tokens``; running out of position
    capacity counts as a length stop and is flagged.
    """
    gen = gen or GenerationSettings()
    if len(prompt) == 0:
        raise InvalidInputError("prompt must be non-empty")
    tok = model.tokenizer
    sampler = torch.Generator().manual_seed(gen.seed) if gen.mode == "sampled" else None
    new_ids: list[int] = []
    stopped = "length"
    with torch.no_grad():
        embs = _conditioning_embeddings(model, prefix, list(prompt.ids))
        for _ in range(gen.max_new_tokens):
            if embs.shape[0] >= model.decoder.max_positions:
                break
            logits = model.decoder(embs.unsqueeze(0))[0, -1]
            if gen.mode == "greedy":
                next_id = int(torch.argmax(logits).item())
            else:
                probs = F.softmax(logits / gen.temperature, dim=-1)
                next_id = int(torch.multinomial(probs, 1, generator=sampler).item())
            if next_id == tok.eos_id:
                stopped = "eos"
                break
            new_ids.append(next_id)
            embs = torch.cat([embs, model.decoder.embed_tokens([next_id])])
    return GenerationResult(
        text=tok.detokenize(new_ids),
        token_ids=new_ids,
        stopped=stopped,
        truncated=(stopped == "length"),
    )
