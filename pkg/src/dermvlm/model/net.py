"""Torch building blocks: vision encoder, query transformer, text decoder.

All blocks are pre-norm residual transformers without dropout, so every
forward pass is a pure function of (parameters, inputs). Modules operate on
batched tensors (B, T, d); parameters are (re)initialized from an explicit
torch.Generator, which keeps model builds reproducible across processes.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F


class MultiHeadAttention(nn.Module):
    """Self- or cross-attention; ``d_context`` sizes the key/value source."""

    def __init__(self, d_model: int, n_heads: int, d_context: int | None = None):
        super().__init__()
        d_context = d_context or d_model
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_context, d_model)
        self.v_proj = nn.Linear(d_context, d_model)
        self.out_proj = nn.Linear(d_model, d_model)

    def forward(
        self, x: torch.Tensor, context: torch.Tensor | None = None, causal: bool = False
    ) -> torch.Tensor:
        # x: (B, T, d); context: (B, S, d_context) for cross-attention
        src = x if context is None else context
        b, t, _ = x.shape
        s = src.shape[1]
        q = self.q_proj(x).view(b, t, self.n_heads, self.d_head).transpose(1, 2)
        k = self.k_proj(src).view(b, s, self.n_heads, self.d_head).transpose(1, 2)
        v = self.v_proj(src).view(b, s, self.n_heads, self.d_head).transpose(1, 2)
        scores = (q @ k.transpose(-1, -2)) / math.sqrt(self.d_head)
        if causal:
            mask = torch.triu(torch.ones(t, s, dtype=torch.bool, device=x.device), 1)
            scores = scores.masked_fill(mask, float("-inf"))
        out = F.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(b, t, -1)
        return self.out_proj(out)


class MLP(nn.Module):
    def __init__(self, d_model: int, expand: int = 4):
        super().__init__()
        self.fc1 = nn.Linear(d_model, expand * d_model)
        self.fc2 = nn.Linear(expand * d_model, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(F.gelu(self.fc1(x)))


class EncoderBlock(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, n_heads)
        self.ln2 = nn.LayerNorm(d_model)
        self.mlp = MLP(d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x))
        return x + self.mlp(self.ln2(x))


class VisionEncoder(nn.Module):
    """Embeds flattened patches and mixes them with self-attention."""

    def __init__(self, patch_dim: int, n_patches: int, d_vision: int, n_layers: int, n_heads: int):
        super().__init__()
        self.patch_embed = nn.Linear(patch_dim, d_vision)
        self.pos_emb = nn.Parameter(torch.zeros(n_patches, d_vision))
        self.blocks = nn.ModuleList(EncoderBlock(d_vision, n_heads) for _ in range(n_layers))
        self.ln_out = nn.LayerNorm(d_vision)

    def forward(self, patches: torch.Tensor) -> torch.Tensor:
        # (B, N, patch_dim) -> (B, N, d_vision)
        x = self.patch_embed(patches) + self.pos_emb
        for block in self.blocks:
            x = block(x)
        return self.ln_out(x)


class QueryBlock(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.ln_self = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, n_heads)
        self.ln_cross = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, n_heads)
        self.ln_mlp = nn.LayerNorm(d_model)
        self.mlp = MLP(d_model)

    def forward(self, q: torch.Tensor, features: torch.Tensor) -> torch.Tensor:
        q = q + self.self_attn(self.ln_self(q))
        q = q + self.cross_attn(self.ln_cross(q), context=features)
        return q + self.mlp(self.ln_mlp(q))


class QueryTransformer(nn.Module):
    """K learned query vectors cross-attending over patch features.

    The output is the raw residual stream (no final norm), so zeroing every
    branch's last projection leaves exactly the learned queries.
    """

    def __init__(self, d_vision: int, n_queries: int, n_layers: int, n_heads: int):
        super().__init__()
        self.queries = nn.Parameter(torch.zeros(n_queries, d_vision))
        self.blocks = nn.ModuleList(QueryBlock(d_vision, n_heads) for _ in range(n_layers))

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        # (B, N, d_vision) -> (B, K, d_vision)
        q = self.queries.expand(features.shape[0], -1, -1)
        for block in self.blocks:
            q = block(q, features)
        return q


class DecoderBlock(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, n_heads)
        self.ln2 = nn.LayerNorm(d_model)
        self.mlp = MLP(d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x), causal=True)
        return x + self.mlp(self.ln2(x))


class TextDecoder(nn.Module):
    """Causal transformer over mixed token/prefix embeddings."""

    def __init__(self, vocab_size: int, d_model: int, max_positions: int, n_layers: int, n_heads: int):
        super().__init__()
        self.tok_emb = nn.Embedding(vocab_size, d_model)
        self.pos_emb = nn.Parameter(torch.zeros(max_positions, d_model))
        self.blocks = nn.ModuleList(DecoderBlock(d_model, n_heads) for _ in range(n_layers))
        self.ln_f = nn.LayerNorm(d_model)
        self.head = nn.Linear(d_model, vocab_size)

    @property
    def max_positions(self) -> int:
        return self.pos_emb.shape[0]

    def embed_tokens(self, ids: list[int] | torch.Tensor) -> torch.Tensor:
        if not isinstance(ids, torch.Tensor):
            ids = torch.tensor(ids, dtype=torch.long)
        return self.tok_emb(ids)

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        # (B, T, d_model) -> logits (B, T, vocab)
        t = embeddings.shape[1]
        if t > self.max_positions:
            raise ValueError(f"sequence length {t} exceeds position table {self.max_positions}")
        x = embeddings + self.pos_emb[:t]
        for block in self.blocks:
            x = block(x)
        return self.head(self.ln_f(x))


def init_parameters(module: nn.Module, seed: int) -> None:
    """Deterministic re-initialization of every parameter in ``module``.

    Matrices (and the learned query/position tables) are drawn N(0, 0.02)
    from a dedicated generator; vectors are zeroed; LayerNorm scales reset
    to one. Iteration over sorted parameter names pins the draw order.
    """
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for _, p in sorted(module.named_parameters(), key=lambda kv: kv[0]):
            if p.dim() >= 2:
                p.normal_(mean=0.0, std=0.02, generator=gen)
            else:
                p.zero_()
        for sub in module.modules():
            if isinstance(sub, nn.LayerNorm):
                sub.weight.fill_(1.0)
                sub.bias.zero_()
