"""Gradient correctness against central finite differences, and the freeze
contract (frozen components bitwise unchanged by optimizer steps)."""

import numpy as np
import pytest
import torch

from dermvlm.model import COMPONENTS, TokenSequence, build_model, build_tokenizer, decode_loss
from dermvlm.model.pipeline import PrefixEmbedding

from conftest import tiny_config


def _tiny_double_model():
    tok = build_tokenizer(["a b c d e f g h"])
    model = build_model(tiny_config(seed=3), tok)
    model.double()
    return model, tok


def _loss_fn(model, tok):
    prompt = TokenSequence(tok.tokenize("a b").ids)
    target = TokenSequence(tok.tokenize("c d").ids).with_mask(1)  # 2 tokens
    gen = torch.Generator().manual_seed(0)
    prefix_vec = torch.randn(
        model.config.n_queries, model.config.d_vision, generator=gen, dtype=torch.float64
    )

    def compute():
        prefix = PrefixEmbedding(model.align(prefix_vec))
        return decode_loss(prefix, prompt, target, model)

    return compute


def _central_difference(param, compute, i, eps=1e-4):
    flat = param.data.view(-1)
    orig = float(flat[i])
    flat[i] = orig + eps
    up = float(compute().detach())
    flat[i] = orig - eps
    down = float(compute().detach())
    flat[i] = orig
    return (up - down) / (2 * eps)


def _check_param(param, compute, indices=None):
    param.grad = None
    loss = compute()
    loss.backward()
    analytic = param.grad.detach().view(-1).numpy()
    idx = list(indices) if indices is not None else list(range(param.numel()))
    fd = np.array([_central_difference(param, compute, i) for i in idx])
    an = analytic[idx]
    denom = max(float(np.linalg.norm(an)), float(np.linalg.norm(fd)), 1e-12)
    return float(np.linalg.norm(an - fd)) / denom


def test_alignment_gradient_matches_finite_differences():
    model, tok = _tiny_double_model()
    compute = _loss_fn(model, tok)
    rel_w = _check_param(model.align.weight, compute)
    rel_b = _check_param(model.align.bias, compute)
    assert rel_w < 1e-3, f"alignment weight gradient off by {rel_w}"
    assert rel_b < 1e-3, f"alignment bias gradient off by {rel_b}"


def test_unfrozen_decoder_gradient_matches_finite_differences():
    model, tok = _tiny_double_model()
    model.set_freeze(decoder=False)
    compute = _loss_fn(model, tok)
    head = model.decoder.head.weight
    rel = _check_param(head, compute, indices=list(range(0, head.numel(), max(1, head.numel() // 16))))
    assert rel < 1e-3, f"decoder head gradient off by {rel}"


def test_frozen_components_bitwise_unchanged(tiny_model):
    tok = tiny_model.tokenizer
    before = {name: tiny_model.component_bytes(name) for name in COMPONENTS}
    optimizer = torch.optim.SGD(tiny_model.trainable_parameters(), lr=0.5)
    prompt = TokenSequence(tok.tokenize("This image shows").ids)
    target = TokenSequence(tok.tokenize("Erythema.").ids).with_mask(1)
    gen = torch.Generator().manual_seed(1)
    for _ in range(5):
        optimizer.zero_grad()
        prefix = PrefixEmbedding(
            tiny_model.align(torch.randn(2, 8, generator=gen))
        )
        loss = decode_loss(prefix, prompt, target, tiny_model)
        loss.backward()
        optimizer.step()
    after = {name: tiny_model.component_bytes(name) for name in COMPONENTS}
    for name in ("vision_encoder", "query_transformer", "decoder"):
        assert before[name] == after[name], f"{name} moved despite freeze flag"
    assert before["alignment"] != after["alignment"], "alignment should have trained"


def test_freeze_flags_control_requires_grad(tiny_model):
    assert all(not p.requires_grad for p in tiny_model.decoder.parameters())
    tiny_model.set_freeze(decoder=False)
    assert all(p.requires_grad for p in tiny_model.decoder.parameters())
    with pytest.raises(Exception):
        tiny_model.set_freeze(nonexistent=True)
