import math

import numpy as np
import pytest
import torch

from dermvlm.config import GenerationSettings
from dermvlm.errors import InvalidInputError
from dermvlm.model import (
    TokenSequence,
    align,
    build_model,
    decode_loss,
    encode_queries,
    encode_vision,
    generate,
    patchify,
)
from dermvlm.model.pipeline import (
    QueryEmbedding,
    masked_lm_loss,
    text_base_offset,
    _conditioning_embeddings,
    PrefixEmbedding,
)

from conftest import rand_image, tiny_config


def _grid(model, seed=0):
    return patchify(rand_image(seed, model.config.image_size), model.config)


# -- encode_vision -----------------------------------------------------------


def test_identical_patches_identical_features(tiny_model):
    with torch.no_grad():
        tiny_model.vision.pos_emb.zero_()  # disable positions for symmetry
    img = np.tile(rand_image(1, 8), (2, 2, 1))  # 2x2 grid of one 8x8 patch
    grid = patchify(img, tiny_model.config)
    # every patch row identical by construction
    assert np.array_equal(grid.patches, np.tile(grid.patches[0], (4, 1)))
    feats = encode_vision(grid, tiny_model)
    assert torch.equal(feats[0], feats[1])
    assert torch.equal(feats[0], feats[-1])


def test_encode_vision_deterministic(tiny_model):
    grid = _grid(tiny_model)
    a = encode_vision(grid, tiny_model)
    b = encode_vision(grid, tiny_model)
    assert torch.equal(a, b)


def test_perturbing_one_patch_touches_all_features(tiny_model):
    img = rand_image(2, 16)
    before = encode_vision(patchify(img, tiny_model.config), tiny_model)
    img2 = img.copy()
    img2[0, 0, 0] += 0.5  # inside patch 0 only
    after = encode_vision(patchify(img2, tiny_model.config), tiny_model)
    changed = (before != after).any(dim=1)
    assert bool(changed.all()), "attention should mix the perturbation into every patch"


def test_patch_count_mismatch_rejected(tiny_model):
    cfg32 = tiny_config(image_size=32)
    grid = patchify(rand_image(0, 32), cfg32)
    with pytest.raises(InvalidInputError):
        encode_vision(grid, tiny_model)


# -- encode_queries ----------------------------------------------------------


def test_query_embedding_shape_default_config(tiny_tokenizer):
    model = build_model(tiny_config(n_queries=8, d_vision=64, n_heads=4), tiny_tokenizer)
    q = encode_queries(encode_vision(_grid(model), model), model)
    assert q.vectors.shape == (8, 64)


def test_distinct_images_distinct_embeddings(tiny_model):
    embs = []
    for seed in range(10):
        feats = encode_vision(_grid(tiny_model, seed), tiny_model)
        embs.append(encode_queries(feats, tiny_model).vectors)
    for i in range(len(embs)):
        for j in range(i + 1, len(embs)):
            assert not torch.equal(embs[i], embs[j])


def test_zeroed_branches_return_learned_queries(tiny_model):
    with torch.no_grad():
        for block in tiny_model.queries.blocks:
            block.self_attn.v_proj.weight.zero_()
            block.self_attn.v_proj.bias.zero_()
            block.self_attn.out_proj.weight.zero_()
            block.self_attn.out_proj.bias.zero_()
            block.cross_attn.v_proj.weight.zero_()
            block.cross_attn.v_proj.bias.zero_()
            block.cross_attn.out_proj.weight.zero_()
            block.cross_attn.out_proj.bias.zero_()
            block.mlp.fc2.weight.zero_()
            block.mlp.fc2.bias.zero_()
    feats = torch.zeros(tiny_model.config.n_patches, tiny_model.config.d_vision)
    out = encode_queries(feats, tiny_model)
    assert torch.equal(out.vectors, tiny_model.queries.queries)


# -- align -------------------------------------------------------------------


def test_align_identity(tiny_model):
    with torch.no_grad():
        tiny_model.align.weight.copy_(torch.eye(8))
        tiny_model.align.bias.zero_()
    q = QueryEmbedding(torch.randn(2, 8, generator=torch.Generator().manual_seed(0)))
    assert torch.allclose(align(q, tiny_model).vectors, q.vectors)


def test_align_homogeneity_and_affinity(tiny_model):
    gen = torch.Generator().manual_seed(1)
    q1 = torch.randn(2, 8, generator=gen)
    q2 = torch.randn(2, 8, generator=gen)
    with torch.no_grad():
        tiny_model.align.bias.zero_()
    a = align(QueryEmbedding(2.5 * q1), tiny_model).vectors
    b = 2.5 * align(QueryEmbedding(q1), tiny_model).vectors
    assert torch.allclose(a, b, atol=1e-5)
    # affinity with a bias
    with torch.no_grad():
        tiny_model.align.bias.normal_(generator=gen)
    lhs = align(QueryEmbedding(q1 + q2), tiny_model).vectors
    zero = align(QueryEmbedding(torch.zeros(2, 8)), tiny_model).vectors
    rhs = (
        align(QueryEmbedding(q1), tiny_model).vectors
        + align(QueryEmbedding(q2), tiny_model).vectors
        - zero
    )
    assert torch.allclose(lhs, rhs, atol=1e-5)


def test_alignment_parameter_count(tiny_model):
    cfg = tiny_model.config
    n = sum(p.numel() for p in tiny_model.align.parameters())
    assert n == cfg.d_vision * cfg.d_decoder + cfg.d_decoder


def test_align_wrong_count_rejected(tiny_model):
    with pytest.raises(InvalidInputError):
        align(QueryEmbedding(torch.zeros(5, 8)), tiny_model)


# -- decode_loss -------------------------------------------------------------


def _prefix(model, seed=0):
    feats = encode_vision(_grid(model, seed), model)
    return align(encode_queries(feats, model), model)


def _seqs(model, n_prompt=2, n_target=3):
    tok = model.tokenizer
    ids = tok.tokenize("This image shows Erythema. Plaque, Papule.").ids
    prompt = TokenSequence(ids[:n_prompt])
    target = TokenSequence(ids[n_prompt : n_prompt + n_target]).with_mask(1)
    return prompt, target


def test_uniform_logits_loss_is_log_vocab(tiny_model):
    with torch.no_grad():
        tiny_model.decoder.head.weight.zero_()
        tiny_model.decoder.head.bias.zero_()
    prompt, target = _seqs(tiny_model)
    loss = decode_loss(_prefix(tiny_model), prompt, target, tiny_model)
    assert math.isclose(float(loss.detach()), math.log(tiny_model.config.vocab_size), rel_tol=1e-6)


def test_certain_prediction_loss_is_zero(tiny_model):
    tok = tiny_model.tokenizer
    t = tok.tokenize("Erythema.").ids[0]
    with torch.no_grad():
        tiny_model.decoder.head.weight.zero_()
        tiny_model.decoder.head.bias.fill_(-50.0)
        tiny_model.decoder.head.bias[t] = 50.0
    prompt = TokenSequence(tok.tokenize("This image").ids)
    target = TokenSequence([t, t, t]).with_mask(1)
    loss = decode_loss(_prefix(tiny_model), prompt, target, tiny_model)
    assert float(loss.detach()) < 1e-6


def test_three_token_loss_matches_numpy_recompute(tiny_model):
    prompt, target = _seqs(tiny_model, n_prompt=2, n_target=3)
    prefix = _prefix(tiny_model, seed=5)
    loss = float(decode_loss(prefix, prompt, target, tiny_model))
    # independent recomputation from exported logits, float64
    ids = list(prompt.ids) + list(target.ids)
    embs = _conditioning_embeddings(tiny_model, prefix, ids)
    logits = tiny_model.decoder(embs.unsqueeze(0)).squeeze(0).detach().numpy().astype(np.float64)
    base = text_base_offset(tiny_model)
    total = 0.0
    for j in range(len(prompt.ids), len(ids)):
        row = logits[base + j - 1]
        log_p = row - (np.log(np.exp(row - row.max()).sum()) + row.max())
        total -= log_p[ids[j]]
    expected = total / len(target.ids)
    assert math.isclose(loss, expected, rel_tol=1e-5)


def test_empty_target_rejected(tiny_model):
    prompt, _ = _seqs(tiny_model)
    with pytest.raises(InvalidInputError):
        decode_loss(_prefix(tiny_model), prompt, TokenSequence([]), tiny_model)


def test_bad_masks_rejected(tiny_model):
    prompt, target = _seqs(tiny_model)
    with pytest.raises(InvalidInputError):
        decode_loss(_prefix(tiny_model), prompt.with_mask(1), target, tiny_model)
    with pytest.raises(InvalidInputError):
        decode_loss(_prefix(tiny_model), prompt, target.with_mask(0), tiny_model)


def test_masked_suffix_does_not_move_loss(tiny_model):
    tok = tiny_model.tokenizer
    words = tok.tokenize("This image shows Erythema. alpha beta gamma delta").ids
    ids = words[:6]
    mask = [0, 0, 1, 1, 0, 0]  # trailing context after every scored position
    prefix = _prefix(tiny_model, seed=9)
    base_loss = float(masked_lm_loss(tiny_model, prefix, ids, mask))
    ids2 = list(ids)
    ids2[-1] = words[6]  # masked-out, causally after all targets
    assert float(masked_lm_loss(tiny_model, prefix, ids2, mask)) == base_loss
    ids3 = list(ids)
    ids3[3] = words[7]  # scored position: loss must move
    assert float(masked_lm_loss(tiny_model, prefix, ids3, mask)) != base_loss


def test_batched_loss_matches_single(tiny_model):
    prompt, target = _seqs(tiny_model)
    prefix = _prefix(tiny_model, seed=2)
    from dermvlm.model.pipeline import batched_masked_lm_loss

    single = float(decode_loss(prefix, prompt, target, tiny_model))
    ids = list(prompt.ids) + list(target.ids)
    mask = [0] * len(prompt.ids) + [1] * len(target.ids)
    other_ids = ids[:-1]
    other_mask = mask[:-1]
    batch = batched_masked_lm_loss(
        tiny_model,
        torch.stack([prefix.vectors, prefix.vectors]),
        [ids, other_ids],
        [mask, other_mask],
    )
    assert math.isclose(float(batch[0]), single, rel_tol=1e-6)


# -- generate ----------------------------------------------------------------


def test_zero_budget_generates_nothing(tiny_model):
    prompt, _ = _seqs(tiny_model)
    out = generate(_prefix(tiny_model), prompt, tiny_model, GenerationSettings(max_new_tokens=0))
    assert out.text == ""
    assert out.token_ids == []


def test_greedy_is_deterministic(tiny_model):
    prompt, _ = _seqs(tiny_model)
    g = GenerationSettings(mode="greedy", max_new_tokens=8)
    a = generate(_prefix(tiny_model), prompt, tiny_model, g)
    b = generate(_prefix(tiny_model), prompt, tiny_model, g)
    assert a.text == b.text and a.token_ids == b.token_ids


def test_sampled_reproducible_under_seed(tiny_model):
    prompt, _ = _seqs(tiny_model)
    g = GenerationSettings(mode="sampled", temperature=1.3, max_new_tokens=8, seed=42)
    a = generate(_prefix(tiny_model), prompt, tiny_model, g)
    b = generate(_prefix(tiny_model), prompt, tiny_model, g)
    assert a.token_ids == b.token_ids


def test_empty_prompt_rejected(tiny_model):
    with pytest.raises(InvalidInputError):
        generate(_prefix(tiny_model), TokenSequence([]), tiny_model)


def test_generation_metadata_flags_length_stop(tiny_model):
    prompt, _ = _seqs(tiny_model)
    out = generate(_prefix(tiny_model), prompt, tiny_model, GenerationSettings(max_new_tokens=3))
    assert out.stopped in ("eos", "length")
    assert out.truncated == (out.stopped == "length")
