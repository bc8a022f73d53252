import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dermvlm.errors import InvalidInputError
from dermvlm.model.tokenizer import (
    RESERVED,
    UNK,
    TokenSequence,
    Tokenizer,
    build_tokenizer,
)

WORDS = ["erythema", "plaque", "papule", "shows", "image", "This"]


@pytest.fixture(scope="module")
def tok():
    return build_tokenizer([" ".join(WORDS)])


def test_empty_text_roundtrip(tok):
    seq = tok.tokenize("")
    assert seq.ids == []
    assert tok.detokenize(seq) == ""


def test_two_word_roundtrip(tok):
    seq = tok.tokenize("erythema plaque")
    assert len(seq.ids) == 2
    assert tok.detokenize(seq) == "erythema plaque"


def test_unknown_word_maps_to_unk(tok):
    seq = tok.tokenize("erythema zzz-unseen")
    assert seq.ids[1] == tok.unk_id
    assert tok.detokenize(seq) == f"erythema {UNK}"


def test_reserved_tokens_lead_vocab(tok):
    assert tuple(tok.vocab[:4]) == RESERVED
    assert all(i < tok.vocab_size for i in tok.tokenize(" ".join(WORDS)).ids)


def test_vocab_is_sorted_and_deterministic():
    a = build_tokenizer(["b a", "c"])
    b = build_tokenizer(["c", "a b"])
    assert a.vocab == b.vocab


def test_mask_length_mismatch_rejected():
    with pytest.raises(InvalidInputError):
        TokenSequence([1, 2], [1])


def test_detokenize_skips_structural_tokens(tok):
    seq = tok.tokenize("erythema")
    padded = TokenSequence([tok.bos_id] + seq.ids + [tok.eos_id, tok.pad_id])
    assert tok.detokenize(padded) == "erythema"


def test_char_level_fallback_roundtrip():
    tok = build_tokenizer(["abc def"], char_level=True)
    seq = tok.tokenize("cab")
    assert tok.detokenize(seq) == "cab"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(WORDS), min_size=1, max_size=8))
def test_roundtrip_any_vocab_sentence(words):
    tok = build_tokenizer([" ".join(WORDS)])
    text = " ".join(words)
    assert tok.detokenize(tok.tokenize(text)) == text
