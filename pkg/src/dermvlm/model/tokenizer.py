"""Whitespace word-level tokenizer with reserved tokens.

The vocabulary is built from a corpus (plus the fixed template texts) and is
ordered: the four reserved tokens first, then the sorted unique words. Words
keep attached punctuation ("Erythema," and "Erythema." are distinct tokens),
which keeps detokenize(tokenize(t)) == t for any whitespace-normalized text.
A character-level fallback exists for corpora where word-level granularity
is too coarse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InvalidInputError

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)


@dataclass
class TokenSequence:
    """Token ids with a per-position loss mask (1 = scored, 0 = context)."""

    ids: list[int]
    mask: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.mask:
            self.mask = [0] * len(self.ids)
        if len(self.ids) != len(self.mask):
            raise InvalidInputError("ids and mask must have equal length")

    def __len__(self) -> int:
        return len(self.ids)

    def with_mask(self, value: int) -> "TokenSequence":
        return TokenSequence(list(self.ids), [value] * len(self.ids))


class Tokenizer:
    def __init__(self, vocab: list[str], char_level: bool = False):
        if list(vocab[: len(RESERVED)]) != list(RESERVED):
            raise InvalidInputError("vocabulary must start with the reserved tokens")
        if len(vocab) != len(set(vocab)):
            raise InvalidInputError("vocabulary contains duplicates")
        self.vocab = list(vocab)
        self.char_level = char_level
        self._ids = {tok: i for i, tok in enumerate(self.vocab)}
        self.pad_id = self._ids[PAD]
        self.bos_id = self._ids[BOS]
        self.eos_id = self._ids[EOS]
        self.unk_id = self._ids[UNK]

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def _split(self, text: str) -> list[str]:
        if self.char_level:
            return [c for c in text if not c.isspace()] if text else []
        return text.split()

    def tokenize(self, text: str) -> TokenSequence:
        ids = [self._ids.get(tok, self.unk_id) for tok in self._split(text)]
        return TokenSequence(ids)

    def detokenize(self, seq: TokenSequence | list[int]) -> str:
        ids = seq.ids if isinstance(seq, TokenSequence) else seq
        words = [self.vocab[i] if 0 <= i < len(self.vocab) else UNK for i in ids]
        words = [w for w in words if w not in (PAD, BOS, EOS)]
        sep = "" if self.char_level else " "
        return sep.join(words)


def build_tokenizer(
    texts, extra_texts: list[str] | None = None, char_level: bool = False
) -> Tokenizer:
    """Build a tokenizer over ``texts`` plus the fixed template texts.

    The result is deterministic: reserved tokens, then sorted unique words.
    """
    words: set[str] = set()
    for text in list(texts) + list(extra_texts or []):
        if char_level:
            words.update(c for c in text if not c.isspace())
        else:
            words.update(text.split())
    vocab = list(RESERVED) + sorted(words)
    return Tokenizer(vocab, char_level=char_level)
