"""Rendering dialogues into token id streams.

Trainer, server and probes all render through these helpers, so behavior
learned at training time transfers verbatim to serving time.
"""

from __future__ import annotations

from .model.tokenizer import TokenSequence, Tokenizer
from .prompts import ASSISTANT_TAG, USER_TAG


def dialogue_ids(
    tokenizer: Tokenizer, turns: list[tuple[str, str]], open_assistant: bool = True
) -> list[int]:
    """Render (role, text) turns as ``User: ... Assistant: ...`` token ids."""
    ids: list[int] = []
    for role, text in turns:
        tag = USER_TAG if role == "user" else ASSISTANT_TAG
        ids.extend(tokenizer.tokenize(f"{tag} {text}").ids)
    if open_assistant:
        ids.extend(tokenizer.tokenize(ASSISTANT_TAG).ids)
    return ids


def prompt_sequence(tokenizer: Tokenizer, prompt: str) -> TokenSequence:
    """Single-turn conditioning sequence ending in an open assistant tag."""
    return TokenSequence(dialogue_ids(tokenizer, [("user", prompt)]))


def target_sequence(tokenizer: Tokenizer, text: str, max_len: int | None = None):
    """Target ids (text + <eos>) with an all-one loss mask.

    Returns (sequence, truncated): texts longer than ``max_len`` tokens are
    cut before the end token is appended.
    """
    ids = tokenizer.tokenize(text).ids
    truncated = False
    if max_len is not None and len(ids) + 1 > max_len:
        ids = ids[: max_len - 1]
        truncated = True
    seq = TokenSequence(ids + [tokenizer.eos_id])
    return seq.with_mask(1), truncated


def fit_history(
    tokenizer: Tokenizer, turns: list[tuple[str, str]], budget: int
) -> tuple[list[int], bool]:
    """Render turns, dropping oldest first until the ids fit ``budget``.

    If even the newest turn alone overflows, its tail is kept so the result
    is never empty for budget >= 1.
    """
    start = 0
    truncated = False
    while start < len(turns):
        ids = dialogue_ids(tokenizer, turns[start:])
        if len(ids) <= budget:
            return ids, truncated
        start += 1
        truncated = True
    ids = dialogue_ids(tokenizer, turns[-1:] if turns else [])
    return ids[-max(budget, 1):], truncated
