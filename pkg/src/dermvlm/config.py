"""Dataclass configs for the model and for text generation.

Defaults are sized so the whole two-stage recipe runs in minutes on a laptop
CPU; every width is overridable. Images are resized to ``image_size`` square,
scaled to [0, 1] and centered by subtracting 0.5 before patching.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import InvalidConfigError


@dataclass(frozen=True)
class ModelConfig:
    image_size: int = 64
    channels: int = 3
    patch_size: int = 8
    d_vision: int = 64
    n_vision_layers: int = 2
    n_heads: int = 4
    n_queries: int = 8
    d_decoder: int = 64
    n_decoder_layers: int = 2
    vocab_size: int = 0  # set from the tokenizer at model build time
    max_text_len: int = 160
    seed: int = 0

    def __post_init__(self):
        if self.image_size <= 0 or self.patch_size <= 0:
            raise InvalidConfigError("image_size and patch_size must be positive")
        if self.image_size % self.patch_size != 0:
            raise InvalidConfigError(
                f"image_size {self.image_size} not divisible by patch_size {self.patch_size}"
            )
        if self.d_vision % self.n_heads != 0 or self.d_decoder % self.n_heads != 0:
            raise InvalidConfigError("d_vision and d_decoder must be divisible by n_heads")
        if self.max_text_len < 1:
            raise InvalidConfigError("max_text_len must be >= 1")
        if self.n_queries < 1:
            raise InvalidConfigError("n_queries must be >= 1")
        if self.channels < 1:
            raise InvalidConfigError("channels must be >= 1")

    @property
    def n_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @property
    def max_positions(self) -> int:
        # image prefix + markers/dialogue tags + text budget, with slack
        return self.n_queries + self.max_text_len + 16

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, fixed separators."""
        return json.dumps(dataclasses.asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls(**json.loads(text))

    def replace(self, **kw) -> "ModelConfig":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class GenerationSettings:
    mode: str = "greedy"  # "greedy" | "sampled"
    temperature: float = 1.0
    max_new_tokens: int = 48
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("greedy", "sampled"):
            raise InvalidConfigError(f"unknown generation mode {self.mode!r}")
        if self.temperature <= 0:
            raise InvalidConfigError("temperature must be > 0")
        if self.max_new_tokens < 0:
            raise InvalidConfigError("max_new_tokens must be >= 0")
