import numpy as np
import pytest
import torch

from dermvlm.config import ModelConfig
from dermvlm.model import build_model, build_tokenizer
from dermvlm.prompts import template_texts

torch.set_num_threads(2)

TINY_TEXTS = [
    "This image shows Erythema.",
    "This image shows Plaque, Papule.",
    "The diagnosis is Herpes. Features include Crust.",
    "alpha beta gamma delta",
]


def tiny_config(**kw) -> ModelConfig:
    base = dict(
        image_size=16,
        patch_size=8,
        d_vision=8,
        n_vision_layers=1,
        n_heads=2,
        n_queries=2,
        d_decoder=8,
        n_decoder_layers=1,
        max_text_len=32,
        seed=0,
    )
    base.update(kw)
    return ModelConfig(**base)


@pytest.fixture(scope="session")
def tiny_tokenizer():
    return build_tokenizer(TINY_TEXTS, extra_texts=template_texts())


@pytest.fixture()
def tiny_model(tiny_tokenizer):
    return build_model(tiny_config(), tiny_tokenizer)


def rand_image(seed: int, size: int = 16, channels: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.random((size, size, channels)).astype(np.float32)
