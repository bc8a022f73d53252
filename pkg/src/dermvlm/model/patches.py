"""Image preprocessing and lossless patch extraction."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ..config import ModelConfig
from ..errors import InvalidInputError


@dataclass
class PatchGrid:
    """Row-major flattened patches of one image."""

    patches: np.ndarray  # (n_patches, patch_size**2 * channels)
    image_size: int
    patch_size: int
    channels: int

    def __post_init__(self):
        n = (self.image_size // self.patch_size) ** 2
        if self.patches.shape != (n, self.patch_size**2 * self.channels):
            raise InvalidInputError(
                f"patch grid shape {self.patches.shape} does not match "
                f"expected ({n}, {self.patch_size**2 * self.channels})"
            )


def patchify(image: np.ndarray, config: ModelConfig) -> PatchGrid:
    """Split an (S, S, C) image into row-major flattened patches.

    The operation is lossless: :func:`unpatchify` reassembles the exact array.
    """
    expected = (config.image_size, config.image_size, config.channels)
    if image.shape != expected:
        raise InvalidInputError(
            f"image shape {tuple(image.shape)} does not match expected {expected}"
        )
    s, p, c = config.image_size, config.patch_size, config.channels
    g = s // p
    patches = (
        image.reshape(g, p, g, p, c)
        .transpose(0, 2, 1, 3, 4)
        .reshape(g * g, p * p * c)
    )
    return PatchGrid(np.ascontiguousarray(patches), s, p, c)


def unpatchify(grid: PatchGrid) -> np.ndarray:
    """Inverse of :func:`patchify`."""
    s, p, c = grid.image_size, grid.patch_size, grid.channels
    g = s // p
    return (
        grid.patches.reshape(g, g, p, p, c)
        .transpose(0, 2, 1, 3, 4)
        .reshape(s, s, c)
    )


def normalize_array(image: np.ndarray) -> np.ndarray:
    """uint8 (S, S, C) image -> float32 in [-0.5, 0.5]."""
    return image.astype(np.float32) / 255.0 - 0.5


def preprocess_image_bytes(data: bytes, config: ModelConfig) -> np.ndarray:
    """Decode PNG/JPEG bytes, resize to the model resolution, normalize.

    Raises InvalidInputError for undecodable payloads.
    """
    try:
        with Image.open(io.BytesIO(data)) as img:
            img = img.convert("RGB")
            if img.size != (config.image_size, config.image_size):
                img = img.resize((config.image_size, config.image_size), Image.BILINEAR)
            arr = np.asarray(img, dtype=np.uint8)
    except Exception as exc:
        raise InvalidInputError(f"cannot decode image payload: {exc}") from exc
    return normalize_array(arr)
