"""Visual concept signatures and the pixel-statistics oracle.

Each supported concept owns one cell of a fixed 3x4 grid and one motif
drawn inside that cell; the cells never overlap, so planted concepts are
independently decodable. Detection uses coarse statistics only (channel-mean
thresholds, a ring test, connected-blob counts), keeping the oracle a few
dozen lines and entirely independent of the model.

Motif table (cell statistics on a 128-gray background, noise within +-6):

    Vesicle   blue disc          blue-channel dominance > 12
    Papule    6 small dark dots  3..12 dark blobs
    Macule    dull brown fill    mean luminance in (60, 110)
    Plaque    dark ring outline  dark annulus, bright center
    Pustule   yellow disc        (R+G)/2 - B > 20
    Bulla     near-white disc    bright fraction (>210) > 0.2
    Patch     green fill         green-channel dominance > 15
    Nodule    dark center block  dark fraction in (0.15, 0.7), 1 blob
    Ulcer     3 vertical bars    exactly 3 dark blobs
    Crust     2 horizontal bars  exactly 2 dark blobs
    Erosion   magenta fill       (R+B)/2 - G > 25
    Erythema  red fill           red-channel dominance > 25
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import InvalidInputError, OracleInapplicableError

BACKGROUND = 128
BORDER = 2
GRID_ROWS, GRID_COLS = 3, 4
MAX_MOTIFS = GRID_ROWS * GRID_COLS

DARK_LUM = 80.0
BRIGHT_LUM = 210.0

# Concepts with a renderer, in taxonomy order; cell index = position here.
DEFAULT_SUPPORTED_CONCEPTS: tuple[str, ...] = (
    "Vesicle",
    "Papule",
    "Macule",
    "Plaque",
    "Pustule",
    "Bulla",
    "Patch",
    "Nodule",
    "Ulcer",
    "Crust",
    "Erosion",
    "Erythema",
)


@dataclass(frozen=True)
class Cell:
    y0: int
    x0: int
    h: int
    w: int


def cell_layout(image_size: int) -> list[Cell]:
    inner = image_size - 2 * BORDER
    ch, cw = inner // GRID_ROWS, inner // GRID_COLS
    # bar/dot motifs need this much room to stay 4-connectivity-separated
    if ch < 12 or cw < 12:
        raise InvalidInputError(f"image_size {image_size} too small for motif grid")
    return [
        Cell(BORDER + r * ch, BORDER + c * cw, ch, cw)
        for r in range(GRID_ROWS)
        for c in range(GRID_COLS)
    ]


def _lum(cell: np.ndarray) -> np.ndarray:
    c = cell.astype(np.float64)
    return 0.299 * c[..., 0] + 0.587 * c[..., 1] + 0.114 * c[..., 2]


def _chan_means(cell: np.ndarray) -> tuple[float, float, float]:
    c = cell.astype(np.float64)
    return float(c[..., 0].mean()), float(c[..., 1].mean()), float(c[..., 2].mean())


def _blob_count(cell: np.ndarray) -> int:
    _, n = ndimage.label(_lum(cell) < DARK_LUM)
    return int(n)


def _disc_mask(h: int, w: int, radius: float) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    return (yy - (h - 1) / 2) ** 2 + (xx - (w - 1) / 2) ** 2 <= radius**2


def _fill(cell: np.ndarray, color) -> None:
    cell[:] = np.array(color, dtype=np.uint8)


def _disc(cell: np.ndarray, color, radius_frac: float = 0.38) -> None:
    h, w = cell.shape[:2]
    cell[_disc_mask(h, w, radius_frac * min(h, w))] = np.array(color, dtype=np.uint8)


def _render_vesicle(cell):
    _disc(cell, (80, 120, 230), 0.42)


def _detect_vesicle(cell):
    r, g, b = _chan_means(cell)
    return b - (r + g) / 2 > 12


def _render_papule(cell):
    h, w = cell.shape[:2]
    ys = [h // 4, h // 2, 3 * h // 4]
    xs = [w // 3, 2 * w // 3]
    for y in ys:
        for x in xs:
            cell[max(y - 1, 0) : y + 1, max(x - 1, 0) : x + 1] = (30, 30, 30)


def _detect_papule(cell):
    return 3 <= _blob_count(cell) <= 12


def _render_macule(cell):
    _fill(cell, (100, 75, 55))


def _detect_macule(cell):
    return 60 < float(_lum(cell).mean()) < 110


def _render_plaque(cell):
    h, w = cell.shape[:2]
    r0 = min(h, w) / 2 - 2
    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.sqrt((yy - (h - 1) / 2) ** 2 + (xx - (w - 1) / 2) ** 2)
    cell[np.abs(dist - r0) <= 1.2] = (40, 40, 40)


def _detect_plaque(cell):
    h, w = cell.shape[:2]
    r0 = min(h, w) / 2 - 2
    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.sqrt((yy - (h - 1) / 2) ** 2 + (xx - (w - 1) / 2) ** 2)
    dark = _lum(cell) < DARK_LUM
    ring = np.abs(dist - r0) <= 1.2
    center = dist < r0 - 3
    if not ring.any() or not center.any():
        return False
    return dark[ring].mean() > 0.4 and dark[center].mean() < 0.15


def _render_pustule(cell):
    _disc(cell, (235, 220, 70), 0.42)


def _detect_pustule(cell):
    r, g, b = _chan_means(cell)
    return (r + g) / 2 - b > 20


def _render_bulla(cell):
    _disc(cell, (245, 245, 245), 0.45)


def _detect_bulla(cell):
    return float((_lum(cell) > BRIGHT_LUM).mean()) > 0.2


def _render_patch(cell):
    _fill(cell, (70, 160, 90))


def _detect_patch(cell):
    r, g, b = _chan_means(cell)
    return g - (r + b) / 2 > 15


def _render_nodule(cell):
    h, w = cell.shape[:2]
    cell[h // 4 : h - h // 4, w // 4 : w - w // 4] = (50, 50, 50)


def _detect_nodule(cell):
    frac = float((_lum(cell) < DARK_LUM).mean())
    return 0.15 < frac < 0.7 and _blob_count(cell) == 1


def _render_ulcer(cell):
    h, w = cell.shape[:2]
    for x in (w // 5, w // 2, w - w // 5 - 1):
        cell[2 : h - 2, x : x + 2] = (45, 45, 45)


def _detect_ulcer(cell):
    return _blob_count(cell) == 3


def _render_crust(cell):
    h, w = cell.shape[:2]
    for y in (h // 3, 2 * h // 3):
        cell[y : y + 2, 2 : w - 2] = (45, 45, 45)


def _detect_crust(cell):
    return _blob_count(cell) == 2


def _render_erosion(cell):
    _fill(cell, (200, 80, 200))


def _detect_erosion(cell):
    r, g, b = _chan_means(cell)
    return (r + b) / 2 - g > 25


def _render_erythema(cell):
    _fill(cell, (225, 70, 70))


def _detect_erythema(cell):
    r, g, b = _chan_means(cell)
    return r - (g + b) / 2 > 25


MOTIFS: dict[str, tuple] = {
    "Vesicle": (_render_vesicle, _detect_vesicle),
    "Papule": (_render_papule, _detect_papule),
    "Macule": (_render_macule, _detect_macule),
    "Plaque": (_render_plaque, _detect_plaque),
    "Pustule": (_render_pustule, _detect_pustule),
    "Bulla": (_render_bulla, _detect_bulla),
    "Patch": (_render_patch, _detect_patch),
    "Nodule": (_render_nodule, _detect_nodule),
    "Ulcer": (_render_ulcer, _detect_ulcer),
    "Crust": (_render_crust, _detect_crust),
    "Erosion": (_render_erosion, _detect_erosion),
    "Erythema": (_render_erythema, _detect_erythema),
}


def render_image(
    concepts: list[str],
    supported: list[str],
    image_size: int,
    noise_rng: np.random.Generator,
) -> np.ndarray:
    """Background + noise + one motif per planted concept; exact border frame."""
    cells = cell_layout(image_size)
    if len(supported) > len(cells):
        raise InvalidInputError(
            f"{len(supported)} concepts exceed the {len(cells)}-cell motif grid"
        )
    img = np.full((image_size, image_size, 3), BACKGROUND, dtype=np.int16)
    noise = noise_rng.integers(-6, 7, size=(image_size, image_size, 1))
    img = np.clip(img + noise, 0, 255).astype(np.uint8)
    img[:BORDER, :] = BACKGROUND
    img[-BORDER:, :] = BACKGROUND
    img[:, :BORDER] = BACKGROUND
    img[:, -BORDER:] = BACKGROUND
    index = {name: i for i, name in enumerate(supported)}
    for concept in concepts:
        if concept not in MOTIFS or concept not in index:
            raise InvalidInputError(f"no motif renderer for concept {concept!r}")
        cell = cells[index[concept]]
        view = img[cell.y0 : cell.y0 + cell.h, cell.x0 : cell.x0 + cell.w]
        MOTIFS[concept][0](view)
    return img


def _border_view(image: np.ndarray) -> np.ndarray:
    top = image[:BORDER, :].reshape(-1, 3)
    bottom = image[-BORDER:, :].reshape(-1, 3)
    left = image[BORDER:-BORDER, :BORDER].reshape(-1, 3)
    right = image[BORDER:-BORDER, -BORDER:].reshape(-1, 3)
    return np.concatenate([top, bottom, left, right])


def decode_oracle(
    image: np.ndarray, supported: list[str] | None = None
) -> set[str]:
    """Recover planted concepts from pixel statistics alone.

    Only applicable to images drawn by :func:`render_image`; applicability is
    judged from the untouched border frame. Independent of the model by
    construction.
    """
    supported = list(supported or DEFAULT_SUPPORTED_CONCEPTS)
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] != image.shape[1]:
        raise OracleInapplicableError(f"not a square RGB image: shape {image.shape}")
    border = _border_view(image).astype(np.float64)
    if abs(border.mean() - BACKGROUND) > 6 or border.std() > 6:
        raise OracleInapplicableError(
            "border statistics do not match a generated image "
            f"(mean {border.mean():.1f}, std {border.std():.1f})"
        )
    cells = cell_layout(image.shape[0])
    found = set()
    for i, concept in enumerate(supported):
        if concept not in MOTIFS:
            raise InvalidInputError(f"no motif detector for concept {concept!r}")
        cell = cells[i]
        view = image[cell.y0 : cell.y0 + cell.h, cell.x0 : cell.x0 + cell.w]
        if MOTIFS[concept][1](view):
            found.add(concept)
    return found
