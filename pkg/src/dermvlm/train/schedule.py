"""Learning-rate schedule: linear warmup to the peak, constant afterwards."""

from __future__ import annotations

from ..errors import InvalidInputError


def lr_at(step: int, warmup_steps: int, peak_lr: float) -> float:
    """Exact schedule value at an optimizer step (0-based).

    lr_at(0) == 0, lr_at(warmup_steps) == peak_lr, constant afterwards.
    """
    if step < 0:
        raise InvalidInputError("step must be >= 0")
    if warmup_steps <= 0 or step >= warmup_steps:
        return peak_lr
    return peak_lr * (step / warmup_steps)
