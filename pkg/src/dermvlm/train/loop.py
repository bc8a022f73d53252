"""Stage training loop: schedule, freeze control, metrics, checkpoints.

The loop is stateless where it can be: batch composition is a pure function
of (seed, stage, step), so resuming from a checkpoint reproduces the exact
run a straight-through training would have produced. Only adaptive-moment
optimizer slots need persisting.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..data import CaptionPair
from ..dialogue import prompt_sequence, target_sequence
from ..errors import InvalidConfigError, InvalidInputError, NumericalError
from ..model.checkpoint import save_checkpoint
from ..model.patches import normalize_array, patchify
from ..model.pipeline import PipelineModel, batched_masked_lm_loss
from ..prompts import CANONICAL_PROMPTS, DIAGNOSIS_QUERY
from .schedule import lr_at

STAGE_PROMPTS = {1: CANONICAL_PROMPTS[0], 2: DIAGNOSIS_QUERY}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    iters_per_epoch: int = 5000
    warmup_steps: int = 5000
    batch_size: int = 2
    peak_lr: float = 1e-4
    max_text_len: int = 160
    stage: int = 1
    resume_from: str | None = None
    freeze_overrides: dict | None = None
    seed: int = 0
    optimizer: str = "sgd"  # "sgd" | "adam"
    checkpoint_every: int = 0  # 0 = end of each epoch only
    desk_scale_override: tuple[int, int] | None = None  # (epochs, iters_per_epoch)

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidConfigError("epochs must be >= 0")
        if self.iters_per_epoch < 1 or self.batch_size < 1:
            raise InvalidConfigError("iters_per_epoch and batch_size must be positive")
        if self.warmup_steps < 0:
            raise InvalidConfigError("warmup_steps must be >= 0")
        if self.peak_lr <= 0:
            raise InvalidConfigError("peak_lr must be > 0")
        if self.stage not in (1, 2):
            raise InvalidConfigError(f"stage must be 1 or 2, got {self.stage}")
        if self.optimizer not in ("sgd", "adam"):
            raise InvalidConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.max_text_len < 1:
            raise InvalidConfigError("max_text_len must be >= 1")

    @property
    def effective_epochs(self) -> int:
        return self.desk_scale_override[0] if self.desk_scale_override else self.epochs

    @property
    def effective_iters(self) -> int:
        return self.desk_scale_override[1] if self.desk_scale_override else self.iters_per_epoch

    @property
    def total_steps(self) -> int:
        return self.effective_epochs * self.effective_iters

    def lr(self, step: int) -> float:
        return lr_at(step, self.warmup_steps, self.peak_lr)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["desk_scale_override"] is not None:
            d["desk_scale_override"] = list(d["desk_scale_override"])
        return d


@dataclass
class TrainState:
    global_step: int = 0
    lr: float = 0.0
    running_loss: float = 0.0
    seed: int = 0
    stage: int = 1

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TrainResult:
    model: PipelineModel
    state: TrainState
    metrics: list[tuple[int, float, float]]  # (step, lr, loss)
    accounting: dict
    checkpoint_path: Path | None = None
    metrics_path: Path | None = None


@dataclass
class _Sample:
    prompt_ids: list[int]
    target_ids: list[int]
    image_key: str


class _BatchSampler:
    """Shuffled batches; resamples (with replacement across passes) when the
    dataset is smaller than steps x batch. Pure function of (seed, stage, step)."""

    def __init__(self, seed: int, stage: int, n: int, batch_size: int):
        self.seed, self.stage, self.n, self.batch = seed, stage, n, batch_size
        self._perms: dict[int, np.ndarray] = {}

    def _perm(self, pass_idx: int) -> np.ndarray:
        if pass_idx not in self._perms:
            rng = np.random.default_rng([self.seed, self.stage, pass_idx])
            self._perms[pass_idx] = rng.permutation(self.n)
        return self._perms[pass_idx]

    def indices(self, step: int) -> list[int]:
        start = step * self.batch
        out = []
        for j in range(self.batch):
            pos = start + j
            out.append(int(self._perm(pos // self.n)[pos % self.n]))
        return out


def _prepare_samples(
    pairs: list[CaptionPair], model: PipelineModel, cfg: TrainConfig
) -> tuple[list[_Sample], dict]:
    if not pairs:
        raise InvalidInputError("no training pairs supplied")
    tok = model.tokenizer
    samples, truncated, skipped = [], 0, 0
    for pair in pairs:
        prompt = prompt_sequence(tok, STAGE_PROMPTS[cfg.stage])
        budget = cfg.max_text_len - len(prompt)
        if budget < 2:
            skipped += 1
            continue
        target, was_cut = target_sequence(tok, pair.text, max_len=budget)
        truncated += int(was_cut)
        samples.append(_Sample(list(prompt.ids), list(target.ids), pair.image))
    if not samples:
        raise InvalidInputError("every training pair was skipped (texts too long)")
    accounting = {
        "input_pairs": len(pairs),
        "used": len(samples),
        "truncated": truncated,
        "skipped": skipped,
    }
    return samples, accounting


class _PrefixProvider:
    """Query embeddings per image; cached once when the upstream is frozen."""

    def __init__(self, model: PipelineModel, images: dict[str, np.ndarray]):
        self.model = model
        self.grids = {
            key: torch.from_numpy(patchify(normalize_array(arr), model.config).patches)
            for key, arr in images.items()
        }
        self.cache: dict[str, torch.Tensor] | None = None
        if model.freeze.vision_encoder and model.freeze.query_transformer:
            with torch.no_grad():
                self.cache = {
                    key: self._queries(grid.unsqueeze(0)).squeeze(0)
                    for key, grid in self.grids.items()
                }

    def _queries(self, grids: torch.Tensor) -> torch.Tensor:
        return self.model.queries(self.model.vision(grids))

    def prefixes(self, keys: list[str]) -> torch.Tensor:
        if self.cache is not None:
            q = torch.stack([self.cache[k] for k in keys])
        else:
            q = self._queries(torch.stack([self.grids[k] for k in keys]))
        return self.model.align(q)


def make_optimizer(model: PipelineModel, cfg: TrainConfig) -> torch.optim.Optimizer:
    params = model.trainable_parameters()
    if not params:
        raise InvalidInputError("all components are frozen; nothing to train")
    if cfg.optimizer == "adam":
        return torch.optim.Adam(params, lr=cfg.peak_lr)
    return torch.optim.SGD(params, lr=cfg.peak_lr)


def _optim_tensors(model: PipelineModel, optimizer: torch.optim.Optimizer) -> dict:
    """Adaptive-moment slots keyed by parameter name, for exact resume."""
    out = {}
    by_param = {id(p): name for name, p in model.named_parameters()}
    for group in optimizer.param_groups:
        for p in group["params"]:
            state = optimizer.state.get(p)
            if not state:
                continue
            name = by_param[id(p)]
            for slot, value in state.items():
                arr = value.detach().cpu().numpy() if isinstance(value, torch.Tensor) else np.asarray(value)
                out[f"{name}@{slot}"] = arr
    return out


def _restore_optim(model: PipelineModel, optimizer: torch.optim.Optimizer, tensors: dict) -> None:
    by_name = dict(model.named_parameters())
    grouped: dict[str, dict] = {}
    for key, arr in tensors.items():
        name, slot = key.rsplit("@", 1)
        grouped.setdefault(name, {})[slot] = arr
    for name, slots in grouped.items():
        p = by_name[name]
        state = {}
        for slot, arr in slots.items():
            t = torch.from_numpy(np.asarray(arr).copy())
            state[slot] = t if t.ndim > 0 else t.clone()
        optimizer.state[p] = state


def train_stage(
    pairs: list[CaptionPair],
    model: PipelineModel,
    cfg: TrainConfig,
    images: dict[str, np.ndarray],
    out_dir: str | Path | None = None,
    corpus_meta: dict | None = None,
    resume_state: TrainState | None = None,
    resume_optim: dict | None = None,
) -> TrainResult:
    """Run epochs x iters optimizer steps of one fine-tuning stage."""
    if cfg.freeze_overrides:
        model.set_freeze(**cfg.freeze_overrides)
    samples, accounting = _prepare_samples(pairs, model, cfg)
    provider = _PrefixProvider(model, images)
    optimizer = make_optimizer(model, cfg)
    if resume_optim:
        _restore_optim(model, optimizer, resume_optim)
    state = resume_state or TrainState(seed=cfg.seed, stage=cfg.stage)
    sampler = _BatchSampler(cfg.seed, cfg.stage, len(samples), cfg.batch_size)

    out = Path(out_dir) if out_dir is not None else None
    metrics: list[tuple[int, float, float]] = []
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "train_config.json").write_text(
            json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"
        )

    def save(path_name: str, diagnostic: bool = False) -> Path:
        meta = dict(corpus_meta or {})
        if diagnostic:
            meta["diagnostic"] = True
        return save_checkpoint(
            out / path_name,
            model,
            train_state=state.as_dict(),
            optim_tensors=_optim_tensors(model, optimizer),
            meta=meta,
        )

    total = cfg.total_steps
    start_step = state.global_step
    for step in range(start_step, total):
        step_no = step + 1
        lr = cfg.lr(step_no)
        for group in optimizer.param_groups:
            group["lr"] = lr
        optimizer.zero_grad(set_to_none=True)
        batch = [samples[idx] for idx in sampler.indices(step)]
        prefixes = provider.prefixes([s.image_key for s in batch])
        id_lists = [s.prompt_ids + s.target_ids for s in batch]
        mask_lists = [[0] * len(s.prompt_ids) + [1] * len(s.target_ids) for s in batch]
        loss = batched_masked_lm_loss(model, prefixes, id_lists, mask_lists).mean()
        if not torch.isfinite(loss):
            state.lr = lr
            if out is not None:
                save("checkpoint_diagnostic.zip", diagnostic=True)
            raise NumericalError(
                f"non-finite loss at step {step_no}; diagnostic checkpoint written"
            )
        loss.backward()
        optimizer.step()
        state.global_step = step_no
        state.lr = lr
        value = float(loss.detach())
        state.running_loss = (
            value if step == start_step
            else 0.98 * state.running_loss + 0.02 * value
        )
        metrics.append((step_no, lr, value))
        if out is not None:
            at_epoch_end = step_no % cfg.effective_iters == 0
            periodic = cfg.checkpoint_every and step_no % cfg.checkpoint_every == 0
            if periodic or (not cfg.checkpoint_every and at_epoch_end):
                save(f"checkpoint_step{step_no:06d}.zip")

    result = TrainResult(model=model, state=state, metrics=metrics, accounting=accounting)
    if out is not None:
        metrics_path = out / "metrics.csv"
        with metrics_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "lr", "loss"])
            for row in metrics:
                writer.writerow([row[0], f"{row[1]:.10g}", f"{row[2]:.10g}"])
        result.metrics_path = metrics_path
        result.checkpoint_path = save("checkpoint_final.zip")
        (out / "accounting.json").write_text(
            json.dumps(accounting, sort_keys=True, indent=2) + "\n"
        )
    return result
