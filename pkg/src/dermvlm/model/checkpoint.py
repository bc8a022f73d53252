"""Checkpoint archive: one zip with config, vocabulary and parameter tensors.

Layout::

    meta.json          format version, freeze flags, free-form metadata
    config.json        canonical model config JSON
    vocab.txt          ordered token list, one per line
    train_state.json   optional training-loop state
    params/<component>/<key>.npy
    optim/<name>.npy   optional optimizer slots (adaptive-moment state)

Entries carry a fixed timestamp so identical contents produce identical
archive bytes. Loading rejects any other format version.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np
import torch

from ..config import ModelConfig
from ..errors import CheckpointFormatError
from .pipeline import COMPONENTS, PipelineModel
from .tokenizer import Tokenizer

FORMAT_VERSION = 1
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _write_entry(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    zf.writestr(info, data)


def _array_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, arr, allow_pickle=False)
    return buf.getvalue()


def save_checkpoint(
    path: str | Path,
    model: PipelineModel,
    train_state: dict | None = None,
    optim_tensors: dict[str, np.ndarray] | None = None,
    meta: dict | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with zipfile.ZipFile(tmp, "w") as zf:
        header = {
            "format_version": FORMAT_VERSION,
            "freeze_flags": model.freeze.as_dict(),
            "meta": meta or {},
        }
        _write_entry(zf, "meta.json", json.dumps(header, sort_keys=True).encode())
        _write_entry(zf, "config.json", model.config.to_json().encode())
        _write_entry(zf, "vocab.txt", "\n".join(model.tokenizer.vocab).encode())
        if train_state is not None:
            _write_entry(
                zf, "train_state.json", json.dumps(train_state, sort_keys=True).encode()
            )
        for comp in COMPONENTS:
            state = model.component(comp).state_dict()
            for key in sorted(state):
                arr = state[key].detach().cpu().numpy()
                _write_entry(zf, f"params/{comp}/{key}.npy", _array_bytes(arr))
        for name in sorted(optim_tensors or {}):
            _write_entry(zf, f"optim/{name}.npy", _array_bytes(optim_tensors[name]))
    tmp.replace(path)  # atomic publish
    return path


def load_checkpoint(path: str | Path):
    """Returns (model, train_state | None, optim_tensors, meta)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointFormatError(f"checkpoint not found: {path}")
    with zipfile.ZipFile(path) as zf:
        names = set(zf.namelist())
        for required in ("meta.json", "config.json", "vocab.txt"):
            if required not in names:
                raise CheckpointFormatError(f"checkpoint missing {required}")
        header = json.loads(zf.read("meta.json"))
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointFormatError(
                f"unsupported checkpoint format version {version!r}; expected {FORMAT_VERSION}"
            )
        config = ModelConfig.from_json(zf.read("config.json").decode())
        vocab = zf.read("vocab.txt").decode().split("\n")
        tokenizer = Tokenizer(vocab)
        model = PipelineModel(config, tokenizer)
        for comp in COMPONENTS:
            module = model.component(comp)
            state = {}
            prefix = f"params/{comp}/"
            for name in names:
                if name.startswith(prefix) and name.endswith(".npy"):
                    key = name[len(prefix) : -len(".npy")]
                    arr = np.lib.format.read_array(io.BytesIO(zf.read(name)), allow_pickle=False)
                    state[key] = torch.from_numpy(arr.copy())
            missing = set(module.state_dict()) - set(state)
            if missing:
                raise CheckpointFormatError(f"{comp} missing tensors: {sorted(missing)}")
            module.load_state_dict(state)
        flags = header.get("freeze_flags", {})
        model.set_freeze(**{k: bool(v) for k, v in flags.items()})
        train_state = (
            json.loads(zf.read("train_state.json")) if "train_state.json" in names else None
        )
        optim_tensors = {}
        for name in names:
            if name.startswith("optim/") and name.endswith(".npy"):
                key = name[len("optim/") : -len(".npy")]
                optim_tensors[key] = np.lib.format.read_array(
                    io.BytesIO(zf.read(name)), allow_pickle=False
                )
    return model, train_state, optim_tensors, header.get("meta", {})
