"""Ablation runner: stage-1-only vs stage-2-only vs sequential two-stage.

All three arms start from the same prepared base model; the "both" arm
resumes stage-2 training from the stage-1 checkpoint. Each arm is scored by
the behavioral probes on one shared held-in split and a comparison table is
emitted.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass
from pathlib import Path

from ..evaluation.probe import ProbeReport, probe_behavior
from ..model.pipeline import PipelineModel
from ..synth.corpus import CorpusBundle
from .loop import TrainConfig, train_stage


@dataclass
class AblationResult:
    models: dict[str, PipelineModel]
    probes: dict[str, ProbeReport]
    table: list[dict]


def heldin_split(bundle: CorpusBundle, n: int) -> CorpusBundle:
    """First-n view of a corpus, used as the shared evaluation split."""
    view = copy.copy(bundle)
    view.records = bundle.records[:n]
    return view


def run_ablation(
    train_bundle: CorpusBundle,
    eval_bundle: CorpusBundle,
    base_model: PipelineModel,
    stage1_cfg: TrainConfig,
    stage2_cfg: TrainConfig,
    resumed_stage2_cfg: TrainConfig | None = None,
    out_dir: str | Path | None = None,
) -> AblationResult:
    images = train_bundle.images
    resumed_cfg = resumed_stage2_cfg or stage2_cfg

    arms: dict[str, PipelineModel] = {}
    arms["stage1_only"] = copy.deepcopy(base_model)
    train_stage(train_bundle.stage1, arms["stage1_only"], stage1_cfg, images)
    arms["stage2_only"] = copy.deepcopy(base_model)
    train_stage(train_bundle.stage2, arms["stage2_only"], stage2_cfg, images)
    arms["both"] = copy.deepcopy(arms["stage1_only"])
    train_stage(train_bundle.stage2, arms["both"], resumed_cfg, images)

    probes = {name: probe_behavior(m, eval_bundle) for name, m in arms.items()}
    table = [
        {
            "arm": name,
            "concept_recall": round(p.concept_recall, 4),
            "class_accuracy": round(p.class_accuracy, 4),
            "n_cases": p.n_cases,
        }
        for name, p in probes.items()
    ]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation_report.json").write_text(
            json.dumps(table, indent=2, sort_keys=True) + "\n"
        )
        with (out / "ablation_report.csv").open("w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["arm", "concept_recall", "class_accuracy", "n_cases"]
            )
            writer.writeheader()
            writer.writerows(table)
    return AblationResult(models=arms, probes=probes, table=table)
