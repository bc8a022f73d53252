#!/usr/bin/env python3
"""End-to-end desk-scale run: corpus -> base prep -> stage 1 -> stage 2 ->
behavioral probe. Writes the trained checkpoint and a probe report.

Usage: python scripts/run_two_stage.py [--out runs/two_stage]
"""

import argparse
import copy
import json
import time
from pathlib import Path

from dermvlm.evaluation import probe_behavior
from dermvlm.model import save_checkpoint
from dermvlm.train import DeskRecipe, build_base, train_stage


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/two_stage")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.monotonic()
    recipe = DeskRecipe()
    bundle, heldin, model, prep = build_base(recipe)
    print(f"[{time.monotonic()-t0:6.1f}s] base prepared: {prep}")

    train_stage(bundle.stage1, model, recipe.stage1, bundle.images, out_dir=out / "stage1")
    print(f"[{time.monotonic()-t0:6.1f}s] stage 1 done")
    stage1_probe = probe_behavior(model, heldin)
    print(f"    stage-1 probe: recall={stage1_probe.concept_recall:.3f} "
          f"accuracy={stage1_probe.class_accuracy:.3f}")

    both = copy.deepcopy(model)
    train_stage(bundle.stage2, both, recipe.stage2_resumed, bundle.images, out_dir=out / "stage2")
    print(f"[{time.monotonic()-t0:6.1f}s] stage 2 done")
    probe = probe_behavior(both, heldin)
    print(f"    two-stage probe: recall={probe.concept_recall:.3f} "
          f"accuracy={probe.class_accuracy:.3f}")

    meta = {"concepts": bundle.supported_concepts, "classes": bundle.classes}
    ckpt = save_checkpoint(out / "checkpoint_two_stage.zip", both, meta=meta)
    (out / "probe_report.json").write_text(
        json.dumps(probe.as_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(f"[{time.monotonic()-t0:6.1f}s] checkpoint: {ckpt}")


if __name__ == "__main__":
    main()
