#!/usr/bin/env python3
"""Train the three ablation arms (stage-1-only, stage-2-only, sequential
two-stage) from one shared base and print the comparison table.

Usage: python scripts/run_ablation.py [--out runs/ablation]
"""

import argparse
import time
from pathlib import Path

from dermvlm.model import save_checkpoint
from dermvlm.train import DeskRecipe, build_base, run_ablation


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/ablation")
    args = parser.parse_args()
    out = Path(args.out)

    t0 = time.monotonic()
    recipe = DeskRecipe()
    bundle, heldin, base, _ = build_base(recipe)
    print(f"[{time.monotonic()-t0:6.1f}s] base prepared")
    result = run_ablation(
        bundle, heldin, base, recipe.stage1, recipe.stage2, recipe.stage2_resumed,
        out_dir=out,
    )
    meta = {"concepts": bundle.supported_concepts, "classes": bundle.classes}
    for arm, model in result.models.items():
        save_checkpoint(out / f"checkpoint_{arm}.zip", model, meta=meta)
    print(f"[{time.monotonic()-t0:6.1f}s] all arms trained\n")
    width = max(len(r["arm"]) for r in result.table)
    print(f"{'arm':<{width}}  concept_recall  class_accuracy")
    for row in result.table:
        print(f"{row['arm']:<{width}}  {row['concept_recall']:>14.3f}  {row['class_accuracy']:>14.3f}")


if __name__ == "__main__":
    main()
