#!/usr/bin/env python3
"""Train (or reuse) a two-stage checkpoint, then serve it on loopback with
the browser UI mounted if frontend/dist exists.

Usage: python scripts/serve_demo.py [--port 8423] [--checkpoint PATH]
"""

import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CKPT = ROOT / "runs" / "two_stage" / "checkpoint_two_stage.zip"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8423)
    parser.add_argument("--checkpoint", default=str(DEFAULT_CKPT))
    args = parser.parse_args()

    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        print(f"no checkpoint at {ckpt}; training one first (a few minutes)...")
        subprocess.run(
            [sys.executable, str(ROOT / "scripts" / "run_two_stage.py"),
             "--out", str(ckpt.parent)],
            check=True,
        )
    static = ROOT / "frontend" / "dist"
    argv = [
        "serve", "--checkpoint", str(ckpt), "--port", str(args.port),
    ]
    if static.is_dir():
        argv += ["--static-dir", str(static)]
    from dermvlm.cli import dispatch

    print(f"serving http://127.0.0.1:{args.port}  (checkpoint: {ckpt.name})")
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
