"""Command-line entry point.

Subcommands: synth-data, ingest, pretrain-vision, train, ablation, generate,
serve, eval (aggregate|bench|probe), bench. Every flag has a config-file
equivalent (--config PATH, canonical JSON); precedence is flag > config file
> default. Machine-readable results go to stdout or files, diagnostics to
stderr. Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import DermvlmError, InvalidInputError

SUBCOMMANDS = (
    "synth-data",
    "ingest",
    "pretrain-vision",
    "train",
    "ablation",
    "generate",
    "serve",
    "eval",
    "bench",
)


class UsageError(Exception):
    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message, self.format_usage())


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunManifest:
    """Written before work starts, finalized after; one per artifact dir."""

    def __init__(self, subcommand: str, out_dir: Path, config: dict, seed):
        self.path = Path(out_dir) / "run_manifest.json"
        self.doc = {
            "subcommand": subcommand,
            "config": config,
            "seed": seed,
            "tool_version": __version__,
            "started_at": _now_iso(),
            "finished_at": None,
            "status": "running",
        }
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        self._write()

    def _write(self):
        self.path.write_text(json.dumps(self.doc, indent=2, sort_keys=True) + "\n")

    def finalize(self, status: str = "ok", **extra):
        self.doc.update(extra)
        self.doc["finished_at"] = _now_iso()
        self.doc["status"] = status
        self._write()


class Options:
    """Flag > config file > default resolution."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args = vars(args)
        self.config = config

    def get(self, key: str, default=None):
        value = self.args.get(key.replace("-", "_"))
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return default

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise InvalidInputError(f"missing required option --{key}")
        return value


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise InvalidInputError(f"config file not found: {p}")
    doc = json.loads(p.read_text())
    if not isinstance(doc, dict):
        raise InvalidInputError("config file must hold a JSON object")
    return doc


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# subcommand implementations


def cmd_synth_data(opts: Options) -> int:
    from .synth import SynthSpec, generate_corpus, write_corpus

    out = Path(opts.require("out"))
    spec = SynthSpec(
        n_images=int(opts.get("n", 200)),
        min_concepts=int(opts.get("min-concepts", 1)),
        max_concepts=int(opts.get("max-concepts", 3)),
        image_size=int(opts.get("image-size", 64)),
        seed=int(opts.get("seed", 0)),
        class_balance=not bool(opts.get("no-balance", False)),
    )
    manifest = RunManifest("synth-data", out, spec.to_dict(), spec.seed)
    bundle = generate_corpus(spec)
    write_corpus(bundle, out)
    manifest.finalize(n_images=spec.n_images)
    _emit({"out": str(out), "n_images": spec.n_images, "classes": bundle.classes})
    return 0


def cmd_ingest(opts: Options) -> int:
    from .data import read_jsonl, write_jsonl
    from .ingest import load_class_tree, load_concept_dataset, merge_stage2

    out = Path(opts.require("out"))
    concepts_csv = opts.get("concepts-csv")
    class_tree = opts.get("class-tree")
    merge = opts.get("merge")
    if not (concepts_csv or class_tree or merge):
        raise InvalidInputError(
            "ingest needs --concepts-csv, --class-tree or --merge inputs"
        )
    manifest = RunManifest(
        "ingest",
        out,
        {"concepts_csv": concepts_csv, "class_tree": class_tree, "merge": merge},
        opts.get("seed"),
    )
    result: dict = {}
    if concepts_csv:
        pairs, summary = load_concept_dataset(
            concepts_csv, images_root=opts.get("images-root")
        )
        write_jsonl(pairs, out / "stage1.jsonl")
        (out / "concepts_summary.json").write_text(
            json.dumps(summary.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        result["stage1"] = {"pairs": len(pairs), "path": str(out / "stage1.jsonl")}
    if class_tree:
        pairs, summary = load_class_tree(
            class_tree, max_text_len=int(opts.get("max-text-len", 160))
        )
        write_jsonl(pairs, out / "stage2.jsonl")
        (out / "classes_summary.json").write_text(
            json.dumps(summary.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        result["stage2"] = {"pairs": len(pairs), "path": str(out / "stage2.jsonl")}
    if merge:
        sources = [read_jsonl(p) for p in merge]
        merged, report = merge_stage2(*sources)
        write_jsonl(merged, out / "stage2_merged.jsonl")
        (out / "merge_report.json").write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        result["merged"] = {"pairs": len(merged), "duplicates": len(report.duplicates)}
    manifest.finalize(**{k: v.get("pairs") for k, v in result.items() if isinstance(v, dict)})
    _emit(result)
    return 0


def _load_corpus(opts: Options):
    from .synth import load_corpus

    corpus_dir = opts.require("corpus")
    return load_corpus(corpus_dir)


def cmd_pretrain_vision(opts: Options) -> int:
    from .config import ModelConfig
    from .model import build_model, save_checkpoint
    from .train import PretrainConfig, corpus_tokenizer, prepare_base, pretrain_vision

    out = Path(opts.require("out"))
    bundle = _load_corpus(opts)
    pre = PretrainConfig(
        vision_steps=int(opts.get("vision-steps", 600)),
        decoder_steps=int(opts.get("decoder-steps", 1500)),
        batch_size=int(opts.get("batch-size", 16)),
        lr=float(opts.get("lr", 1e-3)),
        seed=int(opts.get("seed", 0)),
    )
    model_cfg = ModelConfig(
        image_size=bundle.spec.image_size, seed=int(opts.get("model-seed", 1))
    )
    manifest = RunManifest(
        "pretrain-vision", out, {"pretrain": dataclasses.asdict(pre)}, pre.seed
    )
    model = build_model(model_cfg, corpus_tokenizer(bundle))
    if bool(opts.get("no-decoder-lm", False)):
        report = {"vision": pretrain_vision(model, bundle, pre)}
    else:
        report = prepare_base(model, bundle, pre)
    meta = {"concepts": bundle.supported_concepts, "classes": bundle.classes}
    path = save_checkpoint(out / "base_checkpoint.zip", model, meta=meta)
    (out / "pretrain_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    manifest.finalize()
    _emit({"checkpoint": str(path), "report": report})
    return 0


def _freeze_overrides(opts: Options) -> dict | None:
    overrides = {}
    raw = opts.get("freeze-overrides")
    if raw:
        overrides.update(json.loads(raw) if isinstance(raw, str) else raw)
    if bool(opts.get("unfreeze-decoder", False)):
        overrides["decoder"] = False
    return overrides or None


def cmd_train(opts: Options) -> int:
    from .model import load_checkpoint
    from .train import TrainConfig, train_stage

    out = Path(opts.require("out"))
    stage = int(opts.require("stage"))
    if stage not in (1, 2):
        raise InvalidInputError(f"invalid stage {stage}; valid stages are 1 and 2")
    bundle = _load_corpus(opts)
    desk = opts.get("desk-scale")
    cfg = TrainConfig(
        epochs=int(opts.get("epochs", 20)),
        iters_per_epoch=int(opts.get("iters", 5000)),
        warmup_steps=int(opts.get("warmup", 5000)),
        batch_size=int(opts.get("batch-size", 2)),
        peak_lr=float(opts.get("lr", 1e-4)),
        max_text_len=int(opts.get("max-text-len", 160)),
        stage=stage,
        resume_from=opts.get("checkpoint"),
        freeze_overrides=_freeze_overrides(opts),
        seed=int(opts.get("seed", 0)),
        optimizer=str(opts.get("optimizer", "sgd")),
        checkpoint_every=int(opts.get("checkpoint-every", 0)),
        desk_scale_override=tuple(int(x) for x in desk) if desk else None,
    )
    manifest = RunManifest("train", out, cfg.to_dict(), cfg.seed)
    if cfg.resume_from:
        model, _, _, _ = load_checkpoint(cfg.resume_from)
    else:
        from .config import ModelConfig
        from .model import build_model
        from .train import corpus_tokenizer

        model = build_model(
            ModelConfig(image_size=bundle.spec.image_size, seed=int(opts.get("model-seed", 1))),
            corpus_tokenizer(bundle),
        )
    pairs = bundle.stage1 if stage == 1 else bundle.stage2
    meta = {"concepts": bundle.supported_concepts, "classes": bundle.classes}
    result = train_stage(pairs, model, cfg, bundle.images, out_dir=out, corpus_meta=meta)
    manifest.finalize(steps=result.state.global_step)
    _emit(
        {
            "checkpoint": str(result.checkpoint_path),
            "metrics": str(result.metrics_path),
            "steps": result.state.global_step,
            "accounting": result.accounting,
        }
    )
    return 0


def cmd_ablation(opts: Options) -> int:
    from .model import save_checkpoint
    from .train import DeskRecipe, build_base, heldin_split, run_ablation
    from .train.recipe import N_HELDIN

    out = Path(opts.require("out"))
    recipe = DeskRecipe()
    manifest = RunManifest("ablation", out, {"recipe": "desk"}, opts.get("seed"))
    if opts.get("corpus"):
        from .train.pretrain import prepare_base
        from .train.recipe import corpus_tokenizer
        from .config import ModelConfig
        from .model import build_model

        bundle = _load_corpus(opts)
        heldin = heldin_split(bundle, int(opts.get("heldin", N_HELDIN)))
        model = build_model(
            ModelConfig(image_size=bundle.spec.image_size, seed=recipe.model_config.seed),
            corpus_tokenizer(bundle),
        )
        prepare_base(model, bundle, recipe.pretrain)
    else:
        bundle, heldin, model, _ = build_base(recipe)
    result = run_ablation(
        bundle, heldin, model, recipe.stage1, recipe.stage2, recipe.stage2_resumed, out_dir=out
    )
    meta = {"concepts": bundle.supported_concepts, "classes": bundle.classes}
    for arm, arm_model in result.models.items():
        save_checkpoint(out / f"checkpoint_{arm}.zip", arm_model, meta=meta)
    manifest.finalize()
    _emit({"table": result.table, "out": str(out)})
    return 0


def cmd_generate(opts: Options) -> int:
    from PIL import Image

    from .config import GenerationSettings
    from .dialogue import prompt_sequence
    from .model import embed_image, generate, load_checkpoint, normalize_array
    from .prompts import CANONICAL_PROMPTS

    import numpy as np

    model, _, _, _ = load_checkpoint(opts.require("checkpoint"))
    image_path = Path(opts.require("image"))
    if not image_path.exists():
        raise InvalidInputError(f"image not found: {image_path}")
    prompt = opts.get("prompt")
    if prompt is None:
        index = int(opts.get("prompt-index", 1))
        if not 1 <= index <= len(CANONICAL_PROMPTS):
            raise InvalidInputError(f"prompt-index must be in 1..{len(CANONICAL_PROMPTS)}")
        prompt = CANONICAL_PROMPTS[index - 1]
    gen = GenerationSettings(
        mode=str(opts.get("mode", "greedy")),
        temperature=float(opts.get("temperature", 1.0)),
        max_new_tokens=int(opts.get("max-new-tokens", 48)),
        seed=int(opts.get("seed", 0)),
    )
    with Image.open(image_path) as im:
        im = im.convert("RGB")
        if im.size != (model.config.image_size, model.config.image_size):
            im = im.resize((model.config.image_size, model.config.image_size), Image.BILINEAR)
        array = normalize_array(np.asarray(im, dtype=np.uint8))
    prefix = embed_image(model, array)
    result = generate(prefix, prompt_sequence(model.tokenizer, prompt), model, gen)
    _emit({"prompt": prompt, "text": result.text, **result.metadata})
    return 0


def cmd_serve(opts: Options) -> int:
    import uvicorn

    from .serve import DiagnosisService, ServeConfig, create_app

    checkpoint = opts.get("checkpoint") or os.environ.get("DERMVLM_CHECKPOINT")
    if not checkpoint:
        raise InvalidInputError("serve needs --checkpoint or DERMVLM_CHECKPOINT")
    config = ServeConfig(
        checkpoint_path=str(checkpoint),
        host=str(opts.get("host", os.environ.get("DERMVLM_HOST", "127.0.0.1"))),
        port=int(opts.get("port", os.environ.get("DERMVLM_PORT", 8423))),
        max_upload_bytes=int(opts.get("max-upload-bytes", 2 * 1024 * 1024)),
        request_timeout_s=float(opts.get("timeout", 30.0)),
        session_ttl_s=float(opts.get("session-ttl", 3600.0)),
        static_dir=opts.get("static-dir"),
        persist_dir=opts.get("persist-dir"),
    )
    service = DiagnosisService(config)
    app = create_app(service)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


def _bench_impl(opts: Options) -> int:
    import threading

    import uvicorn

    from .evaluation import latency_bench, read_trace_csv, synthetic_baseline_trace
    from .serve import DiagnosisService, ServeConfig, create_app

    out = opts.get("out")
    n_cases = int(opts.get("n-cases", 10))
    baseline_path = opts.get("baseline")
    baseline = read_trace_csv(baseline_path) if baseline_path else synthetic_baseline_trace()
    bundle = _load_corpus(opts)
    import io

    from PIL import Image

    cases = []
    for rec in bundle.records[:n_cases]:
        buf = io.BytesIO()
        Image.fromarray(bundle.images[rec["path"]]).save(buf, format="PNG")
        cases.append((rec["path"], buf.getvalue()))
    base_url = opts.get("base-url")
    server = None
    if not base_url:
        checkpoint = opts.require("checkpoint")
        service = DiagnosisService(ServeConfig(checkpoint_path=str(checkpoint)))
        app = create_app(service)
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        while not server.started:
            time.sleep(0.02)
        port = server.servers[0].sockets[0].getsockname()[1]
        base_url = f"http://127.0.0.1:{port}"
    try:
        report = latency_bench(
            base_url, cases, baseline, timeout_s=float(opts.get("timeout", 30.0))
        )
    finally:
        if server is not None:
            server.should_exit = True
    if out:
        out_dir = Path(out)
        manifest = RunManifest("bench", out_dir, {"n_cases": n_cases}, opts.get("seed"))
        (out_dir / "bench_report.json").write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
        )
        (out_dir / "latencies.csv").write_text(report.plot_csv)
        manifest.finalize()
    _emit(report.as_dict())
    return 0


def cmd_eval(opts: Options) -> int:
    action = opts.require("action")
    if action == "aggregate":
        from .evaluation import aggregate, read_records_csv, read_records_jsonl

        records_path = Path(opts.require("records"))
        records = (
            read_records_jsonl(records_path)
            if records_path.suffix == ".jsonl"
            else read_records_csv(records_path)
        )
        report = aggregate(records)
        payload = report.as_dict()
        out = opts.get("out")
        if out:
            Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        _emit(payload)
        return 0
    if action == "bench":
        return _bench_impl(opts)
    if action == "probe":
        from .evaluation import probe_behavior
        from .model import load_checkpoint
        from .train import heldin_split

        model, _, _, _ = load_checkpoint(opts.require("checkpoint"))
        bundle = _load_corpus(opts)
        heldin = opts.get("heldin")
        if heldin:
            bundle = heldin_split(bundle, int(heldin))
        report = probe_behavior(model, bundle)
        payload = report.as_dict()
        out = opts.get("out")
        if out:
            Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        _emit(payload)
        return 0
    raise InvalidInputError(f"unknown eval action {action!r}; use aggregate|bench|probe")


# --------------------------------------------------------------------------


def build_parser() -> Parser:
    parser = Parser(prog="dermvlm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand")

    def common(p: Parser):
        p.add_argument("--config", help="JSON config file (flag > file > default)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="artifact directory / output file")

    p = sub.add_parser("synth-data", description="generate the synthetic corpus")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--min-concepts", type=int)
    p.add_argument("--max-concepts", type=int)
    p.add_argument("--image-size", type=int)
    p.add_argument("--no-balance", action="store_true", default=None)

    p = sub.add_parser("ingest", description="load external datasets")
    common(p)
    p.add_argument("--concepts-csv")
    p.add_argument("--images-root")
    p.add_argument("--class-tree")
    p.add_argument("--merge", nargs="+")
    p.add_argument("--max-text-len", type=int)

    p = sub.add_parser("pretrain-vision", description="prepare the backbone")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--vision-steps", type=int)
    p.add_argument("--decoder-steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--model-seed", type=int)
    p.add_argument("--no-decoder-lm", action="store_true", default=None)

    p = sub.add_parser("train", description="run one fine-tuning stage")
    common(p)
    p.add_argument("--stage", type=int)
    p.add_argument("--corpus")
    p.add_argument("--checkpoint", help="resume from this checkpoint")
    p.add_argument("--epochs", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--max-text-len", type=int)
    p.add_argument("--optimizer", choices=["sgd", "adam"])
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--desk-scale", nargs=2, metavar=("EPOCHS", "ITERS"))
    p.add_argument("--freeze-overrides", help='JSON, e.g. {"decoder": false}')
    p.add_argument("--unfreeze-decoder", action="store_true", default=None)
    p.add_argument("--model-seed", type=int)

    p = sub.add_parser("ablation", description="stage-1/stage-2/both comparison")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--heldin", type=int)

    p = sub.add_parser("generate", description="one-shot captioning of an image")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--image")
    p.add_argument("--prompt")
    p.add_argument("--prompt-index", type=int)
    p.add_argument("--mode", choices=["greedy", "sampled"])
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-new-tokens", type=int)

    p = sub.add_parser("serve", description="run the local diagnosis service")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--session-ttl", type=float)
    p.add_argument("--max-upload-bytes", type=int)
    p.add_argument("--static-dir")
    p.add_argument("--persist-dir")

    p = sub.add_parser("eval", description="evaluation harness")
    p.add_argument("action", choices=["aggregate", "bench", "probe"])
    common(p)
    p.add_argument("--records")
    p.add_argument("--checkpoint")
    p.add_argument("--corpus")
    p.add_argument("--heldin", type=int)
    p.add_argument("--base-url")
    p.add_argument("--baseline")
    p.add_argument("--n-cases", type=int)
    p.add_argument("--timeout", type=float)

    p = sub.add_parser("bench", description="alias of `eval bench`")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--corpus")
    p.add_argument("--base-url")
    p.add_argument("--baseline")
    p.add_argument("--n-cases", type=int)
    p.add_argument("--timeout", type=float)

    return parser


_HANDLERS = {
    "synth-data": cmd_synth_data,
    "ingest": cmd_ingest,
    "pretrain-vision": cmd_pretrain_vision,
    "train": cmd_train,
    "ablation": cmd_ablation,
    "generate": cmd_generate,
    "serve": cmd_serve,
    "eval": cmd_eval,
    "bench": _bench_impl,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.subcommand:
            sys.stderr.write(parser.format_usage())
            sys.stderr.write(f"valid subcommands: {', '.join(SUBCOMMANDS)}\n")
            return 1
        opts = Options(args, _load_config(getattr(args, "config", None)))
        if args.subcommand == "bench":
            opts.args.setdefault("action", "bench")
        return _HANDLERS[args.subcommand](opts)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        if exc.usage:
            sys.stderr.write(exc.usage)
        sys.stderr.write(f"valid subcommands: {', '.join(SUBCOMMANDS)}\n")
        return 1
    except InvalidInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except DermvlmError as exc:
        sys.stderr.write(f"runtime failure: {exc}\n")
        return 2
    except Exception as exc:  # unexpected
        import traceback

        traceback.print_exc(file=sys.stderr)
        sys.stderr.write(f"runtime failure: {exc}\n")
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
