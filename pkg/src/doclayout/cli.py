"""Command line entry points.

Subcommands: ingest, train, generate, eval, render, mosaic-plan, ablate.
Exit codes: 0 success, 2 validation error, 3 data-format error,
4 numerical failure. Every run records its seed in the artifacts it writes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import diffusion, io as layout_io, metrics, mosaic, render
from .core import ClassSchema, Vocabulary
from .errors import FormatError, NumericalError, ValidationError
from .matching import set_score_docemd, set_score_docsim
from .metrics import DocEmdConfig

EVAL_CSV_COLUMNS = ["docsim", "doc_emd", "overlap_pct", "coverage_pct"]


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"input file not found: {path}")
    return p


def _parse_schema(arg: str | None) -> ClassSchema | None:
    if arg is None:
        return None
    return ClassSchema(tuple(s.strip() for s in arg.split(",") if s.strip()))


def _read_corpus(path: str, schema: ClassSchema | None = None):
    corpus = layout_io.read_jsonl(_require_file(path), schema)
    if not corpus:
        raise ValidationError(f"corpus {path} is empty")
    return corpus


def cmd_ingest(args) -> int:
    src = _require_file(args.input)
    if args.format == "coco":
        try:
            doc = json.loads(src.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.input}: not valid JSON ({exc})") from exc
        layouts, stats = layout_io.ingest_coco(doc)
    else:
        layouts = _read_corpus(args.input, _parse_schema(args.schema))
        stats = layout_io.IngestStats()
    layout_io.write_jsonl(layouts, args.out)
    print(
        f"ingested {len(layouts)} layouts -> {args.out} "
        f"(clipped {stats.clipped}, dropped {stats.dropped})"
    )
    return 0


def cmd_train(args) -> int:
    corpus = _read_corpus(args.corpus, _parse_schema(args.schema))
    schema = corpus[0].schema
    page = corpus[0].page
    spec = diffusion.SequenceSpec(
        vocab=Vocabulary(args.vocab_grid, schema.K),
        schema=schema,
        page=page,
        max_len=args.max_len,
    )
    tokens, truncated = diffusion.encode_corpus(corpus, spec)
    cfg = diffusion.TrainConfig(
        lr=args.lr, batch_size=args.batch_size, max_steps=args.max_steps,
        seed=args.seed, T=args.T, d=args.d, schedule=args.schedule,
    )
    log_path = Path(args.out).with_suffix(".loss.csv")
    with open(log_path, "w") as log_fp:
        model, sched, rows = diffusion.train(tokens, cfg, spec=spec, log_fp=log_fp)
    diffusion.save_checkpoint(args.out, model, sched, cfg, spec)
    last = rows[-1][1] if rows else float("nan")
    print(
        f"trained {cfg.max_steps} steps (seed {cfg.seed}, truncated {truncated}) "
        f"-> {args.out}; final loss {last:.4f}; log {log_path}"
    )
    return 0


def cmd_generate(args) -> int:
    model, sched, _train_cfg, spec = diffusion.load_checkpoint(_require_file(args.checkpoint))
    layouts, stats = diffusion.sample(
        model, sched, args.count, spec, seed=args.seed, clamp=not args.no_clamp
    )
    layout_io.write_jsonl(layouts, args.out)
    sidecar = {
        "seed": args.seed,
        "count": stats.count,
        "validity_rate": stats.validity_rate,
        "dropped_groups": stats.dropped_groups,
        "checkpoint": str(args.checkpoint),
    }
    Path(str(args.out) + ".stats.json").write_text(json.dumps(sidecar, indent=2))
    print(
        f"wrote {len(layouts)} layouts -> {args.out} "
        f"(validity {stats.validity_rate:.1%}, seed {args.seed})"
    )
    return 0


def _eval_payload(gen, ref, cfg: DocEmdConfig, overlap_mode: str, n_jobs: int) -> dict:
    class_w, bbox_w = metrics.wasserstein_seq(gen, ref)
    gen_summary = metrics.corpus_summary(gen, overlap_mode)
    ref_summary = metrics.corpus_summary(ref, overlap_mode)
    return {
        "docsim": set_score_docsim(gen, ref),
        "doc_emd": set_score_docemd(gen, ref, cfg, n_jobs=n_jobs),
        "overlap_pct": gen_summary.mean_overlap,
        "coverage_pct": gen_summary.mean_coverage,
        "wasserstein_class": class_w,
        "wasserstein_bbox": bbox_w,
        "generated_summary": gen_summary.to_dict(),
        "reference_summary": ref_summary.to_dict(),
    }


def cmd_eval(args) -> int:
    schema = _parse_schema(args.schema)
    gen = _read_corpus(args.generated, schema)
    ref = _read_corpus(args.reference, schema)
    cfg = DocEmdConfig(lam=args.lam, grid=args.grid)
    payload = _eval_payload(gen, ref, cfg, args.overlap_mode, args.jobs)
    payload["config"] = {
        "seed": args.seed, "grid": args.grid, "lambda": args.lam,
        "overlap_mode": args.overlap_mode,
        "generated": str(args.generated), "reference": str(args.reference),
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out.with_suffix(".csv"), "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(EVAL_CSV_COLUMNS)
        writer.writerow([payload[c] for c in EVAL_CSV_COLUMNS])
    out.with_suffix(".json").write_text(json.dumps(payload, indent=2))
    if args.dump_pairs:
        entries = [
            (str(i), str(j), metrics.doc_emd(a, b, cfg))
            for i, a in enumerate(gen)
            for j, b in enumerate(ref)
        ]
        with open(out.with_suffix(".pairs.csv"), "w", newline="") as fp:
            metrics.write_pair_reports_csv(fp, entries, gen[0].schema.names)
    print(
        "eval: docsim {docsim:.4f}  doc_emd {doc_emd:.4f}  "
        "overlap {overlap_pct:.3f}%  coverage {coverage_pct:.2f}%".format(**payload)
    )
    return 0


def cmd_render(args) -> int:
    corpus = _read_corpus(args.corpus, _parse_schema(args.schema))
    paths = render.save_corpus_svgs(corpus, args.out, legend=not args.no_legend)
    print(f"rendered {len(paths)} SVGs -> {args.out}")
    return 0


def cmd_mosaic_plan(args) -> int:
    gen = _read_corpus(args.generated, _parse_schema(args.schema))
    real = _read_corpus(args.real, _parse_schema(args.schema))
    plan = mosaic.build_mosaic_plan(gen, real, w_ar=args.w_ar, w_area=args.w_area)
    unmatched = sum(1 for e in plan if not e.matched)
    doc = {
        "config": {"w_ar": args.w_ar, "w_area": args.w_area, "seed": args.seed},
        "entries": [e.to_dict() for e in plan],
    }
    Path(args.out).write_text(json.dumps(doc, indent=2))
    print(f"planned {len(plan)} boxes ({unmatched} unmatched) -> {args.out}")
    return 0


def cmd_ablate(args) -> int:
    corpus = _read_corpus(args.corpus, _parse_schema(args.schema))
    if args.reference:
        ref = _read_corpus(args.reference, _parse_schema(args.schema))
        train_set = corpus
    else:
        rng = np.random.default_rng(args.seed)
        idx = rng.permutation(len(corpus))
        cut = max(1, len(corpus) // 5)
        ref = [corpus[i] for i in idx[:cut]]
        train_set = [corpus[i] for i in idx[cut:]]
    if not train_set:
        raise ValidationError("ablation corpus too small to split")

    lrs = sorted(float(x) for x in args.lr.split(","))
    steps = sorted(int(x) for x in args.steps.split(","))
    schema = train_set[0].schema
    spec = diffusion.SequenceSpec(
        vocab=Vocabulary(args.vocab_grid, schema.K),
        schema=schema,
        page=train_set[0].page,
        max_len=args.max_len,
    )
    tokens, _ = diffusion.encode_corpus(train_set, spec)
    cfg_metric = DocEmdConfig(lam=args.lam, grid=args.grid)

    rows = []
    for lr in lrs:
        for T in steps:
            cfg = diffusion.TrainConfig(
                lr=lr, batch_size=args.batch_size, max_steps=args.max_steps,
                seed=args.seed, T=T, d=args.d, schedule=args.schedule,
            )
            model, sched, _ = diffusion.train(tokens, cfg, spec=spec)
            samples, stats = diffusion.sample(
                model, sched, min(len(ref), args.count), spec, seed=args.seed
            )
            payload = _eval_payload(samples, ref, cfg_metric, args.overlap_mode, args.jobs)
            rows.append(
                [lr, T] + [payload[c] for c in EVAL_CSV_COLUMNS]
                + [stats.validity_rate]
            )
            print(
                f"cell lr={lr} steps={T}: doc_emd {payload['doc_emd']:.4f} "
                f"docsim {payload['docsim']:.4f} validity {stats.validity_rate:.1%}"
            )
    with open(args.out, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["lr", "steps"] + EVAL_CSV_COLUMNS + ["validity_rate"])
        writer.writerows(rows)
    print(f"ablation table -> {args.out} (seed {args.seed})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doclayout",
        description="Document layout metrics and diffusion-based generation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--schema", default=None,
                       help="comma-separated class names to enforce")

    p = sub.add_parser("ingest", help="convert a corpus to native JSONL")
    p.add_argument("input")
    p.add_argument("--format", choices=["coco", "jsonl"], default="coco")
    p.add_argument("--out", required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the diffusion generator")
    p.add_argument("corpus")
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--T", type=int, default=2000, help="diffusion step count")
    p.add_argument("--max-steps", type=int, default=2000, help="optimizer steps")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--schedule", choices=["sqrt", "linear"], default="sqrt")
    p.add_argument("--vocab-grid", type=int, default=128,
                   help="geometry vocabulary size |G|")
    p.add_argument("--max-len", type=int, default=130)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample layouts from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--out", required=True)
    p.add_argument("--no-clamp", action="store_true",
                   help="disable nearest-embedding projection during sampling")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="compare a generated corpus against a reference")
    p.add_argument("generated")
    p.add_argument("reference")
    p.add_argument("--out", required=True, help="report path prefix")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--overlap-mode", choices=["union", "pairwise-sum"], default="union")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dump-pairs", action="store_true")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render layouts to SVG files")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--no-legend", action="store_true")
    common(p, seed=False)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("mosaic-plan", help="match generated boxes to real boxes")
    p.add_argument("generated")
    p.add_argument("real")
    p.add_argument("--out", required=True)
    p.add_argument("--w-ar", type=float, default=1.0)
    p.add_argument("--w-area", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_mosaic_plan)

    p = sub.add_parser("ablate", help="learning-rate x diffusion-steps grid")
    p.add_argument("corpus")
    p.add_argument("--reference", default=None,
                   help="held-out corpus (default: seeded 20%% split)")
    p.add_argument("--out", required=True)
    p.add_argument("--lr", default="1e-4", help="comma-separated learning rates")
    p.add_argument("--steps", default="2000", help="comma-separated diffusion steps")
    p.add_argument("--max-steps", type=int, default=800, help="optimizer steps per cell")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--schedule", choices=["sqrt", "linear"], default="sqrt")
    p.add_argument("--grid", type=int, default=64, help="metric raster grid")
    p.add_argument("--vocab-grid", type=int, default=128,
                   help="geometry vocabulary size |G|")
    p.add_argument("--max-len", type=int, default=130)
    p.add_argument("--count", type=int, default=64, help="samples per cell")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--overlap-mode", choices=["union", "pairwise-sum"], default="union")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
