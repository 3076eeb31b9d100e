"""Command-line interface: synth, build, eval, sweep, bench, serve."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import evalbench
from .corpus import load_corpus, load_queries, synth_corpus, write_corpus, write_queries
from .evalbench import EvalConfig, bench_speed, run_eval, sweep_clusters
from .retrieve import build_index
from .service import serve
from .store import load_index, save_index


def _add_build_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-clusters", type=int, default=175)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidgraph",
        description="Cluster-graph video retrieval: build, search, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus + query set")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--categories", type=int, default=6)
    p.add_argument("--videos-per-category", type=int, default=10)
    p.add_argument("--frames-per-video", type=int, default=40)
    p.add_argument("--dim", type=int, default=48)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries-per-category", type=int, default=4)

    p = sub.add_parser("build", help="build and save a retrieval index")
    p.add_argument("--manifest", required=True)
    _add_build_params(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate variants; write CSV, print tables")
    p.add_argument("--manifest", required=True)
    p.add_argument("--queries", required=True)
    _add_build_params(p)
    p.add_argument("--probe-c", type=int, default=5)
    p.add_argument(
        "--variant",
        action="append",
        choices=sorted(evalbench.ALL_VARIANTS),
        help="repeatable; default graph + no_graph",
    )
    p.add_argument("--per-video-k", type=int, default=5)
    p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("sweep", help="mAP@10 across a grid of cluster counts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--grid", default="25,50,100,175,250")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probe-c", type=int, default=5)
    p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("bench", help="search throughput against a built index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--queries", required=True)
    _add_build_params(p)
    p.add_argument("--probe-c", type=int, default=5)
    p.add_argument("--repetitions", type=int, default=11)

    p = sub.add_parser("serve", help="HTTP search service over a saved index")
    p.add_argument("--index", required=True)
    p.add_argument("--bind", default="127.0.0.1:8091")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "synth":
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        corpus, queries = synth_corpus(
            n_categories=args.categories,
            videos_per_category=args.videos_per_category,
            frames_per_video=args.frames_per_video,
            d=args.dim,
            noise=args.noise,
            seed=args.seed,
            queries_per_category=args.queries_per_category,
        )
        write_corpus(corpus, out / "corpus.json")
        write_queries(queries, out / "queries.json")
        print(
            f"wrote {corpus.frame_count} frames / {len(corpus.videos)} videos "
            f"to {out / 'corpus.json'}"
        )
        print(f"wrote {len(queries.queries)} queries to {out / 'queries.json'}")
        return 0

    if args.command == "build":
        corpus = load_corpus(args.manifest)
        index = build_index(
            corpus, k_clusters=args.k_clusters, alpha=args.alpha, seed=args.seed
        )
        nbytes = save_index(index, args.out)
        print(f"wrote {args.out} ({nbytes} bytes, K={index.k_clusters})")
        return 0

    if args.command == "eval":
        corpus = load_corpus(args.manifest)
        queries = load_queries(args.queries)
        config = EvalConfig(
            c=args.probe_c,
            k_clusters=args.k_clusters,
            alpha=args.alpha,
            per_video_k=args.per_video_k,
            variants=tuple(args.variant) if args.variant else ("graph", "no_graph"),
            seed=args.seed,
        )
        report = run_eval(corpus, queries, config)
        print(evalbench.report_to_text(report))
        if args.out:
            Path(args.out).write_text(evalbench.report_to_csv(report))
            print(f"wrote {args.out}")
        return 0

    if args.command == "sweep":
        corpus = load_corpus(args.manifest)
        queries = load_queries(args.queries)
        grid = tuple(int(g) for g in args.grid.split(","))
        config = EvalConfig(c=args.probe_c, alpha=args.alpha, seed=args.seed)
        rows = sweep_clusters(corpus, queries, grid, config)
        csv_text = evalbench.sweep_to_csv(rows)
        print(csv_text, end="")
        if args.out:
            Path(args.out).write_text(csv_text)
            print(f"wrote {args.out}")
        return 0

    if args.command == "bench":
        corpus = load_corpus(args.manifest)
        queries = load_queries(args.queries)
        index = build_index(
            corpus, k_clusters=args.k_clusters, alpha=args.alpha, seed=args.seed
        )
        report = bench_speed(
            index, queries, c=args.probe_c, repetitions=args.repetitions
        )
        print(
            f"effective {report.effective_fps:.0f} frames/s  "
            f"raw {report.raw_fps:.0f} frames/s  "
            f"(median of {report.repetitions} passes, {report.n_queries} queries, "
            f"{report.index_frames} indexed frames)"
        )
        return 0

    if args.command == "serve":
        serve(args.index, bind=args.bind)
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
