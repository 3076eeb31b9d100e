"""Retrieval quality metrics, ablation runs, cluster-count sweeps, throughput.

Quality is measured as category precision: P@k is the fraction of the top-k
retrieved videos sharing the query's category, and mAP@k averages P@k over
a set of query images. ``run_eval`` produces the per-category tables for
the requested pipeline variants (graph-augmented stage 1, raw cluster
means, per-video temporal vectors), ``sweep_clusters`` rebuilds across a
grid of cluster counts, and ``bench_speed`` measures effective search
throughput in indexed frames covered per second.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import dataclass, field, replace
from importlib import resources

from .corpus import Corpus, QuerySet
from .cluster import DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_TOL, fit_clusters
from .retrieve import (
    DEFAULT_PER_VIDEO_K,
    DEFAULT_PROBE_C,
    RetrievalIndex,
    SearchResult,
    build_video_vectors,
    index_from_model,
    search,
    search_videos,
)
from .tgraph import DEFAULT_ALPHA, build_graph

VARIANT_GRAPH = "graph"
VARIANT_NO_GRAPH = "no_graph"
VARIANT_PER_VIDEO = "per_video"
ALL_VARIANTS = (VARIANT_GRAPH, VARIANT_NO_GRAPH, VARIANT_PER_VIDEO)


@dataclass
class EvalConfig:
    k_values: tuple[int, ...] = (5, 10, 20)
    c: int = DEFAULT_PROBE_C
    k_clusters: int = DEFAULT_K
    alpha: float = DEFAULT_ALPHA
    per_video_k: int = DEFAULT_PER_VIDEO_K
    cluster_grid: tuple[int, ...] = (25, 50, 100, 175, 250)
    variants: tuple[str, ...] = (VARIANT_GRAPH, VARIANT_NO_GRAPH)
    seed: int = 0
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not self.k_values or list(self.k_values) != sorted(self.k_values):
            raise ValueError("k_values must be non-empty and ascending")
        unknown = set(self.variants) - set(ALL_VARIANTS)
        if unknown:
            raise ValueError(f"unknown variants: {sorted(unknown)}")


@dataclass
class EvalReport:
    # variant -> category -> k -> mAP
    tables: dict[str, dict[str, dict[int, float]]] = field(default_factory=dict)
    # variant -> k -> mean P@k over every query
    overall: dict[str, dict[int, float]] = field(default_factory=dict)
    # variant -> effective frames/second observed while evaluating
    throughput: dict[str, float] = field(default_factory=dict)
    # (k_clusters, overall mAP@10) rows from a sweep
    sweep: list[tuple[int, float]] = field(default_factory=list)


def precision_at_k(
    result: SearchResult, query_category: str, corpus: Corpus, k: int
) -> float:
    """Fraction of the top-k retrieved videos matching the query category.

    The denominator stays k even when fewer than k videos were returned.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not result.ranked_videos:
        raise ValueError("result contains no ranked videos")
    categories = corpus.category_of()
    relevant = 0
    for hit in result.ranked_videos[:k]:
        if hit.video_id not in categories:
            raise KeyError(f"unknown video_id {hit.video_id} in result")
        if categories[hit.video_id] == query_category:
            relevant += 1
    return relevant / k


def map_at_k(per_query_precisions: list[float]) -> float:
    """Mean of the per-query P@k values."""
    if not per_query_precisions:
        raise ValueError("cannot average an empty precision list")
    return sum(per_query_precisions) / len(per_query_precisions)


def _eval_queries(
    corpus: Corpus,
    queries: QuerySet,
    config: EvalConfig,
    run_one,
) -> tuple[dict[str, dict[int, list[float]]], dict[int, list[float]]]:
    """P@k per category and pooled, for queries sorted by query_id."""
    per_cat: dict[str, dict[int, list[float]]] = {}
    pooled: dict[int, list[float]] = {k: [] for k in config.k_values}
    for query in sorted(queries.queries, key=lambda q: q.query_id):
        result = run_one(query)
        for k in config.k_values:
            p = precision_at_k(result, query.category, corpus, k)
            per_cat.setdefault(query.category, {}).setdefault(k, []).append(p)
            pooled[k].append(p)
    return per_cat, pooled


def run_eval(corpus: Corpus, queries: QuerySet, config: EvalConfig) -> EvalReport:
    """Build each requested variant once and evaluate every query against it."""
    for q in queries.queries:
        if q.vector.shape[0] != corpus.dim:
            raise ValueError(
                f"query {q.query_id} has dimension {q.vector.shape[0]}, "
                f"corpus dim is {corpus.dim}"
            )
    report = EvalReport()
    top_k = max(config.k_values)

    model = None
    graph = None
    if VARIANT_GRAPH in config.variants or VARIANT_NO_GRAPH in config.variants:
        model = fit_clusters(
            corpus,
            k=config.k_clusters,
            seed=config.seed,
            max_iter=config.max_iter,
            tol=config.tol,
        )
        graph = build_graph(corpus, model)

    for variant in config.variants:
        if variant == VARIANT_PER_VIDEO:
            vectors = build_video_vectors(
                corpus,
                per_video_k=config.per_video_k,
                alpha=config.alpha,
                seed=config.seed,
                max_iter=config.max_iter,
                tol=config.tol,
            )
            run_one = lambda q: search_videos(vectors, q.vector, k=top_k)
            covered = sum(v.shape[0] for v in vectors.vectors.values())
        else:
            # the no-graph ablation ranks stage 1 by raw cluster means,
            # which is exactly alpha=1 augmentation
            alpha = config.alpha if variant == VARIANT_GRAPH else 1.0
            index = index_from_model(corpus, model, graph, alpha, config.seed)
            run_one = lambda q: search(index, q.vector, c=config.c, k=top_k)
            covered = index.frame_count

        t0 = time.perf_counter()
        per_cat, pooled = _eval_queries(corpus, queries, config, run_one)
        elapsed = time.perf_counter() - t0

        report.tables[variant] = {
            cat: {k: map_at_k(ps) for k, ps in by_k.items()}
            for cat, by_k in sorted(per_cat.items())
        }
        report.overall[variant] = {k: map_at_k(ps) for k, ps in pooled.items()}
        report.throughput[variant] = (
            covered * len(queries.queries) / elapsed if elapsed > 0 else float("inf")
        )
    return report


def sweep_clusters(
    corpus: Corpus,
    queries: QuerySet,
    grid: tuple[int, ...],
    config: EvalConfig,
) -> list[tuple[int, float]]:
    """One full graph-variant build + eval per grid value; rows of
    (k_clusters, overall mAP@10)."""
    for g in grid:
        if g > corpus.frame_count:
            raise ValueError(
                f"grid value {g} exceeds corpus frame count {corpus.frame_count}"
            )
    rows: list[tuple[int, float]] = []
    sweep_config = replace(
        config, k_values=(10,), variants=(VARIANT_GRAPH,)
    )
    for g in grid:
        report = run_eval(corpus, queries, replace(sweep_config, k_clusters=g))
        rows.append((g, report.overall[VARIANT_GRAPH][10]))
    return rows


@dataclass
class ThroughputReport:
    effective_fps: float  # indexed frames covered per second of query time
    raw_fps: float  # frames actually scored per second
    median_seconds: float
    repetitions: int
    n_queries: int
    index_frames: int
    frames_scored_per_pass: int


def bench_speed(
    index: RetrievalIndex,
    queries: QuerySet,
    c: int = DEFAULT_PROBE_C,
    k: int = 10,
    repetitions: int = 11,
) -> ThroughputReport:
    """Median-of-repetitions search throughput against a fixed index.

    The effective rate counts the whole index as covered by each query (the
    database each search sweeps); the raw rate counts only the frames the
    probed buckets actually scored.
    """
    if not queries.queries:
        raise ValueError("need at least one query")
    if repetitions < 10:
        raise ValueError("need >= 10 repetitions for a stable median")
    vectors = [q.vector for q in queries.queries]
    scored = 0
    times: list[float] = []
    for rep in range(repetitions):
        t0 = time.perf_counter()
        pass_scored = 0
        for v in vectors:
            result = search(index, v, c=c, k=k)
            pass_scored += result.frames_scored
        times.append(time.perf_counter() - t0)
        scored = pass_scored  # deterministic across passes
    med = statistics.median(times)
    n = len(vectors)
    return ThroughputReport(
        effective_fps=index.frame_count * n / med,
        raw_fps=scored / med,
        median_seconds=med,
        repetitions=repetitions,
        n_queries=n,
        index_frames=index.frame_count,
        frames_scored_per_pass=scored,
    )


def report_to_csv(report: EvalReport) -> str:
    """CSV rows (variant, category, k, map); OVERALL rows close each variant."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["variant", "category", "k", "map"])
    for variant in sorted(report.tables):
        for category in sorted(report.tables[variant]):
            for k in sorted(report.tables[variant][category]):
                writer.writerow(
                    [variant, category, k, f"{report.tables[variant][category][k]:.6f}"]
                )
        for k in sorted(report.overall.get(variant, {})):
            writer.writerow(
                [variant, "OVERALL", k, f"{report.overall[variant][k]:.6f}"]
            )
    return buf.getvalue()


def sweep_to_csv(rows: list[tuple[int, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["k_clusters", "map_at_10"])
    for k_clusters, value in rows:
        writer.writerow([k_clusters, f"{value:.6f}"])
    return buf.getvalue()


def report_to_text(report: EvalReport) -> str:
    """Aligned per-variant tables with one category per row, mAP@k columns."""
    lines: list[str] = []
    for variant in sorted(report.tables):
        ks = sorted(next(iter(report.tables[variant].values()), {}).keys())
        if not ks:
            ks = sorted(report.overall.get(variant, {}).keys())
        header = ["Category".ljust(28)] + [f"mAP@{k}".rjust(9) for k in ks]
        lines.append(f"[variant: {variant}]")
        lines.append("".join(header))
        for category in sorted(report.tables[variant]):
            row = [category.ljust(28)]
            for k in ks:
                row.append(f"{report.tables[variant][category][k] * 100:8.2f}%")
            lines.append("".join(row))
        row = ["OVERALL".ljust(28)]
        for k in ks:
            row.append(f"{report.overall[variant][k] * 100:8.2f}%")
        lines.append("".join(row))
        if variant in report.throughput:
            lines.append(
                f"effective search speed: {report.throughput[variant]:.0f} frames/s"
            )
        lines.append("")
    return "\n".join(lines)


def msrvtt_category_map() -> dict[str, str | None]:
    """The 20 source labels -> 11 merged categories (None = excluded)."""
    text = (
        resources.files("vidgraph").joinpath("data/msrvtt_categories.json").read_text()
    )
    return json.loads(text)["map"]


def merged_categories() -> list[str]:
    """The 11 retained categories, in first-appearance order."""
    out: list[str] = []
    for target in msrvtt_category_map().values():
        if target is not None and target not in out:
            out.append(target)
    return out


def merge_category(label: str) -> str | None:
    """Map a source label to its merged category, or None when excluded."""
    return msrvtt_category_map().get(label)
