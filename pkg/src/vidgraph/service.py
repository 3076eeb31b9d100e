"""Read-only HTTP search service over a loaded index.

All endpoints are pure functions of (index, request): the index is loaded
once at startup and never mutated, so any number of concurrent requests is
safe and repeated identical requests return identical bodies (apart from
``latency_ms``). Image queries go through the deterministic toy embedder;
real deployments should send precomputed embeddings instead.
"""

from __future__ import annotations

import base64
import binascii
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .corpus import toy_embed
from .retrieve import DEFAULT_PROBE_C, DEFAULT_TOP_K, RetrievalIndex, search
from .store import load_index

MAX_IMAGE_BYTES = 8 * 1024 * 1024


class RequestError(Exception):
    def __init__(self, status: int, error: str, **extra):
        super().__init__(error)
        self.status = status
        self.body = {"error": error, **extra}


@dataclass
class SearchRequest:
    """Exactly one of embedding / image / frame_id, plus optional c and k."""

    embedding: list[float] | None
    image: str | None
    frame_id: int | None
    c: int
    k: int

    @classmethod
    def parse(cls, payload: object) -> "SearchRequest":
        if not isinstance(payload, dict):
            raise RequestError(400, "malformed_body")
        given = [f for f in ("embedding", "image", "frame_id") if payload.get(f) is not None]
        if len(given) != 1:
            raise RequestError(
                400,
                "exactly_one_query_field_required",
                fields=["embedding", "image", "frame_id"],
                got=given,
            )
        c = payload.get("c", DEFAULT_PROBE_C)
        k = payload.get("k", DEFAULT_TOP_K)
        if not isinstance(c, int) or isinstance(c, bool) or c < 1:
            raise RequestError(400, "invalid_parameter", parameter="c")
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise RequestError(400, "invalid_parameter", parameter="k")
        return cls(
            embedding=payload.get("embedding"),
            image=payload.get("image"),
            frame_id=payload.get("frame_id"),
            c=c,
            k=k,
        )

    def query_vector(self, index: RetrievalIndex) -> np.ndarray:
        if self.embedding is not None:
            if not isinstance(self.embedding, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                for x in self.embedding
            ):
                raise RequestError(400, "invalid_embedding")
            if len(self.embedding) != index.dim:
                raise RequestError(
                    400,
                    "dimension_mismatch",
                    expected=index.dim,
                    got=len(self.embedding),
                )
            vec = np.asarray(self.embedding, dtype=np.float64)
            if not np.all(np.isfinite(vec)):
                raise RequestError(400, "invalid_embedding")
            return vec
        if self.image is not None:
            if not isinstance(self.image, str):
                raise RequestError(400, "invalid_image")
            if len(self.image) > (MAX_IMAGE_BYTES * 4) // 3 + 4:
                raise RequestError(413, "image_too_large", limit_bytes=MAX_IMAGE_BYTES)
            try:
                raw = base64.b64decode(self.image, validate=True)
            except (binascii.Error, ValueError):
                raise RequestError(400, "invalid_image", detail="not valid base64")
            if len(raw) > MAX_IMAGE_BYTES:
                raise RequestError(413, "image_too_large", limit_bytes=MAX_IMAGE_BYTES)
            try:
                return toy_embed(raw, index.dim)
            except ValueError as exc:
                raise RequestError(400, "invalid_image", detail=str(exc))
        pos = index.position_of(int(self.frame_id))
        if pos is None:
            raise RequestError(404, "unknown_frame_id", frame_id=self.frame_id)
        return index.frame_vectors[pos].astype(np.float64)


def create_app(index: RetrievalIndex) -> FastAPI:
    app = FastAPI(title="vidgraph search service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    videos_by_id = {v.video_id: v for v in index.videos}

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "frames": index.frame_count,
            "clusters": index.k_clusters,
        }

    @app.get("/stats")
    def stats():
        sizes = sorted(int(b.size) for b in index.buckets())
        histogram: dict[int, int] = {}
        for s in sizes:
            histogram[s] = histogram.get(s, 0) + 1
        return {
            "dim": index.dim,
            "k_clusters": index.k_clusters,
            "alpha": index.params.alpha,
            "seed": index.params.seed,
            "frames": index.frame_count,
            "videos": len(index.videos),
            "edges": len(index.graph.edges),
            "bucket_sizes": {
                "min": sizes[0],
                "max": sizes[-1],
                "mean": sum(sizes) / len(sizes),
                "histogram": [[s, histogram[s]] for s in sorted(histogram)],
            },
        }

    @app.get("/videos")
    def videos():
        return {
            "videos": [
                {
                    "video_id": v.video_id,
                    "category": v.category,
                    "frame_count": v.frame_count,
                    "source_uri": v.source_uri,
                }
                for v in index.videos
            ]
        }

    @app.get("/videos/{video_id}")
    def video_detail(video_id: int):
        video = videos_by_id.get(video_id)
        if video is None:
            return JSONResponse(
                status_code=404, content={"error": "unknown_video_id", "video_id": video_id}
            )
        frame_ids = index.frame_ids[index.frame_videos == video_id]
        return {
            "video_id": video.video_id,
            "category": video.category,
            "frame_count": video.frame_count,
            "source_uri": video.source_uri,
            "frame_ids": [int(f) for f in frame_ids],
        }

    @app.get("/clusters/{cluster_id}")
    def cluster_detail(cluster_id: int):
        if not 0 <= cluster_id < index.k_clusters:
            return JSONResponse(
                status_code=404,
                content={"error": "unknown_cluster_id", "cluster_id": cluster_id},
            )
        members = index.frame_ids[index.buckets()[cluster_id]]
        neighbors = index.graph.neighbors(cluster_id)
        return {
            "cluster_id": cluster_id,
            "size": int(members.shape[0]),
            "members": [int(f) for f in members],
            "neighbors": [
                {"cluster_id": n, "weight": w} for n, w in neighbors
            ],
        }

    @app.post("/search")
    async def run_search(request: Request):
        try:
            try:
                payload = await request.json()
            except Exception:
                raise RequestError(400, "malformed_body")
            req = SearchRequest.parse(payload)
            vec = req.query_vector(index)
            t0 = time.perf_counter()
            result = search(index, vec, c=req.c, k=req.k)
            latency_ms = (time.perf_counter() - t0) * 1e3
        except RequestError as exc:
            return JSONResponse(status_code=exc.status, content=exc.body)
        except ValueError as exc:
            return JSONResponse(
                status_code=400, content={"error": "invalid_query", "detail": str(exc)}
            )
        return {
            "ranked_videos": [
                {
                    "video_id": hit.video_id,
                    "category": videos_by_id[hit.video_id].category,
                    "score": hit.score,
                    "best_frame_id": hit.best_frame_id,
                }
                for hit in result.ranked_videos
            ],
            "clusters_probed": result.clusters_probed,
            "frames_scored": result.frames_scored,
            "latency_ms": latency_ms,
        }

    return app


def serve(index_path: str | Path, bind: str = "127.0.0.1:8091") -> None:
    """Load the index and serve until interrupted (drains in-flight requests).

    The PORT environment variable overrides the port in ``bind``.
    """
    import uvicorn

    try:
        index = load_index(index_path)
    except Exception as exc:
        raise SystemExit(f"failed to load index {index_path}: {exc}")
    host, _, port_s = bind.partition(":")
    port = int(os.environ.get("PORT", port_s or "8091"))
    uvicorn.run(create_app(index), host=host or "127.0.0.1", port=port)
