"""Corpus data model, disk formats, and deterministic synthetic data.

The engine is embedding-agnostic: frame vectors arrive from whatever image
embedding model produced them, at any dimension (2048 for the usual CNN
backbones). A corpus on disk is a JSON manifest plus a raw little-endian
float32 blob; see ``load_corpus`` for the exact layout. For hermetic tests
and demos, ``synth_corpus`` generates labelled corpora with controllable
temporal autocorrelation and ``toy_embed`` turns a P6 pixmap into a vector
without any neural network.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_DIM = 2048
DEFAULT_SAMPLE_RATE_FPS = 2.0


class CorpusError(Exception):
    """A manifest or embedding blob is structurally invalid."""


@dataclass(frozen=True)
class FrameEmbedding:
    """One sampled video frame: provenance plus its d-dimensional vector."""

    frame_id: int
    video_id: int
    ordinal: int
    timestamp_s: float
    vector: np.ndarray


@dataclass
class VideoRecord:
    video_id: int
    category: str
    frame_count: int
    source_uri: str = ""


@dataclass(frozen=True)
class Query:
    query_id: int
    category: str
    vector: np.ndarray


@dataclass
class QuerySet:
    dim: int
    queries: list[Query]
    per_category_count: int = 4


@dataclass
class Corpus:
    """All frame embeddings of a video collection, ordered by (video, ordinal)."""

    dim: int
    sample_rate_fps: float
    videos: list[VideoRecord]
    frames: list[FrameEmbedding]
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def frame_matrix(self) -> np.ndarray:
        """All frame vectors stacked as an (n, d) float32 matrix, frame order."""
        if self._matrix is None:
            self._matrix = np.stack([f.vector for f in self.frames]).astype(
                np.float32, copy=False
            )
        return self._matrix

    def frames_by_video(self) -> dict[int, list[FrameEmbedding]]:
        out: dict[int, list[FrameEmbedding]] = {v.video_id: [] for v in self.videos}
        for f in self.frames:
            out[f.video_id].append(f)
        return out

    def category_of(self) -> dict[int, str]:
        return {v.video_id: v.category for v in self.videos}

    def validate(self) -> None:
        """Check every corpus invariant, raising CorpusError with context."""
        known = {v.video_id for v in self.videos}
        counts: dict[int, int] = {vid: 0 for vid in known}
        ordinals: dict[int, list[int]] = {vid: [] for vid in known}
        seen_ids: set[int] = set()
        for f in self.frames:
            if f.video_id not in known:
                raise CorpusError(
                    f"frame {f.frame_id} references unknown video_id {f.video_id}"
                )
            if f.frame_id in seen_ids:
                raise CorpusError(f"duplicate frame_id {f.frame_id}")
            seen_ids.add(f.frame_id)
            if f.vector.shape != (self.dim,):
                raise CorpusError(
                    f"frame {f.frame_id} (video {f.video_id}) has dimension "
                    f"{f.vector.shape[0] if f.vector.ndim == 1 else f.vector.shape}, "
                    f"expected {self.dim}"
                )
            if not np.all(np.isfinite(f.vector)):
                raise CorpusError(
                    f"frame {f.frame_id} (video {f.video_id}) contains "
                    "non-finite values"
                )
            counts[f.video_id] += 1
            ordinals[f.video_id].append(f.ordinal)
        for v in self.videos:
            if counts[v.video_id] != v.frame_count:
                raise CorpusError(
                    f"video {v.video_id} declares {v.frame_count} frames, "
                    f"found {counts[v.video_id]}"
                )
            got = sorted(ordinals[v.video_id])
            if got != list(range(len(got))):
                raise CorpusError(
                    f"video {v.video_id} ordinals are not contiguous 0..n-1: {got}"
                )


def load_corpus(manifest_path: str | Path) -> Corpus:
    """Load a corpus from a JSON manifest plus raw float32 blob.

    Manifest fields: ``dim``, ``sample_rate_fps``, ``blob_path`` (relative to
    the manifest), ``videos`` = list of ``{video_id, category, frame_count,
    source_uri}``. The blob holds every frame vector consecutively in
    (video, ordinal) order as little-endian float32; its size must equal
    ``4 * dim * sum(frame_count)``.
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"manifest {manifest_path} is not valid JSON: {exc}")

    try:
        dim = int(manifest["dim"])
        fps = float(manifest.get("sample_rate_fps", DEFAULT_SAMPLE_RATE_FPS))
        blob_path = manifest_path.parent / manifest["blob_path"]
        video_entries = manifest["videos"]
    except KeyError as exc:
        raise CorpusError(f"manifest {manifest_path} is missing field {exc}")

    videos = [
        VideoRecord(
            video_id=int(v["video_id"]),
            category=str(v["category"]),
            frame_count=int(v["frame_count"]),
            source_uri=str(v.get("source_uri", "")),
        )
        for v in video_entries
    ]

    total_frames = sum(v.frame_count for v in videos)
    expected_bytes = 4 * dim * total_frames
    raw = blob_path.read_bytes()
    if len(raw) < expected_bytes:
        frame_idx = len(raw) // (4 * dim)
        vid = _video_at_frame(videos, frame_idx)
        raise CorpusError(
            f"blob {blob_path} truncated at byte {len(raw)}: expected "
            f"{expected_bytes} bytes; first incomplete frame_id={frame_idx} "
            f"(video_id={vid})"
        )
    if len(raw) > expected_bytes:
        raise CorpusError(
            f"blob {blob_path} has {len(raw)} bytes but manifest implies "
            f"{expected_bytes} (dim mismatch between manifest and blob?)"
        )

    data = np.frombuffer(raw, dtype="<f4").reshape(total_frames, dim)
    frames: list[FrameEmbedding] = []
    frame_id = 0
    for v in videos:
        for ordinal in range(v.frame_count):
            vec = data[frame_id]
            if not np.all(np.isfinite(vec)):
                raise CorpusError(
                    f"frame {frame_id} (video {v.video_id}, ordinal {ordinal}) "
                    "contains non-finite values"
                )
            frames.append(
                FrameEmbedding(
                    frame_id=frame_id,
                    video_id=v.video_id,
                    ordinal=ordinal,
                    timestamp_s=ordinal / fps,
                    vector=vec,
                )
            )
            frame_id += 1

    corpus = Corpus(dim=dim, sample_rate_fps=fps, videos=videos, frames=frames)
    corpus.validate()
    return corpus


def _video_at_frame(videos: list[VideoRecord], frame_idx: int) -> int:
    seen = 0
    for v in videos:
        if frame_idx < seen + v.frame_count:
            return v.video_id
        seen += v.frame_count
    return videos[-1].video_id if videos else -1


def write_corpus(
    corpus: Corpus, manifest_path: str | Path, blob_name: str | None = None
) -> None:
    """Write manifest + blob; inverse of load_corpus (blob is byte-exact)."""
    manifest_path = Path(manifest_path)
    if blob_name is None:
        blob_name = manifest_path.stem + ".f32"
    manifest = {
        "dim": corpus.dim,
        "sample_rate_fps": corpus.sample_rate_fps,
        "blob_path": blob_name,
        "videos": [
            {
                "video_id": v.video_id,
                "category": v.category,
                "frame_count": v.frame_count,
                "source_uri": v.source_uri,
            }
            for v in corpus.videos
        ],
    }
    blob = np.ascontiguousarray(corpus.frame_matrix(), dtype="<f4")
    (manifest_path.parent / blob_name).write_bytes(blob.tobytes())
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_queries(manifest_path: str | Path) -> QuerySet:
    """Load a query set: manifest {dim, blob_path, queries:[{query_id, category}]}."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"manifest {manifest_path} is not valid JSON: {exc}")
    dim = int(manifest["dim"])
    blob_path = manifest_path.parent / manifest["blob_path"]
    entries = manifest["queries"]
    expected_bytes = 4 * dim * len(entries)
    raw = blob_path.read_bytes()
    if len(raw) != expected_bytes:
        raise CorpusError(
            f"query blob {blob_path} has {len(raw)} bytes, expected {expected_bytes}"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(len(entries), dim)
    queries = []
    for i, q in enumerate(entries):
        vec = data[i]
        if not np.all(np.isfinite(vec)):
            raise CorpusError(f"query {q['query_id']} contains non-finite values")
        queries.append(
            Query(query_id=int(q["query_id"]), category=str(q["category"]), vector=vec)
        )
    return QuerySet(dim=dim, queries=queries)


def write_queries(
    queryset: QuerySet, manifest_path: str | Path, blob_name: str | None = None
) -> None:
    manifest_path = Path(manifest_path)
    if blob_name is None:
        blob_name = manifest_path.stem + ".f32"
    manifest = {
        "dim": queryset.dim,
        "blob_path": blob_name,
        "queries": [
            {"query_id": q.query_id, "category": q.category} for q in queryset.queries
        ],
    }
    blob = np.stack([q.vector for q in queryset.queries]).astype("<f4")
    (manifest_path.parent / blob_name).write_bytes(blob.tobytes())
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def synth_corpus(
    n_categories: int,
    videos_per_category: int,
    frames_per_video: int,
    d: int,
    noise: float,
    seed: int,
    queries_per_category: int = 4,
    sample_rate_fps: float = DEFAULT_SAMPLE_RATE_FPS,
    rho: float = 0.7,
) -> tuple[Corpus, QuerySet]:
    """Generate a deterministic synthetic corpus plus out-of-corpus queries.

    Each category gets a distinct unit-norm anchor direction (orthonormal
    set, so ``d >= n_categories``). A video's frames follow the anchor plus
    AR(1) noise with per-component stddev ``noise`` and lag-1 correlation
    ``rho``, which makes consecutive frames more alike than random pairs
    from the same video. Queries are fresh draws around each anchor and are
    never part of the indexed frames. Identical arguments produce bitwise
    identical output.
    """
    if n_categories <= 0 or videos_per_category <= 0 or frames_per_video <= 0:
        raise ValueError("all counts must be positive")
    if d < n_categories:
        raise ValueError(f"d={d} must be >= n_categories={n_categories}")
    if noise < 0:
        raise ValueError("noise must be non-negative")

    rng = np.random.default_rng(seed)
    basis = rng.standard_normal((d, n_categories))
    q, r = np.linalg.qr(basis)
    anchors = (q * np.sign(np.diag(r))).T  # (n_categories, d), orthonormal rows

    categories = [f"cat{i:02d}" for i in range(n_categories)]
    videos: list[VideoRecord] = []
    frames: list[FrameEmbedding] = []
    frame_id = 0
    video_id = 0
    innovation = math.sqrt(max(0.0, 1.0 - rho * rho))
    for ci, cat in enumerate(categories):
        for _ in range(videos_per_category):
            videos.append(
                VideoRecord(
                    video_id=video_id,
                    category=cat,
                    frame_count=frames_per_video,
                    source_uri=f"synth://{cat}/video{video_id}",
                )
            )
            eps = noise * rng.standard_normal(d)
            for ordinal in range(frames_per_video):
                if ordinal > 0:
                    eps = rho * eps + innovation * noise * rng.standard_normal(d)
                vec = (anchors[ci] + eps).astype(np.float32)
                frames.append(
                    FrameEmbedding(
                        frame_id=frame_id,
                        video_id=video_id,
                        ordinal=ordinal,
                        timestamp_s=ordinal / sample_rate_fps,
                        vector=vec,
                    )
                )
                frame_id += 1
            video_id += 1

    queries: list[Query] = []
    qid = 0
    for ci, cat in enumerate(categories):
        for _ in range(queries_per_category):
            vec = (anchors[ci] + noise * rng.standard_normal(d)).astype(np.float32)
            queries.append(Query(query_id=qid, category=cat, vector=vec))
            qid += 1

    corpus = Corpus(
        dim=d, sample_rate_fps=sample_rate_fps, videos=videos, frames=frames
    )
    queryset = QuerySet(
        dim=d, queries=queries, per_category_count=queries_per_category
    )
    return corpus, queryset


def parse_p6(data: bytes) -> np.ndarray:
    """Parse a binary P6 pixmap into an (h, w, 3) float array scaled to [0, 1].

    Supports maxval up to 255 (one byte per sample) and '#' comments in the
    header, per the netpbm convention.
    """
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 pixmap (bad magic)")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ValueError(f"bad P6 header token {token!r}")
        fields.append(int(token))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ValueError(f"bad P6 dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise ValueError(f"unsupported P6 maxval {maxval}")
    need = width * height * 3
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise ValueError(
            f"P6 pixel data truncated: have {len(raw)} bytes, need {need}"
        )
    img = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / maxval
    return img.reshape(height, width, 3)


def toy_embed(image: bytes, d: int) -> np.ndarray:
    """Deterministic stand-in for an image embedding model.

    The image is block-averaged onto a g x g x 3 grid with
    ``g = floor(sqrt(d / 3))``, flattened in (row, column, channel) order,
    zero-padded to ``d``, and L2-normalized. ``d`` must be a positive
    multiple of 3. An all-black image embeds to the zero vector.
    """
    if d <= 0 or d % 3 != 0:
        raise ValueError(f"d must be a positive multiple of 3, got {d}")
    img = parse_p6(image)
    h, w, _ = img.shape
    g = math.isqrt(d // 3)
    if g < 1:
        raise ValueError(f"d={d} too small for a 1x1 grid")

    row_block = (np.arange(h) * g) // h
    col_block = (np.arange(w) * g) // w
    cell = row_block[:, None] * g + col_block[None, :]
    counts = np.bincount(cell.ravel(), minlength=g * g).astype(np.float64)
    sums = np.zeros((g * g, 3))
    np.add.at(sums, cell.ravel(), img.reshape(h * w, 3))
    occupied = counts > 0
    means = np.zeros_like(sums)
    means[occupied] = sums[occupied] / counts[occupied, None]

    vec = np.zeros(d)
    vec[: 3 * g * g] = means.ravel()
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec
