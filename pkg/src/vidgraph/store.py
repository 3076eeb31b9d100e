"""Bit-exact single-file persistence for indexes and per-video vectors.

Index container layout (all integers little-endian, fixed width; see
docs/index_format.md for the byte-by-byte description):

    offset  size  field
    0       8     magic  b"VGIDX001"  (5-byte family tag + 3-byte version)
    8       4     u32    dim
    12      4     u32    k_clusters
    16      4     f32    alpha
    20      8     u64    seed
    28      8     u64    frame_count n
    36      4     u32    video_count
    40      64    8xu64  section offsets, strictly increasing:
                  [0] video table   UTF-8 JSON {"videos": [...]}
                  [1] frame table   n x (u64 frame_id, u64 video_id)
                  [2] label table   n x u32 cluster label
                  [3] cluster means k x dim f32
                  [4] augmented     k x dim f32
                  [5] frame vectors n x dim f32
                  [6] edge list     u64 count, then (u32 a, u32 b, u64 w) each
                  [7] end of file

Per-video vector files use magic b"VGVEC001" with a 60-byte header (dim,
per_video_k, alpha, seed, video_count, then offsets for the JSON id table,
the vector block, and end). Files are written to a temp path and renamed,
so a crash never leaves a half-written container behind.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .corpus import VideoRecord
from .retrieve import IndexParams, RetrievalIndex, VideoTemporalVectors
from .tgraph import AugmentedEmbeddings, TemporalGraph

INDEX_MAGIC = b"VGIDX001"
VECTORS_MAGIC = b"VGVEC001"
_FAMILY = 5  # bytes of the magic that identify the file family
_INDEX_HEADER = struct.Struct("<8sIIfQQI8Q")
_VEC_HEADER = struct.Struct("<8sIIfQQ3Q")


class StoreError(Exception):
    """Base class for persistence failures."""


class BadMagicError(StoreError):
    pass


class VersionMismatchError(StoreError):
    pass


class TruncatedFileError(StoreError):
    pass


class OffsetError(StoreError):
    pass


def _check_magic(found: bytes, expected: bytes) -> None:
    if found[:_FAMILY] != expected[:_FAMILY]:
        raise BadMagicError(
            f"bad magic: expected {expected!r}, found {found!r}"
        )
    if found != expected:
        raise VersionMismatchError(
            f"unsupported version {found[_FAMILY:]!r} (expected "
            f"{expected[_FAMILY:]!r})"
        )


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def save_index(index: RetrievalIndex, path: str | Path) -> int:
    """Serialize an index; returns the byte count written."""
    path = Path(path)
    n = index.frame_count
    k = index.k_clusters
    d = index.dim

    if index.frame_ids.min(initial=0) < 0 or index.frame_videos.min(initial=0) < 0:
        raise ValueError("frame and video ids must be non-negative to persist")

    meta = json.dumps(
        {
            "videos": [
                {
                    "video_id": v.video_id,
                    "category": v.category,
                    "frame_count": v.frame_count,
                    "source_uri": v.source_uri,
                }
                for v in index.videos
            ]
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")

    frame_table = np.empty((n, 2), dtype="<u8")
    frame_table[:, 0] = index.frame_ids
    frame_table[:, 1] = index.frame_videos
    labels = index.frame_labels.astype("<u4")
    means = np.ascontiguousarray(index.cluster_means, dtype="<f4")
    augmented = np.ascontiguousarray(index.cluster_vectors.vectors, dtype="<f4")
    frames = np.ascontiguousarray(index.frame_vectors, dtype="<f4")

    edge_items = sorted(index.graph.edges.items())
    edges = bytearray(struct.pack("<Q", len(edge_items)))
    for (a, b), w in edge_items:
        edges += struct.pack("<IIQ", a, b, w)

    sections = [
        meta,
        frame_table.tobytes(),
        labels.tobytes(),
        means.tobytes(),
        augmented.tobytes(),
        frames.tobytes(),
        bytes(edges),
    ]
    offsets = []
    pos = _INDEX_HEADER.size
    for s in sections:
        offsets.append(pos)
        pos += len(s)
    offsets.append(pos)  # end of file

    header = _INDEX_HEADER.pack(
        INDEX_MAGIC,
        d,
        k,
        index.params.alpha,
        index.params.seed,
        n,
        len(index.videos),
        *offsets,
    )
    payload = header + b"".join(sections)
    _atomic_write(path, payload)
    return len(payload)


def _read_header(data: bytes, fmt: struct.Struct, magic: bytes, path: Path):
    if len(data) < fmt.size:
        raise TruncatedFileError(
            f"{path}: file is {len(data)} bytes, header needs {fmt.size}"
        )
    fields = fmt.unpack_from(data, 0)
    _check_magic(fields[0], magic)
    return fields


def _check_offsets(
    offsets: tuple[int, ...], header_size: int, size: int, path: Path
) -> None:
    if offsets[0] != header_size:
        raise OffsetError(
            f"{path}: first section offset {offsets[0]} != header size {header_size}"
        )
    for a, b in zip(offsets, offsets[1:]):
        if b <= a:
            raise OffsetError(f"{path}: section offsets not strictly increasing")
    end = offsets[-1]
    if end > size:
        raise TruncatedFileError(
            f"{path}: file truncated, expected {end} bytes, found {size}"
        )
    if end < size:
        raise OffsetError(
            f"{path}: {size - end} trailing bytes beyond declared end {end}"
        )


def _expect_section(
    offsets: tuple[int, ...], i: int, nbytes: int, what: str, path: Path
) -> None:
    have = offsets[i + 1] - offsets[i]
    if have != nbytes:
        raise OffsetError(
            f"{path}: section {what} holds {have} bytes, expected {nbytes}"
        )


def load_index(path: str | Path) -> RetrievalIndex:
    """Load an index; every field compares bit-exactly with what was saved."""
    path = Path(path)
    data = path.read_bytes()
    fields = _read_header(data, _INDEX_HEADER, INDEX_MAGIC, path)
    _, d, k, alpha, seed, n, video_count = fields[:7]
    offsets = fields[7:]
    _check_offsets(offsets, _INDEX_HEADER.size, len(data), path)

    meta = json.loads(data[offsets[0] : offsets[1]].decode("utf-8"))
    videos = [
        VideoRecord(
            video_id=int(v["video_id"]),
            category=v["category"],
            frame_count=int(v["frame_count"]),
            source_uri=v["source_uri"],
        )
        for v in meta["videos"]
    ]
    if len(videos) != video_count:
        raise OffsetError(
            f"{path}: header declares {video_count} videos, table has {len(videos)}"
        )

    _expect_section(offsets, 1, 16 * n, "frame table", path)
    frame_table = np.frombuffer(
        data, dtype="<u8", count=2 * n, offset=offsets[1]
    ).reshape(n, 2)
    _expect_section(offsets, 2, 4 * n, "label table", path)
    labels = np.frombuffer(data, dtype="<u4", count=n, offset=offsets[2])
    _expect_section(offsets, 3, 4 * k * d, "cluster means", path)
    means = np.frombuffer(data, dtype="<f4", count=k * d, offset=offsets[3]).reshape(
        k, d
    )
    _expect_section(offsets, 4, 4 * k * d, "augmented vectors", path)
    augmented = np.frombuffer(
        data, dtype="<f4", count=k * d, offset=offsets[4]
    ).reshape(k, d)
    _expect_section(offsets, 5, 4 * n * d, "frame vectors", path)
    frames = np.frombuffer(
        data, dtype="<f4", count=n * d, offset=offsets[5]
    ).reshape(n, d)

    edge_bytes = offsets[7] - offsets[6]
    if edge_bytes < 8:
        raise OffsetError(f"{path}: edge section too small ({edge_bytes} bytes)")
    (n_edges,) = struct.unpack_from("<Q", data, offsets[6])
    if edge_bytes != 8 + 16 * n_edges:
        raise OffsetError(
            f"{path}: edge section holds {edge_bytes} bytes, "
            f"expected {8 + 16 * n_edges} for {n_edges} edges"
        )
    edges: dict[tuple[int, int], int] = {}
    pos = offsets[6] + 8
    for _ in range(n_edges):
        a, b, w = struct.unpack_from("<IIQ", data, pos)
        edges[(a, b)] = w
        pos += 16

    alpha = float(alpha)
    return RetrievalIndex(
        dim=int(d),
        params=IndexParams(k_clusters=int(k), alpha=alpha, seed=int(seed)),
        cluster_means=means.copy(),
        cluster_vectors=AugmentedEmbeddings(alpha=alpha, vectors=augmented.copy()),
        graph=TemporalGraph(n_nodes=int(k), edges=edges),
        frame_ids=frame_table[:, 0].astype(np.int64),
        frame_videos=frame_table[:, 1].astype(np.int64),
        frame_labels=labels.astype(np.int32),
        videos=videos,
        frame_vectors=frames.copy(),
    )


def save_video_vectors(vectors: VideoTemporalVectors, path: str | Path) -> int:
    """Serialize per-video temporal vectors; returns the byte count."""
    path = Path(path)
    video_ids = vectors.video_ids()
    meta = json.dumps({"video_ids": video_ids}, separators=(",", ":")).encode("utf-8")
    block = np.concatenate(
        [np.ascontiguousarray(vectors.vectors[v], dtype="<f4") for v in video_ids]
    )
    sections = [meta, block.tobytes()]
    offsets = []
    pos = _VEC_HEADER.size
    for s in sections:
        offsets.append(pos)
        pos += len(s)
    offsets.append(pos)
    header = _VEC_HEADER.pack(
        VECTORS_MAGIC,
        vectors.dim,
        vectors.per_video_k,
        vectors.alpha,
        vectors.seed,
        len(video_ids),
        *offsets,
    )
    payload = header + b"".join(sections)
    _atomic_write(path, payload)
    return len(payload)


def load_video_vectors(path: str | Path) -> VideoTemporalVectors:
    path = Path(path)
    data = path.read_bytes()
    fields = _read_header(data, _VEC_HEADER, VECTORS_MAGIC, path)
    _, d, per_video_k, alpha, seed, video_count = fields[:6]
    offsets = fields[6:]
    _check_offsets(offsets, _VEC_HEADER.size, len(data), path)

    meta = json.loads(data[offsets[0] : offsets[1]].decode("utf-8"))
    video_ids = [int(v) for v in meta["video_ids"]]
    if len(video_ids) != video_count:
        raise OffsetError(
            f"{path}: header declares {video_count} videos, table has "
            f"{len(video_ids)}"
        )
    rows = video_count * per_video_k
    _expect_section(offsets, 1, 4 * rows * d, "vector block", path)
    block = np.frombuffer(
        data, dtype="<f4", count=rows * d, offset=offsets[1]
    ).reshape(video_count, per_video_k, d)
    return VideoTemporalVectors(
        dim=int(d),
        per_video_k=int(per_video_k),
        alpha=float(alpha),
        seed=int(seed),
        vectors={vid: block[i].copy() for i, vid in enumerate(video_ids)},
    )
