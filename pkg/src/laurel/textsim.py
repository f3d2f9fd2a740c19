"""Embedding storage and textual-similarity scores.

Embeddings arrive precomputed (the encoder is a separate sidecar). Two
on-disk formats carry them:

* binary, little-endian:

      magic   4 bytes  b"EMB1"
      dim     u32
      count   u64
      record: paper id u64, then dim float32 values   (count times)

* JSON lines: {"id": <string or integer>, "vec": [floats]} per line,
  ids interned with the corpus rule.

Zero vectors are rejected at load time because cosine similarity is
undefined for them.

Scores over a set of vectors X (the embeddings of the papers a root
cites, root excluded):

* phi: average cosine similarity over all ordered pairs i != j,
  sum(cos(x_i, x_j)) / (n * (n - 1)); undefined for n < 2.
* theta: n_c / n where n_c counts DBSCAN clusters plus noise points
  (each noise point is a singleton cluster), so theta is 1/n when all
  points agree and 1.0 when nothing clusters.

DBSCAN runs on cosine distance 1 - cos(x, y); neighborhoods are closed
balls (distance <= eps, the point itself included) and border points go
to the first cluster that discovers them, so labels are deterministic
for a given input order.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import intern_id
from .graph import CitationGraph, extract_subgraph

EMB_MAGIC = b"EMB1"

NOISE = -1

PHI_THETA_CSV_HEADER = ("paper_id", "label", "phi", "theta")


class EmbeddingFormatError(ValueError):
    """Malformed embedding file."""


@dataclass
class EmbeddingStore:
    """Fixed-dimension float32 vectors keyed by interned paper id."""

    dim: int
    vectors: dict[int, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, paper_id: int) -> np.ndarray | None:
        return self.vectors.get(int(paper_id))


def _check_vector(vec: np.ndarray, dim: int, who: str) -> np.ndarray:
    if vec.size != dim:
        raise EmbeddingFormatError(f"{who}: expected {dim} floats, found {vec.size}")
    if not np.isfinite(vec).all():
        raise EmbeddingFormatError(f"{who}: non-finite component")
    if not np.any(vec):
        raise EmbeddingFormatError(f"{who}: zero vector (cosine undefined)")
    return vec


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Read either embedding format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == EMB_MAGIC:
            return _load_binary(fh, path)
    return _load_jsonl(path)


def _load_binary(fh, path) -> EmbeddingStore:
    header = fh.read(12)
    if len(header) != 12:
        raise EmbeddingFormatError(f"{path}: truncated header")
    dim, count = struct.unpack("<IQ", header)
    if dim == 0:
        raise EmbeddingFormatError(f"{path}: zero dimension")
    vectors: dict[int, np.ndarray] = {}
    record = np.dtype([("id", "<u8"), ("vec", "<f4", (dim,))])
    data = np.fromfile(fh, dtype=record, count=count)
    if data.size != count:
        raise EmbeddingFormatError(
            f"{path}: truncated after record {data.size} of {count}")
    if fh.read(1):
        raise EmbeddingFormatError(f"{path}: trailing bytes after {count} records")
    for i in range(count):
        pid = int(data["id"][i])
        vec = _check_vector(np.array(data["vec"][i]), dim, f"{path}: record id {pid}")
        vectors[pid] = vec
    return EmbeddingStore(dim=int(dim), vectors=vectors)


def _load_jsonl(path) -> EmbeddingStore:
    vectors: dict[int, np.ndarray] = {}
    dim = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: not JSON ({exc})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected id/vec object")
            pid = intern_id(obj["id"])
            vec = np.asarray(obj["vec"], dtype=np.float32)
            if dim == 0:
                dim = vec.size
                if dim == 0:
                    raise EmbeddingFormatError(f"{path}:{lineno}: empty vector")
            vectors[pid] = _check_vector(vec, dim, f"{path}:{lineno}: id {obj['id']!r}")
    if not vectors:
        raise EmbeddingFormatError(f"{path}: no embedding records")
    return EmbeddingStore(dim=dim, vectors=vectors)


def write_embeddings(path: str | Path, store: EmbeddingStore) -> None:
    """Write the binary format; records in ascending id order."""
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<IQ", store.dim, len(store.vectors)))
        for pid in sorted(store.vectors):
            fh.write(struct.pack("<Q", pid))
            fh.write(np.ascontiguousarray(store.vectors[pid], dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------

def cosine_similarity(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.dot(x, y) / (nx * ny))


def _cosine_matrix(vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero vector in input")
    return (X @ X.T) / np.outer(norms, norms)


def phi_score(vectors) -> float:
    """Average pairwise cosine similarity; requires at least two vectors."""
    X = np.asarray(vectors, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValueError("phi score needs at least two vectors")
    cos = _cosine_matrix(X)
    np.fill_diagonal(cos, 0.0)
    return float(cos.sum() / (n * (n - 1)))


@dataclass
class ClusterLabels:
    """DBSCAN output: labels[i] is a dense cluster id or NOISE (-1)."""

    labels: np.ndarray
    n_clusters: int


def dbscan(vectors, eps: float, min_pts: int) -> ClusterLabels:
    """Density clustering on cosine distance."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    dist = 1.0 - _cosine_matrix(vectors)
    n = dist.shape[0]
    neighborhoods = [np.flatnonzero(dist[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighborhoods])

    UNSEEN = -2
    labels = np.full(n, UNSEEN, dtype=np.int32)
    cluster = 0
    for i in range(n):
        if labels[i] != UNSEEN:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = list(neighborhoods[i])
        while queue:
            j = queue.pop(0)
            if labels[j] == NOISE:
                labels[j] = cluster  # border point, first discoverer keeps it
            if labels[j] != UNSEEN:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(neighborhoods[j])
        cluster += 1
    return ClusterLabels(labels=labels, n_clusters=cluster)


def theta_score(vectors, eps: float, min_pts: int) -> float:
    """Cluster-spread score: clusters plus noise singletons, over n."""
    n = len(vectors)
    if n < 1:
        raise ValueError("theta score needs at least one vector")
    result = dbscan(vectors, eps, min_pts)
    n_c = result.n_clusters + int((result.labels == NOISE).sum())
    return n_c / n


# ---------------------------------------------------------------------------
# Per-root scores over the citation graph
# ---------------------------------------------------------------------------

@dataclass
class PaperScores:
    raw_id: str
    label: int
    phi: float | None
    theta: float | None
    n_embedded: int


def _root_scores(graph: CitationGraph, store: EmbeddingStore, root: int,
                 delta: int, eps: float, min_pts: int,
                 refs_only: bool, induced: bool) -> PaperScores:
    if refs_only:
        members = [int(w) for w in graph.out_neighbors(root)]
    else:
        sub = extract_subgraph(graph, root, delta, induced)
        members = [v for v in sub.nodes if v != root]
    vecs = []
    for v in members:
        vec = store.get(int(graph.ids[v]))
        if vec is not None:
            vecs.append(vec)
    phi = phi_score(vecs) if len(vecs) >= 2 else None
    theta = theta_score(vecs, eps, min_pts) if len(vecs) >= 1 else None
    return PaperScores(raw_id=graph.raw_ids[root], label=int(graph.labels[root]),
                       phi=phi, theta=theta, n_embedded=len(vecs))


_SCORE_GRAPH: CitationGraph | None = None
_SCORE_STORE: EmbeddingStore | None = None
_SCORE_ARGS: tuple | None = None


def _score_worker(roots: list[int]) -> list[tuple[int, PaperScores]]:
    delta, eps, min_pts, refs_only, induced = _SCORE_ARGS
    return [(r, _root_scores(_SCORE_GRAPH, _SCORE_STORE, r, delta, eps,
                             min_pts, refs_only, induced))
            for r in roots]


def scores_for_roots(graph: CitationGraph, store: EmbeddingStore, roots,
                     delta: int, eps: float, min_pts: int,
                     refs_only: bool = False, induced: bool = False,
                     jobs: int = 1) -> list[PaperScores]:
    """phi/theta for each root, in the order given; None where undefined."""
    roots = [int(r) for r in roots]
    if jobs <= 1 or len(roots) < 2 * jobs:
        return [_root_scores(graph, store, r, delta, eps, min_pts, refs_only, induced)
                for r in roots]

    import multiprocessing as mp
    from concurrent.futures import ProcessPoolExecutor

    global _SCORE_GRAPH, _SCORE_STORE, _SCORE_ARGS
    _SCORE_GRAPH, _SCORE_STORE = graph, store
    _SCORE_ARGS = (delta, eps, min_pts, refs_only, induced)
    try:
        chunks = [roots[i::jobs * 4] for i in range(jobs * 4)]
        chunks = [c for c in chunks if c]
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            results = pool.map(_score_worker, chunks)
        by_root = {r: s for part in results for r, s in part}
    finally:
        _SCORE_GRAPH, _SCORE_STORE, _SCORE_ARGS = None, None, None
    return [by_root[r] for r in roots]


def write_phi_theta_csv(path: str | Path, scores: list[PaperScores]) -> None:
    """One row per scored paper; empty cells where a score is undefined."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PHI_THETA_CSV_HEADER)
        for s in scores:
            writer.writerow([
                s.raw_id,
                s.label,
                "" if s.phi is None else repr(s.phi),
                "" if s.theta is None else repr(s.theta),
            ])


def read_phi_theta_csv(path: str | Path) -> list[PaperScores]:
    out: list[PaperScores] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != PHI_THETA_CSV_HEADER:
            raise ValueError(f"{path}: unexpected phi/theta CSV header {header}")
        for row in reader:
            out.append(PaperScores(
                raw_id=row[0], label=int(row[1]),
                phi=float(row[2]) if row[2] else None,
                theta=float(row[3]) if row[3] else None,
                n_embedded=0,
            ))
    return out
