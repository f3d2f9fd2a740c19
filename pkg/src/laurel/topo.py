"""Topological features of a rooted citation subgraph.

Five features per subgraph, with n nodes and m directed edges:

    avg_out_degree        m / n
    diameter              max eccentricity on the undirected simple view
    density               m / (n * (n - 1)), directed convention
    transitivity          3 * triangles / connected triples, undirected
    avg_local_clustering  mean local clustering, undirected, degree < 2 -> 0

Directed diameter would be infinite for almost every citation subgraph
(pairs are rarely mutually reachable), so diameter and the clustering
measures use the undirected simple view, which is always connected for a
rooted subgraph. A subgraph with a single node (a paper whose references
are all outside the corpus) yields the all-zero vector.
"""

from __future__ import annotations

import csv
import os
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import CitationGraph, Subgraph, extract_subgraph

FEATURE_NAMES = ("avg_out_degree", "diameter", "density",
                 "transitivity", "avg_local_clustering")

FEATURE_CSV_HEADER = ("paper_id", "avg_out_degree", "diameter", "density",
                      "transitivity", "avg_local_clustering", "label", "year")


@dataclass
class TopoFeatures:
    avg_out_degree: float
    diameter: int
    density: float
    transitivity: float
    avg_local_clustering: float

    def as_array(self) -> np.ndarray:
        return np.array([self.avg_out_degree, self.diameter, self.density,
                         self.transitivity, self.avg_local_clustering])


def _undirected_adjacency(sub: Subgraph) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in sub.nodes}
    for u, w in sub.edges:
        if u != w:
            adj[u].add(w)
            adj[w].add(u)
    return adj


def _eccentricity(adj: dict[int, set[int]], source: int) -> int:
    seen = {source: 0}
    queue = deque([source])
    far = 0
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen[w] = seen[u] + 1
                far = max(far, seen[w])
                queue.append(w)
    if len(seen) != len(adj):
        raise ValueError("subgraph is not weakly connected")
    return far


def compute_topo_features(sub: Subgraph) -> TopoFeatures:
    """The five-feature vector of one subgraph."""
    n, m = sub.n, sub.m
    if n <= 1:
        return TopoFeatures(0.0, 0, 0.0, 0.0, 0.0)
    adj = _undirected_adjacency(sub)

    diameter = max(_eccentricity(adj, v) for v in adj)

    triples = 0
    closed = 0  # neighbor pairs that are themselves adjacent; 3 per triangle
    local_sum = 0.0
    for v, nbrs in adj.items():
        deg = len(nbrs)
        if deg < 2:
            continue
        pairs = deg * (deg - 1) // 2
        links = 0
        for a in nbrs:
            adj_a = adj[a]
            for b in nbrs:
                if a < b and b in adj_a:
                    links += 1
        triples += pairs
        closed += links
        local_sum += links / pairs

    return TopoFeatures(
        avg_out_degree=m / n,
        diameter=diameter,
        density=m / (n * (n - 1)),
        transitivity=(closed / triples) if triples else 0.0,  # closed == 3 * triangles
        avg_local_clustering=local_sum / n,
    )


# ---------------------------------------------------------------------------
# Per-root fan-out. The graph is immutable, so a fork-based pool shares it
# copy-on-write; workers receive only root chunks and return plain tuples.
# ---------------------------------------------------------------------------

_WORK_GRAPH: CitationGraph | None = None
_WORK_ARGS: tuple[int, bool] | None = None


def _feature_worker(roots: list[int]) -> list[tuple[int, TopoFeatures]]:
    delta, induced = _WORK_ARGS
    return [(r, compute_topo_features(extract_subgraph(_WORK_GRAPH, r, delta, induced)))
            for r in roots]


def resolve_jobs(jobs: int | None) -> int:
    """Worker count: LAUREL_JOBS env var wins, then the flag, then cores."""
    env = os.environ.get("LAUREL_JOBS")
    if env:
        return max(1, int(env))
    if jobs:
        return max(1, jobs)
    return os.cpu_count() or 1


def features_for_roots(graph: CitationGraph, roots, delta: int,
                       induced: bool = False, jobs: int = 1) -> list[TopoFeatures]:
    """Topological features for each root, in the order given."""
    roots = [int(r) for r in roots]
    if jobs <= 1 or len(roots) < 2 * jobs:
        return [compute_topo_features(extract_subgraph(graph, r, delta, induced))
                for r in roots]

    import multiprocessing as mp
    from concurrent.futures import ProcessPoolExecutor

    global _WORK_GRAPH, _WORK_ARGS
    _WORK_GRAPH, _WORK_ARGS = graph, (delta, induced)
    try:
        chunks = [roots[i::jobs * 4] for i in range(jobs * 4)]
        chunks = [c for c in chunks if c]
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            results = pool.map(_feature_worker, chunks)
        by_root = {r: f for part in results for r, f in part}
    finally:
        _WORK_GRAPH, _WORK_ARGS = None, None
    return [by_root[r] for r in roots]


def write_feature_csv(path: str | Path, rows) -> None:
    """rows: iterable of (raw_id, TopoFeatures, label, year)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_CSV_HEADER)
        for raw_id, feats, label, year in rows:
            writer.writerow([
                raw_id,
                repr(feats.avg_out_degree),
                feats.diameter,
                repr(feats.density),
                repr(feats.transitivity),
                repr(feats.avg_local_clustering),
                int(label),
                int(year),
            ])


@dataclass
class FeatureTable:
    ids: list[str]
    X: np.ndarray       # (n, 5) in FEATURE_NAMES order
    labels: np.ndarray  # (n,) int
    years: np.ndarray   # (n,) int


def read_feature_csv(path: str | Path) -> FeatureTable:
    ids: list[str] = []
    rows: list[list[float]] = []
    labels: list[int] = []
    years: list[int] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FEATURE_CSV_HEADER:
            raise ValueError(f"{path}: unexpected feature CSV header {header}")
        for row in reader:
            ids.append(row[0])
            rows.append([float(x) for x in row[1:6]])
            labels.append(int(row[6]))
            years.append(int(row[7]))
    X = np.array(rows) if rows else np.empty((0, 5))
    if not np.isfinite(X).all():
        raise ValueError(f"{path}: non-finite feature value")
    return FeatureTable(ids=ids, X=X,
                        labels=np.array(labels, dtype=int),
                        years=np.array(years, dtype=int))
