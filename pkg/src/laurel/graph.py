"""Citation graph: compact immutable representation and rooted subgraphs.

The graph is directed and unweighted (an edge u -> w means paper u cites
paper w), simple by construction: self-citations and duplicate references
are removed at ingestion, references to papers outside the corpus are
dropped with a counted warning. Forward and reverse adjacency are stored
in CSR form with per-row sorted neighbor arrays, so the whole structure
is a handful of flat numpy arrays and is safe to share across forked
worker processes.

Snapshot file layout (all integers little-endian):

    magic       4 bytes   b"CGR1"
    n           u64       node count
    m           u64       edge count
    offsets     (n+1) u64 forward CSR row offsets
    neighbors   m u32     forward targets, sorted within each row
    roffsets    (n+1) u64 reverse CSR row offsets
    rneighbors  m u32     reverse targets, sorted within each row
    labels      ceil(n/8) bytes, award bitset, LSB-first within a byte
    years       n i32
    id table    per node: u32 byte length + UTF-8 external id
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import PaperRecord, intern_id

logger = logging.getLogger(__name__)

MAGIC = b"CGR1"

# Stratum key for nodes with no directed path to any award winner.
UNREACHABLE = -1

# Root index used by subgraphs built for a not-yet-published paper.
VIRTUAL_ROOT = -1


class SnapshotError(ValueError):
    """Malformed or truncated graph snapshot file."""


class CitationGraph:
    """Immutable directed citation graph over dense node indices."""

    __slots__ = (
        "n", "m", "offsets", "neighbors", "roffsets", "rneighbors",
        "labels", "years", "raw_ids", "ids", "index_of", "dangling_refs",
    )

    def __init__(self, n, m, offsets, neighbors, roffsets, rneighbors,
                 labels, years, raw_ids, dangling_refs=0):
        self.n = int(n)
        self.m = int(m)
        self.offsets = offsets
        self.neighbors = neighbors
        self.roffsets = roffsets
        self.rneighbors = rneighbors
        self.labels = labels
        self.years = years
        self.raw_ids = raw_ids
        self.ids = np.array([intern_id(r) for r in raw_ids], dtype=np.uint64)
        self.index_of = {int(i): k for k, i in enumerate(self.ids)}
        self.dangling_refs = int(dangling_refs)
        for arr in (self.offsets, self.neighbors, self.roffsets,
                    self.rneighbors, self.labels, self.years, self.ids):
            arr.setflags(write=False)

    def out_neighbors(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def in_neighbors(self, v: int) -> np.ndarray:
        return self.rneighbors[self.roffsets[v]:self.roffsets[v + 1]]

    @property
    def winners(self) -> np.ndarray:
        return np.flatnonzero(self.labels)


def build_graph(records: list[PaperRecord]) -> CitationGraph:
    """Assemble the CSR graph from corpus records.

    Dense indices follow record order. An edge (i, j) exists iff record i
    lists record j's id; references to ids absent from the corpus are
    dropped and counted in `dangling_refs`.
    """
    if not records:
        raise ValueError("cannot build a graph from an empty record list")
    n = len(records)
    if n >= 2**32:
        raise ValueError("node count exceeds the u32 neighbor index range")
    index_of = {rec.id: k for k, rec in enumerate(records)}

    degrees = np.zeros(n, dtype=np.int64)
    dangling = 0
    resolved: list[np.ndarray] = []
    for k, rec in enumerate(records):
        row = [index_of[r] for r in rec.references if r in index_of]
        dangling += len(rec.references) - len(row)
        row_arr = np.sort(np.asarray(row, dtype=np.uint32))
        resolved.append(row_arr)
        degrees[k] = len(row)

    offsets = np.zeros(n + 1, dtype=np.uint64)
    offsets[1:] = np.cumsum(degrees)
    m = int(offsets[-1])
    neighbors = (np.concatenate(resolved) if m else np.empty(0, dtype=np.uint32))

    # Transpose: a stable sort of (target, source) pairs by target keeps
    # every reverse row sorted by source.
    sources = np.repeat(np.arange(n, dtype=np.uint32), degrees)
    rneighbors = sources[np.argsort(neighbors, kind="stable")]
    in_deg = (np.bincount(neighbors, minlength=n) if m else np.zeros(n, dtype=np.int64))
    roffsets = np.zeros(n + 1, dtype=np.uint64)
    roffsets[1:] = np.cumsum(in_deg)

    labels = np.array([rec.award for rec in records], dtype=bool)
    years = np.array([rec.year for rec in records], dtype=np.int32)
    raw_ids = [rec.raw_id for rec in records]
    if dangling:
        logger.warning("dropped %d dangling reference(s) to ids outside the corpus", dangling)
    return CitationGraph(n, m, offsets, neighbors, roffsets, rneighbors,
                         labels, years, raw_ids, dangling_refs=dangling)


def save_snapshot(graph: CitationGraph, path: str | Path) -> None:
    """Write the binary snapshot (layout in the module docstring)."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        np.array([graph.n, graph.m], dtype="<u8").tofile(fh)
        graph.offsets.astype("<u8").tofile(fh)
        graph.neighbors.astype("<u4").tofile(fh)
        graph.roffsets.astype("<u8").tofile(fh)
        graph.rneighbors.astype("<u4").tofile(fh)
        np.packbits(graph.labels, bitorder="little").tofile(fh)
        graph.years.astype("<i4").tofile(fh)
        for raw in graph.raw_ids:
            blob = raw.encode("utf-8")
            np.array([len(blob)], dtype="<u4").tofile(fh)
            fh.write(blob)


def load_snapshot(path: str | Path) -> CitationGraph:
    """Read a snapshot written by save_snapshot. Raises SnapshotError."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise SnapshotError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")

        def take(dtype, count):
            arr = np.fromfile(fh, dtype=dtype, count=count)
            if arr.size != count:
                raise SnapshotError(f"{path}: truncated file")
            return arr

        header = take("<u8", 2)
        n, m = int(header[0]), int(header[1])
        offsets = take("<u8", n + 1)
        neighbors = take("<u4", m)
        roffsets = take("<u8", n + 1)
        rneighbors = take("<u4", m)
        if int(offsets[-1]) != m or int(roffsets[-1]) != m:
            raise SnapshotError(f"{path}: offset arrays disagree with edge count")
        bits = take("u1", (n + 7) // 8)
        labels = np.unpackbits(bits, bitorder="little")[:n].astype(bool)
        years = take("<i4", n)
        raw_ids = []
        for _ in range(n):
            ln = int(take("<u4", 1)[0])
            blob = fh.read(ln)
            if len(blob) != ln:
                raise SnapshotError(f"{path}: truncated id table")
            raw_ids.append(blob.decode("utf-8"))
    return CitationGraph(n, m, offsets, neighbors, roffsets, rneighbors,
                         labels, years, raw_ids)


@dataclass
class Subgraph:
    """Rooted depth-bounded subgraph.

    `dist` maps node index to BFS depth from the root along citation
    edges; `edges` holds every edge that lies on some walk of at most
    `delta` steps starting at the root, i.e. (u, w) with dist[u] <= delta-1
    (the induced variant additionally keeps frontier-to-frontier edges).
    The root of a subgraph built for an unpublished paper is VIRTUAL_ROOT.
    """

    root: int
    delta: int
    dist: dict[int, int]
    edges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.dist)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def nodes(self):
        return self.dist.keys()


def extract_subgraph(graph: CitationGraph, root: int, delta: int,
                     induced: bool = False) -> Subgraph:
    """BFS out to `delta` citation hops from `root`.

    With induced=False (the default) the edge set contains exactly the
    edges walkable from the root in at most `delta` steps; induced=True
    keeps every edge between two kept nodes, which adds edges whose
    source sits on the depth-`delta` frontier.
    """
    if not 0 <= root < graph.n:
        raise ValueError(f"root index {root} outside [0, {graph.n})")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    dist = {root: 0}
    frontier = [root]
    for depth in range(1, delta + 1):
        nxt = []
        for u in frontier:
            for w in graph.out_neighbors(u):
                w = int(w)
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
    edges = []
    for u, d in dist.items():
        if d <= delta - 1:
            edges.extend((u, int(w)) for w in graph.out_neighbors(u))
        elif induced:
            edges.extend((u, int(w)) for w in graph.out_neighbors(u) if int(w) in dist)
    return Subgraph(root=root, delta=delta, dist=dist, edges=edges)


def extract_virtual_subgraph(graph: CitationGraph, refs: list[int], delta: int,
                             induced: bool = False) -> Subgraph:
    """Subgraph of a not-yet-published paper that cites `refs`.

    The paper itself is represented by the synthetic node VIRTUAL_ROOT at
    depth 0; its reference list forms depth 1 and the BFS continues into
    the existing graph.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    for r in refs:
        if not 0 <= r < graph.n:
            raise ValueError(f"reference index {r} outside [0, {graph.n})")
    dist: dict[int, int] = {VIRTUAL_ROOT: 0}
    edges: list[tuple[int, int]] = []
    frontier: list[int] = []
    if delta >= 1:
        for r in dict.fromkeys(refs):
            dist[r] = 1
            frontier.append(r)
            edges.append((VIRTUAL_ROOT, r))
    for depth in range(2, delta + 1):
        nxt = []
        for u in frontier:
            for w in graph.out_neighbors(u):
                w = int(w)
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
    for u, d in dist.items():
        if u == VIRTUAL_ROOT:
            continue
        if d <= delta - 1:
            edges.extend((u, int(w)) for w in graph.out_neighbors(u))
        elif induced:
            edges.extend((u, int(w)) for w in graph.out_neighbors(u) if int(w) in dist)
    return Subgraph(root=VIRTUAL_ROOT, delta=delta, dist=dist, edges=edges)


@dataclass
class DistanceStrata:
    """Per-node directed distance to the nearest award winner.

    `dist[v]` is the shortest-path length from v along citation edges to
    its closest winner (0 iff v is a winner, UNREACHABLE if no winner can
    be reached). `strata[a]` holds the non-winner nodes at distance a;
    unreachable non-winners sit under the UNREACHABLE key. Winners belong
    to no stratum.
    """

    dist: np.ndarray
    strata: dict[int, np.ndarray]


def distances_to_winners(graph: CitationGraph) -> DistanceStrata:
    """Multi-source BFS on the reverse graph seeded at every winner.

    A reverse-graph BFS level d reaches exactly the nodes whose forward
    (citation-direction) distance to the nearest winner is d.
    """
    dist = np.full(graph.n, UNREACHABLE, dtype=np.int32)
    frontier = graph.winners.astype(np.int64)
    dist[frontier] = 0
    roff = graph.roffsets.astype(np.int64)
    depth = 0
    while frontier.size:
        starts = roff[frontier]
        counts = roff[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        # gather all reverse neighbors of the frontier in one shot
        flat = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        flat += np.arange(total)
        nxt = graph.rneighbors[flat].astype(np.int64)
        nxt = np.unique(nxt[dist[nxt] == UNREACHABLE])
        if nxt.size == 0:
            break
        depth += 1
        dist[nxt] = depth
        frontier = nxt

    nonwinner = ~graph.labels
    strata: dict[int, np.ndarray] = {}
    for a in np.unique(dist[nonwinner]):
        members = np.flatnonzero(nonwinner & (dist == a))
        strata[int(a)] = members
    return DistanceStrata(dist=dist, strata=strata)
