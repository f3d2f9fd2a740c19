"""Seeded synthetic corpus generator for desk-scale benchmarks.

The generator builds a citation graph whose rooted 2-hop subgraphs
separate award winners from the rest, echoing the qualitative structure
reported for real award data, with controllable noise:

* Background papers live in communities. Each paper cites a window of
  its immediate predecessors in the same community, so any background
  root sees a small, dense, triangle-rich neighborhood: high density,
  high transitivity.
* Winner papers cite one settled paper in each of several distinct
  communities. Their 2-hop neighborhoods are wide trees: many nodes,
  no cross edges, density near 1/n and transitivity zero.
* Winner embeddings concentrate in a tight cosine band around a hidden
  unit vector; everyone else gets an isotropic random direction.

Noise enters as two independent per-paper flips: with probability
`topo_flip` a winner is generated with the background citation recipe
(and placed inside a community, where later windows cite it, which also
populates the finite distance strata) while a matching share of
background papers cite across communities; with probability `text_flip`
the embedding recipe is swapped. Independent flips keep either feature
family from being sufficient on its own, so mixing them measurably
helps, as in the reference results.

Everything is driven by one integer seed. Paper ids are consecutive
integers starting at 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .textsim import EmbeddingStore, write_embeddings


@dataclass
class SynthConfig:
    n_papers: int = 5000
    n_winners: int = 400
    n_communities: int = 40
    seed: int = 7
    dim: int = 32
    topo_flip: float = 0.06
    text_flip: float = 0.06
    text_noise: float = 0.12     # winner-band width around the hidden center
    window_min: int = 4          # per-community citation window bounds
    window_max: int = 10
    refs_min: int = 6            # winner cross-community reference bounds
    refs_max: int = 12
    year_min: int = 2000
    year_max: int = 2014

    def validate(self) -> None:
        if self.n_winners >= self.n_papers // 2:
            raise ValueError("winners must be a minority of the corpus")
        if self.n_communities < self.refs_max:
            raise ValueError("need at least refs_max communities for winner roots")
        if not (0 <= self.topo_flip < 0.5 and 0 <= self.text_flip < 0.5):
            raise ValueError("flip probabilities must lie in [0, 0.5)")
        if self.window_min < 2 or self.window_max < self.window_min:
            raise ValueError("bad window bounds")
        if self.refs_min < 2 or self.refs_max < self.refs_min:
            raise ValueError("bad refs bounds")


@dataclass
class SynthPaper:
    id: int
    title: str
    abstract: str
    year: int
    references: list[int]
    award: bool
    topo_style: str  # "community" or "cross", for diagnostics only
    text_style: str  # "band" or "spread"


@dataclass
class SynthCorpus:
    papers: list[SynthPaper]
    embeddings: EmbeddingStore
    config: SynthConfig
    text_center: np.ndarray = field(repr=False, default=None)

    def records(self) -> list[dict]:
        """Corpus rows in the ingestion format (no diagnostic fields)."""
        return [{"id": p.id, "title": p.title, "abstract": p.abstract,
                 "year": p.year, "references": p.references, "award": p.award}
                for p in self.papers]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _band_vector(rng, center: np.ndarray, noise: float) -> np.ndarray:
    return _unit(center + noise * rng.standard_normal(center.size))


def _spread_vector(rng, dim: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
        if n > 1e-9:
            return v / n


def generate(config: SynthConfig) -> SynthCorpus:
    config.validate()
    rng = np.random.default_rng(config.seed)

    n_flipped_winners = int(np.round(config.n_winners * config.topo_flip))
    n_clean_winners = config.n_winners - n_flipped_winners
    n_community_papers = config.n_papers - n_clean_winners

    # Community layout: sizes as even as possible, one window width each.
    base = n_community_papers // config.n_communities
    sizes = np.full(config.n_communities, base, dtype=np.int64)
    sizes[: n_community_papers - base * config.n_communities] += 1
    windows = rng.integers(config.window_min, config.window_max + 1,
                           config.n_communities)

    # First pass: positions, ids, years. Ids are assigned community by
    # community; years grow with the position inside each community.
    next_id = 1
    members: list[list[int]] = []        # community -> ordered paper ids
    position: dict[int, int] = {}
    community_of: dict[int, int] = {}
    year_of: dict[int, int] = {}
    span = config.year_max - config.year_min
    for c in range(config.n_communities):
        ids = list(range(next_id, next_id + int(sizes[c])))
        next_id += int(sizes[c])
        members.append(ids)
        for p, pid in enumerate(ids):
            position[pid] = p
            community_of[pid] = c
            year_of[pid] = config.year_min + int(span * p / max(len(ids) - 1, 1))

    # Flipped winners sit inside communities at settled positions so that
    # later windows cite them: the finite distance strata come from here.
    slot_pool = [pid for c in range(config.n_communities)
                 for pid in members[c]
                 if int(windows[c]) <= position[pid] <= len(members[c]) - int(windows[c]) - 2]
    flipped_winner_ids = set(
        int(pid) for pid in rng.choice(np.array(sorted(slot_pool)),
                                       size=n_flipped_winners, replace=False))

    def settled_pick(c: int, max_year: int | None) -> int | None:
        w = int(windows[c])
        pool = members[c][w: len(members[c]) - 1]
        if max_year is not None:
            pool = [pid for pid in pool if year_of[pid] < max_year]
        if not pool:
            return None
        return int(pool[rng.integers(0, len(pool))])

    def cross_refs(exclude_c: int | None, max_year: int | None) -> list[int]:
        r = int(rng.integers(config.refs_min, config.refs_max + 1))
        candidates = [c for c in range(config.n_communities) if c != exclude_c]
        picks: list[int] = []
        for c in rng.permutation(candidates):
            pid = settled_pick(int(c), max_year)
            if pid is not None:
                picks.append(pid)
            if len(picks) == r:
                break
        return picks

    papers: list[SynthPaper] = []
    for c in range(config.n_communities):
        w = int(windows[c])
        for p, pid in enumerate(members[c]):
            if pid in flipped_winner_ids or rng.random() >= config.topo_flip:
                refs = list(members[c][max(p - w, 0): p])[::-1]
                style = "community"
            else:
                refs = cross_refs(c, year_of[pid])
                style = "cross"
            papers.append(SynthPaper(
                id=pid, title=f"Study {pid} in area {c}",
                abstract=f"Results of study {pid} within research area {c}.",
                year=year_of[pid], references=refs,
                award=pid in flipped_winner_ids, topo_style=style,
                text_style="spread"))

    for _ in range(n_clean_winners):
        pid = next_id
        next_id += 1
        year = int(rng.integers(config.year_max - 2, config.year_max + 1))
        papers.append(SynthPaper(
            id=pid, title=f"Study {pid} across areas",
            abstract=f"Results of study {pid} spanning several research areas.",
            year=year, references=cross_refs(None, year),
            award=True, topo_style="cross", text_style="spread"))

    # Embeddings: winners sit in the band, the rest spread out, with an
    # independent flip swapping the recipes.
    center = _unit(rng.standard_normal(config.dim))
    vectors: dict[int, np.ndarray] = {}
    for paper in papers:
        band = paper.award
        if rng.random() < config.text_flip:
            band = not band
        paper.text_style = "band" if band else "spread"
        if band:
            vectors[paper.id] = _band_vector(rng, center, config.text_noise)
        else:
            vectors[paper.id] = _spread_vector(rng, config.dim)

    store = EmbeddingStore(
        dim=config.dim,
        vectors={pid: v.astype(np.float32) for pid, v in vectors.items()})
    papers.sort(key=lambda p: p.id)
    return SynthCorpus(papers=papers, embeddings=store, config=config,
                       text_center=center)


def write_corpus_jsonl(path: str | Path, corpus: SynthCorpus) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records():
            fh.write(json.dumps(rec) + "\n")


def write_outputs(corpus: SynthCorpus, corpus_path: str | Path,
                  embeddings_path: str | Path) -> None:
    write_corpus_jsonl(corpus_path, corpus)
    write_embeddings(embeddings_path, corpus.embeddings)
