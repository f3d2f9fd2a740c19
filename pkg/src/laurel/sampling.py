"""Weighted stratified sampling of non-winner papers.

Non-winners are grouped into strata by their directed distance to the
closest award winner; a node in stratum S_a carries weight 1/|S_a|, so
every stratum contributes the same expected mass and the sampled set is
uniform over distances. Nodes that cannot reach any winner form one
stratum of their own and are weighted the same way.

The draw must be unbiased at the stratum level: sequential weighted
draws without replacement under-sample strata with heavy individual
weights (measurably so at the tolerances this module is tested at), so
the sampler realizes exact inclusion probabilities pi_v proportional to
the weights via randomized-order systematic sampling, with items whose
proportional probability reaches 1 promoted to certain selections first.
"""

from __future__ import annotations

import numpy as np

from .graph import CitationGraph, DistanceStrata


def sampling_weights(strata: DistanceStrata) -> dict[int, float]:
    """Per-node weight 1/|S_a| for every non-winner node."""
    weights: dict[int, float] = {}
    for members in strata.strata.values():
        w = 1.0 / len(members)
        for v in members:
            weights[int(v)] = w
    return weights


def _systematic_pps(items: np.ndarray, weights: np.ndarray, k: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Draw k of `items` without replacement, inclusion prob proportional
    to `weights` (capped at 1)."""
    items = np.asarray(items)
    weights = np.asarray(weights, dtype=float)
    chosen: list[np.ndarray] = []
    # Promote items whose proportional inclusion probability would exceed 1.
    while k > 0:
        total = weights.sum()
        certain = k * weights >= total
        if not certain.any():
            break
        chosen.append(items[certain])
        k -= int(certain.sum())
        items = items[~certain]
        weights = weights[~certain]
    if k > 0:
        pi = k * weights / weights.sum()
        order = rng.permutation(items.size)
        cum = np.cumsum(pi[order])
        cum[-1] = k  # guard against float drift at the tail
        hits = np.searchsorted(cum, rng.uniform(0.0, 1.0) + np.arange(k), side="right")
        chosen.append(items[order[hits]])
    return np.concatenate(chosen) if chosen else np.empty(0, dtype=items.dtype)


def stratified_sample(strata: DistanceStrata, winners: np.ndarray,
                      target_n: int, seed: int) -> np.ndarray:
    """All winners plus (target_n - |winners|) weighted non-winners.

    Deterministic for a given seed; the result is a sorted array of node
    indices with no duplicates.
    """
    winners = np.asarray(winners, dtype=np.int64)
    n_nonwinners = sum(len(v) for v in strata.strata.values())
    if target_n < winners.size:
        raise ValueError(
            f"target_n={target_n} is below the winner count {winners.size}")
    if target_n > winners.size + n_nonwinners:
        raise ValueError(
            f"target_n={target_n} exceeds the node count {winners.size + n_nonwinners}")
    k = target_n - winners.size
    items = np.concatenate([np.asarray(v, dtype=np.int64)
                            for v in strata.strata.values()]) \
        if strata.strata else np.empty(0, dtype=np.int64)
    weights = np.concatenate([np.full(len(v), 1.0 / len(v))
                              for v in strata.strata.values()]) \
        if strata.strata else np.empty(0)
    rng = np.random.default_rng(seed)
    picked = _systematic_pps(items, weights, k, rng)
    return np.sort(np.concatenate([winners, picked.astype(np.int64)]))


def distance_uniform_sample(graph: CitationGraph, strata: DistanceStrata,
                            target_n: int, seed: int) -> np.ndarray:
    """Convenience wrapper: stratified_sample seeded with the graph's winners."""
    return stratified_sample(strata, graph.winners, target_n, seed)
