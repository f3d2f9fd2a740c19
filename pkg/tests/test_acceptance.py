"""Release gate: every test_aN group checks one gate criterion and the
terminal summary prints a one-line verdict per criterion (see conftest)."""
import json
import shutil
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from laurel.cli import main
from laurel.graph import DistanceStrata, extract_subgraph
from laurel.metrics import ConfusionMatrix, ScoredSample, f1_macro, pr_auc, roc_auc
from laurel.models import (MlpParams, TrainConfig, gradient, init_params, loss,
                           train_simple_perceptron)
from laurel.sampling import stratified_sample
from laurel.textsim import (cosine_similarity, dbscan, load_embeddings,
                            phi_score, theta_score)
from laurel.topo import Subgraph, compute_topo_features, read_feature_csv
from tests.conftest import graph_from_adjacency, random_adjacency
from tests.oracles import (brute_phi, finite_difference_gradient, naive_dbscan,
                           naive_features, pair_auc, prefix_ap, relative_error,
                           walk_subgraph)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Full run on the synthetic benchmark: 5000 papers, 400 winners."""
    d = tmp_path_factory.mktemp("bench")
    corpus, emb = d / "corpus.jsonl", d / "emb.bin"
    graph, ids = d / "graph.cgr", d / "ids.txt"
    features, model = d / "features.csv", d / "model.json"
    metrics_path = d / "metrics.json"
    t0 = time.perf_counter()
    assert main(["synth", "--out", str(corpus),
                 "--embeddings-out", str(emb)]) == 0
    assert main(["ingest", "--corpus", str(corpus), "--out", str(graph)]) == 0
    assert main(["sample", "--graph", str(graph), "--n", "3000",
                 "--seed", "0", "--out", str(ids)]) == 0
    assert main(["features", "--graph", str(graph), "--ids", str(ids),
                 "--delta", "2", "--out", str(features)]) == 0
    assert main(["train", "--features", str(features),
                 "--embeddings", str(emb), "--seed", "0",
                 "--out", str(model),
                 "--metrics-out", str(metrics_path)]) == 0
    elapsed = time.perf_counter() - t0
    return {"features": features,
            "metrics": json.loads(metrics_path.read_text()),
            "elapsed": elapsed}


# ---------------------------------------------------------------------------
# A1: subgraph extraction vs walk-enumeration oracle
# ---------------------------------------------------------------------------

def test_a1_subgraph_matches_walk_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    for _ in range(100):
        n = int(rng.integers(1, 201))
        adj = random_adjacency(rng, n, 0.05)
        g = graph_from_adjacency(adj)
        root = int(rng.integers(n))
        delta = int(rng.integers(1, 4))
        induced = bool(rng.integers(2))
        sub = extract_subgraph(g, root, delta, induced=induced)
        dist, edges = walk_subgraph(adj, root, delta, induced=induced)
        assert sub.dist == dist
        assert set(sub.edges) == edges
    assert time.perf_counter() - t0 < 10.0


# ---------------------------------------------------------------------------
# A2: topological features vs naive reference
# ---------------------------------------------------------------------------

def test_a2_features_match_naive_reference():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1002)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        adj = random_adjacency(rng, n, 0.12)
        g = graph_from_adjacency(adj)
        sub = extract_subgraph(g, int(rng.integers(n)), int(rng.integers(1, 4)))
        got = compute_topo_features(sub).as_array()
        want = naive_features(set(sub.dist), sub.edges)
        assert np.allclose(got, want, atol=1e-9, rtol=0)
    assert time.perf_counter() - t0 < 10.0


def test_a2_closed_form_fixtures():
    star = Subgraph(root=0, delta=1, dist={0: 0, 1: 1, 2: 1, 3: 1},
                    edges=[(0, 1), (0, 2), (0, 3)])
    f = compute_topo_features(star)
    assert (f.avg_out_degree, f.density, f.diameter) == (0.75, 0.25, 2)
    assert (f.transitivity, f.avg_local_clustering) == (0.0, 0.0)

    triangle = Subgraph(root=0, delta=1, dist={0: 0, 1: 1, 2: 1},
                        edges=[(0, 1), (0, 2), (1, 2)])
    f = compute_topo_features(triangle)
    assert (f.avg_out_degree, f.density, f.diameter) == (1.0, 0.5, 1)
    assert (f.transitivity, f.avg_local_clustering) == (1.0, 1.0)

    singleton = Subgraph(root=0, delta=2, dist={0: 0}, edges=[])
    assert compute_topo_features(singleton).as_array().tolist() == [0.0] * 5


# ---------------------------------------------------------------------------
# A3: analytic gradients vs central finite differences
# ---------------------------------------------------------------------------

def _check_gradient_config(rng, hidden: int) -> None:
    n = int(rng.integers(1, 8))
    d = int(rng.integers(1, 6))
    p = init_params(d, hidden, int(rng.integers(1 << 30)))
    p.b_out = float(rng.normal())
    while True:
        X = rng.normal(size=(n, d))
        if hidden == 0:
            break
        p.b1[:] = rng.normal(size=hidden)
        # stay away from rectifier kinks where the derivative jumps
        if np.abs(X @ p.w1.T + p.b1).min() >= 1e-3:
            break
    y = rng.integers(0, 2, size=n).astype(float)
    got = gradient(p, X, y)
    arrays = ([p.w1, p.b1] if hidden else []) + [p.w_out]
    want = finite_difference_gradient(lambda: loss(p, X, y), arrays)
    analytic = ([got.w1, got.b1] if hidden else []) + [got.w_out]
    for a, w in zip(analytic, want):
        for ai, wi in zip(a.ravel(), w.ravel()):
            assert relative_error(float(ai), float(wi)) <= 1e-4
    h = 1e-5
    keep = p.b_out
    p.b_out = keep + h
    hi = loss(p, X, y)
    p.b_out = keep - h
    lo = loss(p, X, y)
    p.b_out = keep
    assert relative_error(got.b_out, (hi - lo) / (2 * h)) <= 1e-4


def test_a3_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1003)
    for hidden, reps in ((0, 34), (4, 33), (16, 33)):
        for _ in range(reps):
            _check_gradient_config(rng, hidden)
    assert time.perf_counter() - t0 < 30.0


# ---------------------------------------------------------------------------
# A4: synthetic end-to-end pipeline
# ---------------------------------------------------------------------------

def test_a4_mixed_f1_reaches_target(pipeline):
    assert pipeline["metrics"]["mixed"]["f1_macro"] >= 0.90


def test_a4_mixed_auc_dominates_single_families(pipeline):
    m = pipeline["metrics"]
    single = max(m["topological"]["roc_auc"], m["textual"]["roc_auc"])
    assert m["mixed"]["roc_auc"] >= single


def test_a4_runtime_bound(pipeline):
    assert pipeline["elapsed"] < 300.0


# ---------------------------------------------------------------------------
# A5: ranking metrics vs pair-counting / prefix oracles
# ---------------------------------------------------------------------------

def test_a5_roc_auc_equals_pair_oracle():
    rng = np.random.default_rng(1005)
    for _ in range(1000):
        n = int(rng.integers(2, 501))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] ^= 1
        # quantized scores force plenty of exact ties
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))
        samples = [ScoredSample(score=float(s), label=int(y), year=2000)
                   for s, y in zip(scores, labels)]
        assert roc_auc(samples) == pair_auc(scores, labels)


def test_a5_pr_auc_matches_prefix_oracle():
    rng = np.random.default_rng(1505)
    for _ in range(300):
        n = int(rng.integers(2, 80))
        labels = rng.integers(0, 2, size=n)
        labels[0] = 1
        scores = np.round(rng.random(n), 2)
        samples = [ScoredSample(score=float(s), label=int(y), year=2000)
                   for s, y in zip(scores, labels)]
        assert pr_auc(samples) == pytest.approx(prefix_ap(scores, labels),
                                                abs=1e-9)


def test_a5_f1_fixtures():
    assert f1_macro(ConfusionMatrix(tp=1, fn=1, tn=2, fp=0)) == pytest.approx(
        (2 / 3 + 0.8) / 2, abs=1e-15)
    assert f1_macro(ConfusionMatrix(tp=2, fp=2, tn=0, fn=0)) == pytest.approx(
        1 / 3, abs=1e-15)
    assert f1_macro(ConfusionMatrix(tp=3, fp=0, tn=5, fn=0)) == 1.0


# ---------------------------------------------------------------------------
# A6: phi / theta / DBSCAN vs brute-force oracles
# ---------------------------------------------------------------------------

def _unit_rows(rng, n, dim):
    X = rng.normal(size=(n, dim))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def test_a6_phi_matches_brute_force():
    rng = np.random.default_rng(1006)
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        X = _unit_rows(rng, n, int(rng.integers(2, 7)))
        assert phi_score(X) == pytest.approx(brute_phi(X), abs=1e-12)


def test_a6_dbscan_matches_naive_reference():
    rng = np.random.default_rng(1606)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        X = _unit_rows(rng, n, 3)
        eps = float(rng.uniform(0.05, 1.0))
        min_pts = int(rng.integers(1, 5))
        assert dbscan(X, eps, min_pts).labels.tolist() == \
            naive_dbscan(X, eps, min_pts).tolist()


def test_a6_theta_monotone_in_eps():
    rng = np.random.default_rng(1706)
    grid = np.linspace(0.05, 1.6, 24)
    for _ in range(30):
        X = _unit_rows(rng, int(rng.integers(4, 25)), 3)
        thetas = [theta_score(X, float(e), 2) for e in grid]
        assert all(a >= b - 1e-12 for a, b in zip(thetas, thetas[1:]))


# ---------------------------------------------------------------------------
# A7: stratified sampling distribution
# ---------------------------------------------------------------------------

def test_a7_sampling_unbiased_across_strata():
    strata = {1: np.arange(5, 105, dtype=np.int64),
              2: np.arange(105, 1005, dtype=np.int64)}
    dist = np.full(1005, -1, dtype=np.int32)
    dist[:5] = 0
    for a, members in strata.items():
        dist[members] = a
    ds = DistanceStrata(dist=dist, strata=strata)
    winners = np.arange(5, dtype=np.int64)

    counts = np.empty(10000)
    for seed in range(10000):
        chosen = stratified_sample(ds, winners, len(winners) + 100, seed)
        chosen_set = set(chosen.tolist())
        assert set(winners.tolist()) <= chosen_set
        assert len(chosen_set) == 105
        counts[seed] = sum(1 for v in chosen if 5 <= v < 105)

    # both strata carry equal total weight, so 100 picks split 50/50
    se = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - 50.0) <= 3 * se


# ---------------------------------------------------------------------------
# A8: interpretability weight directions
# ---------------------------------------------------------------------------

def test_a8_density_and_transitivity_weights_negative(pipeline):
    table = read_feature_csv(pipeline["features"])
    for seed in range(5):
        res = train_simple_perceptron(
            table.X, table.labels,
            TrainConfig(epochs=500, patience=50, seed=seed))
        raw = dict(res.report.raw)
        std = dict(res.report.standardized)
        assert raw["density"] < 0.0, seed
        assert raw["transitivity"] < 0.0, seed
        assert std["density"] < 0.0, seed
        assert std["transitivity"] < 0.0, seed


# ---------------------------------------------------------------------------
# A9: embedder sidecar contract (runs only when the sidecar is built)
# ---------------------------------------------------------------------------

EMBEDDER_CLI = Path(__file__).resolve().parent.parent / "embedder" / "dist" / "cli.js"

sidecar = pytest.mark.skipif(
    shutil.which("node") is None or not EMBEDDER_CLI.is_file(),
    reason="embedder sidecar not built")


@sidecar
def test_a9_embedder_contract(tmp_path):
    # 100 papers, 7 of them missing the abstract; ids 21/22 share a text
    lines = []
    for i in range(1, 101):
        rec = {"id": i, "title": f"title {i}"}
        if i <= 93:
            rec["abstract"] = ("identical twin abstract" if i in (21, 22)
                               else f"abstract on subject {i % 11} theme {i % 5}")
        lines.append(json.dumps(rec))
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text("\n".join(lines) + "\n")
    out = tmp_path / "emb.bin"

    proc = subprocess.run(
        ["node", str(EMBEDDER_CLI), "embed", "--corpus", str(corpus),
         "--out", str(out), "--model", "hash-64", "--batch-size", "32"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr

    store = load_embeddings(out)
    assert store.dim == 64
    assert len(store) == 100
    assert cosine_similarity(store.get(21), store.get(22)) == \
        pytest.approx(1.0, abs=1e-6)

    manifest = json.loads((tmp_path / "emb.bin.manifest.json").read_text())
    assert manifest["titleFallbacks"] == 7
    assert manifest["count"] + manifest["skipped"] == 100
    assert manifest["model"] == "hash-64"
    assert manifest["dim"] == 64
