import json

import numpy as np
import pytest

from laurel.corpus import load_corpus
from laurel.graph import (UNREACHABLE, build_graph, distances_to_winners,
                          extract_subgraph)
from laurel.synth import (SynthConfig, generate, write_corpus_jsonl,
                          write_outputs)
from laurel.textsim import load_embeddings
from laurel.topo import compute_topo_features

SMOKE = SynthConfig(n_papers=800, n_winners=60, n_communities=16, seed=3)


@pytest.fixture(scope="module")
def corpus():
    return generate(SMOKE)


@pytest.fixture(scope="module")
def graph(corpus, tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    path = d / "c.jsonl"
    write_corpus_jsonl(path, corpus)
    load = load_corpus(path)
    assert load.skipped == 0
    return build_graph(load.records)


class TestGeneration:
    def test_counts(self, corpus):
        assert len(corpus.papers) == 800
        assert sum(p.award for p in corpus.papers) == 60
        assert [p.id for p in corpus.papers] == list(range(1, 801))

    def test_deterministic(self, corpus):
        again = generate(SynthConfig(n_papers=800, n_winners=60,
                                     n_communities=16, seed=3))
        assert again.records() == corpus.records()
        for p in corpus.papers:
            assert np.array_equal(again.embeddings.get(p.id),
                                  corpus.embeddings.get(p.id))

    def test_seed_changes_output(self, corpus):
        other = generate(SynthConfig(n_papers=800, n_winners=60,
                                     n_communities=16, seed=4))
        assert other.records() != corpus.records()

    def test_no_future_citations(self, corpus):
        by_id = {p.id: p for p in corpus.papers}
        for p in corpus.papers:
            for r in p.references:
                assert by_id[r].year <= p.year

    def test_flipped_winner_count_exact(self, corpus):
        flipped = sum(1 for p in corpus.papers
                      if p.award and p.topo_style == "community")
        assert flipped == round(60 * SMOKE.topo_flip)

    def test_references_resolve(self, graph):
        assert graph.dangling_refs == 0
        assert graph.n == 800

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(n_papers=100, n_winners=60).validate()
        with pytest.raises(ValueError):
            SynthConfig(n_communities=5).validate()
        with pytest.raises(ValueError):
            SynthConfig(topo_flip=0.7).validate()


class TestTopologySeparation:
    @pytest.fixture(scope="class")
    @staticmethod
    def features(graph):
        dens = {0: [], 1: []}
        trans = {0: [], 1: []}
        for v in range(graph.n):
            f = compute_topo_features(extract_subgraph(graph, v, 2))
            dens[int(graph.labels[v])].append(f.density)
            trans[int(graph.labels[v])].append(f.transitivity)
        return ({k: np.array(v) for k, v in dens.items()},
                {k: np.array(v) for k, v in trans.items()})

    def test_winner_subgraphs_sparse(self, features):
        dens, trans = features
        assert dens[1].mean() < 0.1
        assert dens[0].mean() > 0.15
        assert trans[1].mean() < 0.1
        assert trans[0].mean() > 0.4

    def test_winner_feature_variance_smaller(self, features):
        dens, _ = features
        assert dens[1].var() < dens[0].var()

    def test_finite_strata_exist(self, graph):
        strata = distances_to_winners(graph)
        finite = [a for a in strata.strata if a != UNREACHABLE]
        assert len(finite) >= 3
        assert UNREACHABLE in strata.strata


class TestTextSeparation:
    def test_band_versus_spread(self, corpus):
        center = corpus.text_center
        band, spread = [], []
        for p in corpus.papers:
            v = np.asarray(corpus.embeddings.get(p.id), dtype=np.float64)
            cos = float(v @ center / np.linalg.norm(v))
            (band if p.text_style == "band" else spread).append(cos)
        band, spread = np.array(band), np.array(spread)
        assert band.min() > 0.5
        assert band.mean() > 0.7
        assert abs(spread.mean()) < 0.2
        assert np.quantile(spread, 0.99) < 0.6

    def test_all_vectors_unit_and_nonzero(self, corpus):
        for p in corpus.papers:
            v = np.asarray(corpus.embeddings.get(p.id), dtype=np.float64)
            assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-5)

    def test_most_winners_in_band(self, corpus):
        winners = [p for p in corpus.papers if p.award]
        in_band = sum(1 for p in winners if p.text_style == "band")
        assert in_band / len(winners) > 0.8


class TestOutputs:
    def test_write_outputs_roundtrip(self, corpus, tmp_path):
        cpath = tmp_path / "c.jsonl"
        epath = tmp_path / "e.bin"
        write_outputs(corpus, cpath, epath)
        load = load_corpus(cpath)
        assert len(load.records) == 800
        store = load_embeddings(epath)
        assert len(store) == 800
        assert store.dim == SMOKE.dim
        rec = json.loads(cpath.read_text().splitlines()[0])
        assert set(rec) == {"id", "title", "abstract", "year",
                            "references", "award"}
