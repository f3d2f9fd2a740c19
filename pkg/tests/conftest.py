from __future__ import annotations

import numpy as np
import pytest

from laurel.corpus import PaperRecord, intern_id
from laurel.graph import build_graph

ACCEPTANCE = {
    "a1": "A1 [PRIMARY] subgraph extraction matches the walk-enumeration oracle",
    "a2": "A2 [PRIMARY] topological features match the naive reference",
    "a3": "A3 [PRIMARY] analytic gradients match central finite differences",
    "a4": "A4 [PRIMARY] synthetic end-to-end pipeline reaches the required metrics",
    "a5": "A5 [PRIMARY] ranking metrics match pair-counting/prefix oracles",
    "a6": "A6 [PRIMARY] phi/theta/DBSCAN match brute-force oracles",
    "a7": "A7 [PRIMARY] stratified sampling is distributionally unbiased",
    "a8": "A8 [PRIMARY] interpretability weights recover the negative directions",
    "a9": "A9 [SECONDARY] embedder sidecar emits loader-valid embeddings",
}

_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    severity = {"passed": 0, "skipped": 1, "failed": 2}
    for key in ACCEPTANCE:
        if name.startswith(f"test_{key}_") or name == f"test_{key}":
            if report.when == "call" or (report.when == "setup"
                                         and report.outcome != "passed"):
                # a criterion spanning several tests reports its worst outcome
                prev = _results.get(key)
                if prev is None or (severity.get(report.outcome, 2)
                                    > severity.get(prev, 0)):
                    _results[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(ACCEPTANCE):
        outcome = _results.get(key)
        if outcome is None:
            continue
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper())
        terminalreporter.write_line(f"{ACCEPTANCE[key]}: {status}")


# ---------------------------------------------------------------------------
# Graph-building helpers
# ---------------------------------------------------------------------------

def records_from_adjacency(adj: dict[int, list[int]], winners=(),
                           years=None) -> list[PaperRecord]:
    winners = set(winners)
    records = []
    for pid in sorted(adj):
        records.append(PaperRecord(
            id=intern_id(pid), title=f"paper {pid}",
            abstract=None, year=years[pid] if years else 2010,
            references=[intern_id(r) for r in adj[pid]],
            award=pid in winners, raw_id=str(pid)))
    return records


def graph_from_adjacency(adj: dict[int, list[int]], winners=(), years=None):
    return build_graph(records_from_adjacency(adj, winners, years))


def random_adjacency(rng: np.random.Generator, n: int,
                     p: float) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {}
    for u in range(n):
        targets = np.flatnonzero(rng.random(n) < p)
        adj[u] = [int(t) for t in targets if t != u]
    return adj


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
