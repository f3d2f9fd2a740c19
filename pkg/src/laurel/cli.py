"""Command-line pipeline over the library modules.

The pipeline is staged through files so the expensive graph work is
done once: ingest -> sample -> features/scores -> train -> evaluate.
Every randomized stage takes --seed and is exactly reproducible.
Input paths are checked before any long computation starts. Report
stages write plot-ready CSVs and render matching PNG figures next to
them (disable with --no-figures).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import figures, metrics, models, synth, textsim, topo
from .corpus import CorpusError, intern_id, load_corpus
from .graph import (SnapshotError, build_graph, distances_to_winners,
                    extract_virtual_subgraph, load_snapshot, save_snapshot)
from .sampling import stratified_sample
from .textsim import EmbeddingFormatError, load_embeddings


class CliError(Exception):
    """User-facing command failure."""


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} not found: {path}")
    return p


def _prepare_out(path: str) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _prepare_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _read_ids(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        ids = [line.strip() for line in fh if line.strip()]
    if not ids:
        raise CliError(f"id list is empty: {path}")
    return ids


def _resolve_rows(graph, raw_ids: list[str]) -> list[int]:
    rows = []
    for raw in raw_ids:
        row = graph.index_of.get(intern_id(raw))
        if row is None:
            raise CliError(f"paper id not in graph: {raw}")
        rows.append(row)
    return rows


def _rows_by_paper_id(graph, rows: list[int]) -> list[int]:
    # output files are ordered by paper id, not by completion or input order
    return sorted(rows, key=lambda r: int(graph.ids[r]))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    _require_file(args.corpus, "corpus")
    _prepare_out(args.out)
    load = load_corpus(args.corpus)
    graph = build_graph(load.records)
    save_snapshot(graph, args.out)
    print(f"ingested {graph.n} papers, {graph.m} citation edges, "
          f"{int(graph.labels.sum())} award winners")
    if load.skipped:
        print(f"warning: skipped {load.skipped} malformed corpus lines",
              file=sys.stderr)
    if graph.dangling_refs:
        print(f"warning: dropped {graph.dangling_refs} references to papers "
              f"outside the corpus", file=sys.stderr)
    return 0


def cmd_sample(args) -> int:
    _require_file(args.graph, "graph snapshot")
    out = _prepare_out(args.out)
    graph = load_snapshot(args.graph)
    strata = distances_to_winners(graph)
    rows = stratified_sample(strata, graph.winners, args.n, args.seed)
    with open(out, "w", encoding="utf-8") as fh:
        for row in _rows_by_paper_id(graph, [int(r) for r in rows]):
            fh.write(graph.raw_ids[row] + "\n")
    n_win = int(graph.labels[rows].sum())
    print(f"sampled {rows.size} papers: {n_win} winners, "
          f"{rows.size - n_win} non-winners from {len(strata.strata)} strata")
    return 0


def cmd_features(args) -> int:
    _require_file(args.graph, "graph snapshot")
    _require_file(args.ids, "id list")
    out = _prepare_out(args.out)
    graph = load_snapshot(args.graph)
    rows = _rows_by_paper_id(graph, _resolve_rows(graph, _read_ids(args.ids)))
    jobs = topo.resolve_jobs(args.jobs)
    feats = topo.features_for_roots(graph, rows, args.delta,
                                    induced=args.induced, jobs=jobs)
    topo.write_feature_csv(out, [
        (graph.raw_ids[r], f, int(graph.labels[r]), int(graph.years[r]))
        for r, f in zip(rows, feats)])
    print(f"wrote {len(rows)} feature rows to {out} (delta={args.delta}, "
          f"jobs={jobs})")
    return 0


def cmd_scores(args) -> int:
    _require_file(args.graph, "graph snapshot")
    _require_file(args.embeddings, "embedding file")
    _require_file(args.ids, "id list")
    out = _prepare_out(args.out)
    graph = load_snapshot(args.graph)
    store = load_embeddings(args.embeddings)
    rows = _rows_by_paper_id(graph, _resolve_rows(graph, _read_ids(args.ids)))
    jobs = topo.resolve_jobs(args.jobs)
    scores = textsim.scores_for_roots(graph, store, rows, args.delta,
                                      args.eps, args.min_pts,
                                      refs_only=args.refs_only,
                                      induced=args.induced, jobs=jobs)
    textsim.write_phi_theta_csv(out, scores)
    defined = sum(1 for s in scores if s.phi is not None)
    print(f"wrote {len(scores)} score rows to {out} "
          f"({defined} with a defined phi)")
    if not args.no_figures:
        fig = figures.render_phi_theta(scores, out.with_suffix(".png"))
        print(f"rendered {fig}")
    return 0


def _assemble_dataset(table: topo.FeatureTable, store) -> tuple[models.LabeledDataset, int]:
    keep, x_text = [], []
    for i, raw in enumerate(table.ids):
        vec = store.get(intern_id(raw))
        if vec is not None:
            keep.append(i)
            x_text.append(np.asarray(vec, dtype=np.float64))
    dropped = len(table.ids) - len(keep)
    if not keep:
        raise CliError("no feature rows have a matching embedding")
    dataset = models.LabeledDataset(
        ids=[table.ids[i] for i in keep],
        x_topo=table.X[keep],
        x_text=np.vstack(x_text),
        y=table.labels[keep].astype(np.float64),
        years=table.years[keep])
    return dataset, dropped


def _scored(scores: np.ndarray, dataset: models.LabeledDataset,
            idx: np.ndarray) -> list[metrics.ScoredSample]:
    return [metrics.ScoredSample(score=float(scores[i]),
                                 label=int(dataset.y[i]),
                                 year=int(dataset.years[i]))
            for i in idx]


def cmd_train(args) -> int:
    _require_file(args.features, "feature CSV")
    _require_file(args.embeddings, "embedding file")
    out = _prepare_out(args.out)
    metrics_out = _prepare_out(args.metrics_out) if args.metrics_out \
        else out.parent / "metrics.json"
    table = topo.read_feature_csv(args.features)
    store = load_embeddings(args.embeddings)
    dataset, dropped = _assemble_dataset(table, store)
    if dropped:
        print(f"warning: dropped {dropped} rows without embeddings",
              file=sys.stderr)
    config = models.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        seed=args.seed, patience=args.patience, class_weight=args.class_weight)
    model, report = models.train_mixed(dataset, config,
                                       hidden1=args.hidden1, hidden2=args.hidden2)
    models.save_model(out, model, config)

    test = report.splits.test
    z1 = model.standardizer.transform(dataset.x_topo)
    y1 = np.atleast_1d(models.forward(model.gamma1, z1))
    y2 = np.atleast_1d(models.forward(model.gamma2, dataset.x_text))
    y12 = np.atleast_1d(models.forward(model.gamma12, np.column_stack([y1, y2])))
    per_model = {
        "topological": metrics.compute_model_metrics(_scored(y1, dataset, test)),
        "textual": metrics.compute_model_metrics(_scored(y2, dataset, test)),
        "mixed": metrics.compute_model_metrics(_scored(y12, dataset, test)),
    }
    metrics.write_metrics_json(metrics_out, per_model)

    print(f"trained on {report.splits.train.size} rows "
          f"(validation {report.splits.val.size}, test {test.size}); "
          f"best epochs {report.gamma1.best_epoch}/{report.gamma2.best_epoch}/"
          f"{report.gamma12.best_epoch}")
    for name, m in per_model.items():
        print(f"  {name:<11} test: roc_auc={m.roc_auc:.4f} "
              f"pr_auc={m.pr_auc:.4f} f1_macro={m.f1_macro:.4f}")
    print(f"model -> {out}\nmetrics -> {metrics_out}")
    return 0


def _load_vector(path: str) -> np.ndarray:
    """Embedding vector file: JSON array, {"vec": [...]}, or plain floats."""
    text = Path(path).read_text(encoding="utf-8").strip()
    try:
        obj = json.loads(text)
        if isinstance(obj, dict):
            obj = obj.get("vec")
        vec = np.asarray(obj, dtype=np.float64)
    except (json.JSONDecodeError, TypeError, ValueError):
        try:
            vec = np.array([float(tok) for tok in text.split()])
        except ValueError:
            raise CliError(f"cannot parse embedding vector from {path}") from None
    if vec.ndim != 1 or vec.size == 0:
        raise CliError(f"embedding vector in {path} must be a flat nonempty list")
    return vec


def cmd_predict(args) -> int:
    _require_file(args.model, "model file")
    _require_file(args.graph, "graph snapshot")
    model, _ = models.load_model(args.model)
    graph = load_snapshot(args.graph)

    raw_refs = [tok for chunk in args.refs for tok in chunk.split(",") if tok]
    if not raw_refs:
        raise CliError("at least one --refs paper id is required")
    rows, unresolved = [], 0
    for raw in raw_refs:
        row = graph.index_of.get(intern_id(raw))
        if row is None:
            unresolved += 1
        else:
            rows.append(row)
    if unresolved:
        print(f"warning: {unresolved} of {len(raw_refs)} references are not "
              f"in the graph and were ignored", file=sys.stderr)
    if not rows:
        raise CliError("none of the --refs ids are in the graph")

    sub = extract_virtual_subgraph(graph, rows, args.delta, induced=args.induced)
    x_topo = topo.compute_topo_features(sub).as_array()
    x_text = _load_vector(args.embedding) if args.embedding else None
    pred = models.predict(model, x_topo, x_text)
    print(json.dumps({
        "y1": pred.y1, "y2": pred.y2, "y12": pred.y12,
        "class": pred.label, "text_fallback": pred.text_fallback,
    }))
    return 0


def cmd_evaluate(args) -> int:
    _require_file(args.model, "model file")
    _require_file(args.features, "feature CSV")
    _require_file(args.embeddings, "embedding file")
    outdir = _prepare_dir(args.outdir)
    model, _ = models.load_model(args.model)
    table = topo.read_feature_csv(args.features)
    store = load_embeddings(args.embeddings)
    dataset, dropped = _assemble_dataset(table, store)
    if dropped:
        print(f"warning: dropped {dropped} rows without embeddings",
              file=sys.stderr)

    z1 = model.standardizer.transform(dataset.x_topo)
    y1 = np.atleast_1d(models.forward(model.gamma1, z1))
    y2 = np.atleast_1d(models.forward(model.gamma2, dataset.x_text))
    y12 = np.atleast_1d(models.forward(model.gamma12, np.column_stack([y1, y2])))
    every = np.arange(len(dataset.ids))
    mixed = _scored(y12, dataset, every)
    per_model = {
        "topological": metrics.compute_model_metrics(_scored(y1, dataset, every)),
        "textual": metrics.compute_model_metrics(_scored(y2, dataset, every)),
        "mixed": metrics.compute_model_metrics(mixed),
    }
    metrics.write_metrics_json(outdir / "metrics.json", per_model)
    pr_points = metrics.pr_curve(mixed)
    roc_points = metrics.roc_curve(mixed)
    buckets = metrics.f1_by_year(mixed, 0.5, min_count=args.min_year_count)
    metrics.write_pr_curve_csv(outdir / "pr_curve.csv", pr_points)
    metrics.write_roc_curve_csv(outdir / "roc_curve.csv", roc_points)
    metrics.write_f1_by_year_csv(outdir / "f1_by_year.csv", buckets)
    if not args.no_figures:
        figures.render_pr_curve(pr_points, outdir / "pr_curve.png")
        figures.render_roc_curve(roc_points, outdir / "roc_curve.png")
        figures.render_f1_by_year(buckets, outdir / "f1_by_year.png")
    for name, m in per_model.items():
        print(f"{name:<11} roc_auc={m.roc_auc:.4f} pr_auc={m.pr_auc:.4f} "
              f"f1_macro={m.f1_macro:.4f}")
    print(f"report -> {outdir}")
    return 0


def cmd_explain(args) -> int:
    _require_file(args.features, "feature CSV")
    outdir = _prepare_dir(args.outdir)
    table = topo.read_feature_csv(args.features)
    if len(set(table.labels.tolist())) < 2:
        raise CliError("explain needs both winners and non-winners")
    config = models.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        seed=args.seed, patience=args.patience, class_weight=args.class_weight)
    result = models.train_simple_perceptron(table.X, table.labels, config)
    report_text = models.format_weight_report(result.report)
    print(report_text)
    (outdir / "weight_report.txt").write_text(report_text + "\n", encoding="utf-8")

    stats = metrics.feature_distributions(table.X, table.labels,
                                          list(topo.FEATURE_NAMES))
    metrics.write_feature_dist_csv(outdir / "feature_dist.csv", stats)
    if not args.no_figures:
        figures.render_feature_distributions(stats, outdir / "feature_dist.png")
    print(f"report -> {outdir}")
    return 0


def cmd_synth(args) -> int:
    out = _prepare_out(args.out)
    emb_out = _prepare_out(args.embeddings_out)
    config = synth.SynthConfig(
        n_papers=args.n_papers, n_winners=args.n_winners,
        n_communities=args.n_communities, seed=args.seed, dim=args.dim,
        topo_flip=args.topo_flip, text_flip=args.text_flip,
        text_noise=args.text_noise)
    corpus = synth.generate(config)
    synth.write_outputs(corpus, out, emb_out)
    print(f"generated {len(corpus.papers)} papers "
          f"({sum(p.award for p in corpus.papers)} winners, "
          f"{config.n_communities} communities, dim={config.dim})")
    print(f"corpus -> {out}\nembeddings -> {emb_out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_train_flags(p: argparse.ArgumentParser, epochs: int = 300,
                     patience: int = 25) -> None:
    p.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--patience", type=int, default=patience,
                   help="early-stop patience in epochs")
    p.add_argument("--class-weight", action="store_true",
                   help="weight the loss by inverse class frequency")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laurel",
        description="Citation-graph pipeline for predicting award-winning papers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="corpus JSONL -> graph snapshot")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sample", help="distance-stratified paper sample")
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=int, default=10000, help="total sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("features", help="topological feature CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--ids", required=True, help="file with one paper id per line")
    p.add_argument("--delta", type=int, default=2)
    p.add_argument("--induced", action="store_true",
                   help="include edges between frontier nodes")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: logical cores)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("scores", help="phi/theta text score CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--ids", required=True)
    p.add_argument("--delta", type=int, default=2)
    p.add_argument("--eps", type=float, default=0.3, help="DBSCAN radius")
    p.add_argument("--min-pts", type=int, default=2)
    p.add_argument("--refs-only", action="store_true",
                   help="score direct references instead of the whole subgraph")
    p.add_argument("--induced", action="store_true")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser("train", help="train the mixed classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--hidden1", type=int, default=16,
                   help="hidden units of the topological net")
    p.add_argument("--hidden2", type=int, default=64,
                   help="hidden units of the textual net")
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--metrics-out", default=None,
                   help="default: metrics.json next to the model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score one unpublished paper")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--refs", action="append", required=True,
                   help="comma-separated cited paper ids (repeatable)")
    p.add_argument("--embedding", default=None,
                   help="file with the paper's embedding vector")
    p.add_argument("--delta", type=int, default=2)
    p.add_argument("--induced", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="metric CSVs + figures for held-out data")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--min-year-count", type=int, default=5,
                   help="flag year buckets smaller than this")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="interpretable weight report")
    p.add_argument("--features", required=True)
    _add_train_flags(p, epochs=500, patience=50)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out", required=True, help="corpus JSONL path")
    p.add_argument("--embeddings-out", required=True)
    p.add_argument("--n-papers", type=int, default=5000)
    p.add_argument("--n-winners", type=int, default=400)
    p.add_argument("--n-communities", type=int, default=40)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--topo-flip", type=float, default=0.06)
    p.add_argument("--text-flip", type=float, default=0.06)
    p.add_argument("--text-noise", type=float, default=0.12)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, CorpusError, SnapshotError, EmbeddingFormatError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
