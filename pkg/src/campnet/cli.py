"""Command-line driver: ingest -> graphs -> similarities -> solve -> evaluate.

Also implements the restart-and-grid experiment protocol: every grid cell
is run `restarts` times with derived seeds and summarized per the pick
policy (max keeps the restart with the best ARI, alongside per-metric
maxima for the cell).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from campnet import corpus as corpus_mod
from campnet import factorize, graph as graph_mod, metrics, similarity, synth

DEFAULT_GRID = [1.0, 10.0, 100.0, 1000.0]

METHOD_PARAMS = {
    "dual": ("alpha", "beta"),
    "tri_hashtag": ("alpha", "beta", "gamma"),
    "tri_domain": ("alpha", "beta", "theta"),
    "multi": ("alpha", "beta", "gamma", "theta"),
}

METHOD_CONTENT = {
    "dual": "word",
    "tri_hashtag": "word+hashtag",
    "tri_domain": "word+domain",
    "multi": "word+hashtag+domain",
}

RESULT_COLUMNS = [
    "algorithm",
    "graph",
    "content",
    "cell",
    "restart",
    "seed",
    "k",
    "status",
    "purity",
    "ari",
    "nmi",
    "modularity",
    "k_found",
    "iterations",
    "converged",
    "best_purity",
    "best_ari",
    "best_nmi",
]


@dataclass
class ExperimentSpec:
    corpus_path: str
    method: str = "dual"
    graph_variant: str = "RdMw"  # RM | RdM | RdMw
    k: int = 2
    labels_path: str | None = None
    grid: dict[str, list[float]] = field(default_factory=dict)
    restarts: int = 20
    pick: str = "max"  # max | median | all
    seed: int = 0
    threads: int = 1
    out_dir: str | None = None
    corpus_format: str = "jsonl"
    preprocess: corpus_mod.PreprocessConfig = field(default_factory=corpus_mod.PreprocessConfig)
    max_iters: int = 500
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.method not in METHOD_PARAMS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.graph_variant not in ("RM", "RdM", "RdMw"):
            raise ValueError(f"unknown graph variant {self.graph_variant!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.pick not in ("max", "median", "all"):
            raise ValueError(f"unknown pick policy {self.pick!r}")
        for name, values in self.grid.items():
            if any(v <= 0 for v in values):
                raise ValueError(f"grid values for {name} must be > 0")


def derive_seed(base: int, cell_index: int, restart_index: int) -> int:
    """Stable per-run seed, independent of scheduling order."""
    digest = hashlib.sha256(f"{base}:{cell_index}:{restart_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class PipelineData:
    corpus: corpus_mod.Corpus
    x_uw: object
    x_uh: object
    x_ud: object
    connectivity: graph_mod.UserGraph
    w_sim: similarity.SimilarityMatrix
    h_sim: similarity.SimilarityMatrix
    d_sim: similarity.SimilarityMatrix
    labels: list | None


def build_variant(c: corpus_mod.Corpus, variant: str) -> graph_mod.UserGraph:
    r = graph_mod.build_retweet_graph(c)
    m = graph_mod.build_mention_graph(c)
    if variant == "RM":
        mv = m
    elif variant == "RdM":
        mv = graph_mod.tsb_filter(r, m)
    else:
        mv = graph_mod.tsb_filter_weighted(r, m)
    return graph_mod.combine(r, mv)


def prepare(spec: ExperimentSpec) -> PipelineData:
    raw = corpus_mod.parse_corpus(spec.corpus_path, spec.corpus_format)
    c = corpus_mod.preprocess(raw, spec.preprocess)
    x_uw, x_uh, x_ud = corpus_mod.build_feature_matrices(c)
    connectivity = build_variant(c, spec.graph_variant)
    w_sim = similarity.cosine_similarity(x_uw)
    h_sim = similarity.hashtag_cooccurrence(c)
    d_sim = similarity.cosine_similarity(x_ud)
    labels = None
    if spec.labels_path:
        label_map = synth.load_labels_csv(spec.labels_path)
        missing = [u for u in c.users if u not in label_map]
        if missing:
            raise ValueError(f"labels missing for users: {', '.join(missing[:10])}")
        labels = [label_map[u] for u in c.users]
    return PipelineData(c, x_uw, x_uh, x_ud, connectivity, w_sim, h_sim, d_sim, labels)


def run_solver(data: PipelineData, method: str, cfg: factorize.SolverConfig) -> factorize.FactorSet:
    if method == "dual":
        return factorize.dual_nmf(data.x_uw, data.connectivity, data.w_sim, cfg)
    if method == "tri_hashtag":
        return factorize.tri_nmf(
            data.x_uw, data.x_uh, data.connectivity, data.h_sim, data.w_sim, cfg, "hashtag"
        )
    if method == "tri_domain":
        return factorize.tri_nmf(
            data.x_uw, data.x_ud, data.connectivity, data.d_sim, data.w_sim, cfg, "domain"
        )
    return factorize.multi_nmf(
        data.x_uw, data.x_uh, data.x_ud, data.connectivity, data.h_sim, data.d_sim, data.w_sim, cfg
    )


def _grid_cells(spec: ExperimentSpec) -> list[tuple[str, dict[str, float]]]:
    params = METHOD_PARAMS[spec.method]
    axes = [spec.grid.get(p, DEFAULT_GRID) for p in params]
    cells = []
    for combo in itertools.product(*axes):
        values = dict(zip(params, combo))
        key = ",".join(f"{p}={values[p]:g}" for p in params)
        cells.append((key, values))
    return cells


def _run_one(data: PipelineData, spec: ExperimentSpec, cell_key: str, values: dict, cell_ix: int, restart: int) -> dict:
    seed = derive_seed(spec.seed, cell_ix, restart)
    cfg = factorize.SolverConfig(
        k=spec.k,
        max_iters=spec.max_iters,
        rel_tol=spec.rel_tol,
        seed=seed,
        **{p: values.get(p, 0.0) for p in ("alpha", "beta", "gamma", "theta")},
    )
    row = {
        "algorithm": spec.method,
        "graph": spec.graph_variant,
        "content": METHOD_CONTENT[spec.method],
        "cell": cell_key,
        "restart": restart,
        "seed": seed,
        "k": spec.k,
    }
    try:
        fs = run_solver(data, spec.method, cfg)
    except factorize.SolverDivergence as exc:
        row.update(status=f"failed: {exc}", purity="", ari="", nmi="", modularity="",
                   k_found="", iterations="", converged="")
        return row
    part = factorize.assign(fs.U)
    row.update(status="ok", iterations=fs.iterations, converged=fs.converged)
    if data.labels is not None:
        report = metrics.evaluate(metrics.LabeledPartition(part, data.labels), data.connectivity)
        row.update(
            purity=f"{report.purity:.6f}",
            ari=f"{report.ari:.6f}",
            nmi=f"{report.nmi:.6f}",
            modularity="" if report.modularity is None else f"{report.modularity:.6f}",
            k_found=report.k_found,
        )
    else:
        mod = ""
        if data.connectivity.weights.sum() > 0:
            mod = f"{metrics.modularity(data.connectivity, part):.6f}"
        row.update(purity="", ari="", nmi="", modularity=mod,
                   k_found=len(set(part.assignment.tolist())))
    return row


def _summarize_cell(rows: list[dict], pick: str) -> list[dict]:
    ok = [r for r in rows if r["status"] == "ok"]
    scored = [r for r in ok if r["ari"] != ""]

    def annotate(row):
        if scored:
            row = dict(row)
            row["best_purity"] = max(r["purity"] for r in scored)
            row["best_ari"] = max(r["ari"] for r in scored)
            row["best_nmi"] = max(r["nmi"] for r in scored)
        return row

    if pick == "all" or not ok:
        return [annotate(r) for r in rows]
    if scored:
        ranked = sorted(scored, key=lambda r: (float(r["ari"]), -r["restart"]))
    else:
        ranked = sorted(ok, key=lambda r: (float(r["modularity"] or "-inf"), -r["restart"]))
    if pick == "max":
        return [annotate(ranked[-1])]
    return [annotate(ranked[(len(ranked) - 1) // 2])]


def run_pipeline(spec: ExperimentSpec) -> list[dict]:
    """Execute all grid cells x restarts and return summarized result rows."""
    data = prepare(spec)
    cells = _grid_cells(spec)
    jobs = [
        (cell_ix, cell_key, values, restart)
        for cell_ix, (cell_key, values) in enumerate(cells)
        for restart in range(spec.restarts)
    ]
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            raw_rows = list(
                pool.map(lambda j: _run_one(data, spec, j[1], j[2], j[0], j[3]), jobs)
            )
    else:
        raw_rows = [_run_one(data, spec, key, values, ix, restart) for ix, key, values, restart in jobs]

    by_cell: dict[str, list[dict]] = {}
    for row in raw_rows:
        by_cell.setdefault(row["cell"], []).append(row)
    results: list[dict] = []
    for cell_key, _ in cells:
        cell_rows = sorted(by_cell[cell_key], key=lambda r: r["restart"])
        results.extend(_summarize_cell(cell_rows, spec.pick))

    if spec.out_dir:
        os.makedirs(spec.out_dir, exist_ok=True)
        write_results_csv(results, os.path.join(spec.out_dir, "results.csv"))
        with open(os.path.join(spec.out_dir, "manifest.jsonl"), "w", encoding="utf-8") as fh:
            for row in sorted(raw_rows, key=lambda r: (r["cell"], r["restart"])):
                fh.write(json.dumps(row, sort_keys=True, default=str) + "\n")
    return results


def write_results_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, restval="", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def run_table4(spec: ExperimentSpec, weighted: bool = True) -> list[dict]:
    """Inner/inter edge statistics for R, R+M, and R+filtered-M graphs."""
    data = prepare(spec)
    if data.labels is None:
        raise ValueError("table4 requires labels")
    c = data.corpus
    r = graph_mod.build_retweet_graph(c)
    m = graph_mod.build_mention_graph(c)
    dm = graph_mod.tsb_filter(r, m)
    zero = graph_mod.UserGraph(r.n, r.weights * 0, "M")
    rows = []
    for name, mv in (("R", zero), ("R+M", m), ("R+dM", dm)):
        inner, inter = graph_mod.endorsement_stats(r, mv, data.labels, weighted=weighted)
        rows.append({"graph": name, "inner": inner, "inter": inter})
    return rows


# ---------------------------------------------------------------------------
# argparse wiring


def _add_preprocess_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-word-freq", type=int, default=20)
    p.add_argument("--min-hashtag-freq", type=int, default=2)
    p.add_argument("--min-domain-freq", type=int, default=2)
    p.add_argument("--max-tweets-per-user", type=int, default=200)
    p.add_argument("--stopword-file", default=None)
    p.add_argument("--min-timestamp", type=int, default=None)
    p.add_argument("--exclude-retweet-text", action="store_true")


def _preprocess_cfg(args) -> corpus_mod.PreprocessConfig:
    return corpus_mod.PreprocessConfig(
        min_word_freq=args.min_word_freq,
        min_hashtag_freq=args.min_hashtag_freq,
        min_domain_freq=args.min_domain_freq,
        max_tweets_per_user=args.max_tweets_per_user,
        stopword_file=args.stopword_file,
        min_timestamp=args.min_timestamp,
        exclude_retweet_text=args.exclude_retweet_text,
    )


def _parse_grid(args) -> dict[str, list[float]]:
    grid = {}
    for name in ("alpha", "beta", "gamma", "theta"):
        raw = getattr(args, f"grid_{name}", None)
        if raw:
            grid[name] = [float(v) for v in raw.split(",")]
    return grid


def _apply_config_file(args: argparse.Namespace) -> None:
    # a JSON config file overrides command-line flags
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        setattr(args, key.replace("-", "_"), value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="campnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and preprocess a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_preprocess_flags(p)

    p = sub.add_parser("graphs", help="emit R, M, and filtered graphs as edge lists")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_preprocess_flags(p)

    p = sub.add_parser("solve", help="run one solver and save factors + partition")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p.add_argument("--method", default="dual", choices=sorted(METHOD_PARAMS))
    p.add_argument("--graph-variant", default="RdMw", choices=["RM", "RdM", "RdMw"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-trace", action="store_true")
    p.add_argument("--config", default=None)
    _add_preprocess_flags(p)

    p = sub.add_parser("eval", help="score a saved partition against labels")
    p.add_argument("--partition", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--graph", default=None, help="edge-list file for modularity")

    p = sub.add_parser("experiment", help="grid x restarts protocol with report CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p.add_argument("--labels", default=None)
    p.add_argument("--method", default="dual", choices=sorted(METHOD_PARAMS))
    p.add_argument("--graph-variant", default="RdMw", choices=["RM", "RdM", "RdMw"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--pick", default="max", choices=["max", "median", "all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    for name in ("alpha", "beta", "gamma", "theta"):
        p.add_argument(f"--grid-{name}", default=None, help="comma-separated values")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _add_preprocess_flags(p)

    p = sub.add_parser("synth", help="generate a synthetic polarized corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--k-true", type=int, default=4)
    p.add_argument("--users-per-community", type=int, default=50)
    p.add_argument("--vocab-per-community", type=int, default=30)
    p.add_argument("--shared-vocab", type=int, default=20)
    p.add_argument("--tweets-per-user", type=int, default=10)
    p.add_argument("--inner-retweet-rate", type=float, default=0.3)
    p.add_argument("--cross-retweet-rate", type=float, default=0.02)
    p.add_argument("--inner-mention-rate", type=float, default=0.5)
    p.add_argument("--cross-mention-rate", type=float, default=0.3)
    p.add_argument("--word-noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)

    p = sub.add_parser("table4", help="inner/inter edge statistics per graph variant")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    p.add_argument("--labels", required=True)
    p.add_argument("--count-edges", action="store_true", help="count edges instead of summing weights")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    _add_preprocess_flags(p)

    return parser


def _cmd_ingest(args) -> int:
    raw = corpus_mod.parse_corpus(args.corpus, args.format)
    c = corpus_mod.preprocess(raw, _preprocess_cfg(args))
    os.makedirs(args.out, exist_ok=True)
    corpus_mod.write_corpus_jsonl(c, os.path.join(args.out, "processed_corpus.jsonl"))
    summary = {
        "users": len(c.users),
        "tweets": len(c.tweets),
        "words": len(c.word_vocab),
        "hashtags": len(c.hashtag_vocab),
        "domains": len(c.domain_vocab),
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_graphs(args) -> int:
    raw = corpus_mod.parse_corpus(args.corpus, args.format)
    c = corpus_mod.preprocess(raw, _preprocess_cfg(args))
    r = graph_mod.build_retweet_graph(c)
    m = graph_mod.build_mention_graph(c)
    dm = graph_mod.tsb_filter(r, m)
    dmw = graph_mod.tsb_filter_weighted(r, m)
    os.makedirs(args.out, exist_ok=True)
    for name, g in (("R", r), ("M", m), ("DeltaM", dm), ("DeltaMw", dmw)):
        graph_mod.save_graph(g, os.path.join(args.out, f"{name}.edges"), node_ids=c.users)
    print(f"wrote 4 graphs over {r.n} users to {args.out}")
    return 0


def _cmd_solve(args) -> int:
    spec = ExperimentSpec(
        corpus_path=args.corpus,
        corpus_format=args.format,
        method=args.method,
        graph_variant=args.graph_variant,
        k=args.k,
        preprocess=_preprocess_cfg(args),
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
    )
    data = prepare(spec)
    cfg = factorize.SolverConfig(
        k=args.k, alpha=args.alpha, beta=args.beta, gamma=args.gamma, theta=args.theta,
        max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed,
    )
    fs = run_solver(data, args.method, cfg)
    part = factorize.assign(fs.U)
    os.makedirs(args.out, exist_ok=True)
    factorize.save_factors(fs, args.out, cfg)
    with open(os.path.join(args.out, "partition.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "community"])
        for user, community in zip(data.corpus.users, part.assignment):
            writer.writerow([user, int(community)])
    if args.plot_trace:
        _plot_trace(fs.objective_trace, os.path.join(args.out, "objective_trace.png"))
    print(f"converged={fs.converged} iterations={fs.iterations} "
          f"objective={fs.objective_trace[-1]:.6g}")
    return 0


def _plot_trace(trace: list[float], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(trace)), trace)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _cmd_eval(args) -> int:
    part_map: dict[str, int] = {}
    with open(args.partition, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            part_map[row["user_id"]] = int(row["community"])
    label_map = synth.load_labels_csv(args.labels)
    users = list(part_map)
    missing = [u for u in users if u not in label_map]
    if missing:
        print(f"error: labels missing for users: {', '.join(missing[:10])}", file=sys.stderr)
        return 1
    assignment = np.array([part_map[u] for u in users])
    part = factorize.Partition(assignment=assignment, k=int(assignment.max()) + 1)
    lp = metrics.LabeledPartition(part, [label_map[u] for u in users])
    g = None
    if args.graph:
        g, _ = graph_mod.load_graph(args.graph)
    report = metrics.evaluate(lp, g)
    print(report.to_json())
    return 0


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec(
        corpus_path=args.corpus,
        corpus_format=args.format,
        labels_path=args.labels,
        method=args.method,
        graph_variant=args.graph_variant,
        k=args.k,
        grid=_parse_grid(args),
        restarts=args.restarts,
        pick=args.pick,
        seed=args.seed,
        threads=args.threads,
        out_dir=args.out,
        preprocess=_preprocess_cfg(args),
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
    )
    results = run_pipeline(spec)
    print(f"wrote {len(results)} result rows to {os.path.join(args.out, 'results.csv')}")
    return 0


def _cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        k_true=args.k_true,
        users_per_community=args.users_per_community,
        vocab_per_community=args.vocab_per_community,
        shared_vocab=args.shared_vocab,
        tweets_per_user=args.tweets_per_user,
        inner_retweet_rate=args.inner_retweet_rate,
        cross_retweet_rate=args.cross_retweet_rate,
        inner_mention_rate=args.inner_mention_rate,
        cross_mention_rate=args.cross_mention_rate,
        word_noise=args.word_noise,
        seed=args.seed,
    )
    c, labels = synth.generate(cfg)
    os.makedirs(args.out, exist_ok=True)
    corpus_mod.write_corpus_jsonl(c, os.path.join(args.out, "corpus.jsonl"))
    synth.write_labels_csv(labels, os.path.join(args.out, "labels.csv"))
    print(f"wrote {len(c.tweets)} tweets for {len(c.users)} users to {args.out}")
    return 0


def _cmd_table4(args) -> int:
    spec = ExperimentSpec(
        corpus_path=args.corpus,
        corpus_format=args.format,
        labels_path=args.labels,
        k=2,
        preprocess=_preprocess_cfg(args),
    )
    rows = run_table4(spec, weighted=not args.count_edges)
    for row in rows:
        print(f"{row['graph']:8s} inner={row['inner']:g} inter={row['inter']:g}")
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["graph", "inner", "inter"])
            writer.writeheader()
            writer.writerows(rows)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "graphs": _cmd_graphs,
    "solve": _cmd_solve,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
    "synth": _cmd_synth,
    "table4": _cmd_table4,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _apply_config_file(args)
    try:
        return _COMMANDS[args.command](args)
    except (corpus_mod.CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
