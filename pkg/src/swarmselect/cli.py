"""Command-line front-end.

Verbs: ``run`` (execute swarms/pipelines, write ledgers and a summary),
``report`` (tables and figures from a finished run directory),
``evaluate`` (score one word for debugging), ``serve-worker`` (TCP worker
process). Exit codes: 0 success, 2 configuration errors, 3 evaluator
input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from swarmselect.bpso import Variant
from swarmselect.config import ConfigError, RunConfig
from swarmselect.core import BinaryPosition
from swarmselect.fitness import MemoizedEvaluator
from swarmselect.ga import run_pipeline
from swarmselect.phylo.alignment import AlignmentError
from swarmselect.phylo.evaluate import PhyloEvaluator
from swarmselect.reports import (
    Summary,
    best_per_swarm_table,
    compare_methods,
    load_summary,
    plot_fitness_curves,
    plot_method_comparison,
    topology_table,
)
from swarmselect.runtime import (
    LocalTransport,
    RunLedger,
    TcpMasterTransport,
    master_loop,
    serve_worker,
)

EXIT_CONFIG = 2
EXIT_INPUT = 3

SUMMARY_COLUMNS = [
    "swarm", "rep", "method", "particles", "seed", "iterations", "evaluations",
    "unique_words", "terminus", "best_word", "ones", "removed", "b", "p",
    "fitness", "topology_id", "ledger",
]


def derive_seed(base: int, swarm: int, rep: int) -> int:
    return int(np.random.SeedSequence([base, swarm, rep]).generate_state(1)[0])


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg.apply_overrides(args.set or [])
    if getattr(args, "seed", None) is not None:
        cfg.set("engine.seed", str(args.seed))
        cfg.set("ga.seed", str(args.seed))
    if getattr(args, "method", None):
        cfg.set("runtime.method", args.method)
    if getattr(args, "particles", None):
        cfg.set("engine.L", str(args.particles))
    if getattr(args, "swarms", None):
        cfg.set("runtime.swarms", str(args.swarms))
    if getattr(args, "reps", None):
        cfg.set("runtime.reps", str(args.reps))
    if getattr(args, "transport", None):
        cfg.set("runtime.transport", args.transport)
    if getattr(args, "port", None) is not None:
        cfg.set("runtime.port", str(args.port))
    method = cfg.get("runtime.method")
    if method == "bpso1":
        cfg.set("engine.variant", Variant.VERSION_I.value)
    elif method == "bpso2":
        cfg.set("engine.variant", Variant.VERSION_II.value)
    return cfg


def _instance_label(cfg: RunConfig) -> str:
    if cfg.get("runtime.evaluator") == "planted":
        return f"planted{len(cfg.get('runtime.planted_word'))}"
    alignment = cfg.get("phylo.alignment")
    return Path(alignment).stem if alignment else "unknown"


def cmd_run(args) -> int:
    cfg = load_config(args)
    out_dir = Path(args.out or cfg.get("report.out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    factory = cfg.evaluator_factory()
    method = cfg.get("runtime.method")
    swarms = cfg.get_int("runtime.swarms")
    reps = cfg.get_int("runtime.reps")
    engine_cfg = cfg.engine_config()
    n = factory().instance_size()

    rows: list[list[str]] = []
    swarm_best: dict[int, tuple[float, str]] = {}
    for swarm in range(1, swarms + 1):
        for rep in range(1, reps + 1):
            ledger_name = f"ledger_s{swarm:02d}_r{rep:02d}.tsv"
            if method == "ga":
                row = _run_ga(cfg, factory, n, swarm, rep, out_dir, ledger_name)
            else:
                row = _run_bpso(cfg, engine_cfg, factory, n, swarm, rep, out_dir, ledger_name)
            rows.append(row)
            fitness, word = float(row[14]), row[9]
            incumbent = swarm_best.get(swarm)
            if incumbent is None or fitness > incumbent[0]:
                swarm_best[swarm] = (fitness, word)
            print(
                f"swarm {swarm} rep {rep}: best fitness {row[14]} "
                f"(b={row[12]}, p={row[13]}, word {row[9]})"
            )

    group_size = cfg.get("ga.population") if method == "ga" else cfg.get("engine.L")
    meta = (
        f"# instance={_instance_label(cfg)} method={method} "
        f"particles={group_size} n={n} p_mode={cfg.get('phylo.p_mode')}"
    )
    summary_path = out_dir / "summary.tsv"
    with open(summary_path, "w") as fh:
        fh.write(meta + "\n")
        fh.write("\t".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")

    _write_best_trees(cfg, factory, swarm_best, out_dir)
    print(f"wrote {summary_path}")
    return 0


def _run_bpso(cfg, engine_cfg, factory, n, swarm, rep, out_dir, ledger_name) -> list[str]:
    transport_kind = cfg.get("runtime.transport")
    workers = cfg.get_int("runtime.workers")
    run_id = f"{cfg.get('runtime.method')}-s{swarm:02d}-r{rep:02d}"
    if transport_kind == "tcp":
        transport = TcpMasterTransport(
            port=cfg.get_int("runtime.port"),
            n_workers=workers or engine_cfg.L,
            accept_timeout=cfg.get_float("runtime.barrier_timeout"),
        )
        print(f"waiting for {transport.n_workers} workers on port {transport.port}")
    else:
        transport = LocalTransport(factory, workers or engine_cfg.L)
    channels = transport.start()
    try:
        ledger = master_loop(
            engine_cfg,
            n,
            channels,
            run_id=run_id,
            seed=[engine_cfg.seed, swarm, rep],
            barrier_timeout=cfg.get_float("runtime.barrier_timeout"),
        )
    finally:
        transport.stop()
    ledger.write(out_dir / ledger_name)
    word, report = ledger.final_best
    iterations = max(rec.iteration for rec in ledger.records)
    unique = len({rec.word for rec in ledger.records})
    ones = word.count("1")
    return [
        str(swarm), str(rep), cfg.get("runtime.method"), str(engine_cfg.L),
        str(engine_cfg.seed), str(iterations), str(len(ledger.records)),
        str(unique), "-", word, str(ones), str(n - ones), f"{report.b!r}",
        f"{report.p!r}", f"{report.fitness!r}", report.topology_id, ledger_name,
    ]


def _run_ga(cfg, factory, n, swarm, rep, out_dir, ledger_name) -> list[str]:
    from dataclasses import replace

    pipeline_cfg = cfg.pipeline_config()
    pipeline_cfg = replace(pipeline_cfg, seed=derive_seed(pipeline_cfg.seed, swarm, rep))
    ev = factory()
    result = run_pipeline(ev, n, pipeline_cfg)
    ledger = RunLedger(run_id=f"ga-s{swarm:02d}-r{rep:02d}")
    for stage_idx, stage in enumerate(result.stages, start=1):
        for k, word_text in enumerate(stage.words):
            report = ev.evaluate(BinaryPosition.from_text(word_text))  # memo hit
            ledger.append(stage_idx, k, word_text, report)
    ledger.write(out_dir / ledger_name)
    word = result.best_word.text
    ones = word.count("1")
    return [
        str(swarm), str(rep), "ga", cfg.get("ga.population"),
        str(pipeline_cfg.seed), "-", str(result.total_evaluations),
        str(result.unique_evaluations), str(result.terminus), word, str(ones),
        str(n - ones), f"{result.best_report.b!r}", f"{result.best_report.p!r}",
        f"{result.best_report.fitness!r}", result.best_report.topology_id, ledger_name,
    ]


def _write_best_trees(cfg, factory, swarm_best, out_dir) -> None:
    from swarmselect.phylo.tree import display_rooted

    if cfg.get("runtime.evaluator") != "phylo":
        return
    evaluator = factory()
    inner = evaluator.inner if isinstance(evaluator, MemoizedEvaluator) else evaluator
    if not isinstance(inner, PhyloEvaluator):
        return
    for swarm, (_, word) in sorted(swarm_best.items()):
        tree = inner.supported_tree(BinaryPosition.from_text(word))
        rooted = display_rooted(tree, inner.matrix.outgroup)
        (out_dir / f"best_tree_s{swarm:02d}.nwk").write_text(rooted.newick() + "\n")


def cmd_report(args) -> int:
    directory = Path(args.dir)
    summary_path = directory / "summary.tsv"
    if not summary_path.exists():
        print(f"no summary.tsv under {directory}", file=sys.stderr)
        return EXIT_INPUT
    summary = load_summary(summary_path)
    ledgers = [
        (int(row["swarm"]), RunLedger.read(directory / row["ledger"]))
        for row in summary.rows
    ]

    topo = topology_table(ledgers)
    topo.write(directory, "topology_table")
    per_swarm = best_per_swarm_table(ledgers)
    per_swarm.write(directory, "best_per_swarm")
    written = ["topology_table", "best_per_swarm"]

    summaries: list[Summary] = [summary]
    for extra in args.summary or []:
        summaries.append(load_summary(extra))
    comparison = None
    if len(summaries) >= 2:
        comparison = compare_methods(summaries)
        comparison.write(directory, "method_comparison")
        written.append("method_comparison")

    if args.figures:
        plot_fitness_curves(ledgers, directory / "fitness_curve.png")
        written.append("fitness_curve.png")
        if comparison is not None:
            plot_method_comparison(comparison, directory / "method_comparison.png")
            written.append("method_comparison.png")

    print(per_swarm.text())
    print(topo.text())
    if comparison is not None:
        print(comparison.text())
    print(f"report written to {directory} ({', '.join(written)})")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args)
    factory = cfg.evaluator_factory()
    evaluator = factory()
    n = evaluator.instance_size()
    word = BinaryPosition.ones(n) if args.word == "all-ones" else BinaryPosition.from_text(args.word)
    if len(word) != n:
        print(f"word length {len(word)} != instance size {n}", file=sys.stderr)
        return EXIT_INPUT

    cache_path = cfg.get("runtime.cache")
    if cache_path and Path(cache_path).exists() and isinstance(evaluator, MemoizedEvaluator):
        evaluator = MemoizedEvaluator.load(cache_path, evaluator.inner)
    report = evaluator.evaluate(word)
    if cache_path and isinstance(evaluator, MemoizedEvaluator):
        evaluator.save(cache_path)

    print(f"word={word.text}")
    print(f"ones={word.text.count('1')}/{n}")
    print(f"b={report.b!r}")
    print(f"p={report.p!r}")
    print(f"fitness={report.fitness!r}")
    print(f"topology={report.topology_id or '-'}")
    if args.newick and isinstance(evaluator, MemoizedEvaluator) and isinstance(
        evaluator.inner, PhyloEvaluator
    ):
        print(evaluator.inner.supported_tree(word).newick())
    return 0


def cmd_serve_worker(args) -> int:
    cfg = load_config(args)
    factory = cfg.evaluator_factory()
    print(f"worker connecting to {args.host}:{args.port}")
    serve_worker(factory(), args.host, args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmselect",
        description="Binary subset selection by particle swarms, with a GA baseline "
        "and a neighbor-joining bootstrap fitness evaluator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run-configuration file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key")

    p_run = sub.add_parser("run", help="execute the configured optimization runs")
    common(p_run)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--method", choices=["bpso1", "bpso2", "ga"])
    p_run.add_argument("--particles", type=int)
    p_run.add_argument("--swarms", type=int)
    p_run.add_argument("--reps", type=int)
    p_run.add_argument("--transport", choices=["local", "tcp"])
    p_run.add_argument("--port", type=int)
    p_run.add_argument("--out", help="output directory (default report.out_dir)")
    p_run.set_defaults(func=cmd_run)

    p_report = sub.add_parser("report", help="tables and figures from a run directory")
    p_report.add_argument("--dir", required=True, help="directory containing summary.tsv")
    p_report.add_argument("--summary", action="append",
                          help="extra summary.tsv files for method comparison")
    p_report.add_argument("--no-figures", dest="figures", action="store_false")
    p_report.set_defaults(func=cmd_report, figures=True)

    p_eval = sub.add_parser("evaluate", help="score a single word")
    common(p_eval)
    p_eval.add_argument("--word", required=True,
                        help="binary word ('0'/'1' text) or 'all-ones'")
    p_eval.add_argument("--newick", action="store_true",
                        help="also print the supported tree (phylo evaluator)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_worker = sub.add_parser("serve-worker", help="connect to a master as a TCP worker")
    common(p_worker)
    p_worker.add_argument("--host", default="127.0.0.1")
    p_worker.add_argument("--port", type=int, required=True)
    p_worker.set_defaults(func=cmd_serve_worker)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AlignmentError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
