"""Command-line interface: ``generate``, ``discover``, ``evaluate``, ``fit-report``.

Exit codes: 0 on success, 1 for usage or validation errors (bad flags, files
that do not parse, inconsistent configs), 2 for runtime failures such as a
diverging training run.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import GenConfig, generate_dataset
from .discovery import DiscoveryConfig, TrainingDivergedError, discover, standardize
from .io import (
    FormatError,
    RunConfig,
    atomic_write,
    dump_json,
    format_matrix,
    load_config,
    read_dataset,
    read_graph,
    write_dataset,
    write_graph,
    write_manifest,
)
from .metrics import MetricsReport, evaluate
from .model import ConfigurationError, forward_all
from .constraints import softmax_columns

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    """Bad command-line input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lagcausal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate a dataset and its ground-truth graph")
    g.add_argument("--config", help="JSON run config (generate and sweep sections)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--T", type=int)
    g.add_argument("--max-lag", type=int, dest="max_lag")
    g.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    g.add_argument("--control-points", type=int, dest="control_points")
    g.add_argument("--seed", type=int)
    g.add_argument("--jobs", type=int, default=1, help="parallel sweep cells (default 1)")

    d = sub.add_parser("discover", help="learn a causal graph from a dataset CSV")
    d.add_argument("dataset", help="dataset CSV (one column per variable)")
    d.add_argument("--config", help="JSON run config (discover section)")
    d.add_argument("--out", required=True, help="output directory")
    d.add_argument("--no-header", action="store_true", help="the CSV has no name row")
    d.add_argument("--self-causation", action="store_true", help="allow and report self-loops")
    d.add_argument("--seed", type=int)
    d.add_argument("--epochs", type=int)
    d.add_argument("--threshold", type=float)

    e = sub.add_parser("evaluate", help="score a predicted graph against the truth")
    e.add_argument("predicted", help="predicted graph file")
    e.add_argument("truth", help="ground-truth graph file")
    e.add_argument("--out", help="directory for report.txt and metrics.csv")
    e.add_argument("--self-loops", action="store_true", help="also compare diagonal entries")

    f = sub.add_parser("fit-report", help="train/test MSE gap across sample sizes")
    f.add_argument("--config", help="JSON run config (generate, discover, fit_report)")
    f.add_argument("--sizes", type=_int_list, help="comma-separated series lengths")
    f.add_argument("--seeds", type=_int_list, help="comma-separated seeds to average over")
    f.add_argument("--out", required=True, help="output directory")
    return p


# -- generate ---------------------------------------------------------------

def _generate_cell(gen: GenConfig, out_dir: Path, config: dict) -> None:
    ds, graph = generate_dataset(gen)
    write_dataset(out_dir / "data.csv", ds)
    write_graph(out_dir / "graph.txt", graph)
    write_manifest(out_dir, "generate", config, gen.seed, ["data.csv", "graph.txt"])


def _gen_dict(gen: GenConfig) -> dict:
    out = dataclasses.asdict(gen)
    out["weight_range"] = list(out["weight_range"])
    return out


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    overrides = {k: getattr(args, k) for k in ("n", "d", "T", "max_lag", "noise_sigma",
                                               "control_points", "seed")}
    base = {**cfg.raw["generate"], **{k: v for k, v in overrides.items() if v is not None}}
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    out = Path(args.out)
    cells = cfg.sweep_cells()
    if not cells:
        gen = _validated_gen(base)
        _generate_cell(gen, out, {"generate": _gen_dict(gen)})
        print(f"wrote {out / 'data.csv'} and {out / 'graph.txt'}")
        return EXIT_OK
    gens = [_validated_gen({**base, **cell}) for cell in cells]
    names = [f"cell_{i:03d}" for i in range(len(gens))]
    jobs = [(g, out / name, {"generate": _gen_dict(g)}) for g, name in zip(gens, names)]
    if args.jobs == 1:
        for job in jobs:
            _generate_cell(*job)
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for fut in [pool.submit(_generate_cell, *job) for job in jobs]:
                fut.result()
    index = {"cells": [{"dir": name, **cell} for name, cell in zip(names, cells)]}
    atomic_write(out / "sweep.json", dump_json(index))
    write_manifest(out, "generate-sweep", cfg.to_dict(), base.get("seed", 0), ["sweep.json"])
    print(f"wrote {len(gens)} sweep cells under {out}")
    return EXIT_OK


def _validated_gen(values: dict) -> GenConfig:
    try:
        return GenConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid generate config: {exc}") from None


# -- discover ---------------------------------------------------------------

def _discovery_config(cfg: RunConfig, **overrides) -> DiscoveryConfig:
    changes = {k: v for k, v in overrides.items() if v is not None}
    try:
        return cfg.discovery.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid discover config: {exc}") from None


def cmd_discover(args) -> int:
    cfg = load_config(args.config)
    dcfg = _discovery_config(
        cfg, seed=args.seed, epochs=args.epochs, threshold=args.threshold,
        self_causation=True if args.self_causation else None,
    )
    ds = read_dataset(args.dataset, header=not args.no_header)
    if ds.n_vars < 2:
        raise UsageError(f"{args.dataset}: need at least 2 variables, got {ds.n_vars}")
    if ds.n_steps <= dcfg.receptive_field:
        raise ConfigurationError(
            f"{args.dataset}: series length T={ds.n_steps} must exceed the receptive field "
            f"RF={dcfg.receptive_field}"
        )
    graph, attention, traces, models = discover(ds, dcfg, return_models=True)
    out = Path(args.out)
    files = ["graph.txt", "attention.csv", "trace.csv"]
    write_graph(out / "graph.txt", graph)
    atomic_write(out / "attention.csv", format_matrix(softmax_columns(attention), ds.names))
    atomic_write(out / "trace.csv", _traces_csv(traces))
    for r, model in enumerate(models):
        name = "model.json" if r == 0 else f"model_{r}.json"
        atomic_write(out / name, model.to_json())
        files.append(name)
    config = {"discover": dataclasses.asdict(dcfg), "dataset": Path(args.dataset).name,
              "header": not args.no_header}
    write_manifest(out, "discover", config, dcfg.seed, files)
    print(f"{graph.n_edges} edge(s) written to {out / 'graph.txt'}")
    return EXIT_OK


def _traces_csv(traces) -> str:
    lines = []
    for r, tr in enumerate(traces):
        body = tr.to_csv().splitlines()
        if r == 0:
            lines.append("restart," + body[0])
        lines.extend(f"{r},{row}" for row in body[1:])
    return "\n".join(lines) + "\n"


# -- evaluate ---------------------------------------------------------------

def cmd_evaluate(args) -> int:
    pred = read_graph(args.predicted)
    truth = read_graph(args.truth)
    if pred.n != truth.n:
        raise UsageError(f"graph sizes differ: {args.predicted} has n={pred.n}, "
                         f"{args.truth} has n={truth.n}")
    report = evaluate(pred, truth, self_loops=args.self_loops)
    text = report.to_text()
    if args.out:
        out = Path(args.out)
        atomic_write(out / "report.txt", text)
        atomic_write(out / "metrics.csv", MetricsReport.csv_header() + "\n" + report.csv_row() + "\n")
        config = {"predicted": Path(args.predicted).name, "truth": Path(args.truth).name,
                  "self_loops": args.self_loops}
        write_manifest(out, "evaluate", config, None, ["report.txt", "metrics.csv"])
    sys.stdout.write(text)
    return EXIT_OK


# -- fit-report -------------------------------------------------------------

def fit_gap(values: np.ndarray, dcfg: DiscoveryConfig, train_fraction: float = 0.7):
    """Train on the first ``train_fraction`` of a series; return ``(train_mse, test_mse)``.

    The split is chronological. Test predictions see the training part as
    history, as in one-step-ahead forecasting. When ``dcfg.standardize`` is
    set, the scaling uses training statistics only. Both MSEs are averaged
    over variables and skip the first receptive-field samples.
    """
    values = np.asarray(values, dtype=np.float64)
    T = values.shape[1]
    n_train = int(round(train_fraction * T))
    rf = dcfg.receptive_field
    if n_train <= rf or n_train >= T:
        raise ConfigurationError(
            f"size T={T} gives {n_train} training samples; need more than RF={rf} "
            "and at least one test sample"
        )
    if dcfg.standardize:
        mean = values[:, :n_train].mean(axis=1, keepdims=True)
        std = values[:, :n_train].std(axis=1, keepdims=True)
        values = (values - mean) / np.where(std > 0, std, 1.0)
    _, _, _, models = discover(values[:, :n_train], dcfg.replace(standardize=False), return_models=True)
    pred = np.mean([forward_all(m, values) for m in models], axis=0)
    sq = (pred - values) ** 2
    return float(np.mean(sq[:, rf:n_train])), float(np.mean(sq[:, n_train:]))


def fit_report_rows(gen: GenConfig, dcfg: DiscoveryConfig, sizes, seeds, train_fraction=0.7):
    """Per-run rows ``(size, seed, train, test)`` and per-size seed means."""
    runs, table = [], []
    for size in sizes:
        pairs = []
        for seed in seeds:
            ds, _ = generate_dataset(gen.replace(T=size, seed=seed))
            tr, te = fit_gap(ds.values, dcfg.replace(seed=seed), train_fraction)
            runs.append((size, seed, tr, te))
            pairs.append((tr, te))
        tr_mean, te_mean = np.mean(pairs, axis=0)
        table.append((size, float(tr_mean), float(te_mean), float(te_mean - tr_mean)))
    return runs, table


def cmd_fit_report(args) -> int:
    cfg = load_config(args.config)
    sizes = args.sizes or cfg.fit_sizes
    seeds = args.seeds or cfg.fit_seeds
    dcfg = cfg.discovery
    for size in sizes:
        n_train = int(round(cfg.train_fraction * size))
        if size <= cfg.gen.max_lag or n_train <= dcfg.receptive_field or n_train >= size:
            raise UsageError(
                f"size {size} is too small: its {n_train} training samples must exceed "
                f"RF={dcfg.receptive_field}"
            )
    runs, table = fit_report_rows(cfg.gen, dcfg, sizes, seeds, cfg.train_fraction)
    out = Path(args.out)
    report = ["size,train_mse,test_mse,gap"]
    report += [f"{s},{tr!r},{te!r},{gap!r}" for s, tr, te, gap in table]
    detail = ["size,seed,train_mse,test_mse"]
    detail += [f"{s},{seed},{tr!r},{te!r}" for s, seed, tr, te in runs]
    atomic_write(out / "fit_report.csv", "\n".join(report) + "\n")
    atomic_write(out / "fit_runs.csv", "\n".join(detail) + "\n")
    config = {**cfg.to_dict(), "sizes": sizes, "seeds": seeds}
    write_manifest(out, "fit-report", config, seeds, ["fit_report.csv", "fit_runs.csv"])
    print("\n".join(report))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "discover": cmd_discover,
    "evaluate": cmd_evaluate,
    "fit-report": cmd_fit_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, FormatError, ConfigurationError, FileNotFoundError,
            IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"lagcausal {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, FloatingPointError, OSError) as exc:
        print(f"lagcausal {args.command}: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
