"""Command-line interface.

Subcommands: transform, reconstruct, denoise, pool, train-node,
train-graph, perturb, sweep, bench, verify. Exit codes: 0 success, 1 usage
error, 2 runtime failure, 3 verify failure.

Environment: ``UFG_THREADS`` caps BLAS/OpenMP threads (applied before numpy
loads, which is why all heavy imports here are deferred);
``UFG_DETERMINISTIC=1`` zeroes wall-clock fields so repeated runs emit
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via exit code 1."""

    def error(self, message):
        raise _UsageError(f"{self.format_usage()}error: {message}")


def _configure_threads() -> None:
    threads = os.environ.get("UFG_THREADS", "").strip()
    if not threads:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = threads


def _parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk[1:]:
            lo, hi = chunk.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(chunk))
    if not out:
        raise _UsageError(f"empty integer list: {text!r}")
    return out


def _parse_float_list(text: str) -> list[float]:
    vals = [float(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise _UsageError(f"empty float list: {text!r}")
    return vals


def _add_system_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dilation", type=float, default=2.0)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--degree", type=int, default=16)
    p.add_argument("--mode", choices=("exact", "chebyshev"), default="exact")


def _build_operator(graph, dilation, levels, degree, mode):
    from . import filters, graphs, transform

    lap = graphs.normalized_laplacian(graph)
    spectrum = None
    if mode == "exact":
        spectrum = graphs.eigendecompose(lap)
        lam = float(spectrum.values[-1]) if spectrum.values.size else 0.0
    else:
        lam = graphs.lambda_max(lap, "power_iteration")
    system = transform.make_system(
        filters.haar_filter_bank(), lam, dilation, levels, degree, mode
    )
    return transform.build_operators(system, lap, spectrum), system


def _cmd_transform(args) -> int:
    from . import io, transform

    graph = io.read_graph_text(args.graph)
    signal = io.read_features_csv(args.signal)
    op, system = _build_operator(
        graph, args.dilation, args.levels, args.degree, args.mode
    )
    stack = transform.decompose(op, signal)
    io.write_coefficients(stack, args.out)
    print(
        json.dumps(
            {
                "nodes": graph.num_nodes,
                "features": signal.shape[1],
                "blocks": op.num_blocks,
                "K": system.K,
                "out": args.out,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_reconstruct(args) -> int:
    import numpy as np

    from . import io, transform

    graph = io.read_graph_text(args.graph)
    stack = io.read_coefficients(args.coeffs)
    op, _ = _build_operator(
        graph, args.dilation, args.levels, args.degree, args.mode
    )
    signal = transform.reconstruct(op, stack)
    io.write_features_csv(signal, args.out)
    summary = {"nodes": graph.num_nodes, "out": args.out}
    if args.reference:
        ref = io.read_features_csv(args.reference)
        denom = float(np.linalg.norm(ref))
        err = float(np.linalg.norm(signal - ref))
        summary["relative_error"] = err / denom if denom else err
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_denoise(args) -> int:
    from . import experiments, io

    graph = io.read_graph_text(args.graph)
    noisy = io.read_features_csv(args.signal)
    truth = io.read_features_csv(args.truth) if args.truth else None
    _, system = _build_operator(
        graph, args.dilation, args.levels, args.degree, args.mode
    )
    denoised, report = experiments.denoise_signal(
        graph, noisy, system=system, sigma=args.sigma, truth=truth
    )
    io.write_features_csv(denoised, args.out)
    report["out"] = args.out
    print(json.dumps(report, sort_keys=True))
    return 0


def _cmd_pool(args) -> int:
    from . import io, nn

    graph = io.read_graph_text(args.graph)
    signal = io.read_features_csv(args.signal)
    op, _ = _build_operator(
        graph, args.dilation, args.levels, args.degree, args.mode
    )
    pooled, _ = nn.ufg_pool_forward(op, signal, args.pool_mode)
    io.write_features_csv(pooled[None, :], args.out)
    print(
        json.dumps(
            {"length": int(pooled.shape[0]), "mode": args.pool_mode, "out": args.out},
            sort_keys=True,
        )
    )
    return 0


def _node_dataset(args):
    from . import datasets

    if args.dataset == "citation":
        if not args.data_dir:
            raise _UsageError("--data-dir is required for the citation dataset")
        return datasets.load_citation(args.data_dir)
    sizes = _parse_int_list(args.sbm_sizes)
    if args.feature_model == "binary":
        model = datasets.BinaryFeatures(dim=args.feature_dim)
    else:
        model = datasets.GaussianFeatures(
            dim=args.feature_dim, noise_std=args.feature_noise
        )
    return datasets.generate_sbm(
        sizes, args.p_in, args.p_out, model, seed=args.data_seed
    )


def _experiment_config(args, task: str):
    from .experiments import ExperimentConfig

    return ExperimentConfig(
        task=task,
        dilation=args.dilation,
        levels=args.levels,
        degree=args.degree,
        mode=args.mode,
        activation=getattr(args, "activation", "relu"),
        sigma=getattr(args, "sigma", 1.0),
        threshold_mode=getattr(args, "threshold_mode", "energy_scaled"),
        pool_mode=getattr(args, "pool_mode", "spectrum"),
        hidden=args.hidden,
        lr=args.lr,
        weight_decay=args.weight_decay,
        dropout=args.dropout,
        epochs=args.epochs,
        patience=args.patience,
        seeds=tuple(_parse_int_list(args.seeds)),
    )


def _record_summary(record) -> dict:
    summary = {
        "fingerprint": record.fingerprint,
        "mean": record.mean,
        "std": record.std,
        "per_seed": list(record.per_seed),
        "wall_clock_s": record.wall_clock,
    }
    summary.update(record.extra)
    return summary


def _cmd_train_node(args) -> int:
    from . import experiments, io

    data = _node_dataset(args)
    config = _experiment_config(args, task=f"{args.dataset}_node")
    sink = [] if args.metrics_out else None
    record = experiments.train_node_classifier(data, config, metrics_sink=sink)
    if args.metrics_out:
        io.write_metrics_jsonl(sink, args.metrics_out)
    print(json.dumps(_record_summary(record), sort_keys=True, default=float))
    return 0


def _cmd_train_graph(args) -> int:
    from . import datasets, experiments, io

    if args.task == "cycles-stars":
        samples = datasets.cycles_and_stars(
            num_per_class=args.num_per_class, seed=args.data_seed
        )
    else:
        samples = datasets.sbm_graph_family(
            num_per_class=args.num_per_class, seed=args.data_seed
        )
    config = _experiment_config(args, task=args.task)
    sink = [] if args.metrics_out else None
    record = experiments.train_graph_classifier(samples, config, metrics_sink=sink)
    if args.metrics_out:
        io.write_metrics_jsonl(sink, args.metrics_out)
    summary = _record_summary(record)
    summary["majority_baseline"] = experiments.majority_class_accuracy(samples)
    print(json.dumps(summary, sort_keys=True, default=float))
    return 0


def _cmd_perturb(args) -> int:
    from . import io, perturb as perturb_mod

    graph = io.read_graph_text(args.graph)
    features = io.read_features_csv(args.features)
    spec = perturb_mod.PerturbationSpec(
        target=args.target, model=args.model, value=args.value, seed=args.seed
    )
    new_graph, new_features = perturb_mod.perturb(graph, features, spec)
    if args.out_graph:
        io.write_graph_text(new_graph, args.out_graph)
    if args.out_features:
        io.write_features_csv(new_features, args.out_features)
    summary = {
        "model": args.model,
        "value": args.value,
        "edges_before": graph.num_edges,
        "edges_after": new_graph.num_edges,
    }
    if args.model == "bernoulli_flip":
        import numpy as np

        nnz = int(np.count_nonzero(features))
        summary["flip_probability"] = min(1.0, args.value * nnz / features.size)
        summary["note"] = "ratio is relative to the nonzero entry count"
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    from . import experiments, io

    data = _node_dataset(args)
    base = _experiment_config(args, task="sensitivity_sweep")
    rows = experiments.sensitivity_sweep(
        data,
        _parse_float_list(args.dilation_grid),
        _parse_int_list(args.scale_grid),
        base,
    )
    ok_rows = [r for r in rows if "error" not in r]
    for row in rows:
        if "error" in row:
            print(f"sweep point {row['knob']}={row['value']} failed: {row['error']}",
                  file=sys.stderr)
    if not ok_rows:
        raise RuntimeError("every sweep point failed")
    text = io.emit_plot_data(ok_rows, "sweep", args.out)
    print(text, end="")
    return 0


def _cmd_bench(args) -> int:
    from . import experiments, io

    rows = experiments.bench_transform(
        _parse_int_list(args.sizes),
        avg_degree=args.avg_degree,
        levels=args.levels,
        degree=args.degree,
        dilation=args.dilation,
        repetitions=args.reps,
        seed=args.seed,
    )
    for row in rows:
        print(json.dumps(row, sort_keys=True, default=float))
    plot_rows = []
    for row in rows:
        if row.get("status") != "ok":
            continue
        for series in ("build", "transform"):
            plot_rows.append(
                {
                    "n": row["n"],
                    "series": series,
                    "mean_s": row[f"{series}_mean_s"],
                    "median_s": row[f"{series}_median_s"],
                }
            )
    if args.out and plot_rows:
        io.emit_plot_data(plot_rows, "bench", args.out)
    return 0


def _cmd_verify(args) -> int:
    from . import verify as verify_mod

    reports = verify_mod.run_verify(mode=args.mode, n=args.n, seed=args.seed)
    print(verify_mod.format_report(reports))
    return 0 if all(r["passed"] for r in reports) else 3


def _build_parser() -> _Parser:
    parser = _Parser(prog="ufg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transform", help="graph + signal -> coefficient file")
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--out", required=True)
    _add_system_flags(p)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("reconstruct", help="coefficient file -> signal")
    p.add_argument("--graph", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reference", help="original signal to compare against")
    _add_system_flags(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("denoise", help="soft-threshold high-pass coefficients")
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--truth", help="clean signal for MSE reporting")
    _add_system_flags(p)
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("pool", help="framelet pooling readout")
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool-mode", choices=("sum", "spectrum"), default="spectrum")
    _add_system_flags(p)
    p.set_defaults(func=_cmd_pool)

    def add_training_flags(p, with_activation=True):
        p.add_argument("--hidden", type=int, default=32)
        p.add_argument("--lr", type=float, default=0.01)
        p.add_argument("--weight-decay", type=float, default=0.005)
        p.add_argument("--dropout", type=float, default=0.5)
        p.add_argument("--epochs", type=int, default=200)
        p.add_argument("--patience", type=int, default=20)
        p.add_argument("--seeds", default="0-9")
        p.add_argument("--metrics-out")
        if with_activation:
            p.add_argument(
                "--activation", choices=("relu", "shrinkage"), default="relu"
            )
            p.add_argument("--sigma", type=float, default=1.0)
            p.add_argument(
                "--threshold-mode",
                choices=("global", "energy_scaled"),
                default="energy_scaled",
            )

    def add_sbm_flags(p):
        p.add_argument("--dataset", choices=("sbm", "citation"), default="sbm")
        p.add_argument("--data-dir")
        p.add_argument("--sbm-sizes", default="100,100,100")
        p.add_argument("--p-in", type=float, default=0.1)
        p.add_argument("--p-out", type=float, default=0.01)
        p.add_argument(
            "--feature-model", choices=("gaussian", "binary"), default="gaussian"
        )
        p.add_argument("--feature-dim", type=int, default=16)
        p.add_argument("--feature-noise", type=float, default=0.5)
        p.add_argument("--data-seed", type=int, default=0)

    p = sub.add_parser("train-node", help="node classification experiment")
    add_sbm_flags(p)
    add_training_flags(p)
    _add_system_flags(p)
    p.set_defaults(func=_cmd_train_node)

    p = sub.add_parser("train-graph", help="graph classification experiment")
    p.add_argument("--task", choices=("cycles-stars", "sbm-family"),
                   default="cycles-stars")
    p.add_argument("--num-per-class", type=int, default=100)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--pool-mode", choices=("sum", "spectrum", "mean"),
                   default="spectrum")
    add_training_flags(p, with_activation=False)
    _add_system_flags(p)
    p.set_defaults(func=_cmd_train_graph)

    p = sub.add_parser("perturb", help="apply a noise model to features or edges")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--target", choices=("features", "edges"), required=True)
    p.add_argument(
        "--model",
        choices=("bernoulli_flip", "gaussian", "edge_ratio"),
        required=True,
    )
    p.add_argument("--value", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-graph")
    p.add_argument("--out-features")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("sweep", help="dilation/scale sensitivity sweep")
    add_sbm_flags(p)
    add_training_flags(p)
    _add_system_flags(p)
    p.add_argument("--dilation-grid",
                   default="1.25,1.5,1.75,2.0,2.25,2.5,2.75,3.0,3.25,3.5,3.75,4.0")
    p.add_argument("--scale-grid", default="1-8")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="time operator build and transform")
    p.add_argument("--sizes", default="1000,2000,4000,8000")
    p.add_argument("--avg-degree", type=float, default=1.5)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--dilation", type=float, default=2.0)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--mode", choices=("exact", "chebyshev"), default="exact")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    _configure_threads()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help exits directly
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (KeyboardInterrupt, MemoryError) as exc:
        print(f"error: {type(exc).__name__}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
