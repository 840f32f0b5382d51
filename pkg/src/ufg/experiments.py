"""Desk-scale experiment drivers.

Node and graph classification with framelet convolutions, framelet
denoising, hyperparameter sensitivity sweeps and transform benchmarking.
Every driver is deterministic given its config and seeds; in deterministic
mode (``UFG_DETERMINISTIC=1``) recorded wall-clock fields are zeroed so
re-runs produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .datasets import GraphSample, NodeDataset
from .filters import haar_filter_bank
from .graphs import (
    EXACT_SPECTRUM_MAX_NODES,
    eigendecompose,
    lambda_max,
    normalized_laplacian,
)
from .io import deterministic_mode
from .nn import (
    AdamState,
    ConvLayerParams,
    LayerActivation,
    accuracy,
    adam_step,
    dropout_backward,
    dropout_forward,
    gcn_conv_backward,
    gcn_conv_forward,
    gcn_norm_adjacency,
    init_params,
    mlp_backward,
    mlp_forward,
    mlp_init,
    softmax_cross_entropy,
    ufg_conv_backward,
    ufg_conv_forward,
    ufg_pool_backward,
    ufg_pool_forward,
)
from .shrinkage import ThresholdConfig, compression_ratio, shrink_stack
from .transform import (
    DecompositionOperator,
    build_operators,
    chebyshev_decompose,
    chebyshev_reconstruct,
    decompose,
    make_system,
    reconstruct,
)

DEFAULT_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one experiment family.

    Defaults are the grid centroids used throughout: lr 0.01, weight decay
    0.005, hidden width 32, dropout 0.5, 200 epochs, patience 20.
    ``grid`` optionally maps field names to candidate tuples for
    ``expand_grid``.
    """

    task: str = "sbm_node"
    dilation: float = 2.0
    levels: int = 2
    degree: int = 16
    mode: str = "exact"
    activation: str = "relu"
    sigma: float = 1.0
    threshold_mode: str = "energy_scaled"
    pool_mode: str = "spectrum"
    hidden: int = 32
    lr: float = 0.01
    weight_decay: float = 0.005
    dropout: float = 0.5
    epochs: int = 200
    patience: int = 20
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    grid: tuple[tuple[str, tuple], ...] | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.activation not in ("relu", "shrinkage", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.pool_mode not in ("sum", "spectrum", "mean"):
            raise ValueError(f"unknown pool mode {self.pool_mode!r}")

    def fingerprint(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def expand_grid(config: ExperimentConfig):
    """Yield configs over the cartesian product of ``config.grid``."""
    if not config.grid:
        yield config
        return
    names = [name for name, _ in config.grid]
    for combo in itertools.product(*(values for _, values in config.grid)):
        yield replace(config, grid=None, **dict(zip(names, combo)))


@dataclass(frozen=True)
class MetricsRecord:
    """Aggregated per-seed results of one experiment config.

    ``per_seed`` may contain NaN for seeds that diverged (aborted on
    non-finite loss); mean/std are over the finite entries and the failures
    are listed in ``extra["failed_seeds"]``.
    """

    fingerprint: str
    per_seed: tuple[float, ...]
    mean: float
    std: float
    wall_clock: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        finite = [x for x in self.per_seed if np.isfinite(x)]
        if finite:
            if not (min(finite) - 1e-12 <= self.mean <= max(finite) + 1e-12):
                raise ValueError("mean must lie within the per-seed range")


def make_record(
    fingerprint: str,
    per_seed: list[float],
    wall_clock: float,
    extra: dict | None = None,
) -> MetricsRecord:
    finite = [x for x in per_seed if np.isfinite(x)]
    extra = dict(extra or {})
    failed = [i for i, x in enumerate(per_seed) if not np.isfinite(x)]
    if failed:
        extra["failed_seeds"] = failed
    if not finite:
        raise ValueError("every seed failed")
    return MetricsRecord(
        fingerprint=fingerprint,
        per_seed=tuple(per_seed),
        mean=float(np.mean(finite)),
        std=float(np.std(finite)),
        wall_clock=0.0 if deterministic_mode() else float(wall_clock),
        extra=extra,
    )


def _elapsed(start: float) -> float:
    return 0.0 if deterministic_mode() else time.perf_counter() - start


def build_node_operator(
    data: NodeDataset, config: ExperimentConfig
) -> DecompositionOperator:
    """Framelet operator for a node dataset under the config's system."""
    lap = normalized_laplacian(data.graph)
    spectrum = None
    if config.mode == "exact":
        spectrum = eigendecompose(lap)
        lam = float(spectrum.values[-1]) if spectrum.values.size else 0.0
    else:
        lam = lambda_max(lap, "power_iteration")
    system = make_system(
        haar_filter_bank(),
        lam,
        dilation=config.dilation,
        levels=config.levels,
        degree=config.degree,
        mode=config.mode,
    )
    return build_operators(system, lap, spectrum)


def _layer_activations(config: ExperimentConfig) -> tuple[LayerActivation, LayerActivation]:
    if config.activation == "shrinkage":
        cfg = ThresholdConfig(config.sigma, config.threshold_mode)
        return LayerActivation.shrinkage(cfg), LayerActivation.shrinkage(cfg)
    if config.activation == "relu":
        return LayerActivation.relu(), LayerActivation.none()
    return LayerActivation.none(), LayerActivation.none()


def _conv_params(params: dict[str, np.ndarray], prefix: str) -> ConvLayerParams:
    return ConvLayerParams(
        W=params[f"{prefix}.W"],
        theta=params[f"{prefix}.theta"],
        bias=params[f"{prefix}.bias"],
    )


def _node_forward(
    params: dict[str, np.ndarray],
    op: DecompositionOperator,
    X: np.ndarray,
    acts: tuple[LayerActivation, LayerActivation],
    dropout_p: float,
    rng,
    training: bool,
):
    h1, c1 = ufg_conv_forward(_conv_params(params, "l1"), op, X, acts[0])
    hd, cd = dropout_forward(h1, dropout_p, rng, training)
    logits, c2 = ufg_conv_forward(_conv_params(params, "l2"), op, hd, acts[1])
    return logits, (c1, cd, c2)


def _layer_compression(
    params: dict[str, np.ndarray],
    op: DecompositionOperator,
    X: np.ndarray,
    acts: tuple[LayerActivation, LayerActivation],
    sigma: float,
    threshold_mode: str,
) -> float:
    """Final-layer compression ratio in evaluation mode (no dropout)."""
    h1, _ = ufg_conv_forward(_conv_params(params, "l1"), op, X, acts[0])
    p2 = _conv_params(params, "l2")
    coeff = decompose(op, h1 @ p2.W)
    before = coeff.with_data(p2.theta[:, None] * coeff.data)
    after = shrink_stack(before, ThresholdConfig(sigma, threshold_mode))
    return compression_ratio(before, after)


def train_node_single(
    data: NodeDataset,
    op: DecompositionOperator,
    config: ExperimentConfig,
    seed: int,
    metrics_sink: list | None = None,
) -> dict:
    """One seeded node-classification run.

    Two framelet convolutions with dropout between, softmax cross entropy on
    the training mask, Adam with coupled L2 on the dense weights only.
    Model selection keeps the epoch with the best validation accuracy and
    reports its test accuracy. Returns NaN accuracy if the loss diverges.
    """
    rng = np.random.default_rng(seed)
    X, labels = data.features, data.labels
    num_classes = data.num_classes
    acts = _layer_activations(config)
    l1 = init_params(X.shape[1], config.hidden, op.num_rows, rng)
    l2 = init_params(config.hidden, num_classes, op.num_rows, rng)
    params = {
        "l1.W": l1.W, "l1.theta": l1.theta, "l1.bias": l1.bias,
        "l2.W": l2.W, "l2.theta": l2.theta, "l2.bias": l2.bias,
    }
    adam = AdamState(lr=config.lr)
    decay_keys = {"l1.W", "l2.W"}
    best = {"val": -1.0, "test": np.nan, "epoch": -1, "params": params}
    failed = False
    for epoch in range(config.epochs):
        logits, (c1, cd, c2) = _node_forward(
            params, op, X, acts, config.dropout, rng, training=True
        )
        loss, dlogits = softmax_cross_entropy(logits, labels, data.train_mask)
        if not np.isfinite(loss):
            failed = True
            break
        dh, dW2, dth2, db2 = ufg_conv_backward(c2, dlogits)
        dh1 = dropout_backward(cd, dh)
        _, dW1, dth1, db1 = ufg_conv_backward(c1, dh1)
        grads = {
            "l1.W": dW1, "l1.theta": dth1, "l1.bias": db1,
            "l2.W": dW2, "l2.theta": dth2, "l2.bias": db2,
        }
        params = adam_step(adam, params, grads, config.weight_decay, decay_keys)
        eval_logits, _ = _node_forward(
            params, op, X, acts, config.dropout, rng=None, training=False
        )
        val_acc = accuracy(eval_logits, labels, data.val_mask)
        test_acc = accuracy(eval_logits, labels, data.test_mask)
        if metrics_sink is not None:
            train_acc = accuracy(eval_logits, labels, data.train_mask)
            for split, acc_val in (
                ("train", train_acc), ("val", val_acc), ("test", test_acc)
            ):
                metrics_sink.append(
                    {"seed": seed, "epoch": epoch, "split": split,
                     "loss": float(loss), "accuracy": acc_val}
                )
        if val_acc > best["val"]:
            best = {
                "val": val_acc,
                "test": test_acc,
                "epoch": epoch,
                "params": {k: v.copy() for k, v in params.items()},
            }
    out = {
        "seed": seed,
        "test_accuracy": np.nan if failed else best["test"],
        "val_accuracy": best["val"],
        "best_epoch": best["epoch"],
        "failed": failed,
    }
    if config.activation == "shrinkage" and not failed:
        out["compression_ratio"] = _layer_compression(
            best["params"], op, X, acts, config.sigma, config.threshold_mode
        )
    return out


def train_node_classifier(
    data: NodeDataset,
    config: ExperimentConfig,
    metrics_sink: list | None = None,
) -> MetricsRecord:
    """Multi-seed node classification; see ``train_node_single``."""
    start = time.perf_counter()
    op = build_node_operator(data, config)
    per_seed: list[float] = []
    compressions: list[float] = []
    for seed in config.seeds:
        result = train_node_single(data, op, config, seed, metrics_sink)
        per_seed.append(result["test_accuracy"])
        if "compression_ratio" in result:
            compressions.append(result["compression_ratio"])
    extra: dict = {"task": config.task, "activation": config.activation}
    if compressions:
        extra["compression_ratio"] = float(np.mean(compressions))
    return make_record(config.fingerprint(), per_seed, _elapsed(start), extra)


def _prepare_graph_contexts(samples: list[GraphSample], config: ExperimentConfig):
    contexts = []
    for s in samples:
        norm_adj = gcn_norm_adjacency(s.graph)
        op = None
        if config.pool_mode in ("sum", "spectrum"):
            lap = normalized_laplacian(s.graph)
            spectrum = eigendecompose(lap)
            lam = float(spectrum.values[-1]) if spectrum.values.size else 0.0
            system = make_system(
                haar_filter_bank(),
                lam,
                dilation=config.dilation,
                levels=config.levels,
                degree=config.degree,
                mode="exact",
            )
            op = build_operators(system, lap, spectrum)
        contexts.append({"sample": s, "norm_adj": norm_adj, "op": op})
    return contexts


def _graph_forward(params, ctx, config):
    s: GraphSample = ctx["sample"]
    y1, c1 = gcn_conv_forward(params["g1.W"], ctx["norm_adj"], s.features)
    y2, c2 = gcn_conv_forward(params["g2.W"], ctx["norm_adj"], y1)
    if config.pool_mode == "mean":
        pooled = y2.mean(axis=0)
        cp = {"mode": "mean", "num_nodes": y2.shape[0]}
    else:
        pooled, cp = ufg_pool_forward(ctx["op"], y2, config.pool_mode)
    logits, cm = mlp_forward(params, pooled)
    return logits[0], (c1, c2, cp, cm)


def _graph_backward(caches, dlogits, config):
    c1, c2, cp, cm = caches
    mlp_grads, dpooled = mlp_backward(cm, dlogits[None, :])
    dpooled = dpooled[0]
    if config.pool_mode == "mean":
        n = cp["num_nodes"]
        dy2 = np.tile(dpooled / n, (n, 1))
    else:
        dy2 = ufg_pool_backward(cp, dpooled)
    dy1, dW2 = gcn_conv_backward(c2, dy2)
    _, dW1 = gcn_conv_backward(c1, dy1)
    grads = {"g1.W": dW1, "g2.W": dW2}
    grads.update(mlp_grads)
    return grads


def _graph_eval(params, contexts, idx, config) -> float:
    correct = 0
    for i in idx:
        logits, _ = _graph_forward(params, contexts[i], config)
        if int(np.argmax(logits)) == contexts[i]["sample"].label:
            correct += 1
    return correct / len(idx)


def train_graph_single(
    contexts, config: ExperimentConfig, seed: int, metrics_sink: list | None = None
) -> dict:
    """One seeded graph-classification run.

    Two GCN layers, a pooling readout (framelet sum/spectrum or mean
    baseline) and a two-layer MLP; 80/10/10 split, early stopping after
    ``patience`` epochs without validation improvement, best-validation
    model selection.
    """
    rng = np.random.default_rng(seed)
    m = len(contexts)
    perm = rng.permutation(m)
    n_train = int(round(0.8 * m))
    n_val = max(1, int(round(0.1 * m)))
    train_idx = perm[:n_train]
    val_idx = perm[n_train : n_train + n_val]
    test_idx = perm[n_train + n_val :]
    if len(test_idx) == 0:
        raise ValueError("dataset too small for an 80/10/10 split")
    d_in = contexts[0]["sample"].features.shape[1]
    labels_all = [c["sample"].label for c in contexts]
    num_classes = max(labels_all) + 1
    hidden = config.hidden
    if config.pool_mode == "mean":
        pool_dim = hidden
    else:
        pool_dim = contexts[0]["op"].num_blocks * hidden

    def xavier(fan_in, fan_out):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    params = {"g1.W": xavier(d_in, hidden), "g2.W": xavier(hidden, hidden)}
    params.update(mlp_init(pool_dim, hidden, num_classes, rng))
    adam = AdamState(lr=config.lr)
    decay_keys = {"g1.W", "g2.W", "W1", "W2"}
    best = {"val": -1.0, "params": params, "epoch": -1}
    stale = 0
    failed = False
    for epoch in range(config.epochs):
        grads_sum = {k: np.zeros_like(v) for k, v in params.items()}
        loss_sum = 0.0
        for i in rng.permutation(train_idx):
            logits, caches = _graph_forward(params, contexts[i], config)
            loss_i, dlogits = softmax_cross_entropy(
                logits[None, :], np.array([contexts[i]["sample"].label])
            )
            loss_sum += loss_i
            for k, g in _graph_backward(caches, dlogits[0], config).items():
                grads_sum[k] += g
        loss = loss_sum / len(train_idx)
        if not np.isfinite(loss):
            failed = True
            break
        grads = {k: g / len(train_idx) for k, g in grads_sum.items()}
        params = adam_step(adam, params, grads, config.weight_decay, decay_keys)
        val_acc = _graph_eval(params, contexts, val_idx, config)
        if metrics_sink is not None:
            metrics_sink.append(
                {"seed": seed, "epoch": epoch, "split": "val",
                 "loss": float(loss), "accuracy": val_acc}
            )
        if val_acc > best["val"]:
            best = {
                "val": val_acc,
                "params": {k: v.copy() for k, v in params.items()},
                "epoch": epoch,
            }
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    test_acc = (
        np.nan if failed else _graph_eval(best["params"], contexts, test_idx, config)
    )
    return {
        "seed": seed,
        "test_accuracy": test_acc,
        "val_accuracy": best["val"],
        "best_epoch": best["epoch"],
        "failed": failed,
    }


def train_graph_classifier(
    samples: list[GraphSample],
    config: ExperimentConfig,
    metrics_sink: list | None = None,
) -> MetricsRecord:
    """Multi-seed graph classification; see ``train_graph_single``."""
    start = time.perf_counter()
    contexts = _prepare_graph_contexts(samples, config)
    per_seed = []
    for seed in config.seeds:
        result = train_graph_single(contexts, config, seed, metrics_sink)
        per_seed.append(result["test_accuracy"])
    extra = {"task": config.task, "pool_mode": config.pool_mode}
    return make_record(config.fingerprint(), per_seed, _elapsed(start), extra)


def majority_class_accuracy(samples: list[GraphSample]) -> float:
    labels = np.array([s.label for s in samples])
    _, counts = np.unique(labels, return_counts=True)
    return float(counts.max() / labels.size)


def denoise_signal(
    graph,
    noisy_signal: np.ndarray,
    system=None,
    sigma: float = 1.0,
    truth: np.ndarray | None = None,
    op: DecompositionOperator | None = None,
) -> tuple[np.ndarray, dict]:
    """Framelet denoising: decompose, soft-threshold high passes, reconstruct.

    Uses the global universal threshold scaled by ``sigma``. Pass ``op`` to
    reuse a prebuilt operator; otherwise one is built from ``system`` (or a
    default exact two-level Haar system).
    """
    noisy = np.asarray(noisy_signal, dtype=np.float64)
    squeeze = noisy.ndim == 1
    if squeeze:
        noisy = noisy[:, None]
    if op is None:
        lap = normalized_laplacian(graph)
        if system is None:
            spectrum = eigendecompose(lap)
            lam = float(spectrum.values[-1]) if spectrum.values.size else 0.0
            system = make_system(haar_filter_bank(), lam, levels=2, mode="exact")
        else:
            spectrum = (
                eigendecompose(lap)
                if system.mode == "exact"
                and graph.num_nodes <= EXACT_SPECTRUM_MAX_NODES
                else None
            )
        op = build_operators(system, lap, spectrum)
    coeff = decompose(op, noisy)
    shrunk = shrink_stack(coeff, ThresholdConfig(sigma, "global"))
    denoised = reconstruct(op, shrunk)
    report: dict = {"sigma": sigma}
    if truth is not None:
        t = np.asarray(truth, dtype=np.float64)
        if t.ndim == 1:
            t = t[:, None]
        report["mse_denoised"] = float(np.mean((denoised - t) ** 2))
        report["mse_noisy"] = float(np.mean((noisy - t) ** 2))
    if squeeze:
        denoised = denoised[:, 0]
    return denoised, report


def sensitivity_sweep(
    data: NodeDataset,
    dilation_grid,
    scale_grid,
    base_config: ExperimentConfig,
) -> list[dict]:
    """Accuracy versus dilation (levels fixed) and versus levels (dilation 2).

    One row per grid point with mean and std over the config's seeds;
    per-point failures are recorded in the row and the sweep continues.
    """
    rows: list[dict] = []
    points = [("dilation", float(v)) for v in dilation_grid]
    points += [("scale", int(v)) for v in scale_grid]
    for knob, value in points:
        if knob == "dilation":
            cfg = replace(base_config, dilation=value)
        else:
            cfg = replace(base_config, dilation=2.0, levels=value)
        row = {"knob": knob, "value": value}
        try:
            record = train_node_classifier(data, cfg)
            row.update(
                {"mean": record.mean, "std": record.std,
                 "fingerprint": record.fingerprint}
            )
        except Exception as exc:  # per-point isolation, sweep continues
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def bench_transform(
    node_sizes,
    avg_degree: float = 1.5,
    levels: int = 1,
    degree: int = 5,
    dilation: float = 2.0,
    num_features: int = 4,
    repetitions: int = 100,
    seed: int = 0,
) -> list[dict]:
    """Time Chebyshev operator build and decompose+reconstruct per size.

    Random sparse ER graphs; per size, reports mean and median seconds over
    ``repetitions`` plus the nnz of every operator block. The transform is
    timed matrix-free (per-factor recurrences on the signal), so its cost
    tracks the factor count rather than the fill-in of materialized blocks.
    Out-of-memory records the size as skipped instead of failing the run.
    """
    from .datasets import random_er_graph

    sizes = list(node_sizes)
    if sizes != sorted(sizes):
        raise ValueError("node sizes must be ascending")
    bank = haar_filter_bank()
    rows: list[dict] = []
    for n in sizes:
        row: dict = {"n": int(n), "levels": levels, "degree": degree}
        try:
            graph = random_er_graph(int(n), avg_degree, seed)
            lap = normalized_laplacian(graph)
            lam = lambda_max(lap, "power_iteration")
            system = make_system(
                bank, lam, dilation=dilation, levels=levels,
                degree=degree, mode="chebyshev",
            )
            build_times = []
            op = None
            for _ in range(repetitions):
                t0 = time.perf_counter()
                op = build_operators(system, lap)
                build_times.append(time.perf_counter() - t0)
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(int(n), num_features))
            roundtrip_times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                c = chebyshev_decompose(system, lap, X)
                chebyshev_reconstruct(system, lap, c)
                roundtrip_times.append(time.perf_counter() - t0)
            if deterministic_mode():
                build_times = [0.0] * len(build_times)
                roundtrip_times = [0.0] * len(roundtrip_times)
            row.update(
                {
                    "status": "ok",
                    "build_mean_s": float(np.mean(build_times)),
                    "build_median_s": float(np.median(build_times)),
                    "transform_mean_s": float(np.mean(roundtrip_times)),
                    "transform_median_s": float(np.median(roundtrip_times)),
                    "nnz_per_block": [int(b.nnz) for b in op.blocks],
                }
            )
        except MemoryError:
            row["status"] = "oom"
        rows.append(row)
    return rows
