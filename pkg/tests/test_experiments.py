"""Experiment drivers: configs, records, training loops, denoising, bench."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ufg.datasets import (
    GaussianFeatures,
    cycles_and_stars,
    generate_sbm,
    path_graph,
)
from ufg.experiments import (
    ExperimentConfig,
    MetricsRecord,
    bench_transform,
    build_node_operator,
    denoise_signal,
    expand_grid,
    majority_class_accuracy,
    make_record,
    sensitivity_sweep,
    train_graph_classifier,
    train_node_classifier,
)
from ufg.experiments import _layer_activations
from ufg.graphs import eigendecompose, normalized_laplacian

ROUNDTRIP_TOL = 1e-10
# Label-shuffle control: informative features must beat shuffled labels by
# this margin, and the shuffled run must sit in a loose chance band.
SHUFFLE_GAP = 0.15
CHANCE_BAND = (0.25, 0.75)


@pytest.fixture(scope="module")
def sbm_data():
    return generate_sbm(
        [30, 30], 0.5, 0.02, GaussianFeatures(8, noise_std=0.3), seed=0
    )


@pytest.fixture(scope="module")
def quick_config():
    return ExperimentConfig(epochs=30, seeds=(0, 1, 2), hidden=8)


# ---------------------------------------------------------------- configs

def test_fingerprint_deterministic_and_sensitive():
    a = ExperimentConfig()
    b = ExperimentConfig()
    c = ExperimentConfig(lr=0.02)
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    assert len(a.fingerprint()) == 12


@pytest.mark.parametrize(
    "kwargs",
    [
        {"epochs": 0},
        {"activation": "tanh"},
        {"pool_mode": "max"},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


def test_expand_grid_without_grid_yields_self():
    cfg = ExperimentConfig()
    assert list(expand_grid(cfg)) == [cfg]


def test_expand_grid_cartesian_product():
    cfg = ExperimentConfig(
        grid=(("dilation", (2.0, 3.0)), ("levels", (1, 2)))
    )
    out = list(expand_grid(cfg))
    assert len(out) == 4
    assert all(c.grid is None for c in out)
    assert {(c.dilation, c.levels) for c in out} == {
        (2.0, 1), (2.0, 2), (3.0, 1), (3.0, 2)
    }
    assert len({c.fingerprint() for c in out}) == 4


def test_layer_activation_variants():
    shr = _layer_activations(ExperimentConfig(activation="shrinkage"))
    assert shr[0].kind == shr[1].kind == "shrinkage"
    relu = _layer_activations(ExperimentConfig(activation="relu"))
    assert (relu[0].kind, relu[1].kind) == ("relu", "none")
    none = _layer_activations(ExperimentConfig(activation="none"))
    assert (none[0].kind, none[1].kind) == ("none", "none")


# ---------------------------------------------------------------- records

def test_make_record_filters_nan_and_lists_failures():
    rec = make_record("abc", [0.5, np.nan, 0.7], wall_clock=1.0)
    assert rec.mean == pytest.approx(0.6)
    assert rec.extra["failed_seeds"] == [1]
    assert np.isnan(rec.per_seed[1])
    assert len(rec.per_seed) == 3


def test_make_record_single_seed_has_zero_std():
    rec = make_record("abc", [0.8], wall_clock=0.1)
    assert rec.std == 0.0
    assert rec.mean == 0.8


def test_make_record_all_failed_raises():
    with pytest.raises(ValueError, match="every seed failed"):
        make_record("abc", [np.nan, np.nan], wall_clock=0.1)


def test_make_record_zeroes_wall_clock_in_deterministic_mode(monkeypatch):
    monkeypatch.setenv("UFG_DETERMINISTIC", "1")
    rec = make_record("abc", [0.5], wall_clock=3.5)
    assert rec.wall_clock == 0.0
    monkeypatch.setenv("UFG_DETERMINISTIC", "0")
    rec2 = make_record("abc", [0.5], wall_clock=3.5)
    assert rec2.wall_clock == 3.5


def test_metrics_record_rejects_mean_outside_seed_range():
    with pytest.raises(ValueError, match="mean"):
        MetricsRecord(
            fingerprint="x", per_seed=(0.5, 0.6), mean=0.9, std=0.0,
            wall_clock=0.0,
        )


@given(
    st.lists(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
        min_size=1, max_size=8,
    )
)
def test_make_record_mean_between_extremes(values):
    rec = make_record("p", values, wall_clock=0.0)
    assert min(values) - 1e-12 <= rec.mean <= max(values) + 1e-12
    assert rec.std >= 0.0


# ------------------------------------------------------- node classification

def test_node_classifier_smoke_and_bitwise_determinism(sbm_data, quick_config):
    rec1 = train_node_classifier(sbm_data, quick_config)
    rec2 = train_node_classifier(sbm_data, quick_config)
    assert len(rec1.per_seed) == 3
    assert all(0.0 <= a <= 1.0 for a in rec1.per_seed)
    assert rec1.per_seed == rec2.per_seed
    assert rec1.extra["task"] == "sbm_node"
    assert rec1.extra["activation"] == "relu"


def test_node_classifier_beats_label_shuffle(sbm_data, quick_config):
    rng = np.random.default_rng(42)
    shuffled = dataclasses.replace(
        sbm_data, labels=rng.permutation(sbm_data.labels)
    )
    informative = train_node_classifier(sbm_data, quick_config)
    control = train_node_classifier(shuffled, quick_config)
    assert CHANCE_BAND[0] <= control.mean <= CHANCE_BAND[1]
    assert informative.mean >= control.mean + SHUFFLE_GAP


def test_node_shrinkage_reports_compression(sbm_data):
    cfg = ExperimentConfig(
        activation="shrinkage", sigma=1.0, epochs=10, seeds=(0,), hidden=8
    )
    rec = train_node_classifier(sbm_data, cfg)
    assert 0.0 < rec.extra["compression_ratio"] <= 1.0


def test_node_metrics_sink_rows(sbm_data):
    cfg = ExperimentConfig(epochs=4, seeds=(0, 1), hidden=8)
    sink: list = []
    train_node_classifier(sbm_data, cfg, metrics_sink=sink)
    assert len(sink) == 4 * 3 * 2  # epochs x splits x seeds
    row = sink[0]
    assert set(row) == {"seed", "epoch", "split", "loss", "accuracy"}
    assert {r["split"] for r in sink} == {"train", "val", "test"}


def test_build_node_operator_chebyshev_path(sbm_data):
    cfg = ExperimentConfig(mode="chebyshev", degree=8, levels=1)
    op = build_node_operator(sbm_data, cfg)
    assert op.num_nodes == sbm_data.graph.num_nodes
    assert op.num_blocks == 2  # one high-pass level plus low pass


# ------------------------------------------------------ graph classification

def test_graph_classifier_learns_cycles_vs_stars():
    samples = cycles_and_stars(10, (5, 8), seed=0)
    cfg = ExperimentConfig(
        task="graph", epochs=5, patience=3, seeds=(0,), hidden=8
    )
    rec = train_graph_classifier(samples, cfg)
    assert rec.mean >= 0.9
    assert rec.extra["pool_mode"] == "spectrum"


def test_graph_classifier_single_class_is_perfect():
    samples = cycles_and_stars(12, (5, 7), seed=1)
    only_cycles = [s for s in samples if s.label == 0]
    cfg = ExperimentConfig(
        task="graph", epochs=2, patience=2, seeds=(0,), hidden=4,
        pool_mode="sum",
    )
    rec = train_graph_classifier(only_cycles, cfg)
    assert rec.mean == 1.0


def test_graph_classifier_mean_pool_baseline():
    samples = cycles_and_stars(10, (5, 8), seed=0)
    cfg = ExperimentConfig(
        task="graph", epochs=3, patience=2, seeds=(0,), hidden=8,
        pool_mode="mean",
    )
    rec = train_graph_classifier(samples, cfg)
    assert 0.0 <= rec.mean <= 1.0


def test_graph_classifier_needs_enough_samples_for_split():
    samples = cycles_and_stars(3, (5, 6), seed=0)[:5]
    cfg = ExperimentConfig(task="graph", epochs=1, seeds=(0,), hidden=4)
    with pytest.raises(ValueError, match="split"):
        train_graph_classifier(samples, cfg)


def test_majority_class_accuracy():
    samples = cycles_and_stars(3, (5, 6), seed=0)
    assert majority_class_accuracy(samples) == 0.5
    skewed = [s for s in samples if s.label == 0] + samples[-1:]
    expected = max(
        sum(s.label == 0 for s in skewed), sum(s.label == 1 for s in skewed)
    ) / len(skewed)
    assert majority_class_accuracy(skewed) == expected


# ----------------------------------------------------------------- denoise

@pytest.fixture(scope="module")
def path_signal():
    graph = path_graph(50)
    spectrum = eigendecompose(normalized_laplacian(graph))
    truth = spectrum.vectors[:, 1] * np.sqrt(50)  # unit-RMS smooth mode
    rng = np.random.default_rng(3)
    noisy = truth + 0.5 * rng.normal(size=truth.shape)
    return graph, truth, noisy


def test_denoise_sigma_zero_is_lossless(path_signal):
    graph, _, noisy = path_signal
    out, report = denoise_signal(graph, noisy, sigma=0.0)
    assert out.shape == noisy.shape
    assert np.max(np.abs(out - noisy)) <= ROUNDTRIP_TOL
    assert report["sigma"] == 0.0


def test_denoise_improves_mse_on_smooth_signal(path_signal):
    graph, truth, noisy = path_signal
    _, report = denoise_signal(graph, noisy, sigma=1.0, truth=truth)
    assert report["mse_denoised"] < report["mse_noisy"]


def test_denoise_accepts_prebuilt_operator(path_signal):
    graph, _, noisy = path_signal
    lap = normalized_laplacian(graph)
    spectrum = eigendecompose(lap)
    from ufg.filters import haar_filter_bank
    from ufg.transform import build_operators, make_system

    system = make_system(
        haar_filter_bank(), float(spectrum.values[-1]), levels=2, mode="exact"
    )
    op = build_operators(system, lap, spectrum)
    direct, _ = denoise_signal(graph, noisy, sigma=1.0)
    reused, _ = denoise_signal(graph, noisy, sigma=1.0, op=op)
    np.testing.assert_array_equal(direct, reused)


def test_denoise_preserves_two_dimensional_signals(path_signal):
    graph, _, noisy = path_signal
    stacked = np.column_stack([noisy, 2.0 * noisy])
    out, _ = denoise_signal(graph, stacked, sigma=0.0)
    assert out.shape == stacked.shape


# ------------------------------------------------------------------- sweep

def test_sensitivity_sweep_rows_and_error_isolation(sbm_data):
    base = ExperimentConfig(epochs=2, seeds=(0,), hidden=4)
    rows = sensitivity_sweep(sbm_data, [2.0], [1, 0], base)
    assert [(r["knob"], r["value"]) for r in rows] == [
        ("dilation", 2.0), ("scale", 1), ("scale", 0)
    ]
    assert "mean" in rows[0] and "mean" in rows[1]
    assert "error" in rows[2] and "mean" not in rows[2]
    assert "ValueError" in rows[2]["error"]


# ------------------------------------------------------------------- bench

def test_bench_transform_rows():
    rows = bench_transform([30, 60], repetitions=2, seed=0)
    assert [r["n"] for r in rows] == [30, 60]
    for row in rows:
        assert row["status"] == "ok"
        assert row["build_mean_s"] >= 0.0
        assert row["transform_median_s"] >= 0.0
        assert len(row["nnz_per_block"]) == 2  # levels=1 default: 1 high + low


def test_bench_transform_rejects_descending_sizes():
    with pytest.raises(ValueError, match="ascending"):
        bench_transform([60, 30], repetitions=1)


def test_bench_transform_deterministic_mode_zeroes_times(monkeypatch):
    monkeypatch.setenv("UFG_DETERMINISTIC", "1")
    rows = bench_transform([30], repetitions=1, seed=0)
    assert rows[0]["build_mean_s"] == 0.0
    assert rows[0]["transform_mean_s"] == 0.0
