"""Framelet convolution, pooling and training primitives with hand gradients.

Layers follow a forward/backward pair convention: the forward returns the
output plus a cache, the backward consumes the cache and the upstream
gradient and returns exact gradients for every input. Caches also carry a
``kink_margin``: the smallest distance of any pre-activation to a ReLU or
shrinkage kink, which the finite-difference checker uses to skip
nondifferentiable points.

The framelet convolution computes ``Y = act(V diag(theta) W X')`` with
``X' = X W_dense``: project features, decompose, scale every stacked
coefficient row by the trainable filter ``theta``, apply the activation in
the coefficient domain (shrinkage) or after reconstruction (ReLU), and
reconstruct. ``theta`` has one entry per stacked coefficient row, shared
across feature columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph
from .shrinkage import ThresholdConfig, shrink_stack, stack_thresholds
from .sparse import SparseMatrix
from .transform import CoefficientStack, DecompositionOperator, decompose, reconstruct

ACTIVATION_KINDS = ("relu", "shrinkage", "none")


@dataclass(frozen=True)
class LayerActivation:
    """Activation variant of a framelet convolution layer."""

    kind: str
    threshold: ThresholdConfig | None = None

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"kind must be one of {ACTIVATION_KINDS}")
        if (self.kind == "shrinkage") != (self.threshold is not None):
            raise ValueError("threshold required iff kind is 'shrinkage'")

    @staticmethod
    def relu() -> "LayerActivation":
        return LayerActivation("relu")

    @staticmethod
    def none() -> "LayerActivation":
        return LayerActivation("none")

    @staticmethod
    def shrinkage(cfg: ThresholdConfig) -> "LayerActivation":
        return LayerActivation("shrinkage", cfg)


@dataclass
class ConvLayerParams:
    """Trainable tensors of one framelet convolution layer."""

    W: np.ndarray
    theta: np.ndarray
    bias: np.ndarray

    def validate(self) -> None:
        for name, arr in (("W", self.W), ("theta", self.theta), ("bias", self.bias)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if self.W.ndim != 2 or self.theta.ndim != 1 or self.bias.ndim != 1:
            raise ValueError("W must be 2-d; theta and bias 1-d")
        if self.bias.shape[0] != self.W.shape[1]:
            raise ValueError("bias length must match output width")


def init_params(d_in: int, d_out: int, theta_len: int, rng) -> ConvLayerParams:
    """Xavier-uniform W, theta near one, zero bias; deterministic given rng.

    ``rng`` is a seed or ``numpy.random.Generator``. ``theta`` is drawn from
    U(0.9, 1.1) so the layer starts close to the tight-frame identity.
    """
    if min(d_in, d_out, theta_len) <= 0:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(rng)
    limit = np.sqrt(6.0 / (d_in + d_out))
    W = rng.uniform(-limit, limit, size=(d_in, d_out))
    theta = rng.uniform(0.9, 1.1, size=theta_len)
    bias = np.zeros(d_out)
    return ConvLayerParams(W=W, theta=theta, bias=bias)


def _finite_min(arr: np.ndarray) -> float:
    return float(np.min(arr)) if arr.size else np.inf


def ufg_conv_forward(
    params: ConvLayerParams,
    op: DecompositionOperator,
    X: np.ndarray,
    act: LayerActivation,
    frozen_thresholds: dict[tuple[int, int], float] | None = None,
) -> tuple[np.ndarray, dict]:
    """Framelet convolution forward pass.

    ReLU variant: ``Y = relu(reconstruct(theta * decompose(X W)) + bias)``.
    Shrinkage variant thresholds the scaled coefficients before
    reconstruction and adds the bias outside: ``Y = reconstruct(shrink(theta
    * decompose(X W))) + bias``.

    ``frozen_thresholds`` pins the shrinkage thresholds instead of deriving
    them from the current coefficients; finite-difference gradient checks
    use the nominal point's thresholds here because the backward pass
    stop-gradients them. The thresholds actually used are in the cache.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.W.shape[0]:
        raise ValueError("X shape does not match W")
    if params.theta.shape[0] != op.num_rows:
        raise ValueError("theta length must equal stacked row count")
    x_proj = X @ params.W
    coeff = decompose(op, x_proj)
    filtered = params.theta[:, None] * coeff.data
    cache: dict = {
        "X": X,
        "W": params.W,
        "theta": params.theta,
        "coeff": coeff.data,
        "op": op,
        "act": act,
    }
    fstack = coeff.with_data(filtered)
    if act.kind == "shrinkage":
        thresholds = (
            stack_thresholds(fstack, act.threshold)
            if frozen_thresholds is None
            else frozen_thresholds
        )
        shrunk = shrink_stack(fstack, act.threshold, thresholds=thresholds)
        y = reconstruct(op, shrunk) + params.bias
        cache["active_mask"] = shrunk.data != 0.0
        cache["thresholds"] = thresholds
        cache["kink_margin"] = _kink_margin_shrinkage(fstack, thresholds)
        return y, cache
    z = reconstruct(op, fstack) + params.bias
    if act.kind == "relu":
        y = np.maximum(z, 0.0)
        cache["relu_mask"] = z > 0.0
        cache["kink_margin"] = _finite_min(np.abs(z))
        return y, cache
    cache["kink_margin"] = np.inf
    return z, cache


def _kink_margin_shrinkage(
    fstack: CoefficientStack, thresholds: dict[tuple[int, int], float]
) -> float:
    margin = np.inf
    n = fstack.num_nodes
    for b, (r, j) in enumerate(fstack.block_index):
        if r == 0:
            continue
        lam = thresholds[(r, j)]
        if not np.isfinite(lam):
            continue
        block = fstack.data[b * n : (b + 1) * n]
        margin = min(margin, _finite_min(np.abs(np.abs(block) - lam)))
    return margin


def ufg_conv_backward(
    cache: dict, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dX, dW, dtheta, dbias) of the framelet convolution.

    Shrinkage dead zones pass zero gradient; the data-dependent threshold is
    treated as a constant (stop-gradient). ReLU uses subgradient 0 at 0.
    """
    op: DecompositionOperator = cache["op"]
    act: LayerActivation = cache["act"]
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if act.kind == "relu":
        g = grad_out * cache["relu_mask"]
        dbias = g.sum(axis=0)
        d_filtered = decompose(op, g).data
    elif act.kind == "shrinkage":
        dbias = grad_out.sum(axis=0)
        d_shrunk = decompose(op, grad_out).data
        d_filtered = d_shrunk * cache["active_mask"]
    else:
        dbias = grad_out.sum(axis=0)
        d_filtered = decompose(op, grad_out).data
    coeff = cache["coeff"]
    dtheta = np.sum(d_filtered * coeff, axis=1)
    d_coeff = d_filtered * cache["theta"][:, None]
    stack = CoefficientStack(
        data=d_coeff, block_index=op.block_index, num_nodes=op.num_nodes
    )
    dx_proj = reconstruct(op, stack)
    dW = cache["X"].T @ dx_proj
    dX = dx_proj @ cache["W"].T
    return dX, dW, dtheta, dbias


def gcn_norm_adjacency(graph: Graph) -> SparseMatrix:
    """Self-loop-augmented symmetric normalization ``D~^{-1/2}(A+I)D~^{-1/2}``."""
    a_tilde = graph.adjacency.add(SparseMatrix.identity(graph.num_nodes))
    deg = np.asarray(a_tilde.csr.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    scaled = a_tilde.csr.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :])
    return SparseMatrix.from_scipy(scaled)


def gcn_conv_forward(
    W: np.ndarray, norm_adj: SparseMatrix, X: np.ndarray
) -> tuple[np.ndarray, dict]:
    """Graph convolution ``Y = relu(A^ X W)`` with precomputed ``A^``."""
    X = np.asarray(X, dtype=np.float64)
    h = norm_adj @ X
    z = h @ W
    y = np.maximum(z, 0.0)
    cache = {
        "h": h,
        "W": W,
        "mask": z > 0.0,
        "norm_adj": norm_adj,
        "kink_margin": _finite_min(np.abs(z)),
    }
    return y, cache


def gcn_conv_backward(cache: dict, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients (dX, dW) of the graph convolution."""
    g = np.asarray(grad_out, dtype=np.float64) * cache["mask"]
    dW = cache["h"].T @ g
    dh = g @ cache["W"].T
    dX = cache["norm_adj"] @ dh
    return dX, dW


def ufg_pool_forward(
    op: DecompositionOperator, X: np.ndarray, mode: str
) -> tuple[np.ndarray, dict]:
    """Pool framelet coefficients blockwise into a fixed-length readout.

    Per block and feature: ``sum`` adds coefficients, ``spectrum`` adds their
    squares (the framelet power spectrum). Blocks are concatenated in
    operator order, giving a vector of length ``(num blocks) * d``.
    """
    if mode not in ("sum", "spectrum"):
        raise ValueError("mode must be 'sum' or 'spectrum'")
    coeff = decompose(op, X)
    n = op.num_nodes
    per_block = coeff.data.reshape(op.num_blocks, n, -1)
    if mode == "sum":
        pooled = per_block.sum(axis=1)
    else:
        pooled = (per_block**2).sum(axis=1)
    cache = {"op": op, "coeff": coeff.data, "mode": mode, "num_features": X.shape[1]}
    return pooled.ravel(), cache


def ufg_pool_backward(cache: dict, grad_out: np.ndarray) -> np.ndarray:
    """Gradient dX of the pooling readout."""
    op: DecompositionOperator = cache["op"]
    n = op.num_nodes
    d = cache["num_features"]
    g = np.asarray(grad_out, dtype=np.float64).reshape(op.num_blocks, 1, d)
    if cache["mode"] == "sum":
        d_coeff = np.broadcast_to(g, (op.num_blocks, n, d)).reshape(-1, d).copy()
    else:
        coeff = cache["coeff"].reshape(op.num_blocks, n, d)
        d_coeff = (2.0 * coeff * g).reshape(-1, d)
    stack = CoefficientStack(
        data=d_coeff, block_index=op.block_index, num_nodes=n
    )
    return reconstruct(op, stack)


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Masked mean cross entropy with softmax; returns loss and dlogits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = logits.shape[0]
    if mask is None:
        mask = np.ones(m, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise ValueError("mask selects no samples")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=1))
    log_probs = shifted - log_z[:, None]
    loss = -float(np.mean(log_probs[mask, labels[mask]]))
    probs = np.exp(log_probs)
    dlogits = probs.copy()
    dlogits[np.arange(m), labels] -= 1.0
    dlogits[~mask] = 0.0
    dlogits /= count
    return loss, dlogits


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray | None = None) -> float:
    labels = np.asarray(labels)
    pred = np.asarray(logits).argmax(axis=1)
    if mask is None:
        return float(np.mean(pred == labels))
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask selects no samples")
    return float(np.mean(pred[mask] == labels[mask]))


def mlp_init(d_in: int, hidden: int, d_out: int, rng) -> dict[str, np.ndarray]:
    """Two-layer MLP parameters, xavier-uniform weights and zero biases."""
    rng = np.random.default_rng(rng)

    def xavier(fan_in, fan_out):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    return {
        "W1": xavier(d_in, hidden),
        "b1": np.zeros(hidden),
        "W2": xavier(hidden, d_out),
        "b2": np.zeros(d_out),
    }


def mlp_forward(params: dict[str, np.ndarray], X: np.ndarray) -> tuple[np.ndarray, dict]:
    """Two-layer MLP with ReLU between; returns logits and cache."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    z1 = X @ params["W1"] + params["b1"]
    h = np.maximum(z1, 0.0)
    logits = h @ params["W2"] + params["b2"]
    cache = {
        "X": X,
        "h": h,
        "mask": z1 > 0.0,
        "params": params,
        "kink_margin": _finite_min(np.abs(z1)),
    }
    return logits, cache


def mlp_backward(cache: dict, dlogits: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients of the MLP: parameter dict plus dX."""
    params = cache["params"]
    dlogits = np.atleast_2d(np.asarray(dlogits, dtype=np.float64))
    grads = {
        "W2": cache["h"].T @ dlogits,
        "b2": dlogits.sum(axis=0),
    }
    dh = dlogits @ params["W2"].T
    dz1 = dh * cache["mask"]
    grads["W1"] = cache["X"].T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    dX = dz1 @ params["W1"].T
    return grads, dX


def dropout_forward(
    X: np.ndarray, p: float, rng, training: bool
) -> tuple[np.ndarray, dict]:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    if not (0.0 <= p < 1.0):
        raise ValueError("dropout probability must be in [0, 1)")
    X = np.asarray(X, dtype=np.float64)
    if not training or p == 0.0:
        return X, {"mask": None, "p": p}
    rng = np.random.default_rng(rng)
    mask = rng.random(X.shape) >= p
    return X * mask / (1.0 - p), {"mask": mask, "p": p}


def dropout_backward(cache: dict, grad_out: np.ndarray) -> np.ndarray:
    if cache["mask"] is None:
        return grad_out
    return grad_out * cache["mask"] / (1.0 - cache["p"])


@dataclass
class AdamState:
    """Adam accumulators for a named parameter set."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    weight_decay: float = 0.0,
    decay_keys: frozenset[str] | set[str] = frozenset(),
) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update; returns the new parameter dict.

    Weight decay is coupled (added to the gradient as an L2 term) and only
    applied to parameters named in ``decay_keys``.
    """
    state.step += 1
    t = state.step
    out: dict[str, np.ndarray] = {}
    for key, p in params.items():
        g = np.asarray(grads[key], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {key!r}")
        if weight_decay and key in decay_keys:
            g = g + weight_decay * p
        if key not in state.m:
            state.m[key] = np.zeros_like(p)
            state.v[key] = np.zeros_like(p)
        state.m[key] = state.beta1 * state.m[key] + (1 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1 - state.beta2) * g**2
        m_hat = state.m[key] / (1 - state.beta1**t)
        v_hat = state.v[key] / (1 - state.beta2**t)
        out[key] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out


def activation_signature(*caches: dict) -> np.ndarray:
    """Concatenated boolean activation pattern of a chain of layer caches.

    Collects the ReLU/shrinkage/dropout masks every forward cache records.
    Two evaluations with equal signatures lie on the same smooth piece of
    the loss, so central differences between them are valid.
    """
    parts = []
    for c in caches:
        for key in ("relu_mask", "active_mask", "mask"):
            val = c.get(key)
            if val is not None:
                parts.append(np.asarray(val, dtype=bool).ravel())
    if not parts:
        return np.zeros(0, dtype=bool)
    return np.concatenate(parts)


def _stencil_crossed_kink(aux_plus, aux_minus, kink_guard: float) -> bool:
    if aux_plus is None or aux_minus is None:
        return False
    if np.isscalar(aux_plus):
        return min(float(aux_plus), float(aux_minus)) < kink_guard
    a = np.asarray(aux_plus)
    b = np.asarray(aux_minus)
    return a.shape != b.shape or not np.array_equal(a, b)


def finite_difference_check(
    loss_fn,
    point: np.ndarray,
    analytic_grad: np.ndarray,
    h: float = 1e-5,
    kink_guard: float = 1e-3,
    max_coords: int = 200,
    seed: int = 0,
) -> tuple[float, int, list[int]]:
    """Compare analytic gradients against central finite differences.

    ``loss_fn(vec)`` must return ``(loss, aux)`` where ``aux`` describes the
    activation state at that point, in one of two forms: a float kink margin
    (smallest distance of any pre-activation to a ReLU/shrinkage kink; the
    coordinate is excluded when either perturbed evaluation's margin falls
    below ``kink_guard``) or an ``activation_signature`` array (the
    coordinate is excluded exactly when the signature differs between the
    two perturbed points, i.e. the stencil crossed a kink). Coordinates are
    subsampled to ``max_coords`` (seeded); exclusions are reported.

    Returns ``(max relative error, checked count, excluded coordinates)``.
    Absolute errors below 1e-10 pass outright to keep zero-gradient
    coordinates from inflating the relative measure.
    """
    point = np.asarray(point, dtype=np.float64)
    analytic_grad = np.asarray(analytic_grad, dtype=np.float64)
    if point.shape != analytic_grad.shape:
        raise ValueError("gradient shape must match the point")
    size = point.size
    rng = np.random.default_rng(seed)
    if size > max_coords:
        coords = np.sort(rng.choice(size, size=max_coords, replace=False))
    else:
        coords = np.arange(size)
    max_rel = 0.0
    checked = 0
    excluded: list[int] = []
    for idx in coords:
        bumped = point.copy()
        bumped.flat[idx] += h
        f_plus, aux_plus = loss_fn(bumped)
        bumped.flat[idx] = point.flat[idx] - h
        f_minus, aux_minus = loss_fn(bumped)
        if _stencil_crossed_kink(aux_plus, aux_minus, kink_guard):
            excluded.append(int(idx))
            continue
        numeric = (f_plus - f_minus) / (2.0 * h)
        ana = analytic_grad.flat[idx]
        abs_err = abs(numeric - ana)
        if abs_err > 1e-10:
            max_rel = max(max_rel, abs_err / max(abs(numeric), abs(ana)))
        checked += 1
    return max_rel, checked, excluded
