"""File formats and metrics emission.

Formats (all little-endian, all floats 64-bit):

- Graph text: ``#`` comment lines, then ``N M`` and exactly M edge lines
  ``u v w`` (w optional, default 1.0). Undirected; duplicate pairs sum.
- Features CSV: one row per node, comma-separated floats, no header.
  Floats are written with ``repr`` (shortest round-trip, 17 significant
  digits), so write-read is exact.
- Labels text: one integer per line.
- Coefficient file: magic ``UFGC``, version u32, then N, d (features),
  n (high passes), J (levels) as u32, the block map as (r, j) u32 pairs in
  stack order, then the row-major f64 payload. Bitwise round-trip.
- Checkpoint: magic ``UFGP``, version u32, parameter count u32, then per
  parameter: name (u16 length + utf-8), ndim u32, dims u32 each, f64
  payload. Parameters are written in sorted name order.
- Metrics: JSON lines with sorted keys.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

COEFF_MAGIC = b"UFGC"
CHECKPOINT_MAGIC = b"UFGP"
FORMAT_VERSION = 1

PLOT_COLUMNS = {
    "tradeoff_curve": ("sigma", "compression_ratio", "accuracy_mean", "accuracy_std"),
    "robustness_curve": ("noise_ratio", "model", "mean", "std"),
    "sweep": ("knob", "value", "mean", "std"),
    "bench": ("n", "series", "mean_s", "median_s"),
}


def deterministic_mode() -> bool:
    """True when UFG_DETERMINISTIC requests byte-stable outputs."""
    return os.environ.get("UFG_DETERMINISTIC", "").strip().lower() in (
        "1", "true", "yes", "on",
    )


def format_float(x) -> str:
    """Shortest decimal that round-trips to the same 64-bit float."""
    return repr(float(x))


# -- graph text --------------------------------------------------------------


def _data_lines(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def read_graph_text(path: str):
    """Parse the graph text format; errors carry the offending line number."""
    from .graphs import build_graph

    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ValueError(f"{path}: empty graph file") from None
    parts = header.split()
    if len(parts) != 2:
        raise ValueError(f"{path}:{lineno}: header must be 'N M'")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"{path}:{lineno}: header must be two integers") from None
    edges = []
    for lineno, line in lines:
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"{path}:{lineno}: edge line must be 'u v [w]'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed edge line") from None
        edges.append((u, v, w))
    if len(edges) != m:
        raise ValueError(f"{path}: header promises {m} edges, found {len(edges)}")
    return build_graph(n, edges)


def write_graph_text(graph, path: str) -> None:
    coo = graph.adjacency.csr.tocoo()
    entries = sorted(
        (int(u), int(v), float(w))
        for u, v, w in zip(coo.row, coo.col, coo.data)
        if u <= v
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{graph.num_nodes} {len(entries)}\n")
        for u, v, w in entries:
            fh.write(f"{u} {v} {format_float(w)}\n")


# -- features / labels -------------------------------------------------------


def read_features_csv(path: str) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed float") from None
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: ragged row")
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    return np.asarray(rows, dtype=np.float64)


def write_features_csv(features: np.ndarray, path: str) -> None:
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in features:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def read_labels_text(path: str) -> np.ndarray:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: labels must be integers") from None
    return np.asarray(labels, dtype=np.int64)


def write_labels_text(labels, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for val in np.asarray(labels, dtype=np.int64):
            fh.write(f"{int(val)}\n")


# -- coefficient stacks ------------------------------------------------------


def write_coefficients(stack, path: str) -> None:
    n_high = max((r for r, _ in stack.block_index), default=0)
    levels = stack.block_index[0][1]
    with open(path, "wb") as fh:
        fh.write(COEFF_MAGIC)
        fh.write(
            struct.pack(
                "<5I",
                FORMAT_VERSION,
                stack.num_nodes,
                stack.num_features,
                n_high,
                levels,
            )
        )
        for r, j in stack.block_index:
            fh.write(struct.pack("<2I", r, j))
        fh.write(np.ascontiguousarray(stack.data, dtype="<f8").tobytes())


def read_coefficients(path: str):
    from .transform import CoefficientStack

    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != COEFF_MAGIC:
        raise ValueError(f"{path}: bad magic, not a coefficient file")
    if len(blob) < 24:
        raise ValueError(f"{path}: truncated header")
    version, n, d, n_high, levels = struct.unpack_from("<5I", blob, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    num_blocks = n_high * levels + 1
    offset = 24
    block_index = []
    for _ in range(num_blocks):
        if offset + 8 > len(blob):
            raise ValueError(f"{path}: truncated block map")
        r, j = struct.unpack_from("<2I", blob, offset)
        block_index.append((r, j))
        offset += 8
    expected = num_blocks * n * d * 8
    payload = blob[offset:]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(
        num_blocks * n, d
    )
    return CoefficientStack(
        data=data, block_index=tuple(block_index), num_nodes=n
    )


def write_coefficients_csv(stack, path: str) -> None:
    """Plain-text export: one row ``r,j,node,feature,value`` per coefficient."""
    n = stack.num_nodes
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("r,j,node,feature,value\n")
        for b, (r, j) in enumerate(stack.block_index):
            block = stack.data[b * n : (b + 1) * n]
            for node in range(n):
                for feat in range(stack.num_features):
                    fh.write(
                        f"{r},{j},{node},{feat},{format_float(block[node, feat])}\n"
                    )


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(params: dict[str, np.ndarray], path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<2I", FORMAT_VERSION, len(params)))
        for name in sorted(params):
            # asarray first: ascontiguousarray would promote 0-d to 1-d
            arr = np.asarray(params[name], dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr).tobytes())


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic, not a checkpoint")
    version, count = struct.unpack_from("<2I", blob, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    offset = 12
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            shape = struct.unpack_from(f"<{ndim}I", blob, offset)
            offset += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            payload = blob[offset : offset + 8 * size]
            if len(payload) != 8 * size:
                raise ValueError("short payload")
            offset += 8 * size
        except (struct.error, ValueError):
            raise ValueError(f"{path}: truncated checkpoint at {name!r}") from None
        out[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(
            shape
        )
    return out


# -- metrics and plot data ---------------------------------------------------


def write_metrics_jsonl(records, path: str) -> None:
    """One JSON object per line, keys sorted for byte-stable output."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, default=float) + "\n")


def read_metrics_jsonl(path: str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                raise ValueError(f"{path}:{lineno}: malformed JSON line") from None
    return out


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def emit_plot_data(metrics, kind: str, path: str | None = None) -> str:
    """Render metrics rows to a tidy plot-ready CSV.

    Column layouts per kind: tradeoff_curve (sigma, compression_ratio,
    accuracy_mean, accuracy_std); robustness_curve (noise_ratio, model, mean,
    std); sweep (knob, value, mean, std); bench (n, series, mean_s,
    median_s). ``metrics`` is a sequence of dicts holding those keys.
    """
    if kind not in PLOT_COLUMNS:
        raise ValueError(f"unknown plot kind {kind!r}")
    rows = list(metrics)
    if not rows:
        raise ValueError("no metrics to emit")
    columns = PLOT_COLUMNS[kind]
    lines = [",".join(columns)]
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise ValueError(f"metrics row missing columns {missing}")
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
