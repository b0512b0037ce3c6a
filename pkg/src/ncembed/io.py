"""Dataset ingestion, embedding output, and static SVG scatter plots.

Text input is headerless CSV (the data is an anonymous numeric matrix, so
header sniffing would only misfire).  The binary format is deliberately
minimal and fully pinned here: magic ``NCV1``, two little-endian uint32
(rows, cols), then rows*cols little-endian float32 values.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import DataMatrix, EmbeddingState

MAGIC = b"NCV1"

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
]


def read_csv(path) -> DataMatrix:
    """Parse a headerless CSV of decimal numbers into a DataMatrix.

    Every failure names the offending row/column (1-based).  Blank lines are
    skipped; row numbers refer to the original line numbers.
    """
    rows: list[list[float]] = []
    width: Optional[int] = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ValueError(
                    f"ragged row at row {lineno}: expected {width} columns, "
                    f"got {len(parts)}"
                )
            vals = []
            for col, tok in enumerate(parts, start=1):
                try:
                    v = float(tok)
                except ValueError:
                    raise ValueError(
                        f"unparsable value {tok.strip()!r} at row {lineno}, "
                        f"column {col}"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(
                        f"non-finite value at row {lineno}, column {col}"
                    )
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ValueError(f"empty input file: {path}")
    return DataMatrix(np.asarray(rows, dtype=np.float64))


def read_bin(path) -> DataMatrix:
    """Read the NCV1 binary matrix format."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise ValueError(f"bad magic in {path}: expected {MAGIC!r}")
    rows, cols = struct.unpack("<II", raw[4:12])
    expected = 12 + 4 * rows * cols
    if len(raw) < expected:
        raise ValueError(
            f"truncated payload in {path}: expected {expected} bytes, "
            f"got {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype="<f4", count=rows * cols, offset=12)
    mat = flat.reshape(rows, cols).astype(np.float64)
    if not np.isfinite(mat).all():
        r, c = np.argwhere(~np.isfinite(mat))[0]
        raise ValueError(f"non-finite value at row {r + 1}, column {c + 1}")
    return DataMatrix(mat)


def write_bin(values: np.ndarray, path) -> None:
    """Write a matrix in the NCV1 binary format."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(arr.tobytes())


def _fmt(x: float) -> str:
    if x == 0.0:
        return "0.0"
    return repr(float(x))


def write_embedding(state: EmbeddingState, path) -> None:
    """Write coordinates as TSV, one point per row.

    Values are printed in shortest exact-round-trip decimal form, so reading
    the file back reproduces the coordinates bit for bit.
    """
    coords = state.coords
    with open(path, "w", encoding="utf-8") as fh:
        for row in coords:
            fh.write("\t".join(_fmt(v) for v in row))
            fh.write("\n")


def read_embedding(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(t) for t in line.split("\t")])
    return np.asarray(rows, dtype=np.float64)


def read_labels(path, n: int) -> list[str]:
    """One label per line; count must match the number of points."""
    with open(path, "r", encoding="utf-8") as fh:
        labels = [line.strip() for line in fh if line.strip() != ""]
    if len(labels) != n:
        raise ValueError(f"label count {len(labels)} does not match N={n}")
    return labels


def write_svg_scatter(state: EmbeddingState, labels: Optional[Sequence] = None,
                      path=None, size: int = 800, radius: float = 2.5) -> None:
    """Render a 2-D embedding as a standalone SVG scatter plot.

    Coordinates are affinely mapped into a fixed square viewport with a 5%
    margin; distinct labels cycle through a fixed 12-color palette.
    """
    if state.dim != 2:
        raise ValueError(f"scatter plot needs a 2-D embedding, got m={state.dim}")
    coords = state.coords
    n = coords.shape[0]
    if labels is not None and len(labels) != n:
        raise ValueError(f"label count {len(labels)} does not match N={n}")

    margin = 0.05 * size
    span = size - 2 * margin

    def axis_map(vals):
        lo = float(vals.min())
        hi = float(vals.max())
        if hi == lo:
            return np.full(n, margin + span / 2.0)
        return margin + (vals - lo) / (hi - lo) * span

    xs = axis_map(coords[:, 0])
    ys = size - axis_map(coords[:, 1])  # flip so larger y plots upward

    if labels is None:
        colors = [PALETTE[0]] * n
    else:
        distinct = sorted(set(str(l) for l in labels))
        color_of = {
            lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(distinct)
        }
        colors = [color_of[str(l)] for l in labels]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for i in range(n):
        parts.append(
            f'<circle cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" r="{radius}" '
            f'fill="{colors[i]}" fill-opacity="0.7"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
