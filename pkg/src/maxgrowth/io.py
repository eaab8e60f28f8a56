"""File formats: Matrix Market, DAE bundles and result export.

Matrix Market support is limited to ``coordinate real general`` files.
Indices are 1-based on disk and 0-based in memory. Values are written with
``repr`` so that a write/read round trip is bit-exact.

A DAE bundle is a JSON manifest naming four Matrix Market files, one per
linearization block, with paths relative to the manifest's directory::

    {
      "format": "maxgrowth-dae-bundle",
      "version": 1,
      "f_x": "f_x.mtx", "f_y": "f_y.mtx", "g_x": "g_x.mtx", "g_y": "g_y.mtx",
      "state_labels": ["delta_1", "omega_1"],     (optional, length n)
      "speed_indices": [1],                       (optional)
      "inertias": [3.5],                          (optional, one per speed index)
      "loading_alpha": 1.6                        (optional metadata)
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError
from .linalg import SparseMatrix, as_sparse
from .operators import DaeBlocks

__all__ = [
    "MM_HEADER",
    "BUNDLE_FORMAT",
    "CSV_HEADER",
    "read_matrix_market",
    "write_matrix_market",
    "DaeBundleManifest",
    "read_manifest",
    "load_dae_bundle",
    "write_dae_bundle",
    "write_growth_csv",
    "read_growth_csv",
    "result_summary",
    "write_result_json",
    "read_result_json",
]

MM_HEADER = "%%MatrixMarket matrix coordinate real general"
BUNDLE_FORMAT = "maxgrowth-dae-bundle"
CSV_HEADER = "t,sigma_max,growth"
BLOCKS = ("f_x", "f_y", "g_x", "g_y")


def read_matrix_market(path):
    """Read a coordinate real general Matrix Market file; duplicates are summed."""
    path = Path(path)
    with open(path, encoding="ascii", errors="strict") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].rstrip() != MM_HEADER:
        raise ParseError(f"expected header {MM_HEADER!r}", path, 1)

    it = iter(enumerate(lines[1:], start=2))
    size = None
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        if len(parts) != 3:
            raise ParseError("size line must hold 'rows cols entries'", path, lineno)
        try:
            size = tuple(int(p) for p in parts)
        except ValueError:
            raise ParseError("size line must hold integers", path, lineno) from None
        if min(size) < 0:
            raise ParseError("negative size", path, lineno)
        break
    if size is None:
        raise ParseError("missing size line", path, len(lines))
    nrows, ncols, nnz = size

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=float)
    k = 0
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if k == nnz:
            raise ParseError(f"more than the declared {nnz} entries", path, lineno)
        parts = s.split()
        if len(parts) != 3:
            raise ParseError("entry must hold 'row col value' (real field)", path, lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError("entry indices must be integers", path, lineno) from None
        try:
            v = float(parts[2])
        except ValueError:
            raise ParseError(f"entry value {parts[2]!r} is not a real number", path, lineno) from None
        if not math.isfinite(v):
            raise ParseError("entry value is not finite", path, lineno)
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"index ({i}, {j}) outside {nrows}x{ncols}", path, lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise ParseError(f"declared {nnz} entries, found {k}", path, len(lines))
    return SparseMatrix.from_coo(rows, cols, vals, (nrows, ncols))


def write_matrix_market(A, path, comment=None):
    """Write in coordinate real general format, column-major entry order."""
    A = as_sparse(A)
    out = [MM_HEADER]
    if comment:
        out.extend("% " + c for c in str(comment).splitlines())
    out.append(f"{A.nrows} {A.ncols} {A.nnz}")
    cols = np.repeat(np.arange(A.ncols), np.diff(A.col_ptr))
    for i, j, v in zip(A.row_idx.tolist(), cols.tolist(), A.values.tolist()):
        out.append(f"{i + 1} {j + 1} {v!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


@dataclass(frozen=True)
class DaeBundleManifest:
    """Parsed bundle manifest with block paths resolved to absolute paths."""

    path: Path
    f_x: Path
    f_y: Path
    g_x: Path
    g_y: Path
    state_labels: tuple | None = None
    speed_indices: tuple | None = None
    inertias: tuple | None = None
    loading_alpha: float | None = None

    def load_blocks(self):
        mats = {}
        for name in BLOCKS:
            p = getattr(self, name)
            if not p.exists():
                raise FileNotFoundError(f"bundle block {name} not found: {p}")
            mats[name] = read_matrix_market(p)
        blocks = DaeBlocks(**mats)
        n = blocks.n
        if self.state_labels is not None and len(self.state_labels) != n:
            raise DimensionError(f"state_labels has {len(self.state_labels)} entries, expected n={n}")
        if self.speed_indices is not None and any(not 0 <= i < n for i in self.speed_indices):
            raise DimensionError(f"speed_indices must lie in [0, {n})")
        return blocks


def read_manifest(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("manifest must be a JSON object", path)
    fmt = doc.get("format", BUNDLE_FORMAT)
    if fmt != BUNDLE_FORMAT:
        raise ParseError(f"unknown bundle format {fmt!r}", path)
    base = path.parent
    missing = [b for b in BLOCKS if b not in doc]
    if missing:
        raise ParseError(f"manifest lacks block(s) {', '.join(missing)}", path)

    def opt(key, conv):
        v = doc.get(key)
        return None if v is None else conv(v)

    speed = opt("speed_indices", lambda v: tuple(int(i) for i in v))
    inertias = opt("inertias", lambda v: tuple(float(h) for h in v))
    if inertias is not None and (speed is None or len(speed) != len(inertias)):
        raise ParseError("inertias need speed_indices of the same length", path)
    return DaeBundleManifest(
        path=path.resolve(),
        **{b: (base / doc[b]).resolve() for b in BLOCKS},
        state_labels=opt("state_labels", lambda v: tuple(str(s) for s in v)),
        speed_indices=speed,
        inertias=inertias,
        loading_alpha=opt("loading_alpha", float),
    )


def load_dae_bundle(manifest_path):
    """Load and validate a bundle; ``g_y`` is factored eagerly."""
    return read_manifest(manifest_path).load_blocks()


def write_dae_bundle(blocks, directory, name="bundle", state_labels=None,
                     speed_indices=None, inertias=None, loading_alpha=None):
    """Write the four blocks and a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {"format": BUNDLE_FORMAT, "version": 1}
    for b in BLOCKS:
        fname = f"{name}_{b}.mtx"
        write_matrix_market(getattr(blocks, b), directory / fname)
        doc[b] = fname
    if state_labels is not None:
        doc["state_labels"] = [str(s) for s in state_labels]
    if speed_indices is not None:
        doc["speed_indices"] = [int(i) for i in speed_indices]
    if inertias is not None:
        doc["inertias"] = [float(h) for h in inertias]
    if loading_alpha is not None:
        doc["loading_alpha"] = float(loading_alpha)
    manifest = directory / f"{name}.json"
    manifest.write_text(json.dumps(doc, indent=2) + "\n")
    return manifest


def write_growth_csv(curve, path):
    """Growth curve as ``t,sigma_max,growth`` with round-trip float text."""
    lines = [CSV_HEADER]
    for t, s, g in zip(curve.times.tolist(), curve.sigma_max.tolist(), curve.growth.tolist()):
        lines.append(f"{t!r},{s!r},{g!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_growth_csv(path):
    """Inverse of :func:`write_growth_csv`; returns ``(t, sigma_max, growth)`` arrays."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}", path, 1)
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln], dtype=float)
    data = data.reshape(-1, 3)
    return data[:, 0], data[:, 1], data[:, 2]


def _floats(a):
    return None if a is None else [float(x) for x in np.asarray(a).ravel()]


def result_summary(result, config=None):
    """JSON-ready summary of a :class:`~maxgrowth.growth.MaxGrowthResult`."""
    from . import __version__

    times = result.curve.times
    W = result.weights
    weights = {"mode": W.mode}
    if W.selection:
        weights["indices"] = [int(i) for i in W.indices]
        weights["weights"] = _floats(W.weights)
    elif W.C is not None:
        weights["C_shape"] = list(W.C.shape)
    if W.B is not None:
        weights["B_shape"] = list(W.B.shape)
    summary = {
        "s_max": float(result.s_max),
        "peak_growth": float(result.s_max) ** 2,
        "t_star": float(result.t_star),
        "v_max": _floats(result.v_max),
        "x_max": _floats(result.x_max),
        "backend": result.backend,
        "weight_mode": W.mode,
        "weights": weights,
        "grid": {
            "dT": float(times[1] - times[0]) if len(times) > 1 else 0.0,
            "n": len(times) - 1,
            "t_max": float(times[-1]),
        },
        "config": config or {},
        "version": __version__,
    }
    return summary


def write_result_json(result, path, config=None):
    summary = result_summary(result, config)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def read_result_json(path):
    return json.loads(Path(path).read_text())

