"""CSV artifacts with provenance headers.

Sample files hold one support per row with columns ``x,y,z,hx,hy,hz,value``
and an optional ``noise`` column; 2-D files drop ``z`` and ``hz``.  Every file
starts with ``#`` comment lines carrying the tool version, the seed and a hash
of the run configuration, plus any extra ``key=value`` metadata.  Floats are
written with Python's shortest round-trip ``repr`` so a file read back gives
bit-identical values.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .supports import Supports

__all__ = [
    "SchemaError",
    "config_hash",
    "header_lines",
    "fmt",
    "write_table",
    "read_table",
    "write_samples",
    "read_samples",
    "write_block_model",
    "read_block_model",
]

SAMPLE_COLUMNS = {
    2: ("x", "y", "hx", "hy", "value"),
    3: ("x", "y", "z", "hx", "hy", "hz", "value"),
}
_AXES = ("x", "y", "z")


class SchemaError(ValueError):
    """A CSV file does not match the expected layout."""


def config_hash(config) -> str:
    """Short stable hash of a JSON-serialisable configuration."""
    blob = json.dumps(config, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    f = float(v)
    if math.isnan(f):
        return "nan"
    return repr(f)


def _fmt_meta(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(fmt(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def header_lines(seed=None, config=None, meta=None) -> list:
    lines = [f"# integral-gp {__version__}"]
    lines.append(f"# seed={'none' if seed is None else seed}, config={config_hash(config or {})}")
    if meta:
        lines.append("# " + ", ".join(f"{k}={_fmt_meta(v)}" for k, v in meta.items()))
    return lines


def write_table(path, columns: dict, seed=None, config=None, meta=None) -> Path:
    """Write equal-length columns with a provenance header."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[k]).reshape(-1) for k in names]
    n = {c.size for c in cols}
    if len(n) > 1:
        raise ValueError(f"columns have different lengths {sorted(n)}")
    out = header_lines(seed, config, meta)
    out.append(",".join(names))
    for row in zip(*cols):
        out.append(",".join(fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def _parse_meta(line: str, meta: dict):
    body = line.lstrip("#").strip()
    for part in body.split(","):
        if "=" in part:
            k, v = part.split("=", 1)
            meta[k.strip()] = v.strip()


def read_table(path, required=None):
    """Read a CSV written by :func:`write_table`.

    Returns
    -------
    columns : dict of str -> ndarray of float
    meta : dict of str -> str
        ``key=value`` pairs found in the comment header.

    Raises
    ------
    SchemaError
        On a missing header, missing required column, wrong field count or a
        non-numeric field; the message names the offending line.
    """
    path = Path(path)
    meta = {}
    names = None
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if rec[0].lstrip().startswith("#"):
                _parse_meta(",".join(rec), meta)
                continue
            if names is None:
                names = [c.strip() for c in rec]
                if len(set(names)) != len(names):
                    raise SchemaError(f"{path}:{lineno}: duplicate column names in header {names}")
                continue
            if len(rec) != len(names):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(names)} fields, found {len(rec)}"
                )
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                bad = next(v for v in rec if not _is_float(v))
                raise SchemaError(f"{path}:{lineno}: non-numeric field {bad!r}") from None
    if names is None:
        raise SchemaError(f"{path}: no header row")
    missing = [c for c in (required or ()) if c not in names]
    if missing:
        raise SchemaError(f"{path}: header is missing column(s) {missing}")
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(names))
    return {k: data[:, i] for i, k in enumerate(names)}, meta


def _is_float(v) -> bool:
    try:
        float(v)
    except ValueError:
        return False
    return True


def _sample_dim(names) -> int:
    if "z" in names or "hz" in names:
        return 3
    return 2


def write_samples(path, supports: Supports, seed=None, config=None, meta=None) -> Path:
    if supports.dim not in SAMPLE_COLUMNS:
        raise ValueError(f"sample files hold 2-D or 3-D supports, not {supports.dim}-D")
    D = supports.dim
    cols = {a: supports.centroids[:, q] for q, a in enumerate(_AXES[:D])}
    cols.update({"h" + a: supports.extents[:, q] for q, a in enumerate(_AXES[:D])})
    cols["value"] = supports.values
    if supports.noise is not None:
        cols["noise"] = supports.noise
    return write_table(path, cols, seed, config, meta)


def read_samples(path):
    """Read a sample CSV; returns ``(Supports, meta)``."""
    cols, meta = read_table(path)
    D = _sample_dim(cols)
    need = SAMPLE_COLUMNS[D]
    missing = [c for c in need if c not in cols]
    if missing:
        raise SchemaError(f"{path}: header is missing column(s) {missing}")
    A = np.column_stack([cols[a] for a in _AXES[:D]])
    H = np.column_stack([cols["h" + a] for a in _AXES[:D]])
    if np.any(H < 0):
        row = int(np.flatnonzero(np.any(H < 0, axis=1))[0])
        raise SchemaError(f"{path}: negative extent in data row {row + 1}")
    return Supports(A, H, cols["value"], cols.get("noise")), meta


def write_block_model(path, model, seed=None, config=None, meta=None) -> Path:
    m = {"origin": model.origin, "cell": model.cell_size, "counts": model.counts}
    m.update(meta or {})
    return write_samples(path, model.cells(), seed, config, m)


def _vector(meta, key, path, cast=float):
    if key not in meta:
        raise SchemaError(f"{path}: block model header lacks '{key}='")
    try:
        return tuple(cast(v) for v in meta[key].split())
    except ValueError:
        raise SchemaError(f"{path}: cannot parse '{key}={meta[key]}'") from None


def read_block_model(path):
    """Read a block-model CSV back into a :class:`~integral_gp.fusion.BlockModel`.

    Rows may come in any order; they are placed on the lattice given by the
    ``origin``, ``cell`` and ``counts`` header entries.  Lattice positions
    without a row are an error.
    """
    from .fusion import BlockModel

    cells, meta = read_samples(path)
    origin = _vector(meta, "origin", path)
    size = _vector(meta, "cell", path)
    counts = _vector(meta, "counts", path, int)
    if not (len(origin) == len(size) == len(counts) == cells.dim):
        raise SchemaError(f"{path}: lattice metadata does not match {cells.dim}-D samples")
    u = (cells.centroids - np.asarray(origin)) / np.asarray(size)
    idx = np.rint(u).astype(np.int64)
    off = np.abs(u - idx) > 1e-6
    if np.any(off) or np.any(idx < 0) or np.any(idx >= np.asarray(counts)):
        row = int(np.flatnonzero(np.any(off | (idx < 0) | (idx >= np.asarray(counts)), axis=1))[0])
        raise SchemaError(f"{path}: data row {row + 1} is not on the block lattice")
    flat = np.ravel_multi_index(tuple(idx.T), counts)
    if np.unique(flat).size != flat.size or flat.size != math.prod(counts):
        raise SchemaError(f"{path}: lattice of {math.prod(counts)} blocks needs one row per block")
    values = np.empty(flat.size)
    values[flat] = cells.values
    return BlockModel(origin, size, counts, values), meta
