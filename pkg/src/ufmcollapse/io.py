"""Readers and writers for trace CSVs, feature matrices and weight matrices.

Feature files hold a d x N matrix in class-major column order.

* CSV: first line ``d,N,K,n`` (integers), then N lines, one matrix column per
  line as d comma-separated floats.
* Binary: a 32-byte header of four little-endian uint64 values ``d, N, K, n``,
  followed by d*N little-endian float64 values, column after column.

Weight files hold a K x d matrix.

* CSV: first line ``K,d``, then K lines, one matrix row per line.
* Binary: a 16-byte header of two little-endian uint64 values ``K, d``,
  followed by K*d little-endian float64 values, row after row.

Files ending in ``.csv`` use the text layout; anything else is read as binary.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import ProblemDims
from .optim import Trace

FLOAT_FMT = ".17g"


class FileFormatError(ValueError):
    pass


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, FLOAT_FMT)


def trace_header(levels: tuple[str, ...] | list[str]) -> list[str]:
    cols = ["iter", "objective", "grad_norm"]
    for name in levels:
        cols += [f"nc1_{name}", f"nc2of_{name}", f"nc2etf_{name}"]
    return cols + ["nc3"]


def write_trace_csv(path: str | Path, trace: Trace) -> None:
    levels = list(trace.rows[0].report.levels) if trace.rows else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_header(levels))
        for row in trace.rows:
            out = [str(row.iteration), _fmt(row.objective), _fmt(row.grad_norm)]
            for name in levels:
                m = row.report.levels[name]
                out += [_fmt(m.nc1), _fmt(m.nc2_of), _fmt(m.nc2_etf)]
            out.append(_fmt(row.report.nc3))
            writer.writerow(out)


def read_trace_csv(path: str | Path) -> list[dict[str, float]]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append({k: (int(v) if k == "iter" else (float(v) if v != "" else None))
                         for k, v in rec.items()})
    return rows


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _is_csv(path: str | Path) -> bool:
    return str(path).lower().endswith(".csv")


def write_features(path: str | Path, H: np.ndarray, dims: ProblemDims) -> None:
    H = np.asarray(H, dtype=np.float64)
    if H.shape != (H.shape[0], dims.N):
        raise ValueError(f"features have {H.shape[1]} columns, expected {dims.N}")
    d = H.shape[0]
    if _is_csv(path):
        with open(path, "w") as fh:
            fh.write(f"{d},{dims.N},{dims.K},{dims.n}\n")
            for col in H.T:
                fh.write(",".join(format(v, FLOAT_FMT) for v in col) + "\n")
    else:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4Q", d, dims.N, dims.K, dims.n))
            fh.write(H.T.astype("<f8").tobytes())


def read_features(path: str | Path) -> tuple[np.ndarray, ProblemDims]:
    """Read a feature file; returns the d x N matrix and the dims from its header."""
    try:
        if _is_csv(path):
            with open(path) as fh:
                header = [int(tok) for tok in fh.readline().strip().split(",")]
                if len(header) != 4:
                    raise FileFormatError("header must be 'd,N,K,n'")
                d, N, K, n = header
                cols = [[float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()]
            if len(cols) != N:
                raise FileFormatError(f"header declares N={N} columns, file has {len(cols)}")
            if any(len(c) != d for c in cols):
                raise FileFormatError(f"every column must have d={d} entries")
            H = np.array(cols, dtype=np.float64).T.reshape(d, N)
        else:
            raw = Path(path).read_bytes()
            if len(raw) < 32:
                raise FileFormatError("binary feature file shorter than its 32-byte header")
            d, N, K, n = struct.unpack("<4Q", raw[:32])
            body = raw[32:]
            if len(body) != 8 * d * N:
                raise FileFormatError(f"expected {d * N} float64 values, found {len(body) / 8:g}")
            H = np.frombuffer(body, dtype="<f8").reshape(N, d).T.astype(np.float64)
    except (ValueError, struct.error) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"malformed feature file {path}: {exc}") from exc
    if K * n != N:
        raise FileFormatError(f"header K*n = {K * n} does not match N = {N}")
    if not np.all(np.isfinite(H)):
        raise FileFormatError("feature file contains non-finite values")
    return H, ProblemDims(int(K), int(d), int(n))


def write_weights(path: str | Path, W: np.ndarray) -> None:
    W = np.asarray(W, dtype=np.float64)
    K, d = W.shape
    if _is_csv(path):
        with open(path, "w") as fh:
            fh.write(f"{K},{d}\n")
            for row in W:
                fh.write(",".join(format(v, FLOAT_FMT) for v in row) + "\n")
    else:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<2Q", K, d))
            fh.write(W.astype("<f8").tobytes())


def read_weights(path: str | Path) -> np.ndarray:
    try:
        if _is_csv(path):
            with open(path) as fh:
                K, d = (int(tok) for tok in fh.readline().strip().split(","))
                rows = [[float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()]
            if len(rows) != K or any(len(r) != d for r in rows):
                raise FileFormatError(f"weights file must hold {K} rows of {d} values")
            W = np.array(rows, dtype=np.float64)
        else:
            raw = Path(path).read_bytes()
            if len(raw) < 16:
                raise FileFormatError("binary weights file shorter than its 16-byte header")
            K, d = struct.unpack("<2Q", raw[:16])
            if len(raw) - 16 != 8 * K * d:
                raise FileFormatError(f"expected {K * d} float64 values")
            W = np.frombuffer(raw[16:], dtype="<f8").reshape(K, d).astype(np.float64)
    except (ValueError, struct.error) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"malformed weights file {path}: {exc}") from exc
    if not np.all(np.isfinite(W)):
        raise FileFormatError("weights file contains non-finite values")
    return W
