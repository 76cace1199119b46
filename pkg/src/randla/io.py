"""Matrix Market (array and coordinate) and edge-list readers and writers."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import RandLAError
from .laplacian import WeightedGraph

FORMATS = ("matrix_market_array", "matrix_market_coordinate", "edge_list")


class FormatError(RandLAError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def _num(x: float) -> str:
    return repr(float(x))


# ----------------------------------------------------------------- writers

def write_array(path, A) -> None:
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    lines = ["%%MatrixMarket matrix array real general", f"{m} {n}"]
    lines += [_num(v) for v in A.ravel(order="F")]
    Path(path).write_text("\n".join(lines) + "\n")


def write_coordinate(path, A) -> None:
    if hasattr(A, "to_sparse"):
        A = A.to_sparse()
    M = sp.coo_matrix(A)
    M.sum_duplicates()
    M.eliminate_zeros()
    order = np.lexsort((M.row, M.col))
    lines = ["%%MatrixMarket matrix coordinate real general", f"{M.shape[0]} {M.shape[1]} {M.nnz}"]
    lines += [f"{i + 1} {j + 1} {_num(v)}" for i, j, v in zip(M.row[order], M.col[order], M.data[order])]
    Path(path).write_text("\n".join(lines) + "\n")


def write_edge_list(path, G: WeightedGraph) -> None:
    lines = [f"{u} {v} {_num(w)}" for u, v, w in G.edges()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ----------------------------------------------------------------- readers

def _content_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            yield lineno, raw.strip()


def read_matrix_market(path, strict: bool = True) -> np.ndarray:
    """Read an array or coordinate Matrix Market file into a dense matrix.

    In strict mode a repeated (i, j) coordinate is an error.
    """
    lines = _content_lines(path)
    try:
        lineno, banner = next(lines)
    except StopIteration:
        raise FormatError(path, 1, "empty file") from None
    tok = banner.split()
    if len(tok) != 5 or tok[0] != "%%MatrixMarket" or tok[1].lower() != "matrix":
        raise FormatError(path, lineno, "malformed header")
    fmt, field, symm = (t.lower() for t in tok[2:])
    if fmt not in ("array", "coordinate"):
        raise FormatError(path, lineno, f"unsupported format {fmt!r}")
    if field not in ("real", "integer", "double") and not (field == "pattern" and fmt == "coordinate"):
        raise FormatError(path, lineno, f"unsupported field {field!r}")
    if symm not in ("general", "symmetric", "skew-symmetric"):
        raise FormatError(path, lineno, f"unsupported symmetry {symm!r}")

    size = None
    for lineno, s in lines:
        if s and not s.startswith("%"):
            size = (lineno, s.split())
            break
    if size is None:
        raise FormatError(path, lineno, "missing size line")
    lineno, st = size
    try:
        dims = [int(x) for x in st]
    except ValueError:
        raise FormatError(path, lineno, "malformed size line") from None
    if len(dims) != (2 if fmt == "array" else 3) or min(dims) < 0:
        raise FormatError(path, lineno, "malformed size line")
    m, n = dims[:2]
    A = np.zeros((m, n))

    if fmt == "array":
        if symm == "general":
            slots = [(i, j) for j in range(n) for i in range(m)]
        else:
            if m != n:
                raise FormatError(path, lineno, "symmetric array must be square")
            lo = 0 if symm == "symmetric" else 1
            slots = [(i, j) for j in range(n) for i in range(j + lo, n)]
        k = 0
        for lineno, s in lines:
            if not s or s.startswith("%"):
                continue
            if k >= len(slots):
                raise FormatError(path, lineno, "too many entries")
            try:
                v = float(s.split()[0]) if len(s.split()) == 1 else None
            except ValueError:
                v = None
            if v is None or not np.isfinite(v):
                raise FormatError(path, lineno, f"malformed entry {s!r}")
            i, j = slots[k]
            A[i, j] = v
            if symm != "general" and i != j:
                A[j, i] = v if symm == "symmetric" else -v
            k += 1
        if k != len(slots):
            raise FormatError(path, lineno, f"expected {len(slots)} entries, found {k}")
        return A

    nnz = dims[2]
    seen = set()
    k = 0
    for lineno, s in lines:
        if not s or s.startswith("%"):
            continue
        t = s.split()
        want = 2 if field == "pattern" else 3
        try:
            if len(t) != want:
                raise ValueError
            i, j = int(t[0]) - 1, int(t[1]) - 1
            v = 1.0 if field == "pattern" else float(t[2])
        except ValueError:
            raise FormatError(path, lineno, f"malformed entry {s!r}") from None
        if not (0 <= i < m and 0 <= j < n):
            raise FormatError(path, lineno, f"index ({i + 1}, {j + 1}) out of range")
        if not np.isfinite(v):
            raise FormatError(path, lineno, "non-finite value")
        if (i, j) in seen:
            if strict:
                raise FormatError(path, lineno, f"duplicate entry ({i + 1}, {j + 1})")
            A[i, j] += v
        else:
            A[i, j] = v
        seen.add((i, j))
        if symm != "general" and i != j:
            A[j, i] = v if symm == "symmetric" else -v
        k += 1
        if k > nnz:
            raise FormatError(path, lineno, "more entries than declared")
    if k != nnz:
        raise FormatError(path, lineno, f"expected {nnz} entries, found {k}")
    return A


def read_edge_list(path, n: int | None = None) -> WeightedGraph:
    """Read ``u v w`` lines (0-based vertices); '#' starts a comment."""
    us, vs, ws = [], [], []
    for lineno, s in _content_lines(path):
        s = s.split("#", 1)[0].strip()
        if not s:
            continue
        t = s.split()
        try:
            if len(t) != 3:
                raise ValueError
            u, v, w = int(t[0]), int(t[1]), float(t[2])
        except ValueError:
            raise FormatError(path, lineno, f"expected 'u v w', got {s!r}") from None
        if u < 0 or v < 0 or u == v or not (np.isfinite(w) and w > 0):
            raise FormatError(path, lineno, f"invalid edge {s!r}")
        us.append(u)
        vs.append(v)
        ws.append(w)
    n_inf = max(us + vs) + 1 if us else 0
    n = n_inf if n is None else int(n)
    if n < n_inf:
        raise RandLAError("vertex count smaller than largest endpoint")
    return WeightedGraph(max(n, 1), np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                         np.array(ws, dtype=float))


def matrix_io(path, direction: str, format: str, data=None):
    """Dispatch to the reader or writer for ``format``."""
    if format not in FORMATS:
        raise RandLAError(f"unknown format {format!r}")
    if direction == "read":
        return read_edge_list(path) if format == "edge_list" else read_matrix_market(path)
    if direction != "write":
        raise RandLAError("direction must be 'read' or 'write'")
    if format == "matrix_market_array":
        write_array(path, data)
    elif format == "matrix_market_coordinate":
        write_coordinate(path, data)
    else:
        write_edge_list(path, data)
    return data
