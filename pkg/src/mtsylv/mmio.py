"""Matrix Market reader and writer.

Supports the real coordinate and array formats with general or symmetric
storage.  Values are written with 17 significant digits, which round-trips
IEEE double precision exactly; symmetric storage is expanded on read.
Coordinate files come back as CSR matrices, array files as dense ndarrays.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError

_BANNER = "%%MatrixMarket"


def matrix_market_write(path, M, fmt: str | None = None, symmetric: bool = False):
    """Write a matrix in Matrix Market format.

    ``fmt`` is "coordinate" (default) or "array"; ``symmetric`` stores the
    lower triangle only and requires a symmetric square matrix.
    """
    dense = not sp.issparse(M)
    if fmt is None:
        fmt = "coordinate"
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}")
    A = np.asarray(M, dtype=float) if dense else M.tocoo()
    rows, cols = M.shape
    symmetry = "symmetric" if symmetric else "general"
    if symmetric:
        D = np.asarray(M.todense()) if not dense else A
        if rows != cols or not np.array_equal(D, D.T):
            raise MatrixMarketError("symmetric storage needs a symmetric matrix")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{_BANNER} matrix {fmt} real {symmetry}\n")
        if fmt == "array":
            fh.write(f"{rows} {cols}\n")
            D = np.asarray(M.todense()) if not dense else A
            for j in range(cols):
                i0 = j if symmetric else 0
                for i in range(i0, rows):
                    fh.write(f"{D[i, j]:.17g}\n")
        else:
            if dense:
                I, J = np.nonzero(A)
                V = A[I, J]
            else:
                I, J, V = A.row, A.col, A.data
            keep = V != 0.0
            I, J, V = I[keep], J[keep], V[keep]
            if symmetric:
                lower = I >= J
                I, J, V = I[lower], J[lower], V[lower]
            order = np.lexsort((J, I))
            fh.write(f"{rows} {cols} {order.size}\n")
            for k in order:
                fh.write(f"{I[k] + 1} {J[k] + 1} {V[k]:.17g}\n")


def _parse_banner(line: str):
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0] != _BANNER or tokens[1] != "matrix":
        raise MatrixMarketError(f"malformed banner {line.strip()!r}", lineno=1)
    fmt, field_, symmetry = tokens[2], tokens[3], tokens[4]
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", lineno=1)
    if field_ != "real":
        raise MatrixMarketError(f"unsupported field {field_!r}", lineno=1)
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", lineno=1)
    return fmt, symmetry


def matrix_market_read(path):
    """Read a Matrix Market file; returns CSR for coordinate, ndarray for array."""
    with open(path, encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", lineno=1)
    fmt, symmetry = _parse_banner(lines[0])
    body = [(no, ln.strip()) for no, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line", lineno=len(lines))
    size_no, size_line = body[0]
    entries = body[1:]
    parts = size_line.split()
    try:
        dims = [int(p) for p in parts]
    except ValueError as exc:
        raise MatrixMarketError(f"bad size line: {exc}", lineno=size_no) from exc
    if fmt == "array":
        if len(dims) != 2:
            raise MatrixMarketError("array size line needs 2 integers", lineno=size_no)
        rows, cols = dims
        if symmetry == "symmetric" and rows != cols:
            raise MatrixMarketError("symmetric matrix must be square", lineno=size_no)
        want = rows * (rows + 1) // 2 if symmetry == "symmetric" else rows * cols
        if len(entries) != want:
            raise MatrixMarketError(
                f"expected {want} array entries, found {len(entries)}",
                lineno=entries[-1][0] if entries else size_no)
        M = np.zeros((rows, cols))
        it = iter(entries)
        for j in range(cols):
            i0 = j if symmetry == "symmetric" else 0
            for i in range(i0, rows):
                no, token = next(it)
                try:
                    M[i, j] = float(token)
                except ValueError as exc:
                    raise MatrixMarketError(f"bad value: {exc}", lineno=no) from exc
        if symmetry == "symmetric":
            M = M + np.tril(M, -1).T
        return M
    if len(dims) != 3:
        raise MatrixMarketError("coordinate size line needs 3 integers", lineno=size_no)
    rows, cols, nnz = dims
    if len(entries) != nnz:
        raise MatrixMarketError(
            f"expected {nnz} entries, found {len(entries)}",
            lineno=entries[-1][0] if entries else size_no)
    I = np.empty(nnz, dtype=np.int64)
    J = np.empty(nnz, dtype=np.int64)
    V = np.empty(nnz)
    for k, (no, ln) in enumerate(entries):
        toks = ln.split()
        if len(toks) != 3:
            raise MatrixMarketError("coordinate entry needs 'i j value'", lineno=no)
        try:
            i, j, v = int(toks[0]), int(toks[1]), float(toks[2])
        except ValueError as exc:
            raise MatrixMarketError(f"bad entry: {exc}", lineno=no) from exc
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise MatrixMarketError(
                f"index ({i}, {j}) outside {rows} x {cols}", lineno=no)
        I[k], J[k], V[k] = i - 1, j - 1, v
    if symmetry == "symmetric":
        off = I != J
        I, J, V = (np.concatenate([I, J[off]]),
                   np.concatenate([J, I[off]]),
                   np.concatenate([V, V[off]]))
    M = sp.coo_matrix((V, (I, J)), shape=(rows, cols)).tocsr()
    M.sort_indices()
    return M
