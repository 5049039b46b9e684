"""Sparse storage, shifted factorizations and Matrix Market I/O.

The factorizations are the dominant cost of both subspace iterations, so
every call to :func:`factorize` is tallied in a process-wide counter and in
the optional per-run :class:`SolveCounter` handed to it.
"""

import os
import tempfile
import threading
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MatrixMarketError, SingularMatrixError

_global_lock = threading.Lock()
_global_total = 0


def global_factorization_count():
    """Number of successful factorizations in this process."""
    return _global_total


@dataclass
class SolveCounter:
    """Per-run tally of factorizations and block solves."""

    factorizations: int = 0
    solves: int = 0
    adjoint_solves: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, attr, amount=1):
        with self._lock:
            setattr(self, attr, getattr(self, attr) + amount)

    def as_dict(self):
        return {
            "factorizations": self.factorizations,
            "solves": self.solves,
            "adjoint_solves": self.adjoint_solves,
        }


def as_csc(M):
    """Complex CSC copy of a dense or sparse matrix with sorted indices."""
    M = sp.csc_matrix(M, dtype=complex)
    M.sum_duplicates()
    M.sort_indices()
    return M


def speye(n):
    return sp.identity(n, dtype=complex, format="csc")


class Factorization:
    """Reusable sparse LU factorization of a square matrix.

    Parameters
    ----------
    M : sparse matrix
    shift : complex, optional
        The point at which ``M`` was formed (``A - shift I`` or ``A(shift)``);
        stored for bookkeeping only.
    """

    def __init__(self, lu, n, shift, nnz_matrix):
        self._lu = lu
        self.n = n
        self.shift = shift
        self.fill = {"nnz_matrix": nnz_matrix, "nnz_L": lu.L.nnz, "nnz_U": lu.U.nnz}
        self._lock = threading.Lock()
        self.counter = None

    def solve(self, rhs, adjoint=False):
        """``M^{-1} rhs`` or ``M^{-H} rhs``; ``rhs`` may be a vector or block."""
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape[0] != self.n:
            raise ValueError(f"right-hand side has {rhs.shape[0]} rows, factorization is {self.n}x{self.n}")
        if rhs.size == 0:
            return rhs.copy()
        # SuperLU keeps scratch state per object; serialize access
        with self._lock:
            x = self._lu.solve(np.ascontiguousarray(rhs), trans="H" if adjoint else "N")
        if self.counter is not None:
            self.counter.add("adjoint_solves" if adjoint else "solves")
        return x


def _locate_zero_pivot(M):
    """Best-effort column index of a zero pivot in a singular ``M``."""
    counts = np.diff(M.indptr)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        return int(empty[0])
    if M.shape[0] <= 3000:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, _, U = sla.lu(M.toarray())
        d = np.abs(np.diag(U))
        scale = max(d.max(initial=0.0), 1.0)
        bad = np.flatnonzero(d <= np.finfo(float).eps * scale)
        if bad.size:
            return int(bad[0])
    return None


def factorize(M, shift=None, counter=None):
    """Sparse LU of a square matrix ``M``.

    Raises :class:`SingularMatrixError` (with ``column`` set when it can be
    located) if ``M`` is structurally or numerically singular.
    """
    global _global_total
    M = as_csc(M)
    n, m = M.shape
    if n != m:
        raise ValueError(f"factorize needs a square matrix, got {M.shape}")
    try:
        lu = spla.splu(M, permc_spec="COLAMD")
    except RuntimeError as exc:
        col = _locate_zero_pivot(M)
        where = f" at pivot column {col}" if col is not None else ""
        raise SingularMatrixError(f"matrix is singular{where}", column=col) from exc
    diagU = lu.U.diagonal()
    if not np.all(np.isfinite(diagU)) or np.any(diagU == 0):
        col = _locate_zero_pivot(M)
        raise SingularMatrixError(f"matrix is singular at pivot column {col}", column=col)
    with _global_lock:
        _global_total += 1
    if counter is not None:
        counter.add("factorizations")
    f = Factorization(lu, n, shift, M.nnz)
    f.counter = counter
    return f


def solve_multi(F, rhs, adjoint=False):
    """Apply a factorization to a block of right-hand sides."""
    return F.solve(rhs, adjoint=adjoint)


# ----------------------------------------------------------------------------
# Matrix Market

_FIELDS = ("real", "complex", "integer")
_SYMMETRIES = ("general", "symmetric", "hermitian")


def read_matrix_market(path):
    """Read a coordinate Matrix Market file into a complex CSC matrix.

    Real and integer entries are promoted to complex.  Symmetric and
    Hermitian storage is expanded to both triangles.  Duplicate coordinates
    (including an entry and its mirror in symmetric storage) are rejected.
    """
    path = Path(path)
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    banner = lines[0].split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket":
        raise MatrixMarketError(path, 1, "missing %%MatrixMarket banner")
    obj, fmt, fld, sym = (b.lower() for b in banner[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(path, 1, f"only 'matrix coordinate' is supported, got '{obj} {fmt}'")
    if fld not in _FIELDS:
        raise MatrixMarketError(path, 1, f"unsupported field '{fld}'")
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(path, 1, f"unsupported symmetry '{sym}'")

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, lineno, "size line must hold 'rows cols nnz'")
        try:
            size = tuple(int(p) for p in parts)
        except ValueError:
            raise MatrixMarketError(path, lineno, "size line must hold integers") from None
        break
    if size is None:
        raise MatrixMarketError(path, lineno, "missing size line")
    nrows, ncols, nnz = size
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise MatrixMarketError(path, lineno, "negative size")
    if sym != "general" and nrows != ncols:
        raise MatrixMarketError(path, lineno, f"{sym} storage requires a square matrix")

    width = 4 if fld == "complex" else 3
    rows, cols, vals = [], [], []
    seen = set()
    count = 0
    for ln in range(lineno + 1, len(lines) + 1):
        text = lines[ln - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != width:
            raise MatrixMarketError(path, ln, f"expected {width} fields, got {len(parts)}")
        try:
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            if fld == "complex":
                v = complex(float(parts[2]), float(parts[3]))
            else:
                v = complex(float(parts[2]))
        except ValueError:
            raise MatrixMarketError(path, ln, "unparsable entry") from None
        if not (0 <= i < nrows and 0 <= j < ncols):
            raise MatrixMarketError(path, ln, f"index ({i + 1}, {j + 1}) out of bounds for {nrows}x{ncols}")
        if not np.isfinite(v):
            raise MatrixMarketError(path, ln, "non-finite value")
        count += 1
        if count > nnz:
            raise MatrixMarketError(path, ln, f"more entries than the declared {nnz}")
        keys = [(i, j)]
        if sym != "general" and i != j:
            keys.append((j, i))
        for key in keys:
            if key in seen:
                raise MatrixMarketError(path, ln, f"duplicate entry ({key[0] + 1}, {key[1] + 1})")
            seen.add(key)
        rows.append(i)
        cols.append(j)
        vals.append(v)
        if sym != "general" and i != j:
            rows.append(j)
            cols.append(i)
            vals.append(v.conjugate() if sym == "hermitian" else v)
    if count != nnz:
        raise MatrixMarketError(path, len(lines), f"declared {nnz} entries, found {count}")
    M = sp.coo_matrix((np.array(vals, complex), (np.array(rows, int), np.array(cols, int))), shape=(nrows, ncols))
    return as_csc(M)


def write_matrix_market(path, M, comment=None):
    """Write ``M`` (dense or sparse) as a general coordinate Matrix Market file.

    Real-valued matrices are written with the ``real`` field, others with
    ``complex``.  The file is written to a temporary name and renamed.
    """
    path = Path(path)
    C = sp.coo_matrix(M)
    if np.iscomplexobj(C.data) and np.any(C.data.imag != 0):
        fld = "complex"
    else:
        fld = "real"
    order = np.lexsort((C.row, C.col))
    lines = [f"%%MatrixMarket matrix coordinate {fld} general"]
    if comment:
        lines.extend("% " + c for c in comment.splitlines())
    lines.append(f"{C.shape[0]} {C.shape[1]} {C.nnz}")
    for idx in order:
        i, j, v = C.row[idx] + 1, C.col[idx] + 1, complex(C.data[idx])
        if fld == "complex":
            lines.append(f"{i} {j} {v.real!r} {v.imag!r}")
        else:
            lines.append(f"{i} {j} {v.real!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_dense(path):
    """Matrix Market file as a dense complex array."""
    return read_matrix_market(path).toarray()


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
