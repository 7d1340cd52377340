"""Exact dense linear algebra over GF(p).

Two layers live here.  The scalar kernels (``rank_mod``, ``det_mod``,
``pfaffian_mod``, ``kernel_support``) take a list of rows of residues and
work for any prime.  The batched kernels (``batch_rank_support``,
``batch_pfaffian``) process a stack of equally shaped matrices with numpy
and need ``p < 2**31`` so that products fit in int64; callers fall back to
the scalar kernels for larger primes.

:class:`DenseMatrix` and :class:`SkewMatrix` are the value types exposed at
the API boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FieldTooSmall, InvalidInput
from .ffield import (
    NUMPY_SAFE_PRIME,
    FieldElement,
    UniPoly,
    _modinv_vec,
    interpolate,
    interpolate_consecutive,
    inv_mod,
)

Rows = Sequence[Sequence[int]]


def numpy_ok(p: int) -> bool:
    return p < NUMPY_SAFE_PRIME


# ---------------------------------------------------------------- scalar kernels


def _copy(rows: Rows, p: int) -> list[list[int]]:
    return [[v % p for v in row] for row in rows]


def rref_mod(rows: Rows, p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form and the list of pivot columns.

    Pivots are chosen as the first nonzero entry scanning columns left to
    right and rows top to bottom, so the result is deterministic.
    """
    a = _copy(rows, p)
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = inv_mod(a[r][c], p)
        prow = [v * inv % p for v in a[r]]
        a[r] = prow
        for i in range(nrows):
            if i != r and a[i][c]:
                f = a[i][c]
                row = a[i]
                a[i] = [(row[j] - f * prow[j]) % p for j in range(ncols)]
        pivots.append(c)
        r += 1
    return a, pivots


def rank_mod(rows: Rows, p: int) -> int:
    a = _copy(rows, p)
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = inv_mod(a[r][c], p)
        prow = a[r]
        for i in range(r + 1, nrows):
            if a[i][c]:
                f = a[i][c] * inv % p
                row = a[i]
                a[i] = [(row[j] - f * prow[j]) % p for j in range(ncols)]
        r += 1
    return r


def det_mod(rows: Rows, p: int) -> int:
    a = _copy(rows, p)
    n = len(a)
    if any(len(row) != n for row in a):
        raise InvalidInput("determinant of a non-square matrix")
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c] % p
        inv = inv_mod(a[c][c], p)
        prow = a[c]
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] * inv % p
                row = a[i]
                a[i] = [(row[j] - f * prow[j]) % p for j in range(n)]
    return det % p


def pfaffian_mod(rows: Rows, p: int) -> int:
    """Pfaffian by skew-preserving elimination; 0 for odd order."""
    a = _copy(rows, p)
    n = len(a)
    if n % 2:
        return 0
    pf = 1
    for k in range(0, n, 2):
        j = next((j for j in range(k + 1, n) if a[k][j]), None)
        if j is None:
            return 0
        if j != k + 1:
            # simultaneous row/column transposition flips the sign
            a[k + 1], a[j] = a[j], a[k + 1]
            for row in a:
                row[k + 1], row[j] = row[j], row[k + 1]
            pf = -pf
        piv = a[k][k + 1]
        pf = pf * piv % p
        inv = inv_mod(piv, p)
        f = [0] * n
        for i in range(k + 2, n):
            f[i] = a[k][i] * inv % p
        nxt = a[k + 1]
        for i in range(k + 2, n):
            row = a[i]
            fi = f[i]
            for jj in range(k + 2, n):
                row[jj] = (row[jj] - fi * nxt[jj] + f[jj] * nxt[i]) % p
    return pf % p


def kernel_support(rows: Rows, ncols: int, p: int) -> set[int]:
    """Coordinates that are nonzero in some vector of the right kernel."""
    if not rows:
        return set(range(ncols))
    red, pivots = rref_mod(rows, p)
    pivset = set(pivots)
    free = [c for c in range(ncols) if c not in pivset]
    support = set(free)
    for r, c in enumerate(pivots):
        if any(red[r][f] for f in free):
            support.add(c)
    return support


def transpose(rows: Rows, ncols: int) -> list[list[int]]:
    return [[row[j] for row in rows] for j in range(ncols)]


def delete_lines(rows: Rows, drop_rows: set[int] = frozenset(), drop_cols: set[int] = frozenset()) -> list[list[int]]:
    return [[v for j, v in enumerate(row) if j not in drop_cols] for i, row in enumerate(rows) if i not in drop_rows]


# --------------------------------------------------------------- batched kernels


def batch_rref(stack: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Jordan on a stack of shape (K, r, c).

    Returns ``(ranks, reduced, pivot_col_of_row)`` where the last array has
    shape (K, r) and holds -1 for non-pivot rows.
    """
    a = np.array(stack, dtype=np.int64) % p
    k, r, c = a.shape
    used = np.zeros((k, r), dtype=bool)
    pivot_col = np.full((k, r), -1, dtype=np.int64)
    ranks = np.zeros(k, dtype=np.int64)
    batch = np.arange(k)
    for col in range(c):
        cand = (a[:, :, col] != 0) & ~used
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = cand.argmax(axis=1)
        idx = batch[has]
        prow_i = piv[has]
        prow = a[idx, prow_i, :]
        inv = _modinv_vec(prow[:, col], p)
        prow = prow * inv[:, None] % p
        a[idx, prow_i, :] = prow
        factors = a[idx, :, col].copy()
        factors[np.arange(len(idx)), prow_i] = 0
        a[idx] = (a[idx] - factors[:, :, None] * prow[:, None, :]) % p
        used[idx, prow_i] = True
        pivot_col[idx, prow_i] = col
        ranks[idx] += 1
    return ranks, a, pivot_col


def batch_rank_support(stack: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Ranks and right-kernel supports (bool mask of shape (K, c))."""
    stack = np.asarray(stack)
    k, r, c = stack.shape
    if r == 0 or c == 0:
        return np.zeros(k, dtype=np.int64), np.ones((k, c), dtype=bool)
    ranks, red, pivot_col = batch_rref(stack, p)
    is_pivot = np.zeros((k, c), dtype=bool)
    rows_b, rows_r = np.nonzero(pivot_col >= 0)
    is_pivot[rows_b, pivot_col[rows_b, rows_r]] = True
    free = ~is_pivot
    touches_free = ((red != 0) & free[:, None, :]).any(axis=2)
    support = free.copy()
    hit_b, hit_r = np.nonzero(touches_free & (pivot_col >= 0))
    support[hit_b, pivot_col[hit_b, hit_r]] = True
    return ranks, support


def batch_rank(stack: np.ndarray, p: int) -> np.ndarray:
    stack = np.asarray(stack)
    if stack.shape[1] == 0 or stack.shape[2] == 0:
        return np.zeros(stack.shape[0], dtype=np.int64)
    return batch_rref(stack, p)[0]


def batch_pfaffian(stack: np.ndarray, p: int) -> np.ndarray:
    """Pfaffians of a stack of skew matrices, shape (K, n, n) -> (K,)."""
    a = np.array(stack, dtype=np.int64) % p
    kk, n, _ = a.shape
    if n % 2:
        return np.zeros(kk, dtype=np.int64)
    pf = np.ones(kk, dtype=np.int64)
    alive = np.ones(kk, dtype=bool)
    batch = np.arange(kk)
    for k in range(0, n, 2):
        nz = a[:, k, k + 1:] != 0
        has = nz.any(axis=1)
        alive &= has
        if not alive.any():
            break
        j = nz.argmax(axis=1) + k + 1
        swap = alive & (j != k + 1)
        if swap.any():
            perm = np.tile(np.arange(n), (kk, 1))
            perm[batch, k + 1] = j
            perm[batch, j] = k + 1
            a = a[batch[:, None, None], perm[:, :, None], perm[:, None, :]]
            pf[swap] = (-pf[swap]) % p
        piv = a[:, k, k + 1]
        piv = np.where(alive, piv, 1)
        pf = pf * piv % p
        if k + 2 < n:
            inv = _modinv_vec(piv, p)
            f = a[:, k, k + 2:] * inv[:, None] % p
            nxt = a[:, k + 1, k + 2:]
            upd = (f[:, :, None] * nxt[:, None, :]) % p
            upd = (upd - np.swapaxes(upd, 1, 2)) % p
            a[:, k + 2:, k + 2:] = (a[:, k + 2:, k + 2:] - upd) % p
    return np.where(alive, pf, 0)


# ------------------------------------------------------------------- value types


@dataclass(frozen=True)
class DenseMatrix:
    """Matrix of residues with optional row and column labels."""

    entries: tuple[tuple[int, ...], ...]
    p: int
    ncols: int = -1
    row_labels: tuple | None = None
    col_labels: tuple | None = None

    def __post_init__(self) -> None:
        ents = tuple(tuple(int(v) % self.p for v in row) for row in self.entries)
        ncols = self.ncols if self.ncols >= 0 else (len(ents[0]) if ents else 0)
        if any(len(row) != ncols for row in ents):
            raise InvalidInput("ragged matrix rows")
        object.__setattr__(self, "entries", ents)
        object.__setattr__(self, "ncols", ncols)
        if self.row_labels is not None and len(self.row_labels) != len(ents):
            raise InvalidInput("row label count mismatch")
        if self.col_labels is not None and len(self.col_labels) != ncols:
            raise InvalidInput("column label count mismatch")

    @property
    def nrows(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def labels(self) -> list:
        """Row labels followed by column labels (defaults R1.. and C1..)."""
        rl = self.row_labels or tuple(f"R{i + 1}" for i in range(self.nrows))
        cl = self.col_labels or tuple(f"C{j + 1}" for j in range(self.ncols))
        return list(rl) + list(cl)

    def __getitem__(self, ij: tuple[int, int]) -> FieldElement:
        i, j = ij
        return FieldElement(self.entries[i][j], self.p)

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.nrows, self.ncols)

    @classmethod
    def identity(cls, n: int, p: int) -> DenseMatrix:
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), p, n)

    @classmethod
    def zeros(cls, r: int, c: int, p: int) -> DenseMatrix:
        return cls(tuple((0,) * c for _ in range(r)), p, c)


@dataclass(frozen=True)
class SkewMatrix:
    """Skew-symmetric matrix; construction rejects anything else."""

    entries: tuple[tuple[int, ...], ...]
    p: int

    def __post_init__(self) -> None:
        ents = tuple(tuple(int(v) % self.p for v in row) for row in self.entries)
        n = len(ents)
        if any(len(row) != n for row in ents):
            raise InvalidInput("skew matrix must be square")
        for i in range(n):
            if ents[i][i]:
                raise InvalidInput(f"nonzero diagonal entry at {i}")
            for j in range(i + 1, n):
                if (ents[i][j] + ents[j][i]) % self.p:
                    raise InvalidInput(f"entries ({i},{j}) and ({j},{i}) are not negatives")
        object.__setattr__(self, "entries", ents)

    @property
    def order(self) -> int:
        return len(self.entries)

    @classmethod
    def from_upper(cls, n: int, upper: dict[tuple[int, int], int], p: int) -> SkewMatrix:
        """Build from entries above the diagonal, keyed by 0-based (i, j), i < j."""
        a = [[0] * n for _ in range(n)]
        for (i, j), v in upper.items():
            if i == j:
                raise InvalidInput("diagonal entry in skew data")
            if i > j:
                i, j, v = j, i, -v
            a[i][j] = v % p
            a[j][i] = -v % p
        return cls(tuple(map(tuple, a)), p)

    def dense(self) -> DenseMatrix:
        n = self.order
        return DenseMatrix(self.entries, self.p, n, tuple(range(1, n + 1)), tuple(range(1, n + 1)))

    def principal_minor(self, keep: Sequence[int]) -> SkewMatrix:
        return SkewMatrix(tuple(tuple(self.entries[i][j] for j in keep) for i in keep), self.p)


@dataclass(frozen=True)
class DeficiencySet:
    """Sorted indices whose deletion keeps the rank unchanged."""

    members: tuple

    def __contains__(self, x) -> bool:
        return x in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


# ------------------------------------------------------------------ public ops


def _rows_of(m: DenseMatrix | SkewMatrix) -> tuple[tuple[int, ...], ...]:
    return m.entries


def rank_of(m: DenseMatrix | SkewMatrix) -> int:
    if isinstance(m, SkewMatrix):
        return rank_mod(m.entries, m.p)
    if m.nrows == 0 or m.ncols == 0:
        return 0
    return rank_mod(m.entries, m.p)


def det_of(m: DenseMatrix | SkewMatrix) -> FieldElement:
    if isinstance(m, DenseMatrix) and m.nrows != m.ncols:
        raise InvalidInput(f"determinant of a {m.nrows}x{m.ncols} matrix")
    return FieldElement(det_mod(m.entries, m.p) if m.entries else 1, m.p)


def pfaffian(m: SkewMatrix) -> FieldElement:
    if not isinstance(m, SkewMatrix):
        raise InvalidInput("Pfaffian needs a SkewMatrix")
    return FieldElement(pfaffian_mod(m.entries, m.p) if m.entries else 1, m.p)


def deficiency(m: DenseMatrix | SkewMatrix, method: str = "rank", verify: bool = False) -> DeficiencySet:
    """Indices whose deletion preserves rank.

    For a skew matrix index ``i`` (1-based) deletes row and column i.  For a
    dense matrix the members are drawn from its row labels and column
    labels, and deleting a label removes that single line.

    ``method="rank"`` performs one rank computation per index;
    ``method="kernel"`` reads the answer off the kernel supports in a single
    elimination.  ``verify`` re-checks every returned member by definition.
    """
    if method not in ("rank", "kernel"):
        raise InvalidInput(f"unknown deficiency method {method!r}")
    p = m.p
    if isinstance(m, SkewMatrix):
        n = m.order
        if method == "rank":
            base = rank_mod(m.entries, p)
            out = [i + 1 for i in range(n) if rank_mod(delete_lines(m.entries, {i}, {i}), p) == base]
        else:
            out = sorted(i + 1 for i in kernel_support(m.entries, n, p))
        result = DeficiencySet(tuple(out))
    else:
        r, c = m.shape
        labels = m.labels()
        if method == "rank":
            base = rank_of(m)
            keep_r = [i for i in range(r) if _rank_drop(m.entries, {i}, set(), p) == base]
            keep_c = [j for j in range(c) if _rank_drop(m.entries, set(), {j}, p) == base]
        else:
            keep_c = sorted(kernel_support(m.entries, c, p)) if r else list(range(c))
            keep_r = sorted(kernel_support(transpose(m.entries, c), r, p)) if c else list(range(r))
        result = DeficiencySet(tuple([labels[i] for i in keep_r] + [labels[r + j] for j in keep_c]))
    if verify:
        check = deficiency(m, "rank")
        if check.members != result.members:
            raise AssertionError(f"deficiency self-check failed: {result.members} vs {check.members}")
    return result


def _rank_drop(rows: Rows, dr: set[int], dc: set[int], p: int) -> int:
    sub = delete_lines(rows, dr, dc)
    if not sub or not sub[0]:
        return 0
    return rank_mod(sub, p)


# ------------------------------------------------------ Pfaffian polynomials


def _eval_poly_grid(coeffs: np.ndarray, nodes: np.ndarray, p: int) -> np.ndarray:
    """coeffs (..., D) lowest first, nodes (Z,) -> values (Z, ...)."""
    z = nodes.reshape((-1,) + (1,) * (coeffs.ndim - 1))
    vals = np.zeros((len(nodes),) + coeffs.shape[:-1], dtype=np.int64)
    for t in range(coeffs.shape[-1] - 1, -1, -1):
        vals = (vals * z + coeffs[..., t]) % p
    return vals


def pfaffian_polys(coeff_stack: np.ndarray, d_max: int, p: int, chunk: int = 4096) -> np.ndarray:
    """Pfaffian polynomials of a stack of polynomial skew matrices.

    ``coeff_stack`` has shape (K, n, n, D): entry (i, j) of matrix k is the
    polynomial with coefficients ``coeff_stack[k, i, j, :]``.  Returns the
    coefficient array of shape (K, d_max + 1).  Each Pfaffian is evaluated
    at the nodes 0..d_max and interpolated.
    """
    if p <= d_max:
        raise FieldTooSmall(f"GF({p}) has too few points for degree {d_max}")
    coeff_stack = np.asarray(coeff_stack, dtype=np.int64) % p
    kk, n = coeff_stack.shape[0], coeff_stack.shape[1]
    nodes = np.arange(d_max + 1, dtype=np.int64)
    if not numpy_ok(p):
        out = np.zeros((kk, d_max + 1), dtype=object)
        for k in range(kk):
            pts = []
            for z in range(d_max + 1):
                mat = [[UniPoly(tuple(int(c) for c in coeff_stack[k, i, j]), p)(z) for j in range(n)] for i in range(n)]
                pts.append((z, pfaffian_mod(mat, p) if n else 1))
            poly = interpolate(pts, d_max, p)
            out[k, : len(poly.coeffs)] = poly.coeffs
        return out
    if n == 0:
        out = np.zeros((kk, d_max + 1), dtype=np.int64)
        out[:, 0] = 1
        return out
    vals = _eval_poly_grid(coeff_stack, nodes, p)  # (Z, K, n, n)
    flat = vals.reshape(-1, n, n)
    pf = np.empty(flat.shape[0], dtype=np.int64)
    for start in range(0, flat.shape[0], chunk):
        pf[start:start + chunk] = batch_pfaffian(flat[start:start + chunk], p)
    samples = pf.reshape(d_max + 1, kk).T
    return interpolate_consecutive(samples, p)


def pfaffian_poly(m: Sequence[Sequence[UniPoly]], d_max: int, p: int | None = None) -> UniPoly:
    """Pfaffian of a skew matrix whose entries are polynomials in z."""
    n = len(m)
    if p is None:
        if n == 0:
            raise InvalidInput("empty matrix needs an explicit prime")
        p = m[0][0].p
    width = max([len(e.coeffs) for row in m for e in row] + [1])
    arr = np.zeros((1, n, n, width), dtype=np.int64 if numpy_ok(p) else object)
    for i in range(n):
        for j in range(n):
            cs = m[i][j].coeffs
            if j <= i and cs != tuple((-c) % p for c in m[j][i].coeffs):
                raise InvalidInput("polynomial matrix is not skew-symmetric")
            arr[0, i, j, : len(cs)] = cs
    coeffs = pfaffian_polys(arr, d_max, p)[0]
    return UniPoly(tuple(int(c) for c in coeffs), p)


# ------------------------------------------------------------------- text I/O


def parse_matrix_text(text: str, allow_vars: bool = False) -> tuple[int, int, int, list[list[int | None]]]:
    """Parse "r c p" followed by r rows; '?' marks a variable when allowed."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 3:
        raise InvalidInput("matrix header must be 'r c p'")
    r, c, p = (int(x) for x in lines[0])
    body = lines[1:]
    if len(body) != r or any(len(row) != c for row in body):
        raise InvalidInput(f"expected {r} rows of {c} entries")
    rows: list[list[int | None]] = []
    for row in body:
        out: list[int | None] = []
        for tok in row:
            if tok == "?":
                if not allow_vars:
                    raise InvalidInput("variables not allowed in a constant matrix")
                out.append(None)
            else:
                out.append(int(tok) % p)
        rows.append(out)
    return r, c, p, rows


def load_matrix(path: str | Path, skew: bool = False) -> DenseMatrix | SkewMatrix:
    r, c, p, rows = parse_matrix_text(Path(path).read_text())
    if skew:
        if r != c:
            raise InvalidInput("skew matrix must be square")
        return SkewMatrix(tuple(map(tuple, rows)), p)
    return DenseMatrix(tuple(map(tuple, rows)), p, c)


def format_matrix(m: DenseMatrix | SkewMatrix) -> str:
    rows = m.entries
    c = len(rows[0]) if rows else (m.ncols if isinstance(m, DenseMatrix) else 0)
    out = [f"{len(rows)} {c} {m.p}"]
    out += [" ".join(str(v) for v in row) for row in rows]
    return "\n".join(out) + "\n"


def monomial_pfaffian_polys(coef: np.ndarray, weight: np.ndarray, d_max: int, p: int, budget: int = 1 << 22) -> np.ndarray:
    """Pfaffian polynomials of skew matrices with monomial entries.

    Entry (i, j) of matrix k is ``coef[k, i, j] * z**weight[k, i, j]``.
    Returns coefficients of shape (K, d_max + 1).
    """
    if p <= d_max:
        raise FieldTooSmall(f"GF({p}) has too few points for degree {d_max}")
    coef = np.asarray(coef, dtype=np.int64) % p
    weight = np.asarray(weight, dtype=np.int64)
    kk, n = coef.shape[0], coef.shape[1]
    if n == 0:
        out = np.zeros((kk, d_max + 1), dtype=np.int64)
        out[:, 0] = 1
        return out
    if not numpy_ok(p):
        polys = np.zeros((kk, n, n, int(weight.max()) + 1), dtype=object)
        for k in range(kk):
            for i in range(n):
                for j in range(n):
                    polys[k, i, j, weight[k, i, j]] = int(coef[k, i, j])
        return pfaffian_polys(polys, d_max, p)
    w_top = int(weight.max())
    nodes = np.arange(d_max + 1, dtype=np.int64)
    powers = np.ones((d_max + 1, w_top + 1), dtype=np.int64)
    for w in range(1, w_top + 1):
        powers[:, w] = powers[:, w - 1] * nodes % p
    per = max(1, budget // ((d_max + 1) * n * n))
    samples = np.empty((kk, d_max + 1), dtype=np.int64)
    for lo in range(0, kk, per):
        c = coef[lo:lo + per]
        w = weight[lo:lo + per]
        vals = c[None] * powers[:, w] % p  # (Z, k, n, n)
        pf = batch_pfaffian(vals.reshape(-1, n, n), p)
        samples[lo:lo + per] = pf.reshape(d_max + 1, -1).T
    return interpolate_consecutive(samples, p)
