"""Approximate maximum rank of a matrix pencil, and matroid matching.

An assignment ``a`` of the pencil ``sum_i a_i A_i`` is accepted when no
change of ``ell`` coordinates to values in the value set raises the rank.
Otherwise, for the first improving index set ``I``, the current values on
``I`` are one of few tuples that keep the rank (a Schwartz-Zippel count
bounds them by ``n * s**(ell-1)``), so a tape block can replace them by
their ordinal among those tuples.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractViolation, InvalidInput, LemmaViolation
from .matrix import batch_rank, numpy_ok, rank_mod
from .tape import (
    Arena,
    CatalyticRun,
    CatalyticTape,
    Compress,
    CompressionRecord,
    Found,
    RecordFormat,
    bits_for,
    compress_or_compute,
    merge_values,
)
from .tutte import Graph

ED_TAG = "ED-TUPLE"


@dataclass(frozen=True)
class MatrixPencil:
    matrices: tuple[tuple[tuple[int, ...], ...], ...]
    rows: int
    cols: int
    p: int

    def __post_init__(self) -> None:
        mats = tuple(tuple(tuple(int(v) % self.p for v in row) for row in mat) for mat in self.matrices)
        for mat in mats:
            if len(mat) != self.rows or any(len(row) != self.cols for row in mat):
                raise InvalidInput("pencil matrices must share one shape")
        object.__setattr__(self, "matrices", mats)

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def n(self) -> int:
        return max(self.rows, self.cols)

    def stack(self) -> np.ndarray:
        dtype = np.int64 if numpy_ok(self.p) else object
        return np.array(self.matrices, dtype=dtype).reshape(self.m, self.rows, self.cols)

    def evaluate(self, a: Sequence[int]) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for coef, mat in zip(a, self.matrices):
            if coef:
                for i in range(self.rows):
                    for j in range(self.cols):
                        out[i][j] = (out[i][j] + coef * mat[i][j]) % self.p
        return out

    def rank_at(self, a: Sequence[int]) -> int:
        return rank_mod(self.evaluate(a), self.p) if self.rows and self.cols else 0

    @classmethod
    def from_text(cls, text: str) -> MatrixPencil:
        """Header ``m n p`` followed by ``m`` stacked ``n x n`` blocks."""
        toks = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not toks or len(toks[0]) != 3:
            raise InvalidInput("pencil header must be 'm n p'")
        m, n, p = (int(x) for x in toks[0])
        body = toks[1:]
        if len(body) != m * n or any(len(r) != n for r in body):
            raise InvalidInput(f"expected {m} blocks of {n} rows with {n} entries")
        mats = tuple(tuple(tuple(int(v) for v in body[k * n + i]) for i in range(n)) for k in range(m))
        return cls(mats, n, n, p)

    @classmethod
    def load(cls, path: str | Path) -> MatrixPencil:
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        lines = [f"{self.m} {self.rows} {self.p}"]
        for mat in self.matrices:
            lines += [" ".join(map(str, row)) for row in mat]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ApproxParams:
    """Tuple size ``ell = ceil(1/eps - 1)`` and exponent ``c = 2*ell + 3``."""

    epsilon: Fraction
    ell: int
    c: int

    @classmethod
    def from_epsilon(cls, eps: float | Fraction | str, ell: int | None = None, c: int | None = None,
                     unsafe: bool = False) -> ApproxParams:
        e = Fraction(eps).limit_denominator(10**6) if not isinstance(eps, Fraction) else eps
        if not 0 < e < 1:
            raise InvalidInput("epsilon must lie strictly between 0 and 1")
        derived = max(1, math.ceil(1 / e - 1))
        if (ell is not None and ell != derived) or (c is not None and c != 2 * (ell or derived) + 3):
            if not unsafe:
                raise InvalidInput("overriding ell or c needs unsafe=True")
        ell = ell if ell is not None else derived
        c = c if c is not None else 2 * ell + 3
        if ell > 3:
            warnings.warn(f"ell={ell}: enumeration grows like (m*s)^{ell}", stacklevel=2)
        return cls(e, ell, c)

    def bound_holds(self, rank: int, reference: int) -> bool:
        """``rank >= ceil((1 - eps) * reference)``."""
        return rank >= math.ceil((1 - self.epsilon) * reference)


@dataclass(frozen=True)
class Approx:
    rank: int


@dataclass(frozen=True)
class Witness:
    indices: tuple[int, ...]
    values: tuple[int, ...]
    rank: int


def _tuple_stack(pencil: MatrixPencil, a: Sequence[int], I: Sequence[int], tuples: np.ndarray) -> np.ndarray:
    """Evaluations with coordinates ``I`` replaced by each row of ``tuples``."""
    p = pencil.p
    mats = pencil.stack()
    rest = [0 if i in I else a[i] for i in range(pencil.m)]
    base = np.zeros((pencil.rows, pencil.cols), dtype=mats.dtype)
    for coef, mat in zip(rest, mats):
        if coef:
            base = (base + coef * mat) % p
    out = np.repeat(base[None], len(tuples), axis=0)
    for pos, i in enumerate(I):
        lam = tuples[:, pos].astype(mats.dtype) % p
        out = (out + lam[:, None, None] * mats[i][None]) % p
    return out


def _tuple_ranks(pencil: MatrixPencil, a: Sequence[int], I: Sequence[int], s: int, chunk: int = 1 << 15) -> np.ndarray:
    """Ranks for every tuple of ``S^ell`` on coordinates ``I``, lexicographic order."""
    ell = len(I)
    total = s ** ell
    out = np.empty(total, dtype=np.int64)
    if not pencil.rows or not pencil.cols:
        out[:] = 0
        return out
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        tuples = np.stack([(idx // s ** (ell - 1 - k)) % s for k in range(ell)], axis=1)
        stack = _tuple_stack(pencil, a, I, tuples)
        if numpy_ok(pencil.p):
            out[lo:lo + len(idx)] = batch_rank(stack, pencil.p)
        else:
            out[lo:lo + len(idx)] = [rank_mod(mt.tolist(), pencil.p) for mt in stack]
    return out


def _decode_tuple(code: int, ell: int, s: int) -> tuple[int, ...]:
    return tuple((code // s ** (ell - 1 - k)) % s for k in range(ell))


def _encode_tuple(vals: Sequence[int], s: int) -> int:
    code = 0
    for v in vals:
        code = code * s + v
    return code


def effective_ell(params: ApproxParams, m: int) -> int:
    return max(1, min(params.ell, m))


def tuple_case_split(pencil: MatrixPencil, a: Sequence[int], params: ApproxParams, s: int) -> Approx | Witness:
    """First improving ``(I, lambda)`` in lexicographic order, else :class:`Approx`."""
    k = pencil.rank_at(a)
    if pencil.m == 0:
        return Approx(k)
    ell = effective_ell(params, pencil.m)
    for I in itertools.combinations(range(pencil.m), ell):
        ranks = _tuple_ranks(pencil, a, I, s)
        up = np.nonzero(ranks > k)[0]
        if up.size:
            return Witness(I, _decode_tuple(int(up[0]), ell, s), k)
    return Approx(k)


def ordinal_bound(n: int, s: int, ell: int) -> int:
    """Largest possible number of rank-keeping tuples, ``min(n * s^(ell-1), s^ell)``."""
    return min(n * s ** (ell - 1), s ** ell)


def tuple_ordinal(pencil: MatrixPencil, a: Sequence[int], I: Sequence[int], k: int, s: int) -> tuple[int, int]:
    """1-based ordinal of ``a`` restricted to ``I`` among the rank-``k`` tuples, and their count."""
    ranks = _tuple_ranks(pencil, a, I, s)
    keep = np.nonzero(ranks == k)[0]
    code = _encode_tuple([a[i] for i in I], s)
    hits = np.nonzero(keep == code)[0]
    if not hits.size:
        raise ContractViolation(f"current tuple on {tuple(I)} does not keep rank {k}")
    return int(hits[0]) + 1, int(keep.size)


def tuple_from_ordinal(pencil: MatrixPencil, a: Sequence[int], I: Sequence[int], k: int, j: int, s: int) -> tuple[int, ...] | None:
    ranks = _tuple_ranks(pencil, a, I, s)
    keep = np.nonzero(ranks == k)[0]
    if not 1 <= j <= keep.size:
        return None
    return _decode_tuple(int(keep[j - 1]), len(I), s)


def bjp_greedy(pencil: MatrixPencil, params: ApproxParams, s: int, start: Sequence[int] | None = None) -> list[int]:
    """Apply improving tuple substitutions until none is left."""
    a = list(start) if start is not None else [0] * pencil.m
    for _ in range(min(pencil.rows, pencil.cols) + 1):
        ev = tuple_case_split(pencil, a, params, s)
        if isinstance(ev, Approx):
            return a
        for i, v in zip(ev.indices, ev.values):
            a[i] = v
    raise LemmaViolation("tuple improvement did not stop within the rank bound")


@dataclass
class PencilResult:
    assignment: list[int]
    rank: int
    run: CatalyticRun | None
    max_ordinal_count: int = 0


def pencil_approx_rank(pencil: MatrixPencil, tape: CatalyticTape, params: ApproxParams, audit: bool = False) -> PencilResult:
    spec = tape.spec
    if pencil.p != spec.p:
        raise InvalidInput(f"pencil is over GF({pencil.p}) but the tape uses GF({spec.p})")
    s = spec.s
    if pencil.m == 0:
        return PencilResult([], 0, None)
    ell = effective_ell(params, pencil.m)
    n = pencil.n
    bound = ordinal_bound(n, s, ell)
    fmt = RecordFormat((ED_TAG,), ell, bits_for(pencil.m), (bits_for(bound), bits_for(min(pencil.rows, pencil.cols) + 1)))
    lay = tape.value_layout(per_block=pencil.m)
    seen = [0]

    def process(t: int, a: list[int]):
        ev = tuple_case_split(pencil, a, params, s)
        if isinstance(ev, Approx):
            return Found((a, ev.rank))
        j, count = tuple_ordinal(pencil, a, ev.indices, ev.rank, s)
        seen[0] = max(seen[0], count)
        if count > bound:
            raise LemmaViolation(f"{count} rank-keeping tuples exceed the bound {bound}")
        return Compress(ED_TAG, ev.indices, (j - 1, ev.rank), (ev, j, count))

    def recompute(rec: CompressionRecord, rest: list[int]) -> list[list[int]]:
        I = rec.indices
        a = merge_values(rest, I, [0] * len(I))
        tup = tuple_from_ordinal(pencil, a, I, rec.meta[1], rec.meta[0] + 1, s)
        return [] if tup is None else [list(tup)]

    def check(t: int, a: list[int], outcome: Compress) -> None:
        ev, j, _ = outcome.witness
        back = tuple_from_ordinal(pencil, a, ev.indices, ev.rank, j, s)
        if back != tuple(a[i] for i in ev.indices):
            raise LemmaViolation(f"ordinal {j} on {ev.indices} does not give back the dropped tuple")

    def fallback(arena: Arena):
        a = bjp_greedy(pencil, params, s)
        arena.store_ints(a, lay.width)
        return a, pencil.rank_at(a)

    run = compress_or_compute(tape, lay, fmt, process, recompute, fallback, check if audit else None)
    a, rank = run.result
    return PencilResult(list(a), rank, run, seen[0])


# ------------------------------------------------------------ matroid matching


def matroid_matching_pencil(rep: Sequence[Sequence[int]], g: Graph, p: int) -> MatrixPencil:
    """One skew matrix ``a_u a_v^T - a_v a_u^T`` per edge, ``a_u`` the column of ``u``."""
    r = len(rep)
    if any(len(row) != g.n for row in rep):
        raise InvalidInput(f"representation must have {g.n} columns")
    mats = []
    for u, v in g.edges:
        au = [rep[i][u - 1] % p for i in range(r)]
        av = [rep[i][v - 1] % p for i in range(r)]
        mats.append(tuple(tuple((au[i] * av[j] - av[i] * au[j]) % p for j in range(r)) for i in range(r)))
    return MatrixPencil(tuple(mats), r, r, p)


def matroid_matching_approx(rep: Sequence[Sequence[int]], g: Graph, tape: CatalyticTape, params: ApproxParams,
                            audit: bool = False) -> int:
    if not rep or g.m == 0:
        return 0
    res = pencil_approx_rank(matroid_matching_pencil(rep, g, tape.spec.p), tape, params, audit=audit)
    return res.rank // 2
