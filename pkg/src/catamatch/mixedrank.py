"""Mixed matrices: maximum-rank completion and linear matroid intersection."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInput, UniquenessViolation
from .ffield import FieldSpec
from .matrix import DenseMatrix, parse_matrix_text, rank_mod
from .perturb import (
    Event,
    MaxRankOutcome,
    RankFamily,
    candidates_label,
    candidates_rank,
    case_split_fast,
    case_split_scan,
    catalytic_max_rank,
    greedy_max_rank,
)
from .tape import CatalyticRun, CatalyticTape

MIXED_TAGS = ("2A'", "2B'")


@dataclass(frozen=True)
class MixedMatrix:
    """Constant part plus one distinct indeterminate at each listed position."""

    rows: int
    cols: int
    constants: tuple[tuple[int, ...], ...]
    variables: tuple[tuple[int, int], ...]
    p: int

    def __post_init__(self) -> None:
        if len(self.constants) != self.rows or any(len(r) != self.cols for r in self.constants):
            raise InvalidInput("constant part has the wrong shape")
        consts = tuple(tuple(int(v) % self.p for v in row) for row in self.constants)
        vs = tuple(sorted(set((int(i), int(j)) for i, j in self.variables)))
        if len(vs) != len(self.variables):
            raise InvalidInput("an indeterminate position is listed twice")
        for i, j in vs:
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise InvalidInput(f"variable position ({i},{j}) outside the matrix")
            if consts[i][j]:
                raise InvalidInput(f"position ({i},{j}) is both constant and variable")
        object.__setattr__(self, "constants", consts)
        object.__setattr__(self, "variables", vs)

    @property
    def m(self) -> int:
        return len(self.variables)

    def labels(self) -> list[str]:
        return [f"R{i + 1}" for i in range(self.rows)] + [f"C{j + 1}" for j in range(self.cols)]

    def evaluate(self, values: Sequence[int]) -> DenseMatrix:
        if len(values) != self.m:
            raise InvalidInput(f"{len(values)} values for {self.m} indeterminates")
        a = [list(row) for row in self.constants]
        for (i, j), v in zip(self.variables, values):
            a[i][j] = v % self.p
        return DenseMatrix(tuple(map(tuple, a)), self.p, self.cols)

    @classmethod
    def from_text(cls, text: str) -> MixedMatrix:
        r, c, p, rows = parse_matrix_text(text, allow_vars=True)
        consts = tuple(tuple(0 if v is None else v for v in row) for row in rows)
        var = tuple((i, j) for i, row in enumerate(rows) for j, v in enumerate(row) if v is None)
        return cls(r, c, consts, var, p)

    @classmethod
    def load(cls, path: str | Path) -> MixedMatrix:
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class MixedAssignment:
    matrix: MixedMatrix
    values: tuple[int, ...]

    def evaluate(self) -> DenseMatrix:
        return self.matrix.evaluate(self.values)

    @property
    def rank(self) -> int:
        ev = self.evaluate()
        return rank_mod(ev.entries, ev.p) if ev.nrows and ev.ncols else 0


@dataclass(frozen=True)
class LinearMatroidPair:
    """Two column matroids on the same ground set ``0..n-1``."""

    first: tuple[tuple[int, ...], ...]
    second: tuple[tuple[int, ...], ...]
    n: int
    p: int

    def __post_init__(self) -> None:
        for name, mat in (("first", self.first), ("second", self.second)):
            if any(len(row) != self.n for row in mat):
                raise InvalidInput(f"{name} representation must have {self.n} columns")


def mixed_family(A: MixedMatrix, spec: FieldSpec) -> RankFamily:
    if A.p != spec.p:
        raise InvalidInput(f"matrix is over GF({A.p}) but the run uses GF({spec.p})")
    base = np.array(A.constants, dtype=np.int64).reshape(A.rows, A.cols)
    pos = [[(i, j, 1)] for i, j in A.variables]
    return RankFamily(base, pos, spec.p, spec.s, skew=False)


def mixed_case_split(A: MixedMatrix, assign: Sequence[int], spec: FieldSpec, method: str = "fast") -> Event:
    """First improving substitution over the value set.

    Labels in a growth event index rows first (``0..r-1``) then columns.
    """
    fam = mixed_family(A, spec)
    return case_split_fast(fam, list(assign)) if method == "fast" else case_split_scan(fam, list(assign))


def restore_value_2A_mixed(A: MixedMatrix, assign: Sequence[int], spec: FieldSpec, j: int, k: int, method: str = "fast") -> int:
    cands = candidates_rank(mixed_family(A, spec), list(assign), j, k, method)
    if len(cands) != 1:
        raise UniquenessViolation(f"variable {j}, rank {k}: candidates {cands[:8]}")
    return cands[0]


def restore_value_2B_mixed(A: MixedMatrix, assign: Sequence[int], spec: FieldSpec, j: int, label: int, method: str = "fast") -> int:
    cands = candidates_label(mixed_family(A, spec), list(assign), j, label, method)
    if len(cands) != 1:
        raise UniquenessViolation(f"variable {j}, label {label}: candidates {cands[:8]}")
    return cands[0]


@dataclass
class MixedRankResult:
    rank: int
    assignment: MixedAssignment
    deficiency: tuple[str, ...]
    run: CatalyticRun | None


def mixed_max_rank(A: MixedMatrix, tape: CatalyticTape, audit: bool = False, restore_method: str = "fast") -> MixedRankResult:
    fam = mixed_family(A, tape.spec)
    out: MaxRankOutcome = catalytic_max_rank(fam, tape, MIXED_TAGS, audit=audit, restore_method=restore_method)
    labels = A.labels()
    return MixedRankResult(out.rank, MixedAssignment(A, tuple(out.assignment)), tuple(labels[i] for i in sorted(out.deficiency)), out.run)


def geelen99_greedy(A: MixedMatrix, spec: FieldSpec, method: str = "scan") -> MixedAssignment:
    """Greedy single-variable improvement from the all-zero assignment."""
    a, _, _ = greedy_max_rank(mixed_family(A, spec), None, method)
    return MixedAssignment(A, tuple(a))


def intersection_block(pair: LinearMatroidPair) -> MixedMatrix:
    """Block matrix ``[[0, A1], [A2^T, diag(x)]]``.

    Rows: the ``r1`` rows of ``A1`` then one row per ground element; columns:
    the ``r2`` rows of ``A2`` then one column per ground element.  The
    diagonal indeterminate of ground element ``e`` sits at ``(r1+e, r2+e)``.
    """
    r1, r2, n = len(pair.first), len(pair.second), pair.n
    rows = r1 + n
    cols = r2 + n
    a = [[0] * cols for _ in range(rows)]
    for i in range(r1):
        for e in range(n):
            a[i][r2 + e] = pair.first[i][e] % pair.p
    for e in range(n):
        for j in range(r2):
            a[r1 + e][j] = pair.second[j][e] % pair.p
    var = tuple((r1 + e, r2 + e) for e in range(n))
    return MixedMatrix(rows, cols, tuple(map(tuple, a)), var, pair.p)


def matroid_intersection_size(pair: LinearMatroidPair, tape: CatalyticTape, audit: bool = False) -> int:
    block = intersection_block(pair)
    if block.m == 0:
        return 0
    return mixed_max_rank(block, tape, audit=audit).rank - pair.n


def load_pair(path1: str | Path, path2: str | Path | None = None) -> LinearMatroidPair:
    """Two representation files, or one file holding both separated by a ``---`` line."""
    if path2 is None:
        parts = Path(path1).read_text().split("\n---\n")
        if len(parts) != 2:
            raise InvalidInput("a single pair file must hold two matrices separated by '---'")
        t1, t2 = parts
    else:
        t1, t2 = Path(path1).read_text(), Path(path2).read_text()
    r1, c1, p1, a1 = parse_matrix_text(t1)
    r2, c2, p2, a2 = parse_matrix_text(t2)
    if c1 != c2 or p1 != p2:
        raise InvalidInput("representations must share the ground set and the prime")
    return LinearMatroidPair(tuple(map(tuple, a1)), tuple(map(tuple, a2)), c1, p1)
