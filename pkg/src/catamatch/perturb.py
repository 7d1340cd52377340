"""Single-variable perturbation machinery shared by Tutte and mixed matrices.

A :class:`RankFamily` is a matrix whose entries are constants or
indeterminates, each indeterminate appearing in one position (mixed case)
or in a mirrored pair ``(u, v), (v, u)`` with opposite signs (Tutte case).
Given an assignment, three things can happen when a single indeterminate is
moved to another value of the value set:

* the rank rises (by 2 for skew families, 1 otherwise): a :class:`RankJump`;
* the rank stays and the deficiency set strictly grows: a
  :class:`DeficiencyGrowth`;
* neither, for every indeterminate and value: the assignment has maximum
  rank (for a large enough value set).

As a function of one indeterminate ``t`` every relevant minor is affine in
``t``.  So the rank, and the rank after deleting any one line, equals its
generic value at all but at most one point.  The ``fast`` routines exploit
this to replace scans over the value set by a handful of evaluations; the
``scan`` routines do the literal enumeration and serve as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput, LemmaViolation, UniquenessViolation
from .matrix import (
    batch_rank_support,
    delete_lines,
    det_mod,
    kernel_support,
    numpy_ok,
    pfaffian_mod,
    rank_mod,
    rref_mod,
    transpose,
)
from .ffield import inv_mod
from .tape import (
    Arena,
    CatalyticRun,
    CatalyticTape,
    CompressionRecord,
    Compress,
    Found,
    RecordFormat,
    bits_for,
    compress_or_compute,
    merge_values,
)


@dataclass(frozen=True)
class MaxRank:
    rank: int
    deficiency: frozenset[int]


@dataclass(frozen=True)
class RankJump:
    index: int
    value: int
    rank: int


@dataclass(frozen=True)
class DeficiencyGrowth:
    index: int
    value: int
    label: int


Event = MaxRank | RankJump | DeficiencyGrowth


@dataclass
class RankFamily:
    """Matrix with indeterminates at fixed positions.

    ``positions[i]`` lists ``(row, col, sign)`` triples for indeterminate
    ``i``.  ``skew`` selects the symmetric deletion convention: removing
    label ``v`` drops row and column ``v``.  Otherwise labels ``0..r-1`` are
    rows and ``r..r+c-1`` are columns.
    """

    base: np.ndarray
    positions: list[list[tuple[int, int, int]]]
    p: int
    s: int
    skew: bool

    def __post_init__(self) -> None:
        self.base = np.asarray(self.base, dtype=np.int64) % self.p if numpy_ok(self.p) else np.asarray(self.base, dtype=object)
        if self.s < 2:
            raise InvalidInput("value set needs at least two elements")

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def shape(self) -> tuple[int, int]:
        return self.base.shape

    @property
    def jump(self) -> int:
        return 2 if self.skew else 1

    @property
    def n_labels(self) -> int:
        r, c = self.shape
        return r if self.skew else r + c

    # evaluation ------------------------------------------------------------

    def evaluate(self, a: Sequence[int]) -> np.ndarray:
        mat = self.base.copy()
        for i, pos in enumerate(self.positions):
            for r, c, sg in pos:
                mat[r, c] = (sg * a[i]) % self.p
        return mat

    def variants(self, a: Sequence[int], changes: Iterable[tuple[int, int]]) -> np.ndarray:
        """Stack of evaluations, one per ``(index, value)`` change."""
        mat = self.evaluate(a)
        changes = list(changes)
        stack = np.repeat(mat[None], len(changes), axis=0)
        for k, (i, t) in enumerate(changes):
            for r, c, sg in self.positions[i]:
                stack[k, r, c] = (sg * t) % self.p
        return stack

    def rank_def(self, stack: np.ndarray, chunk: int = 2048) -> tuple[np.ndarray, np.ndarray]:
        """Ranks and deficiency masks (K, n_labels) for a stack."""
        kk = stack.shape[0]
        r, c = self.shape
        ranks = np.zeros(kk, dtype=np.int64)
        dmask = np.zeros((kk, self.n_labels), dtype=bool)
        if r == 0 or c == 0:
            dmask[:] = True
            return ranks, dmask
        if not numpy_ok(self.p):
            for k in range(kk):
                rows = [[int(v) for v in row] for row in stack[k]]
                ranks[k] = rank_mod(rows, self.p)
                for lab in self._def_scalar(rows):
                    dmask[k, lab] = True
            return ranks, dmask
        for lo in range(0, kk, chunk):
            part = stack[lo:lo + chunk]
            rk, sup = batch_rank_support(part, self.p)
            ranks[lo:lo + chunk] = rk
            if self.skew:
                dmask[lo:lo + chunk] = sup
            else:
                _, left = batch_rank_support(np.swapaxes(part, 1, 2), self.p)
                dmask[lo:lo + chunk, :r] = left
                dmask[lo:lo + chunk, r:] = sup
        return ranks, dmask

    def _def_scalar(self, rows: list[list[int]]) -> set[int]:
        r, c = self.shape
        if self.skew:
            return kernel_support(rows, c, self.p)
        cols = kernel_support(rows, c, self.p)
        rws = kernel_support(transpose(rows, c), r, self.p)
        return rws | {r + j for j in cols}

    def status(self, a: Sequence[int]) -> tuple[int, frozenset[int]]:
        ranks, dmask = self.rank_def(self.evaluate(a)[None])
        return int(ranks[0]), frozenset(int(v) for v in np.nonzero(dmask[0])[0])

    # minors ----------------------------------------------------------------

    def delete_label(self, mat: np.ndarray, label: int) -> list[list[int]]:
        rows = [[int(v) for v in row] for row in mat]
        r, _ = self.shape
        if self.skew:
            return delete_lines(rows, {label}, {label})
        if label < r:
            return delete_lines(rows, {label}, set())
        return delete_lines(rows, set(), {label - r})

    def _minor_selector(self, rows: list[list[int]]):
        """A maximal nonsingular minor of ``rows``, as a function of a matrix."""
        if not rows or not rows[0]:
            return None, 0
        nc = len(rows[0])
        _, row_piv = rref_mod(transpose(rows, nc), self.p)
        if self.skew:
            keep = row_piv

            def minor(mat: list[list[int]]) -> int:
                return pfaffian_mod([[mat[i][j] for j in keep] for i in keep], self.p) if keep else 1

            return minor, len(keep)
        sub = [rows[i] for i in row_piv]
        _, col_piv = rref_mod(sub, self.p) if sub else ([], [])

        def minor(mat: list[list[int]]) -> int:
            return det_mod([[mat[i][j] for j in col_piv] for i in row_piv], self.p) if row_piv else 1

        return minor, len(row_piv)


# ------------------------------------------------------------- small helpers


def probe_points(p: int, avoid: int, count: int = 3) -> list[int]:
    """``count`` field elements from the top of the field, skipping ``avoid``."""
    out = []
    t = p - 1
    while len(out) < count:
        if t != avoid:
            out.append(t)
        t -= 1
    return out


def _affine_root(f1: int, f2: int, t1: int, t2: int, p: int) -> int | None:
    """Root of the affine function through (t1, f1) and (t2, f2)."""
    slope = (f2 - f1) * inv_mod(t2 - t1, p) % p
    if slope == 0:
        return None
    return (t1 - f1 * inv_mod(slope, p)) % p


def _generic_root(fam: RankFamily, a: Sequence[int], j: int, label: int | None, avoid: int) -> tuple[int, int | None]:
    """Generic rank of ``M(t)`` (minus ``label``) and the single point where it drops.

    The root is ``None`` when no point of the field drops the rank.
    """
    pts = probe_points(fam.p, avoid)
    mats = [fam.variants(a, [(j, t)])[0] for t in pts]
    views = [fam.delete_label(mt, label) if label is not None else [[int(v) for v in row] for row in mt] for mt in mats]
    ranks = [rank_mod(v, fam.p) if v and v[0] else 0 for v in views]
    g = max(ranks)
    good = [k for k, rk in enumerate(ranks) if rk == g]
    if len(good) < 2:
        raise LemmaViolation("rank dropped at two of three probe points")
    k1, k2 = good[:2]
    minor, size = fam._minor_selector(views[k1])
    if size == 0:
        return 0, None
    f1, f2 = minor(views[k1]), minor(views[k2])
    return g, _affine_root(f1, f2, pts[k1], pts[k2], fam.p)


# -------------------------------------------------------------- case split


def case_split_fast(fam: RankFamily, a: Sequence[int], rank: int | None = None,
                    dset: frozenset[int] | None = None) -> Event:
    """Lexicographically first witness; every rank jump is tried before any growth.

    A rank jump at index ``i`` is possible at one value iff at every value
    other than ``a_i``, so testing the smallest other value settles it.  For
    deficiency growth, the labels that can ever join the set are read off at
    generic probe points; the values of the set that fail are then found by
    scanning upward, which stops after at most ``|D| + 1`` values.
    """
    if rank is None or dset is None:
        rank, dset = fam.status(a)
    m = fam.m
    if m == 0:
        return MaxRank(rank, dset)
    alt = [0 if a[i] != 0 else 1 for i in range(m)]
    ranks, _ = fam.rank_def(fam.variants(a, [(i, alt[i]) for i in range(m)]))
    for i in range(m):
        if ranks[i] > rank:
            if ranks[i] != rank + fam.jump:
                raise LemmaViolation(f"single-entry change moved rank {rank} -> {ranks[i]}")
            return RankJump(i, alt[i], rank)
    changes = [(i, t) for i in range(m) for t in probe_points(fam.p, a[i])]
    pranks, pmask = fam.rank_def(fam.variants(a, changes))
    dvec = np.zeros(fam.n_labels, dtype=bool)
    dvec[list(dset)] = True
    for i in range(m):
        sl = slice(3 * i, 3 * i + 3)
        at_rank = pranks[sl] == rank
        if (pranks[sl] > rank).any() or at_rank.sum() < 2:
            raise LemmaViolation(f"index {i}: probe ranks {pranks[sl].tolist()} inconsistent with rank {rank}")
        extra = pmask[sl][at_rank].any(axis=0) & ~dvec
        if not extra.any():
            continue
        hit = _scan_growth(fam, a, i, rank, dvec, limit=len(dset) + 1)
        if hit is not None:
            return hit
    return MaxRank(rank, dset)


def _scan_growth(fam: RankFamily, a: Sequence[int], i: int, rank: int, dvec: np.ndarray, limit: int) -> DeficiencyGrowth | None:
    tried = 0
    batch = max(4, limit + 1)
    t = 0
    while t < fam.s:
        vals = [v for v in range(t, min(fam.s, t + batch)) if v != a[i]]
        t += batch
        if not vals:
            continue
        ranks, masks = fam.rank_def(fam.variants(a, [(i, v) for v in vals]))
        for v, rk, mk in zip(vals, ranks, masks):
            tried += 1
            if rk == rank and (mk >= dvec).all() and (mk & ~dvec).any():
                u = int(np.nonzero(mk & ~dvec)[0][0])
                return DeficiencyGrowth(i, v, u)
            if tried > limit:
                raise LemmaViolation(f"index {i}: more than {limit} values fail although growth is generic")
    return None


def case_split_scan(fam: RankFamily, a: Sequence[int]) -> Event:
    """Literal enumeration over every index and every value of the set."""
    rank, dset = fam.status(a)
    dvec = np.zeros(fam.n_labels, dtype=bool)
    dvec[list(dset)] = True
    changes = [(i, t) for i in range(fam.m) for t in range(fam.s) if t != a[i]]
    if not changes:
        return MaxRank(rank, dset)
    ranks, masks = fam.rank_def(fam.variants(a, changes))
    for (i, t), rk in zip(changes, ranks):
        if rk > rank:
            return RankJump(i, t, rank)
    for (i, t), rk, mk in zip(changes, ranks, masks):
        if rk == rank and (mk >= dvec).all() and (mk & ~dvec).any():
            return DeficiencyGrowth(i, t, int(np.nonzero(mk & ~dvec)[0][0]))
    return MaxRank(rank, dset)


# ------------------------------------------------------------------ restore


def candidates_rank(fam: RankFamily, a: Sequence[int], j: int, k: int, method: str = "fast") -> list[int]:
    """Values ``t`` in the set with ``rank M(a, x_j <- t) == k``.

    ``a[j]`` is ignored.
    """
    if method == "scan":
        ranks, _ = fam.rank_def(fam.variants(a, [(j, t) for t in range(fam.s)]))
        return [t for t in range(fam.s) if ranks[t] == k]
    g, root = _generic_root(fam, a, j, None, avoid=-1)
    if g == k:
        if fam.s > 2:
            raise UniquenessViolation(f"rank {k} is generic for index {j}: every value qualifies")
        return candidates_rank(fam, a, j, k, "scan")
    if root is None or root >= fam.s:
        return []
    rk, _ = fam.rank_def(fam.variants(a, [(j, root)]))
    return [root] if rk[0] == k else []


def candidates_label(fam: RankFamily, a: Sequence[int], j: int, label: int, method: str = "fast") -> list[int]:
    """Values ``t`` in the set for which ``label`` is outside the deficiency set."""
    if method == "scan":
        _, masks = fam.rank_def(fam.variants(a, [(j, t) for t in range(fam.s)]))
        return [t for t in range(fam.s) if not masks[t, label]]
    g, rho = _generic_root(fam, a, j, None, avoid=-1)
    gu, sigma = _generic_root(fam, a, j, label, avoid=-1)
    if gu < g:
        if fam.s > 2:
            raise UniquenessViolation(f"label {label} is generically outside the deficiency set")
        return candidates_label(fam, a, j, label, "scan")
    pool = sorted({t for t in (rho, sigma) if t is not None and t < fam.s})
    if not pool:
        return []
    _, masks = fam.rank_def(fam.variants(a, [(j, t) for t in pool]))
    return [t for t, mk in zip(pool, masks) if not mk[label]]


def audit_event(fam: RankFamily, a: Sequence[int], ev: Event) -> None:
    """Exhaustive single-value check of a fired event.

    Exactly one value of the set (the current one) must keep the rank for a
    jump, or keep the label out of the deficiency set for a growth.  Every
    other value must raise the rank by exactly the jump size in the first
    case.
    """
    if isinstance(ev, MaxRank):
        return
    i = ev.index
    ranks, masks = fam.rank_def(fam.variants(a, [(i, t) for t in range(fam.s)]))
    if isinstance(ev, RankJump):
        keep = [t for t in range(fam.s) if ranks[t] == ev.rank]
        if keep != [a[i]]:
            raise UniquenessViolation(f"jump at index {i}: rank-keeping values {keep[:8]}, current {a[i]}")
        bad = [t for t in range(fam.s) if t != a[i] and ranks[t] != ev.rank + fam.jump]
        if bad:
            raise LemmaViolation(f"jump at index {i}: values {bad[:8]} change rank by other than {fam.jump}")
    else:
        out = [t for t in range(fam.s) if not masks[t, ev.label]]
        if out != [a[i]]:
            raise UniquenessViolation(f"growth at index {i}, label {ev.label}: excluding values {out[:8]}, current {a[i]}")


# -------------------------------------------------------------------- greedy


def improve(fam: RankFamily, a: Sequence[int], method: str = "fast") -> Event:
    return case_split_fast(fam, a) if method == "fast" else case_split_scan(fam, a)


def greedy_max_rank(fam: RankFamily, start: Sequence[int] | None = None, method: str = "fast",
                    max_steps: int | None = None) -> tuple[list[int], MaxRank, int]:
    """Apply improving substitutions until none is left.

    Each step raises the rank or, at equal rank, enlarges the deficiency
    set, so the loop ends after at most ``(n_labels + 1)**2`` steps.
    Returns the assignment, the terminal status and the number of steps.
    """
    a = list(start) if start is not None else [0] * fam.m
    limit = max_steps if max_steps is not None else (fam.n_labels + 1) ** 2 + 1
    for step in range(limit + 1):
        ev = improve(fam, a, method)
        if isinstance(ev, MaxRank):
            return a, ev, step
        a[ev.index] = ev.value
    raise LemmaViolation("greedy improvement did not terminate")


# ------------------------------------------------------------- catalytic run


@dataclass
class MaxRankOutcome:
    assignment: list[int]
    rank: int
    deficiency: frozenset[int]
    run: CatalyticRun | None


def record_format(fam: RankFamily, tags: tuple[str, str]) -> RecordFormat:
    r, c = fam.shape
    meta_width = bits_for(max(min(r, c) + 1, fam.n_labels))
    return RecordFormat(tags, 1, bits_for(fam.m), (meta_width,))


def catalytic_max_rank(
    fam: RankFamily,
    tape: CatalyticTape,
    tags: tuple[str, str],
    audit: bool = False,
    restore_method: str = "fast",
    fallback_method: str = "fast",
) -> MaxRankOutcome:
    """Maximum-rank assignment by the compress-or-compute block loop.

    Each tape block is read as a full assignment.  If no improving
    substitution exists the block is the answer.  Otherwise the improved
    variable's value is dropped and the block is rewritten with its index
    and either the current rank (rank jump) or the label that would join
    the deficiency set (growth).  Once all blocks are compressed the greedy
    improvement runs in the freed arena.  Restoration recovers each dropped
    value as the unique one with the recorded rank, or the unique one that
    keeps the recorded label out of the deficiency set.
    """
    if fam.m == 0:
        rank, dset = fam.status([])
        return MaxRankOutcome([], rank, dset, None)
    if fam.s > tape.spec.s or fam.p != tape.spec.p:
        raise InvalidInput("family and tape disagree on the field")
    lay = tape.value_layout(per_block=fam.m)
    fmt = record_format(fam, tags)
    jump_tag, growth_tag = tags

    def process(t: int, values: list[int]):
        ev = case_split_fast(fam, values)
        if isinstance(ev, MaxRank):
            return Found((values, ev))
        if isinstance(ev, RankJump):
            return Compress(jump_tag, (ev.index,), (ev.rank,), ev)
        return Compress(growth_tag, (ev.index,), (ev.label,), ev)

    def check(t: int, values: list[int], outcome: Compress) -> None:
        audit_event(fam, values, outcome.witness)

    def recompute(rec: CompressionRecord, rest: list[int]) -> list[list[int]]:
        j = rec.indices[0]
        a = merge_values(rest, rec.indices, [0])
        if rec.tag == jump_tag:
            cands = candidates_rank(fam, a, j, rec.meta[0], restore_method)
        else:
            cands = candidates_label(fam, a, j, rec.meta[0], restore_method)
        return [[v] for v in cands]

    def fallback(arena: Arena):
        a, ev, _ = greedy_max_rank(fam, None, fallback_method)
        arena.store_ints(a, lay.width)
        return a, ev

    run = compress_or_compute(tape, lay, fmt, process, recompute, fallback, check if audit else None)
    a, ev = run.result
    return MaxRankOutcome(list(a), ev.rank, ev.deficiency, run)
