"""Perfect and maximum matchings from weighted Pfaffian polynomials.

For a full-rank Tutte evaluation ``T'`` and edge weights ``W`` the matrix
``A`` has entries ``T'[u][v] * z**W(uv)``.  For each edge ``e`` two
polynomials are formed, both independent of ``W(e)``:

* ``P0``: the Pfaffian of ``A`` with ``e`` removed;
* ``P1``: the Pfaffian of ``A`` with ``W(e)`` set to 0, minus ``P0``.

So ``Pf(A) = P0 + z**W(e) * P1``.  Writing ``w_without`` and ``w_with`` for
the least degrees of ``P0`` and ``P1``, an edge with
``W(e) == w_without - w_with`` is a *threshold edge*; its weight can be
recomputed from the other weights alone, so a tape block holding such a
weight vector can drop ``W(e)``.  When no edge is a threshold edge, the
edges whose removal kills the lowest monomial of ``Pf(A)`` form a perfect
matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput, LemmaViolation, PreconditionViolation
from .ffield import FieldSpec, UniPoly, min_degree_term
from .matrix import monomial_pfaffian_polys, pfaffian_mod, rank_mod
from .mixedrank import MixedMatrix, mixed_max_rank
from .perturb import greedy_max_rank
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
from .tutte import Graph, TutteAssignment, decomposition_from_deficiency, matching_size, tutte_family, tutte_matrix

PM_TAG = "PM-EDGE"


@dataclass(frozen=True)
class WeightAssignment:
    weights: tuple[int, ...]
    w_max: int

    def __post_init__(self) -> None:
        if any(w < 0 or w > self.w_max for w in self.weights):
            raise InvalidInput(f"weights must lie in [0, {self.w_max}]")


@dataclass
class EdgePolys:
    """``Pf(A)`` and the per-edge split, all as coefficient rows."""

    full: UniPoly
    without: list[UniPoly]
    with_: list[UniPoly]
    d_max: int


def degree_bound(g: Graph, weights: Sequence[int]) -> int:
    """Largest possible matching weight: the n/2 heaviest edges together."""
    top = sorted(weights, reverse=True)[: g.n // 2]
    return int(sum(top))


def _full_rank(g: Graph, values: Sequence[int], p: int) -> None:
    if g.n % 2 or rank_mod(tutte_matrix(g, TutteAssignment(g, tuple(values), FieldSpec(p, 2))).entries, p) != g.n:
        raise PreconditionViolation("Tutte evaluation is not of full rank")


def edge_polys(g: Graph, values: Sequence[int], weights: Sequence[int], p: int) -> EdgePolys:
    """``Pf(A)`` together with ``P0`` and ``P1`` for every edge, in one batch."""
    n, m = g.n, g.m
    coef = np.zeros((n, n), dtype=np.int64)
    wt = np.zeros((n, n), dtype=np.int64)
    for k, (u, v) in enumerate(g.edges):
        coef[u - 1, v - 1] = values[k] % p
        coef[v - 1, u - 1] = -values[k] % p
        wt[u - 1, v - 1] = wt[v - 1, u - 1] = weights[k]
    cstack = np.repeat(coef[None], 2 * m + 1, axis=0)
    wstack = np.repeat(wt[None], 2 * m + 1, axis=0)
    for k, (u, v) in enumerate(g.edges):
        cstack[1 + 2 * k, u - 1, v - 1] = cstack[1 + 2 * k, v - 1, u - 1] = 0
        wstack[2 + 2 * k, u - 1, v - 1] = wstack[2 + 2 * k, v - 1, u - 1] = 0
    d_max = degree_bound(g, weights)
    coeffs = monomial_pfaffian_polys(cstack, wstack, d_max, p)
    polys = [UniPoly(tuple(int(c) for c in row), p) for row in coeffs]
    full = polys[0]
    without = polys[1::2]
    with_ = [polys[2 + 2 * k] - without[k] for k in range(m)]
    return EdgePolys(full, without, with_, d_max)


def split_P0_P1(assign: TutteAssignment, W: WeightAssignment, e: int) -> tuple[UniPoly, UniPoly]:
    g = assign.graph
    _full_rank(g, assign.values, assign.spec.p)
    polys = edge_polys(g, assign.values, W.weights, assign.spec.p)
    return polys.without[e], polys.with_[e]


def threshold_value(p0: UniPoly, p1: UniPoly) -> int | None:
    """``w_without - w_with`` when both polynomials are nonzero."""
    t0, t1 = min_degree_term(p0), min_degree_term(p1)
    if t0 is None or t1 is None:
        return None
    return t0[0] - t1[0]


def find_threshold_edge(polys: EdgePolys, weights: Sequence[int]) -> tuple[int, int, int] | None:
    """First edge (canonical order) whose weight equals its threshold value."""
    for e, (p0, p1) in enumerate(zip(polys.without, polys.with_)):
        t0, t1 = min_degree_term(p0), min_degree_term(p1)
        if t0 is None or t1 is None:
            continue
        if weights[e] == t0[0] - t1[0]:
            return e, t0[0], t1[0]
    return None


def is_perfect_matching(g: Graph, edges: Sequence[tuple[int, int]]) -> bool:
    return is_matching(g, edges) and 2 * len(edges) == g.n


def is_matching(g: Graph, edges: Sequence[tuple[int, int]]) -> bool:
    seen: set[int] = set()
    for u, v in edges:
        if v not in g.neighbors(u) or u in seen or v in seen:
            return False
        seen.update((u, v))
    return True


def extract_matching(g: Graph, polys: EdgePolys, weights: Sequence[int]) -> list[tuple[int, int]]:
    """Edges whose deletion removes the lowest monomial of ``Pf(A)``."""
    lead = min_degree_term(polys.full)
    if lead is None:
        raise LemmaViolation("Pf(A) vanished although the Tutte evaluation has full rank")
    w0 = lead[0]
    M = [g.edges[e] for e in range(g.m) if polys.without[e].coeff(w0) == 0]
    if not is_perfect_matching(g, M):
        raise LemmaViolation(f"extracted edge set {M} is not a perfect matching")
    weight = sum(weights[g.edges.index(e)] for e in M)
    if weight != w0:
        raise LemmaViolation(f"extracted matching weighs {weight}, lowest degree is {w0}")
    return M


def default_w_max(m: int, value_bits: int) -> int:
    """Weights up to ``2^k - 1`` with ``2^k`` just above ``2m``, capped by the value width."""
    k = min(max(1, bits_for(2 * m + 1)), max(1, value_bits))
    return (1 << k) - 1


def self_reduce_pm(g: Graph, spec: FieldSpec) -> list[tuple[int, int]]:
    """Perfect matching by repeatedly fixing an edge at the smallest vertex."""
    alive = set(g.vertices())
    M: list[tuple[int, int]] = []
    while alive:
        u = min(alive)
        for v in sorted(g.neighbors(u) & alive):
            rest, _ = g.induced(alive - {u, v})
            if rest.m == 0:
                ok = rest.n == 0
            else:
                _, ev, _ = greedy_max_rank(tutte_family(rest, spec), None, "fast")
                ok = ev.rank == rest.n
            if ok:
                M.append((u, v))
                alive -= {u, v}
                break
        else:
            raise PreconditionViolation("graph has no perfect matching")
    return sorted(M)


@dataclass
class PerfectMatchingResult:
    matching: list[tuple[int, int]]
    weight: int | None
    trank_run: CatalyticRun | None
    run: CatalyticRun | None


def perfect_matching(g: Graph, tape: CatalyticTape, w_max: int | None = None, audit: bool = False,
                     values: Sequence[int] | None = None) -> PerfectMatchingResult:
    """A perfect matching, reading weight vectors from the tape block by block.

    ``values`` may supply a full-rank Tutte evaluation; by default one is
    obtained from :func:`matching_size` on the same tape.
    """
    if g.n == 0:
        return PerfectMatchingResult([], 0, None, None)
    if g.n % 2 or g.m == 0:
        raise PreconditionViolation("graph has no perfect matching")
    spec = tape.spec
    trank = None
    if values is None:
        ms = matching_size(g, tape)
        trank = ms.run
        if 2 * ms.nu != g.n:
            raise PreconditionViolation(f"graph has no perfect matching (nu={ms.nu}, n={g.n})")
        values = ms.assignment.values
    values = list(values)
    _full_rank(g, values, spec.p)
    pf_at_one = pfaffian_mod(tutte_matrix(g, TutteAssignment(g, tuple(values), spec)).entries, spec.p)
    if pf_at_one == 0:
        raise LemmaViolation("Pf(T') vanished at full rank")
    if w_max is None:
        w_max = default_w_max(g.m, spec.bits)
    lay = tape.weight_layout(w_max, per_block=g.m)
    fmt = RecordFormat((PM_TAG,), 1, bits_for(g.m), ())
    found_weight: list[int] = []

    def process(t: int, weights: list[int]):
        polys = edge_polys(g, values, weights, spec.p)
        lead = min_degree_term(polys.full)
        if lead is None or polys.full(1) != pf_at_one:
            raise LemmaViolation("Pf(A) at z=1 differs from Pf(T')")
        hit = find_threshold_edge(polys, weights)
        if hit is not None:
            return Compress(PM_TAG, (hit[0],), (), hit)
        found_weight.append(lead[0])
        return Found(extract_matching(g, polys, weights))

    def recompute(rec: CompressionRecord, rest: list[int]) -> list[list[int]]:
        e = rec.indices[0]
        weights = merge_values(rest, rec.indices, [0])
        polys = edge_polys(g, values, weights, spec.p)
        w = threshold_value(polys.without[e], polys.with_[e])
        return [[w]] if w is not None and 0 <= w <= w_max else []

    def check(t: int, weights: list[int], outcome: Compress) -> None:
        # the dropped weight must be recoverable from the others alone
        e = outcome.indices[0]
        probe = list(weights)
        probe[e] = 0
        polys = edge_polys(g, values, probe, spec.p)
        if threshold_value(polys.without[e], polys.with_[e]) != weights[e]:
            raise LemmaViolation(f"threshold weight of edge {e} is not recoverable")

    def fallback(arena: Arena):
        M = self_reduce_pm(g, spec)
        flat = [x - 1 for e in M for x in e]
        arena.store_ints(flat, max(1, bits_for(g.n)))
        return M

    run = compress_or_compute(tape, lay, fmt, process, recompute, fallback, check if audit else None)
    M = sorted(run.result)
    return PerfectMatchingResult(M, found_weight[0] if found_weight else None, trank, run)


# ------------------------------------------------------------- bipartite


def bipartite_max_matching(left: Sequence, right: Sequence, edges: Sequence[tuple], tape: CatalyticTape,
                           w_max: int | None = None, audit: bool = False) -> list[tuple]:
    """Maximum matching of a bipartite graph given by its two sides.

    A maximum-rank evaluation of the biadjacency matrix (one indeterminate
    per edge) is found on the tape.  A greedy row basis and then a greedy
    column basis of those rows select a square nonsingular submatrix; its
    row and column sets induce a subgraph with a perfect matching, which
    is then searched for.
    """
    left, right = list(left), list(right)
    li = {x: i for i, x in enumerate(left)}
    ri = {y: j for j, y in enumerate(right)}
    pos = sorted({(li[x], ri[y]) for x, y in edges})
    if not pos:
        return []
    spec = tape.spec
    mixed = MixedMatrix(len(left), len(right), tuple((0,) * len(right) for _ in left), tuple(pos), spec.p)
    res = mixed_max_rank(mixed, tape, audit=audit)
    B = [list(row) for row in res.assignment.evaluate().entries]
    rows: list[int] = []
    for i in range(len(left)):
        if rank_mod([B[r] for r in rows + [i]], spec.p) > len(rows):
            rows.append(i)
    sub = [B[r] for r in rows]
    cols: list[int] = []
    for j in range(len(right)):
        cand = cols + [j]
        if rank_mod([[row[c] for c in cand] for row in sub], spec.p) > len(cols):
            cols.append(j)
    if len(rows) != res.rank or len(cols) != res.rank:
        raise LemmaViolation("greedy bases disagree with the maximum rank")
    if not rows:
        return []
    # vertices 1..k are the chosen rows, k+1..2k the chosen columns
    k = len(rows)
    rpos = {r: a + 1 for a, r in enumerate(rows)}
    cpos = {c: k + b + 1 for b, c in enumerate(cols)}
    sub_edges = tuple((rpos[i], cpos[j]) for i, j in pos if i in rpos and j in cpos)
    h = Graph(2 * k, sub_edges)
    pm = perfect_matching(h, tape, w_max=w_max, audit=audit)
    out = []
    for a, b in pm.matching:
        i, j = rows[a - 1], cols[b - k - 1]
        out.append((left[i], right[j]))
    return sorted(out, key=lambda e: li[e[0]])


# ---------------------------------------------------------------- assembly


@dataclass
class MaximumMatchingResult:
    matching: list[tuple[int, int]]
    nu: int


def maximum_matching(g: Graph, tape: CatalyticTape, w_max: int | None = None, audit: bool = False) -> MaximumMatchingResult:
    """Maximum matching assembled along the Gallai-Edmonds decomposition.

    The part ``C`` gets a perfect matching.  The barrier ``A`` is matched
    into distinct odd components of ``D`` through a bipartite matching on
    the graph where each component is contracted to one vertex; the
    endpoint inside a component is its smallest neighbour of the barrier
    vertex.  Each component minus its matched vertex (or its smallest
    vertex when unmatched) gets a perfect matching.
    """
    ms = matching_size(g, tape, audit=audit)
    nu = ms.nu
    ge = decomposition_from_deficiency(g, ms.deficiency)
    M: list[tuple[int, int]] = []

    def pm_on(vertices) -> list[tuple[int, int]]:
        if not vertices:
            return []
        sub, old = g.induced(vertices)
        res = perfect_matching(sub, tape, w_max=w_max, audit=audit)
        return [(old[u - 1], old[v - 1]) for u, v in res.matching]

    M += pm_on(ge.C)
    comp_of = {v: ci for ci, comp in enumerate(ge.components) for v in comp}
    barrier = sorted(ge.A)
    contracted = sorted({(a, comp_of[v]) for a in barrier for v in g.neighbors(a) if v in comp_of})
    pairs = bipartite_max_matching(barrier, list(range(len(ge.components))), contracted, tape, w_max=w_max, audit=audit)
    matched_vertex: dict[int, int] = {}
    for a, ci in pairs:
        d = min(v for v in g.neighbors(a) if comp_of.get(v) == ci)
        matched_vertex[ci] = d
        M.append((min(a, d), max(a, d)))
    for ci, comp in enumerate(ge.components):
        d = matched_vertex.get(ci, min(comp))
        M += pm_on(set(comp) - {d})
    M = sorted((min(u, v), max(u, v)) for u, v in M)
    if not is_matching(g, M) or len(M) != nu:
        raise LemmaViolation(f"assembled matching has size {len(M)}, expected {nu}")
    return MaximumMatchingResult(M, nu)
