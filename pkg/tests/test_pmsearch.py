import itertools

import numpy as np
import pytest

from catamatch.errors import PreconditionViolation
from catamatch.ffield import FieldSpec, UniPoly
from catamatch.harness import generate, oracle_bipartite_matching, oracle_max_matching
from catamatch.pmsearch import (
    PM_TAG,
    WeightAssignment,
    bipartite_max_matching,
    edge_polys,
    extract_matching,
    find_threshold_edge,
    is_matching,
    is_perfect_matching,
    maximum_matching,
    perfect_matching,
    self_reduce_pm,
    split_P0_P1,
)
from catamatch.tape import verify_restored
from catamatch.tutte import Graph, TutteAssignment, matching_size

from conftest import make_tape, zero_tape

P = 2**31 - 1
SPEC = FieldSpec(P, 64)
K2 = Graph(2, ((1, 2),))
# sorted edge order: (1,2), (1,4), (2,3), (3,4)
C4 = Graph(4, ((1, 2), (2, 3), (3, 4), (1, 4)))
C4_W = (1, 3, 2, 1)  # W(12)=1, W(23)=2, W(34)=1, W(41)=3


def unit(g):
    return TutteAssignment(g, (1,) * g.m, SPEC)


def test_split_k2():
    p0, p1 = split_P0_P1(TutteAssignment(K2, (6,), SPEC), WeightAssignment((2,), 3), 0)
    assert p0.is_zero() and p1 == UniPoly((6,), P)


def test_split_c4_by_enumeration():
    # deleting e12 leaves {23, 41} of weight 5; with W(e12)=0 the other matching weighs 1
    p0, p1 = split_P0_P1(unit(C4), WeightAssignment(C4_W, 3), 0)
    assert p0 == UniPoly.monomial(1, 5, P)
    assert p1 == UniPoly.monomial(1, 1, P)


def test_split_requires_full_rank():
    with pytest.raises(PreconditionViolation):
        split_P0_P1(TutteAssignment(C4, (1, 0, 0, 0), SPEC), WeightAssignment((0,) * 4, 1), 0)


def test_split_recombines_to_full_pfaffian():
    rng = np.random.default_rng(2)
    done = 0
    while done < 100:
        g = generate("pm-graph", int(rng.integers(1 << 30)), {"n": int(rng.choice([2, 4, 6])), "prob": 0.6})
        vals = tuple(int(v) for v in rng.integers(1, P, size=g.m))
        w = tuple(int(v) for v in rng.integers(0, 8, size=g.m))
        polys = edge_polys(g, vals, w, P)
        if polys.full.is_zero():
            continue
        for e in range(g.m):
            assert polys.without[e] + polys.with_[e].shift(w[e]) == polys.full
        done += 1


def test_threshold_edge_examples():
    assert find_threshold_edge(edge_polys(K2, (1,), (0,), P), (0,)) is None
    # equal-weight matchings make every C4 edge a threshold edge; the first is reported
    polys = edge_polys(C4, (1,) * 4, (1, 1, 1, 1), P)
    assert find_threshold_edge(polys, (1, 1, 1, 1)) == (0, 2, 1)
    polys = edge_polys(C4, (1,) * 4, C4_W, P)
    assert find_threshold_edge(polys, C4_W) is None


def test_extract_examples():
    assert extract_matching(K2, edge_polys(K2, (4,), (3,), P), (3,)) == [(1, 2)]
    assert extract_matching(C4, edge_polys(C4, (1,) * 4, C4_W, P), C4_W) == [(1, 2), (3, 4)]


def test_extract_on_k4_random_weights():
    k4 = Graph(4, tuple(itertools.combinations(range(1, 5), 2)))
    rng = np.random.default_rng(5)
    extracted = 0
    for _ in range(100):
        vals = tuple(int(v) for v in rng.integers(1, P, size=6))
        w = tuple(int(v) for v in rng.integers(0, 16, size=6))
        polys = edge_polys(k4, vals, w, P)
        if find_threshold_edge(polys, w) is None:
            assert is_perfect_matching(k4, extract_matching(k4, polys, w))
            extracted += 1
    assert extracted > 50


def test_perfect_matching_examples():
    res = perfect_matching(K2, make_tape(2, 1))
    assert res.matching == [(1, 2)]
    c6 = Graph(6, tuple((i, i % 6 + 1) for i in range(1, 7)))
    tape = make_tape(6, 6)
    assert is_perfect_matching(c6, perfect_matching(c6, tape, audit=True).matching)
    assert verify_restored(tape)
    with pytest.raises(PreconditionViolation):
        perfect_matching(Graph(4, ((1, 2), (1, 3), (1, 4))), make_tape(4, 3))


@pytest.mark.parametrize("seed", range(1, 51))
def test_perfect_matching_random(seed):
    rng = np.random.default_rng(seed)
    g = generate("pm-graph", seed, {"n": int(rng.choice([4, 6, 8, 10, 12])), "prob": 0.5})
    tape = make_tape(g.n, g.m, seed=seed)
    res = perfect_matching(g, tape, audit=True)
    assert is_perfect_matching(g, res.matching) and verify_restored(tape)


def test_zero_weights_force_edge_compressions_and_fallback():
    g = generate("pm-graph", 7, {"n": 8, "prob": 0.5})
    ms = matching_size(g, make_tape(8, g.m))
    tape = zero_tape(8, g.m, s=16, N=4)
    res = perfect_matching(g, tape, w_max=15, audit=True, values=ms.assignment.values)
    assert res.run.compute_branch
    assert [r.tag for r in res.run.records] == [PM_TAG] * 4
    assert is_perfect_matching(g, res.matching) and verify_restored(tape)


def test_self_reduction_fallback():
    g = generate("pm-graph", 3, {"n": 10, "prob": 0.4})
    assert is_perfect_matching(g, self_reduce_pm(g, SPEC))


def test_bipartite_examples():
    star = bipartite_max_matching(["a"], [1, 2, 3], [("a", 1), ("a", 2), ("a", 3)], make_tape(4, 3))
    assert len(star) == 1
    k22 = bipartite_max_matching([0, 1], ["x", "y"], [(0, "x"), (0, "y"), (1, "x"), (1, "y")], make_tape(4, 4))
    assert len(k22) == 2


@pytest.mark.parametrize("seed", range(20))
def test_bipartite_random(seed):
    rng = np.random.default_rng(100 + seed)
    a, b = int(rng.integers(1, 7)), int(rng.integers(1, 7))
    left, right = [f"L{i}" for i in range(a)], [f"R{j}" for j in range(b)]
    edges = [(x, y) for x in left for y in right if rng.random() < 0.35]
    tape = make_tape(a + b, max(1, len(edges)), seed=seed)
    M = bipartite_max_matching(left, right, edges, tape, audit=True)
    assert len(M) == oracle_bipartite_matching(left, right, edges)
    assert len({x for x, _ in M}) == len({y for _, y in M}) == len(M)
    assert all(e in edges for e in M) and verify_restored(tape)


def test_maximum_matching_examples():
    p3 = Graph(3, ((1, 2), (2, 3)))
    assert len(maximum_matching(p3, make_tape(3, 2)).matching) == 1
    tri_pendant = Graph(4, ((1, 2), (1, 3), (2, 3), (3, 4)))
    res = maximum_matching(tri_pendant, make_tape(4, 4))
    assert len(res.matching) == 2 and is_matching(tri_pendant, res.matching)


@pytest.mark.parametrize("seed", range(1, 31))
def test_maximum_matching_random(seed):
    rng = np.random.default_rng(seed)
    g = generate("random-graph", seed, {"n": int(rng.integers(2, 13)), "prob": float(rng.uniform(0.1, 0.5))})
    tape = make_tape(g.n, max(1, g.m), seed=seed)
    res = maximum_matching(g, tape)
    assert is_matching(g, res.matching) and len(res.matching) == res.nu == oracle_max_matching(g)
    assert verify_restored(tape)
