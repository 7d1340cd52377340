import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catamatch.errors import InvalidInput
from catamatch.ffield import FieldSpec
from catamatch.harness import generate, oracle_matroid_intersection, oracle_symbolic_rank
from catamatch.matrix import deficiency
from catamatch.mixedrank import (
    LinearMatroidPair,
    MixedAssignment,
    MixedMatrix,
    geelen99_greedy,
    intersection_block,
    load_pair,
    matroid_intersection_size,
    mixed_case_split,
    mixed_family,
    mixed_max_rank,
    restore_value_2A_mixed,
    restore_value_2B_mixed,
)
from catamatch.perturb import DeficiencyGrowth, MaxRank, RankJump, audit_event
from catamatch.tape import verify_restored

from conftest import make_tape

P = 2**31 - 1
SPEC = FieldSpec(P, 64)
X11 = MixedMatrix(1, 1, ((0,),), ((0, 0),), P)
X_ONES = MixedMatrix(2, 2, ((0, 1), (1, 1)), ((0, 0),), P)


def test_validation_and_text():
    with pytest.raises(InvalidInput):
        MixedMatrix(1, 2, ((3, 0),), ((0, 0),), P)
    m = MixedMatrix.from_text("2 2 7\n? 1\n1 1\n")
    assert m.variables == ((0, 0),) and m.constants == ((0, 1), (1, 1))


def test_case_split_examples():
    assert mixed_case_split(X11, [0], SPEC) == RankJump(0, 1, 0)
    assert isinstance(mixed_case_split(X_ONES, [2], SPEC), MaxRank)


def test_engineered_growth_event():
    # [[1, x, 0], [0, 0, 1], [0, 0, 0]] at x=0 has rank 2 and D = {R3, C2};
    # any nonzero x keeps rank 2 and lets column C1 go as well
    A = MixedMatrix(3, 3, ((1, 0, 0), (0, 0, 1), (0, 0, 0)), ((0, 1),), P)
    ev = mixed_case_split(A, [0], SPEC, "scan")
    assert ev == mixed_case_split(A, [0], SPEC) == DeficiencyGrowth(0, 1, 3)
    before = set(deficiency(MixedAssignment(A, (0,)).evaluate()))
    after = set(deficiency(MixedAssignment(A, (1,)).evaluate()))
    assert before == {"R3", "C2"} and after - before == {"C1"}
    audit_event(mixed_family(A, SPEC), [0], ev)
    assert restore_value_2B_mixed(A, [9], SPEC, 0, 3) == 0


def test_restore_2a_mixed():
    assert restore_value_2A_mixed(X11, [4], SPEC, 0, 0) == 0
    assert restore_value_2A_mixed(X_ONES, [0], SPEC, 0, 1, method="scan") == 1


def test_mixed_max_rank_examples():
    res = mixed_max_rank(X_ONES, make_tape(2, 1))
    assert res.rank == 2 and res.assignment.values[0] != 1
    const = MixedMatrix(2, 2, ((1, 2), (2, 4)), (), P)
    res = mixed_max_rank(const, make_tape(2, 1))
    assert res.rank == 1 and res.run is None


@pytest.mark.parametrize("seed", range(50))
def test_random_6x6_against_substitution_oracle(seed):
    A = generate("mixed", seed, {"rows": 6, "cols": 6, "density": 0.3, "const_density": 0.2})
    tape = make_tape(6, max(1, A.m), seed=seed)
    res = mixed_max_rank(A, tape, audit=True)
    assert res.rank == oracle_symbolic_rank(A, trials=30, seed=seed)
    assert res.rank == geelen99_greedy(A, tape.spec, method="fast").rank
    assert verify_restored(tape)


def test_small_value_set_events_pass_audit():
    events = 0
    for seed in range(40):
        A = generate("mixed", seed, {"rows": 4, "cols": 5, "density": 0.5})
        tape = make_tape(5, max(1, A.m), s=7, N=6, seed=seed)
        res = mixed_max_rank(A, tape, audit=True)
        events += len(res.run.records) if res.run else 0
        assert verify_restored(tape)
    assert events > 20


def test_intersection_block_layout():
    pair = LinearMatroidPair(((1, 2, 3),), ((4, 5, 6), (7, 8, 9)), 3, P)
    B = intersection_block(pair)
    assert (B.rows, B.cols) == (4, 5)
    assert B.variables == ((1, 2), (2, 3), (3, 4))
    assert B.constants[0] == (0, 0, 1, 2, 3)
    assert [row[:2] for row in B.constants[1:]] == [(4, 7), (5, 8), (6, 9)]


def test_intersection_examples():
    eye = ((1, 0), (0, 1))
    assert matroid_intersection_size(LinearMatroidPair(eye, eye, 2, P), make_tape(4, 2)) == 2
    assert matroid_intersection_size(LinearMatroidPair(eye, ((1, 1),), 2, P), make_tape(4, 2)) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_intersection_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    pair = generate("matroid-pair", seed, {"r1": int(rng.integers(1, 4)), "r2": int(rng.integers(1, 4)), "n": n})
    tape = make_tape(n + 3, n, seed=seed)
    assert matroid_intersection_size(pair, tape, audit=True) == oracle_matroid_intersection(pair)
    assert verify_restored(tape)


def test_pair_file_formats(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_text("1 2 7\n1 1\n")
    b.write_text("2 2 7\n1 0\n0 1\n")
    both = tmp_path / "both.txt"
    both.write_text(a.read_text() + "---\n" + b.read_text())
    assert load_pair(a, b) == load_pair(both)
