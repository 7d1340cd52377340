import itertools

import pytest

from catamatch.ffield import FieldSpec
from catamatch.tape import tape_init

SMALL_P = 101
BIG_P = 2**31 - 1


def brute_pfaffian(A, p):
    """Signed sum over perfect matchings, independent of the elimination kernel."""
    n = len(A)
    if n % 2:
        return 0

    def rec(rem):
        if not rem:
            return 1
        i, total = rem[0], 0
        for k in range(1, len(rem)):
            j = rem[k]
            sign = 1 if k % 2 else -1
            total += sign * A[i][j] * rec(rem[1:k] + rem[k + 1:])
        return total

    return rec(list(range(n))) % p


def brute_det(M, p):
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1
        for i in range(n):
            prod *= M[i][perm[i]]
        total += (-1) ** inversions * prod
    return total % p


def make_tape(n, per_block, s=None, N=None, seed=0, p=BIG_P):
    spec = FieldSpec(p, s if s is not None else max(8, n**3))
    return tape_init(seed, n, per_block, N if N is not None else max(2, n), spec)


def zero_tape(n, per_block, s, N, p=BIG_P):
    spec = FieldSpec(p, s)
    return tape_init(bytes(N * per_block * spec.bits // 8 + 1), n, per_block, N, spec)


@pytest.fixture
def spec101():
    return FieldSpec(SMALL_P, 16)
