import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catamatch.errors import ContractViolation, InvalidInput, UniquenessViolation
from catamatch.ffield import FieldSpec
from catamatch.tape import (
    Compress,
    Found,
    RecordFormat,
    bits_for,
    bits_to_int,
    compress_block,
    compress_or_compute,
    int_to_bits,
    restore_block,
    tape_init,
    verify_restored,
)

SPEC = FieldSpec(101, 8)


def test_seeded_tape_is_deterministic():
    t = tape_init(0, 4, 3, 2, SPEC)
    lay = t.value_layout()
    assert [t.read_block(lay, 0), t.read_block(lay, 1)] == [[3, 7, 2], [7, 6, 3]]
    assert t.snapshot_hash() == "689058cabd95f39e142a61f2a331fdeb4874b9ef9669184229b13d941c98d6c3"
    assert tape_init(0, 4, 3, 2, SPEC).snapshot_hash() == t.snapshot_hash()


def test_zero_file_and_short_file(tmp_path):
    f = tmp_path / "zeros.bin"
    f.write_bytes(bytes(8))
    t = tape_init(f, 4, 3, 2, SPEC)
    lay = t.value_layout()
    assert t.read_block(lay, 0) == [0, 0, 0] and t.read_block(lay, 1) == [0, 0, 0]
    with pytest.raises(InvalidInput):
        tape_init(bytes(1), 4, 3, 2, SPEC)
    with pytest.raises(InvalidInput):
        tape_init(0, 4, 0, 2, SPEC)


def test_values_are_reduced_mod_s():
    spec = FieldSpec(101, 5)
    t = tape_init(bytes([0xFF] * 4), 2, 3, 2, spec)
    vals = t.read_block(t.value_layout(), 0)
    assert vals == [7 % 5] * 3


@given(st.integers(0, 2**20), st.integers(1, 24))
def test_bit_round_trip(v, w):
    v %= 1 << w
    assert bits_to_int(int_to_bits(v, w)) == v


def test_bits_for():
    assert [bits_for(k) for k in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


def _setup():
    t = tape_init(3, 4, 5, 3, SPEC)
    lay = t.value_layout()
    fmt = RecordFormat(("X",), 1, bits_for(5), (2,))
    return t, lay, fmt


def test_compress_restore_round_trip_and_corruption():
    t, lay, fmt = _setup()
    orig = t.read_block(lay, 1)
    rec = compress_block(t, lay, 1, fmt, "X", (2,), (1,))
    assert rec.savings == lay.width - fmt.header_bits
    with pytest.raises(ContractViolation):
        compress_block(t, lay, 1, fmt, "X", (0,), (1,))
    with pytest.raises(ContractViolation):
        t.read_block(lay, 1)
    restore_block(t, lay, 1, lambda r, rest: [[orig[2]]])
    assert verify_restored(t)
    t.bits[5] ^= 1
    assert not verify_restored(t)


def test_restore_requires_exactly_one_candidate():
    t, lay, fmt = _setup()
    orig = t.read_block(lay, 0)
    compress_block(t, lay, 0, fmt, "X", (0,), (0,))
    with pytest.raises(UniquenessViolation):
        restore_block(t, lay, 0, lambda r, rest: [])
    with pytest.raises(UniquenessViolation):
        restore_block(t, lay, 0, lambda r, rest: [[1], [2]])
    wrong = (orig[0] + 1) % SPEC.s
    with pytest.raises(ContractViolation):
        restore_block(t, lay, 0, lambda r, rest: [[wrong]])


def test_driver_compute_branch_restores_everything():
    t = tape_init(11, 6, 6, 4, FieldSpec(101, 101))
    lay = t.value_layout()
    fmt = RecordFormat(("X",), 1, bits_for(6), ())
    snap = {k: t.read_block(lay, k) for k in range(4)}

    def process(k, values):
        return Compress("X", (k % 6,), ())

    def recompute(rec, rest):
        return [[snap[rec.block][rec.indices[0]]]]

    def fallback(arena):
        arena.write(0, np.ones(arena.length, dtype=np.uint8))
        return "computed"

    run = compress_or_compute(t, lay, fmt, process, recompute, fallback)
    assert run.compute_branch and run.result == "computed"
    assert run.arena_bits == sum(r.savings for r in run.records) > 0
    assert run.restored and verify_restored(t)


def test_driver_found_on_first_block():
    t = tape_init(1, 2, 2, 3, SPEC)
    lay = t.value_layout()
    fmt = RecordFormat(("X",), 1, 1, ())
    run = compress_or_compute(t, lay, fmt, lambda k, v: Found(v), lambda r, rest: [], lambda a: None)
    assert run.found_at == 0 and not run.records and verify_restored(t)


def test_oversized_record_spills_and_still_restores():
    spec = FieldSpec(101, 2)
    t = tape_init(5, 2, 1, 2, spec)
    lay = t.value_layout()
    fmt = RecordFormat(("X",), 1, 1, (6,))
    orig = t.read_block(lay, 0)
    rec = compress_block(t, lay, 0, fmt, "X", (0,), (33,))
    assert rec.savings < 0 and t.spill
    restore_block(t, lay, 0, lambda r, rest: [[orig[0]]] if r.meta == (33,) else [])
    assert verify_restored(t)


def test_weight_layout_requires_mersenne_bound():
    t = tape_init(0, 2, 4, 2, FieldSpec(101, 16))
    assert t.weight_layout(7).width == 3
    with pytest.raises(InvalidInput):
        t.weight_layout(6)


def test_reseal_refused_while_compressed():
    t, lay, fmt = _setup()
    compress_block(t, lay, 0, fmt, "X", (0,), (0,))
    with pytest.raises(ContractViolation):
        t.reseal()
