"""Simulated catalytic tape.

The tape is a flat bit array.  Algorithms see it through a
:class:`BlockLayout` (N blocks of ``per_block`` fields, ``width`` bits each,
starting at bit 0).  A block is either pristine, or compressed: rewritten as
a short header (case tag, dropped positions, metadata) followed by the
surviving fields, with the freed tail zero-filled.

The tape keeps a full snapshot from initialisation; :func:`verify_restored`
compares every bit against it.  The scratch region used for rank work is
kept apart from the snapshot contract and only counted.

:func:`compress_or_compute` is the shared driver: walk the blocks, let the
algorithm either finish on a block or compress it, fall back to a direct
computation in the freed space once every block is compressed, then undo
all compressions in reverse order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ContractViolation, InvalidInput, UniquenessViolation
from .ffield import FieldSpec


def bits_for(count: int) -> int:
    """Bits needed to write any of ``count`` distinct values (0 if count <= 1)."""
    return max(0, (count - 1).bit_length())


def int_to_bits(value: int, width: int) -> np.ndarray:
    if value < 0 or value >> width:
        raise InvalidInput(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - k)) & 1 for k in range(width)], dtype=np.uint8)


def bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _chunks_to_ints(bits: np.ndarray, width: int) -> np.ndarray:
    if width == 0:
        raise InvalidInput("zero-width fields")
    mat = bits.reshape(-1, width).astype(np.int64)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return mat @ weights


def _ints_to_chunks(values: Sequence[int], width: int) -> np.ndarray:
    vals = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((vals[:, None] >> shifts[None, :]) & 1).astype(np.uint8).reshape(-1)


# --------------------------------------------------------------------- records


@dataclass(frozen=True)
class RecordFormat:
    """Bit layout of a compressed block header.

    ``tags`` lists the case tags sharing this format (the tag field is
    omitted when there is only one).  Each dropped position costs
    ``index_width`` bits; ``meta_widths`` gives the width of each metadata
    field in order.
    """

    tags: tuple[str, ...]
    n_dropped: int
    index_width: int
    meta_widths: tuple[int, ...]

    @property
    def tag_width(self) -> int:
        return bits_for(len(self.tags))

    @property
    def header_bits(self) -> int:
        return self.tag_width + self.n_dropped * self.index_width + sum(self.meta_widths)


@dataclass(frozen=True)
class CompressionRecord:
    block: int
    tag: str
    indices: tuple[int, ...]
    meta: tuple[int, ...]
    bits_before: int
    bits_after: int

    @property
    def savings(self) -> int:
        return self.bits_before - self.bits_after


@dataclass
class BlockLayout:
    width: int
    per_block: int
    n_blocks: int
    modulus: int | None = None

    @property
    def block_bits(self) -> int:
        return self.width * self.per_block

    def span(self, t: int) -> tuple[int, int]:
        if not 0 <= t < self.n_blocks:
            raise InvalidInput(f"block {t} outside 0..{self.n_blocks - 1}")
        start = t * self.block_bits
        return start, start + self.block_bits


# ------------------------------------------------------------------------ tape


@dataclass
class CatalyticTape:
    spec: FieldSpec
    n_blocks: int
    per_block: int
    bits: np.ndarray
    snapshot: np.ndarray
    scratch_bytes: int = 0
    journal: list[CompressionRecord] = field(default_factory=list)
    spill: dict[int, np.ndarray] = field(default_factory=dict)
    compressed: dict[int, tuple[BlockLayout, int, RecordFormat]] = field(default_factory=dict)
    accounting: dict[str, int] = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.spec.bits

    @property
    def total_bits(self) -> int:
        return int(self.bits.size)

    def snapshot_hash(self) -> str:
        return hashlib.sha256(np.packbits(self.snapshot).tobytes()).hexdigest()

    def note(self, key: str, amount: int) -> None:
        """Advisory peak accounting."""
        self.accounting[key] = max(self.accounting.get(key, 0), int(amount))

    # layouts ---------------------------------------------------------------

    def value_layout(self, per_block: int | None = None, n_blocks: int | None = None) -> BlockLayout:
        """Fields of ``b`` bits holding canonical values in ``{0..s-1}``."""
        lay = BlockLayout(self.width, per_block or self.per_block, n_blocks or self.n_blocks, self.spec.s)
        self._check_fits(lay)
        return lay

    def weight_layout(self, w_max: int, per_block: int | None = None, n_blocks: int | None = None) -> BlockLayout:
        """Fields of ``bits(w_max + 1)`` bits; every pattern is a legal weight."""
        width = max(1, bits_for(w_max + 1))
        if (1 << width) - 1 != w_max:
            raise InvalidInput(f"w_max={w_max} must be of the form 2^k - 1")
        lay = BlockLayout(width, per_block or self.per_block, n_blocks or self.n_blocks, None)
        self._check_fits(lay)
        return lay

    def _check_fits(self, lay: BlockLayout) -> None:
        if lay.block_bits * lay.n_blocks > self.total_bits:
            raise InvalidInput(
                f"tape too small: layout needs {lay.block_bits * lay.n_blocks} bits, tape has {self.total_bits}"
            )

    # access ------------------------------------------------------------------

    def _overlaps_compressed(self, lo: int, hi: int) -> bool:
        for start, (lay, length, _) in self.compressed.items():
            if lo < start + lay.block_bits and start < hi:
                return True
        return False

    def read_bits(self, lo: int, hi: int) -> np.ndarray:
        if self._overlaps_compressed(lo, hi):
            raise ContractViolation(f"raw read of bits [{lo},{hi}) touches a compressed block")
        return self.bits[lo:hi].copy()

    def read_block(self, lay: BlockLayout, t: int) -> list[int]:
        lo, hi = lay.span(t)
        vals = _chunks_to_ints(self.read_bits(lo, hi), lay.width)
        if lay.modulus is not None and (vals >= lay.modulus).any():
            raise ContractViolation(f"block {t} holds a non-canonical value")
        return [int(v) for v in vals]

    def write_block(self, lay: BlockLayout, t: int, values: Sequence[int]) -> None:
        """Overwrite a pristine block (used by tests to build adversarial tapes)."""
        lo, hi = lay.span(t)
        if self._overlaps_compressed(lo, hi):
            raise ContractViolation(f"write to compressed block {t}")
        if len(values) != lay.per_block:
            raise InvalidInput("wrong number of values for block")
        self.bits[lo:hi] = _ints_to_chunks(values, lay.width)

    def reseal(self) -> None:
        """Take a fresh snapshot; only legal while nothing is compressed."""
        if self.compressed or self.spill:
            raise ContractViolation("cannot reseal with outstanding compressions")
        self.snapshot = self.bits.copy()


def tape_init(
    source: int | str | Path | bytes | None,
    n: int,
    m: int,
    N: int,
    spec: FieldSpec,
    scratch_bytes: int | None = None,
) -> CatalyticTape:
    """Build a tape of ``N`` blocks of ``m`` values each.

    ``source`` is an integer seed, raw bytes, or a path to a file of raw
    bytes.  The bits are cut into ``b``-bit fields and each field is reduced
    modulo ``s`` so the stored values are canonical; the snapshot is taken
    afterwards.
    """
    if N < 1 or m < 1:
        raise InvalidInput(f"need N >= 1 and m >= 1 (got N={N}, m={m})")
    b = spec.bits
    if b == 0:
        raise InvalidInput("value set of size 1 leaves no room on the tape")
    total = N * m * b
    if source is None:
        source = 0
    if isinstance(source, (int, np.integer)) and not isinstance(source, bool):
        raw = np.random.default_rng(int(source)).integers(0, 2, size=total, dtype=np.uint8)
    else:
        data = source if isinstance(source, bytes) else Path(source).read_bytes()
        raw = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
        if raw.size < total:
            raise InvalidInput(f"tape source has {raw.size} bits, {total} required")
        raw = raw[:total].copy()
    vals = _chunks_to_ints(raw, b) % spec.s
    bits = _ints_to_chunks(vals, b)
    if scratch_bytes is None:
        scratch_bytes = max(1, n) ** 2 * 8
    return CatalyticTape(spec, N, m, bits, bits.copy(), scratch_bytes)


# ----------------------------------------------------------- compress/restore


def _encode(fmt: RecordFormat, tag: str, indices: Sequence[int], meta: Sequence[int], rest: Sequence[int], width: int) -> np.ndarray:
    parts = []
    if fmt.tag_width:
        parts.append(int_to_bits(fmt.tags.index(tag), fmt.tag_width))
    for i in indices:
        parts.append(int_to_bits(i, fmt.index_width))
    for v, w in zip(meta, fmt.meta_widths):
        parts.append(int_to_bits(v, w))
    if len(rest):
        parts.append(_ints_to_chunks(rest, width))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def compress_block(tape: CatalyticTape, lay: BlockLayout, t: int, fmt: RecordFormat, tag: str,
                   indices: Sequence[int], meta: Sequence[int]) -> CompressionRecord:
    """Replace block ``t`` by its compressed form and journal the change."""
    lo, hi = lay.span(t)
    if lo in tape.compressed or tape._overlaps_compressed(lo, hi):
        raise ContractViolation(f"block {t} is already compressed")
    if tag not in fmt.tags:
        raise InvalidInput(f"tag {tag!r} not in format {fmt.tags}")
    if len(indices) != fmt.n_dropped or len(meta) != len(fmt.meta_widths):
        raise InvalidInput("record does not match its format")
    if len(set(indices)) != len(indices) or not all(0 <= i < lay.per_block for i in indices):
        raise InvalidInput(f"bad dropped positions {indices}")
    values = tape.read_block(lay, t)
    drop = set(indices)
    rest = [v for pos, v in enumerate(values) if pos not in drop]
    payload = _encode(fmt, tag, indices, meta, rest, lay.width)
    before = lay.block_bits
    after = int(payload.size)
    block = np.zeros(before, dtype=np.uint8)
    inside = min(after, before)
    block[:inside] = payload[:inside]
    tape.bits[lo:hi] = block
    if after > before:
        tape.spill[lo] = payload[before:].copy()
    tape.compressed[lo] = (lay, after, fmt)
    rec = CompressionRecord(t, tag, tuple(indices), tuple(meta), before, after)
    tape.journal.append(rec)
    tape.note("spill_bits", sum(s.size for s in tape.spill.values()))
    return rec


def _decode(tape: CatalyticTape, lay: BlockLayout, t: int) -> tuple[CompressionRecord, list[int]]:
    lo, hi = lay.span(t)
    if lo not in tape.compressed:
        raise ContractViolation(f"block {t} is not compressed")
    _, length, fmt = tape.compressed[lo]
    payload = tape.bits[lo:hi]
    if lo in tape.spill:
        payload = np.concatenate([payload, tape.spill[lo]])
    payload = payload[:length]
    pos = 0

    def take(w: int) -> int:
        nonlocal pos
        v = bits_to_int(payload[pos:pos + w])
        pos += w
        return v

    tag = fmt.tags[take(fmt.tag_width)] if fmt.tag_width else fmt.tags[0]
    indices = tuple(take(fmt.index_width) for _ in range(fmt.n_dropped))
    meta = tuple(take(w) for w in fmt.meta_widths)
    n_rest = lay.per_block - fmt.n_dropped
    rest = [int(v) for v in _chunks_to_ints(payload[pos:pos + n_rest * lay.width], lay.width)] if n_rest else []
    rec = CompressionRecord(t, tag, indices, meta, lay.block_bits, length)
    return rec, rest


Recompute = Callable[[CompressionRecord, list[int]], Sequence[Sequence[int]]]


def restore_block(tape: CatalyticTape, lay: BlockLayout, t: int, recompute: Recompute) -> CompressionRecord:
    """Undo the compression of block ``t``.

    ``recompute(record, surviving_values)`` must return the list of
    candidate value tuples for the dropped positions.  Anything other than
    exactly one candidate raises :class:`UniquenessViolation`.
    """
    rec, rest = _decode(tape, lay, t)
    cands = [tuple(c) for c in recompute(rec, rest)]
    if len(cands) != 1:
        raise UniquenessViolation(
            f"block {t} ({rec.tag}, indices {rec.indices}, meta {rec.meta}): {len(cands)} candidates {cands[:5]}"
        )
    (cand,) = cands
    values = merge_values(rest, rec.indices, cand)
    lo, hi = lay.span(t)
    new = _ints_to_chunks(values, lay.width)
    del tape.compressed[lo]
    tape.spill.pop(lo, None)
    tape.bits[lo:hi] = new
    if not np.array_equal(tape.bits[lo:hi], tape.snapshot[lo:hi]):
        raise ContractViolation(f"block {t} restored to the wrong contents")
    return rec


def merge_values(rest: Sequence[int], indices: Sequence[int], dropped: Sequence[int]) -> list[int]:
    """Reinsert dropped values at their positions."""
    total = len(rest) + len(indices)
    fill = dict(zip(indices, dropped))
    it = iter(rest)
    return [fill[i] if i in fill else next(it) for i in range(total)]


def verify_restored(tape: CatalyticTape) -> bool:
    return not tape.compressed and not tape.spill and bool(np.array_equal(tape.bits, tape.snapshot))


# ----------------------------------------------------------------- the driver


@dataclass(frozen=True)
class Found:
    result: Any


@dataclass(frozen=True)
class Compress:
    tag: str
    indices: tuple[int, ...]
    meta: tuple[int, ...]
    witness: Any = None


@dataclass
class Arena:
    """Contiguous free region handed to the fallback computation."""

    tape: CatalyticTape
    start: int
    length: int
    used: int = 0

    def write(self, offset: int, bits: np.ndarray) -> None:
        if offset < 0 or offset + bits.size > self.length:
            raise ContractViolation("arena write out of bounds")
        self.tape.bits[self.start + offset:self.start + offset + bits.size] = bits
        self.used = max(self.used, offset + int(bits.size))

    def read(self, offset: int, size: int) -> np.ndarray:
        if offset < 0 or offset + size > self.length:
            raise ContractViolation("arena read out of bounds")
        return self.tape.bits[self.start + offset:self.start + offset + size].copy()

    def store_ints(self, values: Sequence[int], width: int) -> bool:
        """Park a result in the arena if it fits; returns whether it did."""
        if width == 0 or len(values) * width > self.length:
            return False
        self.write(0, _ints_to_chunks(values, width))
        return True


@dataclass
class CatalyticRun:
    result: Any
    found_at: int | None
    records: list[CompressionRecord]
    restored: bool
    arena_bits: int = 0
    audits: int = 0
    spilled_bits: int = 0

    @property
    def compute_branch(self) -> bool:
        return self.found_at is None

    def summary(self) -> dict:
        by_tag: dict[str, int] = {}
        for r in self.records:
            by_tag[r.tag] = by_tag.get(r.tag, 0) + 1
        return {
            "found_at_block": self.found_at,
            "compute_branch": self.compute_branch,
            "events": by_tag,
            "bits_saved": sum(r.savings for r in self.records),
            "min_savings": min((r.savings for r in self.records), default=None),
            "arena_bits": self.arena_bits,
            "spilled_bits": self.spilled_bits,
            "audits": self.audits,
            "restored": self.restored,
        }


def _shift_in(tape: CatalyticTape, lay: BlockLayout) -> tuple[int, list[int]]:
    """Pack every compressed block's in-block prefix to the front."""
    lengths = []
    pieces = []
    for t in range(lay.n_blocks):
        lo, hi = lay.span(t)
        length = min(tape.compressed[lo][1], lay.block_bits)
        lengths.append(length)
        pieces.append(tape.bits[lo:lo + length].copy())
    region = lay.n_blocks * lay.block_bits
    packed = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.uint8)
    tape.bits[:region] = 0
    tape.bits[:packed.size] = packed
    return int(packed.size), lengths


def _shift_out(tape: CatalyticTape, lay: BlockLayout, lengths: list[int]) -> None:
    region = lay.n_blocks * lay.block_bits
    packed = tape.bits[:sum(lengths)].copy()
    tape.bits[:region] = 0
    pos = 0
    for t, length in enumerate(lengths):
        lo, _ = lay.span(t)
        tape.bits[lo:lo + length] = packed[pos:pos + length]
        pos += length


def compress_or_compute(
    tape: CatalyticTape,
    lay: BlockLayout,
    fmt: RecordFormat,
    process: Callable[[int, list[int]], Found | Compress],
    recompute: Recompute,
    fallback: Callable[[Arena], Any],
    audit: Callable[[int, list[int], Compress], None] | None = None,
) -> CatalyticRun:
    """Run the block loop, the fallback if needed, then restore everything."""
    records: list[CompressionRecord] = []
    result: Any = None
    found_at: int | None = None
    audits = 0
    arena_bits = 0
    for t in range(lay.n_blocks):
        values = tape.read_block(lay, t)
        outcome = process(t, values)
        if isinstance(outcome, Found):
            result, found_at = outcome.result, t
            break
        if audit is not None:
            audit(t, values, outcome)
            audits += 1
        records.append(compress_block(tape, lay, t, fmt, outcome.tag, outcome.indices, outcome.meta))
    else:
        used, lengths = _shift_in(tape, lay)
        arena_bits = lay.n_blocks * lay.block_bits - used
        tape.note("arena_bits", arena_bits)
        arena = Arena(tape, used, arena_bits)
        result = fallback(arena)
        _shift_out(tape, lay, lengths)
    spilled = sum(s.size for s in tape.spill.values())
    for rec in reversed(records):
        restore_block(tape, lay, rec.block, recompute)
    lo_end = lay.n_blocks * lay.block_bits
    ok = not tape.compressed and not tape.spill and bool(np.array_equal(tape.bits[:lo_end], tape.snapshot[:lo_end]))
    if not ok:
        raise ContractViolation("tape region not restored after run")
    return CatalyticRun(result, found_at, records, verify_restored(tape), arena_bits, audits, int(spilled))


def log2(n: int) -> float:
    return math.log2(n) if n > 0 else 0.0
