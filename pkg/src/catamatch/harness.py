"""Brute-force oracles, instance generators, the corpus and run reports.

The oracles here deliberately avoid the elimination kernels used by the
algorithms: matchings are enumerated, independence is decided with a
small self-contained row reduction, and symbolic rank is estimated by
random substitution.
"""

from __future__ import annotations

import itertools
import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .edmonds import ApproxParams, MatrixPencil, matroid_matching_approx, pencil_approx_rank
from .errors import InvalidInput
from .ffield import DEFAULT_PRIME, FieldSpec
from .matrix import rank_of
from .mixedrank import LinearMatroidPair, MixedMatrix, geelen99_greedy, matroid_intersection_size, mixed_max_rank
from .pmsearch import is_matching, is_perfect_matching, maximum_matching, perfect_matching
from .tape import CatalyticRun, CatalyticTape, _ints_to_chunks, tape_init, verify_restored
from .tutte import GallaiEdmonds, Graph, decomposition_from_deficiency, gallai_edmonds, matching_size

# ------------------------------------------------------------------ oracles


def oracle_max_matching(g: Graph) -> int:
    """Exact matching number by recursion over the lowest remaining vertex."""
    if g.n > 16:
        raise InvalidInput(f"oracle_max_matching handles n <= 16 (got {g.n})")
    nbr = [0] * (g.n + 1)
    for u, v in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u

    @lru_cache(maxsize=None)
    def best(mask: int) -> int:
        if mask == 0:
            return 0
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        out = best(rest)
        cand = nbr[v] & rest
        while cand:
            u = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            out = max(out, 1 + best(rest & ~(1 << u)))
        return out

    return best(sum(1 << v for v in g.vertices()))


def _all_matchings(g: Graph, size: int | None = None) -> list[frozenset[tuple[int, int]]]:
    """Every matching (or every matching of the given size) by include/exclude over edges."""
    out: list[frozenset] = []
    edges = g.edges

    def rec(i: int, used: int, chosen: list) -> None:
        if size is not None and len(chosen) + (len(edges) - i) < size:
            return
        if i == len(edges):
            if size is None or len(chosen) == size:
                out.append(frozenset(chosen))
            return
        u, v = edges[i]
        if not (used >> u) & 1 and not (used >> v) & 1:
            chosen.append(edges[i])
            rec(i + 1, used | (1 << u) | (1 << v), chosen)
            chosen.pop()
        rec(i + 1, used, chosen)

    rec(0, 0, [])
    return out


def oracle_gallai_edmonds(g: Graph) -> GallaiEdmonds:
    """``D`` is read off the set of all maximum matchings."""
    if g.n > 12:
        raise InvalidInput(f"oracle_gallai_edmonds handles n <= 12 (got {g.n})")
    nu = oracle_max_matching(g)
    D: set[int] = set()
    for M in _all_matchings(g, nu):
        covered = {x for e in M for x in e}
        D |= set(g.vertices()) - covered
    return decomposition_from_deficiency(g, D)


def _indep_rank(rows: Sequence[Sequence[int]], p: int) -> int:
    """Plain row reduction, kept separate from the library kernels."""
    a = [[x % p for x in r] for r in rows]
    rank = 0
    ncols = len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(a)) if a[r][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], p - 2, p)
        for r in range(len(a)):
            if r != rank and a[r][c]:
                f = a[r][c] * inv % p
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


def _columns_independent(rep: Sequence[Sequence[int]], cols: Sequence[int], p: int) -> bool:
    if not cols:
        return True
    return _indep_rank([[row[c] for c in cols] for row in rep], p) == len(cols)


def oracle_matroid_intersection(pair: LinearMatroidPair) -> int:
    """Largest common independent set by subset enumeration."""
    if pair.n > 14:
        raise InvalidInput(f"subset enumeration handles ground sets up to 14 (got {pair.n})")
    for size in range(pair.n, 0, -1):
        for X in itertools.combinations(range(pair.n), size):
            if _columns_independent(pair.first, X, pair.p) and _columns_independent(pair.second, X, pair.p):
                return size
    return 0


def oracle_matroid_matching(rep: Sequence[Sequence[int]], g: Graph, p: int) -> int:
    """Largest matching whose covered vertices are independent columns of ``rep``."""
    if g.n > 12:
        raise InvalidInput(f"matroid matching oracle handles n <= 12 (got {g.n})")
    best = 0
    for M in _all_matchings(g):
        if len(M) > best and _columns_independent(rep, sorted(x - 1 for e in M for x in e), p):
            best = len(M)
    return best


def oracle_bipartite_matching(left: Sequence, right: Sequence, edges: Sequence[tuple]) -> int:
    """Augmenting-path matching number of a bipartite graph."""
    adj: dict[Any, list] = {x: [] for x in left}
    for x, y in edges:
        adj[x].append(y)
    match: dict[Any, Any] = {}

    def augment(x, seen: set) -> bool:
        for y in adj[x]:
            if y in seen:
                continue
            seen.add(y)
            if y not in match or augment(match[y], seen):
                match[y] = x
                return True
        return False

    return sum(augment(x, set()) for x in left)


def oracle_symbolic_rank(obj: MixedMatrix | MatrixPencil, trials: int = 30, s: int | None = None,
                         seed: int = 0) -> int:
    """Largest rank seen over ``trials`` uniform substitutions from ``{0..s-1}``.

    A lower bound on the symbolic rank; a single trial misses it with
    probability at most ``degree / s``.  ``s`` defaults to the whole field.
    """
    rng = np.random.default_rng(seed)
    s = obj.p if s is None else s
    best = 0
    for _ in range(trials):
        vals = [int(v) for v in rng.integers(0, s, size=obj.m)]
        if isinstance(obj, MixedMatrix):
            r = rank_of(obj.evaluate(vals)) if obj.rows and obj.cols else 0
        else:
            r = obj.rank_at(vals)
        best = max(best, r)
    return best


# --------------------------------------------------------------- generators

NAMED_GRAPHS: dict[str, Callable[[], Graph]] = {
    "P3": lambda: Graph(3, ((1, 2), (2, 3))),
    **{f"C{k}": (lambda k=k: Graph(k, tuple((i, i % k + 1) for i in range(1, k + 1)))) for k in range(3, 8)},
    "K4": lambda: Graph(4, tuple(itertools.combinations(range(1, 5), 2))),
    "K5": lambda: Graph(5, tuple(itertools.combinations(range(1, 6), 2))),
    "Petersen": lambda: Graph(10, tuple(
        [(i, i % 5 + 1) for i in range(1, 6)]
        + [(i, i + 5) for i in range(1, 6)]
        + [(5 + i, 5 + (i + 1) % 5 + 1) for i in range(1, 6)]
    )),
}


def named_graph(name: str) -> Graph:
    try:
        return NAMED_GRAPHS[name]()
    except KeyError:
        raise InvalidInput(f"unknown named graph {name!r}; known: {', '.join(NAMED_GRAPHS)}") from None


def _random_graph(rng: np.random.Generator, n: int, prob: float) -> Graph:
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    keep = rng.random(len(pairs)) < prob
    return Graph(n, tuple(e for e, k in zip(pairs, keep) if k))


def _small_matrix(rng: np.random.Generator, rows: int, cols: int, high: int, zero_prob: float) -> tuple:
    vals = rng.integers(1, high, size=(rows, cols))
    vals[rng.random((rows, cols)) < zero_prob] = 0
    return tuple(tuple(int(x) for x in row) for row in vals)


def generate(kind: str, seed: int, params: dict | None = None) -> Any:
    """Deterministic instance of ``kind`` from ``(seed, params)``.

    Kinds and their parameters (defaults in brackets):

    * ``random-graph``: n [8], prob [0.4]
    * ``pm-graph``: n [8], prob [0.4], tries [1000]
    * ``named``: name
    * ``mixed``: rows [4], cols [4], density [0.4], const_density [0.3], p
    * ``matroid-pair``: r1 [3], r2 [3], n [6], p
    * ``pencil``: m [3], n [4], rank [1], p
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    p = int(params.get("p", DEFAULT_PRIME))
    if kind == "random-graph":
        n, prob = int(params.get("n", 8)), float(params.get("prob", 0.4))
        if n < 0 or not 0 <= prob <= 1:
            raise InvalidInput("random-graph needs n >= 0 and 0 <= prob <= 1")
        return _random_graph(rng, n, prob)
    if kind == "pm-graph":
        n, prob = int(params.get("n", 8)), float(params.get("prob", 0.4))
        if n % 2 or n < 2 or prob <= 0:
            raise InvalidInput("pm-graph needs an even n >= 2 and prob > 0")
        for _ in range(int(params.get("tries", 1000))):
            g = _random_graph(rng, n, prob)
            if 2 * oracle_max_matching(g) == n:
                return g
        raise InvalidInput(f"no perfect-matching graph found for n={n}, prob={prob}")
    if kind == "named":
        return named_graph(str(params["name"]))
    if kind == "mixed":
        r, c = int(params.get("rows", 4)), int(params.get("cols", 4))
        dens, cdens = float(params.get("density", 0.4)), float(params.get("const_density", 0.3))
        if r < 1 or c < 1:
            raise InvalidInput("mixed needs at least one row and one column")
        roll = rng.random((r, c))
        consts = rng.integers(1, 4, size=(r, c))
        var = tuple((i, j) for i in range(r) for j in range(c) if roll[i, j] < dens)
        const = tuple(
            tuple(int(consts[i, j]) if dens <= roll[i, j] < dens + cdens else 0 for j in range(c)) for i in range(r)
        )
        return MixedMatrix(r, c, const, var, p)
    if kind == "matroid-pair":
        r1, r2, n = int(params.get("r1", 3)), int(params.get("r2", 3)), int(params.get("n", 6))
        if min(r1, r2, n) < 1:
            raise InvalidInput("matroid-pair needs positive sizes")
        return LinearMatroidPair(_small_matrix(rng, r1, n, 4, 0.4), _small_matrix(rng, r2, n, 4, 0.4), n, p)
    if kind == "pencil":
        m, n, rank = int(params.get("m", 3)), int(params.get("n", 4)), int(params.get("rank", 1))
        if m < 1 or n < 1 or not 0 <= rank <= n:
            raise InvalidInput("pencil needs m, n >= 1 and 0 <= rank <= n")
        mats = []
        for _ in range(m):
            U = rng.integers(0, 3, size=(n, rank))
            V = rng.integers(0, 3, size=(rank, n))
            mats.append(tuple(tuple(int(x) % p for x in row) for row in (U @ V)))
        return MatrixPencil(tuple(mats), n, n, p)
    raise InvalidInput(f"unknown instance kind {kind!r}")


def instance_text(inst: Any) -> str:
    """Canonical text form, used to check that regeneration is byte-identical."""
    if isinstance(inst, (Graph, MatrixPencil)):
        return inst.to_text()
    if isinstance(inst, MixedMatrix):
        var = set(inst.variables)
        rows = [" ".join("?" if (i, j) in var else str(inst.constants[i][j]) for j in range(inst.cols))
                for i in range(inst.rows)]
        return "\n".join([f"{inst.rows} {inst.cols} {inst.p}"] + rows) + "\n"
    if isinstance(inst, LinearMatroidPair):
        def block(mat):
            return "\n".join([f"{len(mat)} {inst.n} {inst.p}"] + [" ".join(map(str, r)) for r in mat])
        return block(inst.first) + "\n---\n" + block(inst.second) + "\n"
    raise InvalidInput(f"no text form for {type(inst).__name__}")


# ------------------------------------------------------------------- corpus


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    kind: str
    seed: int
    params: tuple[tuple[str, Any], ...] = ()

    def build(self) -> Any:
        return generate(self.kind, self.seed, dict(self.params))


@dataclass
class Corpus:
    name: str
    entries: list[CorpusEntry] = field(default_factory=list)

    def add(self, id: str, kind: str, seed: int, **params) -> None:
        self.entries.append(CorpusEntry(id, kind, seed, tuple(sorted(params.items()))))

    def of_kind(self, *kinds: str) -> list[CorpusEntry]:
        return [e for e in self.entries if e.kind in kinds]

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "entries": [asdict(e) for e in self.entries]}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> Corpus:
        data = json.loads(text)
        ents = [CorpusEntry(e["id"], e["kind"], e["seed"], tuple(tuple(x) for x in e["params"])) for e in data["entries"]]
        return cls(data["name"], ents)


def graph_corpus(seeds: range = range(1, 201), max_n: int = 10) -> Corpus:
    """Random graphs with n <= max_n drawn per seed, plus the named graphs."""
    c = Corpus("graphs")
    for seed in seeds:
        rng = np.random.default_rng(10_000 + seed)
        n = int(rng.integers(2, max_n + 1))
        prob = round(float(rng.uniform(0.15, 0.7)), 3)
        c.add(f"rg-{seed}", "random-graph", seed, n=n, prob=prob)
    for name in NAMED_GRAPHS:
        c.add(name, "named", 0, name=name)
    return c


def pm_corpus(count: int = 100, max_n: int = 12) -> Corpus:
    c = Corpus("pm-graphs")
    for seed in range(1, count + 1):
        rng = np.random.default_rng(20_000 + seed)
        n = int(rng.choice(range(2, max_n + 1, 2)))
        prob = round(float(rng.uniform(0.3, 0.8)), 3)
        c.add(f"pm-{seed}", "pm-graph", seed, n=n, prob=prob)
    return c


def mixed_corpus(count: int = 100, max_dim: int = 8) -> Corpus:
    c = Corpus("mixed")
    for seed in range(1, count + 1):
        rng = np.random.default_rng(30_000 + seed)
        r, k = (int(x) for x in rng.integers(1, max_dim + 1, size=2))
        dens = round(float(rng.uniform(0.1, 0.5)), 3)
        c.add(f"mx-{seed}", "mixed", seed, rows=r, cols=k, density=dens, const_density=0.2)
    return c


def pair_corpus(count: int = 50, max_n: int = 10) -> Corpus:
    c = Corpus("matroid-pairs")
    for seed in range(1, count + 1):
        rng = np.random.default_rng(40_000 + seed)
        n = int(rng.integers(1, max_n + 1))
        r1, r2 = (int(x) for x in rng.integers(1, 5, size=2))
        c.add(f"mp-{seed}", "matroid-pair", seed, r1=r1, r2=r2, n=n)
    return c


def pencil_corpus(count: int = 50, max_n: int = 8, max_m: int = 5) -> Corpus:
    c = Corpus("pencils")
    for seed in range(1, count + 1):
        rng = np.random.default_rng(50_000 + seed)
        n = int(rng.integers(2, max_n + 1))
        m = int(rng.integers(1, max_m + 1))
        rank = int(rng.integers(1, max(1, n // 2) + 1))
        c.add(f"pe-{seed}", "pencil", seed, m=m, n=n, rank=rank)
    return c


def full_corpus() -> Corpus:
    out = Corpus("all")
    for part in (graph_corpus(), pm_corpus(), mixed_corpus(), pair_corpus(), pencil_corpus()):
        out.entries.extend(part.entries)
    return out


# --------------------------------------------------------------------- tapes


def default_value_set(n: int) -> int:
    """Cubic in the instance size, never below 8."""
    return max(8, max(1, n) ** 3)


@dataclass(frozen=True)
class TapeConfig:
    """How tapes are built for a run.

    ``s`` and ``blocks`` default to a cubic value set and one block per
    vertex; ``paper_params`` switches to ``N = n**3`` blocks and
    ``s = n**10`` values.
    """

    prime: int = DEFAULT_PRIME
    s: int | None = None
    blocks: int | None = None
    seed: int = 0
    file: str | None = None
    paper_params: bool = False

    def spec(self, n: int, exponent: int = 10) -> FieldSpec:
        if self.paper_params:
            return FieldSpec.for_size(max(2, n), exponent, p=None if self.prime == DEFAULT_PRIME else self.prime)
        s = self.s if self.s is not None else min(default_value_set(n), self.prime)
        return FieldSpec(self.prime, s)

    def build(self, n: int, per_block: int, spec: FieldSpec | None = None) -> CatalyticTape:
        spec = spec or self.spec(n)
        if self.paper_params:
            N = max(2, n) ** 3
        else:
            N = self.blocks if self.blocks is not None else max(2, n)
        source: Any = self.file if self.file is not None else self.seed
        return tape_init(source, n, max(1, per_block), N, spec)


# ------------------------------------------------------------------- reports


@dataclass
class RunReport:
    instance: str
    algorithm: str
    result: Any
    oracle: Any
    agrees: bool | None
    journal: dict | None
    restored: bool | None
    wall_time: float
    note: str = ""

    def line(self) -> str:
        verdict = {True: "ok", False: "MISMATCH", None: "-"}[self.agrees]
        rest = {True: "restored", False: "NOT-RESTORED", None: "no-tape"}[self.restored]
        ev = ""
        if self.journal and self.journal.get("events"):
            ev = " events=" + ",".join(f"{k}:{v}" for k, v in sorted(self.journal.get("events", {}).items()))
        extra = f" ({self.note})" if self.note else ""
        return (f"{self.instance:<12} {self.algorithm:<20} result={self.result} oracle={self.oracle} "
                f"{verdict} {rest}{ev} {self.wall_time:.3f}s{extra}")

    def to_dict(self) -> dict:
        return asdict(self)


def _journal(runs: Sequence[CatalyticRun | None]) -> dict | None:
    runs = [r for r in runs if r is not None]
    if not runs:
        return None
    events: dict[str, int] = {}
    for r in runs:
        for k, v in r.summary()["events"].items():
            events[k] = events.get(k, 0) + v
    return {
        "events": events,
        "bits_saved": sum(r.summary()["bits_saved"] for r in runs),
        "compute_branch": any(r.compute_branch for r in runs),
        "spilled_bits": sum(r.spilled_bits for r in runs),
        "audits": sum(r.audits for r in runs),
    }


def write_reports(reports: Sequence[RunReport], path: str | Path) -> Path:
    """Text lines at ``path`` and a JSON sidecar next to it."""
    path = Path(path)
    path.write_text("\n".join(r.line() for r in reports) + "\n")
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps([r.to_dict() for r in reports], indent=1, default=str))
    return side


def timed(fn: Callable[[], Any]) -> tuple[Any, float]:
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def check_graph(entry_id: str, g: Graph, cfg: TapeConfig, audit: bool = False, with_ge: bool = True) -> list[RunReport]:
    """Matching size, maximum matching and (optionally) the decomposition against the oracles."""
    reports = []
    nu = oracle_max_matching(g)
    m = max(1, g.m)

    tape = cfg.build(g.n, m)
    ms, dt = timed(lambda: matching_size(g, tape, audit=audit))
    reports.append(RunReport(entry_id, "matching-size", ms.nu, nu, ms.nu == nu, _journal([ms.run]),
                             verify_restored(tape), dt))

    tape = cfg.build(g.n, m)
    mm, dt = timed(lambda: maximum_matching(g, tape, audit=audit))
    ok = is_matching(g, mm.matching) and len(mm.matching) == nu
    reports.append(RunReport(entry_id, "matching", len(mm.matching), nu, ok, None, verify_restored(tape), dt))

    if with_ge and g.n <= 12:
        tape = cfg.build(g.n, m)
        ge, dt = timed(lambda: gallai_edmonds(g, tape, audit=audit))
        want = oracle_gallai_edmonds(g)
        reports.append(RunReport(entry_id, "gallai-edmonds", sorted(ge.D), sorted(want.D), ge == want, None,
                                 verify_restored(tape), dt))
    return reports


def check_pm(entry_id: str, g: Graph, cfg: TapeConfig, audit: bool = False) -> RunReport:
    tape = cfg.build(g.n, g.m)
    res, dt = timed(lambda: perfect_matching(g, tape, audit=audit))
    ok = is_perfect_matching(g, res.matching)
    return RunReport(entry_id, "pm", len(res.matching), g.n // 2, ok, _journal([res.trank_run, res.run]),
                     verify_restored(tape), dt, f"w0={res.weight}")


def mixed_spec(A: MixedMatrix, cfg: TapeConfig) -> FieldSpec:
    return cfg.spec(max(A.rows, A.cols))


def check_mixed(entry_id: str, A: MixedMatrix, cfg: TapeConfig, audit: bool = False) -> RunReport:
    spec = mixed_spec(A, cfg)
    want = geelen99_greedy(A, spec).rank if A.m else rank_of(A.evaluate(()))
    tape = cfg.build(max(A.rows, A.cols), A.m, spec)
    res, dt = timed(lambda: mixed_max_rank(A, tape, audit=audit))
    return RunReport(entry_id, "mixed-rank", res.rank, want, res.rank == want, _journal([res.run]),
                     verify_restored(tape), dt)


def check_pair(entry_id: str, pair: LinearMatroidPair, cfg: TapeConfig, audit: bool = False) -> RunReport:
    want = oracle_matroid_intersection(pair)
    dim = max(len(pair.first), len(pair.second)) + pair.n
    tape = cfg.build(dim, pair.n)
    got, dt = timed(lambda: matroid_intersection_size(pair, tape, audit=audit))
    return RunReport(entry_id, "matroid-intersect", got, want, got == want, None, verify_restored(tape), dt)


EDMONDS_VALUE_SET = 8


def check_pencil(entry_id: str, pen: MatrixPencil, cfg: TapeConfig, epsilon: Fraction | str,
                 audit: bool = False, s: int | None = None) -> RunReport:
    params = ApproxParams.from_epsilon(Fraction(epsilon))
    reference = oracle_symbolic_rank(pen, trials=30, seed=zlib.crc32(entry_id.encode()))
    spec = FieldSpec(pen.p, s or cfg.s or EDMONDS_VALUE_SET)
    tape = cfg.build(pen.n, pen.m, spec)
    res, dt = timed(lambda: pencil_approx_rank(pen, tape, params, audit=audit))
    need = math.ceil((1 - params.epsilon) * reference)
    return RunReport(entry_id, f"edmonds-approx[{params.epsilon}]", res.rank, reference,
                     params.bound_holds(res.rank, reference), _journal([res.run]), verify_restored(tape), dt,
                     f"need>={need} ell={params.ell} c={params.c}")


def verify_all(corpus: Corpus, cfg: TapeConfig | None = None, audit: bool = False,
               progress: Callable[[RunReport], None] | None = None) -> list[RunReport]:
    """Run every corpus entry against its oracle; reports come back in corpus order."""
    cfg = cfg or TapeConfig()
    reports: list[RunReport] = []

    def emit(rs):
        for r in rs:
            reports.append(r)
            if progress:
                progress(r)

    for e in corpus.entries:
        inst = e.build()
        if e.kind in ("random-graph", "named"):
            emit(check_graph(e.id, inst, cfg, audit))
        elif e.kind == "pm-graph":
            emit([check_pm(e.id, inst, cfg, audit)])
        elif e.kind == "mixed":
            emit([check_mixed(e.id, inst, cfg, audit)])
        elif e.kind == "matroid-pair":
            emit([check_pair(e.id, inst, cfg, audit)])
        elif e.kind == "pencil":
            emit([check_pencil(e.id, inst, cfg, eps, audit) for eps in ("1/2", "1/3")])
    return reports


def matroid_matching_check(rep, g: Graph, cfg: TapeConfig, epsilon: str = "1/2", audit: bool = False) -> RunReport:
    params = ApproxParams.from_epsilon(Fraction(epsilon))
    want = oracle_matroid_matching(rep, g, cfg.prime)
    spec = FieldSpec(cfg.prime, cfg.s or EDMONDS_VALUE_SET)
    tape = cfg.build(len(rep), max(1, g.m), spec)
    got, dt = timed(lambda: matroid_matching_approx(rep, g, tape, params, audit=audit))
    return RunReport("matroid-matching", f"matroid-matching[{params.epsilon}]", got, want,
                     params.bound_holds(got, want), None, verify_restored(tape), dt)


# ------------------------------------------------------------------- margins
# Each family below is built so that the first event in every block carries
# one fixed record tag; the minimum savings over those records is compared
# against the per-tag bound.


def pattern_tape(pattern: Sequence[int], n: int, N: int, spec: FieldSpec) -> CatalyticTape:
    """Tape whose ``N`` blocks all hold ``pattern``."""
    bits = _ints_to_chunks(list(pattern) * N, spec.bits)
    return tape_init(np.packbits(bits).tobytes(), n, len(pattern), N, spec)


@dataclass
class MarginRow:
    tag: str
    instance: str
    n: int
    value_bits: int
    records: int
    min_savings: int | None
    bound: float
    strict: bool

    @property
    def holds(self) -> bool:
        if self.min_savings is None:
            return False
        return self.min_savings > self.bound if self.strict else self.min_savings >= self.bound

    def line(self) -> str:
        rel = ">" if self.strict else ">="
        verdict = "ok" if self.holds else "FAILS"
        return (f"{self.tag:8s} {self.instance:24s} n={self.n:<2d} b={self.value_bits:<3d} records={self.records:<4d} "
                f"min savings={self.min_savings}  need {rel} {self.bound:.2f}  {verdict}")


def _margin_row(run: CatalyticRun, tape: CatalyticTape, tag: str, label: str, n: int,
                bound: float, strict: bool) -> MarginRow:
    if not verify_restored(tape):
        raise AssertionError(f"{label}: tape not restored")
    sav = [r.savings for r in run.records if r.tag == tag]
    return MarginRow(tag, label, n, tape.spec.bits, len(sav), min(sav) if sav else None, bound, strict)


def _complete(n: int) -> Graph:
    return Graph(n, tuple(itertools.combinations(range(1, n + 1), 2)))


def margin_2a(n: int) -> MarginRow:
    """Complete graph, all-zero tape: every block opens with a rank jump."""
    g = _complete(n)
    tape = pattern_tape([0] * g.m, n, n**3, FieldSpec.for_size(n))
    return _margin_row(matching_size(g, tape).run, tape, "2A", f"K{n}", n, 6 * math.log2(n), True)


def margin_2b(n: int) -> MarginRow:
    """Star with only its first edge set: maximum rank, deficiency not yet maximal."""
    g = Graph(n, tuple((1, k) for k in range(2, n + 1)))
    tape = pattern_tape([1] + [0] * (g.m - 1), n, n**3, FieldSpec.for_size(n))
    return _margin_row(matching_size(g, tape).run, tape, "2B", f"star{n}", n, 6 * math.log2(n), True)


def margin_2a_mixed(n: int) -> MarginRow:
    """Fully indeterminate square matrix, all-zero tape."""
    A = MixedMatrix(n, n, tuple((0,) * n for _ in range(n)),
                    tuple((i, j) for i in range(n) for j in range(n)), DEFAULT_PRIME)
    tape = pattern_tape([0] * A.m, n, n**3, FieldSpec.for_size(n))
    return _margin_row(mixed_max_rank(A, tape).run, tape, "2A'", f"X{n}x{n}", n, 6 * math.log2(n), True)


def margin_2b_mixed(n: int) -> MarginRow:
    """Indeterminate except a zero last row; the diagonal pattern already has maximum rank."""
    vars_ = tuple((i, j) for i in range(n - 1) for j in range(n))
    A = MixedMatrix(n, n, tuple((0,) * n for _ in range(n)), vars_, DEFAULT_PRIME)
    tape = pattern_tape([int(i == j) for i, j in vars_], n, n**3, FieldSpec.for_size(n))
    return _margin_row(mixed_max_rank(A, tape).run, tape, "2B'", f"X{n - 1}x{n}+0", n, 6 * math.log2(n), True)


def margin_pm(n: int) -> MarginRow:
    """Complete graph with every weight zero and weight fields of full value width.

    The Tutte evaluation comes from a random tape so that every perfect
    matching survives; a greedy evaluation from an all-zero tape keeps only one.
    """
    g = _complete(n)
    spec = FieldSpec.for_size(n)
    values = matching_size(g, tape_init(0, n, g.m, 2, spec)).assignment.values
    tape = pattern_tape([0] * g.m, n, n**3, spec)
    res = perfect_matching(g, tape, w_max=(1 << spec.bits) - 1, values=values)
    if not is_perfect_matching(g, res.matching):
        raise AssertionError(f"K{n}: not a perfect matching")
    return _margin_row(res.run, tape, "PM-EDGE", f"K{n}", n, 8 * math.log2(n), False)


def margin_edmonds(n: int, m: int, epsilon: str) -> MarginRow:
    """``m`` cyclic shifts of the identity, all-zero tape, value set of size ``n^c``."""
    params = ApproxParams.from_epsilon(Fraction(epsilon))
    mats = tuple(tuple(tuple(int(r == (c + k) % n) for c in range(n)) for r in range(n)) for k in range(m))
    pen = MatrixPencil(mats, n, n, DEFAULT_PRIME)
    spec = FieldSpec.for_size(n, params.c)
    tape = pattern_tape([0] * m, n, n**3, spec)
    run = pencil_approx_rank(pen, tape, params).run
    return _margin_row(run, tape, "ED-TUPLE", f"shift{n}[m={m},eps={epsilon}]", n, 0, True)


MARGIN_FAMILIES: dict[str, tuple[Callable[[int], MarginRow], tuple[int, ...]]] = {
    "2A": (margin_2a, tuple(range(2, 9))),
    "2B": (margin_2b, tuple(range(2, 9))),
    "2A'": (margin_2a_mixed, tuple(range(2, 9))),
    "2B'": (margin_2b_mixed, tuple(range(2, 9))),
    "PM-EDGE": (margin_pm, (2, 4, 6, 8)),
}


def smallest_feasible(tag: str) -> tuple[int | None, list[MarginRow]]:
    """First size whose records exist and all meet the bound, with every row measured on the way."""
    measure, sizes = MARGIN_FAMILIES[tag]
    seen: list[MarginRow] = []
    for n in sizes:
        row = measure(n)
        seen.append(row)
        if row.records and row.holds:
            return n, seen
    return None, seen
