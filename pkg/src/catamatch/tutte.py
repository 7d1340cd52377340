"""Graphs, Tutte matrices and maximum-matching size on a catalytic tape.

Vertices are labelled ``1..n``; edges are kept sorted and addressed by a
0-based index that stays fixed for the lifetime of a :class:`Graph`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np

from .errors import InvalidInput, UniquenessViolation
from .ffield import FieldSpec
from .matrix import SkewMatrix, rank_mod
from .perturb import (
    DeficiencyGrowth,
    Event,
    MaxRank,
    MaxRankOutcome,
    RankFamily,
    RankJump,
    audit_event,
    candidates_label,
    candidates_rank,
    case_split_fast,
    case_split_scan,
    catalytic_max_rank,
    greedy_max_rank,
)
from .tape import CatalyticRun, CatalyticTape

TUTTE_TAGS = ("2A", "2B")


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InvalidInput("negative vertex count")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise InvalidInput(f"loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise InvalidInput(f"edge ({u},{v}) outside 1..{self.n}")
            e = (min(u, v), max(u, v))
            if e in norm:
                raise InvalidInput(f"repeated edge {e}")
            norm.add(e)
        edges = tuple(sorted(norm))
        adj: dict[int, set[int]] = {v: set() for v in range(1, self.n + 1)}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adjacency", adj)

    @property
    def m(self) -> int:
        return len(self.edges)

    def vertices(self) -> range:
        return range(1, self.n + 1)

    def edge_index(self, u: int, v: int) -> int:
        return self.edges.index((min(u, v), max(u, v)))

    def neighbors(self, v: int) -> set[int]:
        return self.adjacency[v]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices())
        g.add_edges_from(self.edges)
        return g

    def induced(self, keep: Iterable[int]) -> tuple[Graph, list[int]]:
        """Induced subgraph relabelled to ``1..k``; also returns the old labels."""
        old = sorted(set(keep))
        new_of = {v: i + 1 for i, v in enumerate(old)}
        sub = [(new_of[u], new_of[v]) for u, v in self.edges if u in new_of and v in new_of]
        return Graph(len(old), tuple(sub)), old

    @classmethod
    def from_text(cls, text: str) -> Graph:
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or len(lines[0]) != 2:
            raise InvalidInput("graph header must be 'n m'")
        n, m = int(lines[0][0]), int(lines[0][1])
        if len(lines) - 1 != m:
            raise InvalidInput(f"header says {m} edges, found {len(lines) - 1}")
        return cls(n, tuple((int(a), int(b)) for a, b in lines[1:]))

    @classmethod
    def load(cls, path: str | Path) -> Graph:
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        return "\n".join([f"{self.n} {self.m}"] + [f"{u} {v}" for u, v in self.edges]) + "\n"


@dataclass(frozen=True)
class TutteAssignment:
    graph: Graph
    values: tuple[int, ...]
    spec: FieldSpec

    def __post_init__(self) -> None:
        if len(self.values) != self.graph.m:
            raise InvalidInput(f"{len(self.values)} values for {self.graph.m} edges")
        object.__setattr__(self, "values", tuple(int(v) % self.spec.p for v in self.values))


@dataclass(frozen=True)
class GallaiEdmonds:
    D: frozenset[int]
    A: frozenset[int]
    C: frozenset[int]
    components: tuple[frozenset[int], ...]


# ------------------------------------------------------------------- matrices


def tutte_family(g: Graph, spec: FieldSpec) -> RankFamily:
    pos = [[(u - 1, v - 1, 1), (v - 1, u - 1, -1)] for u, v in g.edges]
    return RankFamily(np.zeros((g.n, g.n), dtype=np.int64), pos, spec.p, spec.s, skew=True)


def tutte_matrix(g: Graph, assign: TutteAssignment) -> SkewMatrix:
    upper = {(u - 1, v - 1): a for (u, v), a in zip(g.edges, assign.values)}
    return SkewMatrix.from_upper(g.n, upper, assign.spec.p)


def _labels(dset: Iterable[int]) -> frozenset[int]:
    return frozenset(v + 1 for v in dset)


def case_split(assign: TutteAssignment, method: str = "fast") -> Event:
    """First improving substitution, or :class:`MaxRank`.

    Indices in the returned event are 0-based edge indices; the label of a
    :class:`DeficiencyGrowth` is a 0-based vertex index.
    """
    fam = tutte_family(assign.graph, assign.spec)
    return case_split_fast(fam, assign.values) if method == "fast" else case_split_scan(fam, assign.values)


def is_max_rank(assign: TutteAssignment, method: str = "fast") -> bool:
    return isinstance(case_split(assign, method), MaxRank)


def _one(cands: list[int], what: str) -> int:
    if len(cands) != 1:
        raise UniquenessViolation(f"{what}: {len(cands)} candidate values {cands[:8]}")
    return cands[0]


def restore_value_2A(assign: TutteAssignment, j: int, k: int, method: str = "fast") -> int:
    """The unique value of edge ``j`` giving rank ``k`` (current value of ``j`` ignored)."""
    fam = tutte_family(assign.graph, assign.spec)
    return _one(candidates_rank(fam, assign.values, j, k, method), f"edge {j}, rank {k}")


def restore_value_2B(assign: TutteAssignment, j: int, u: int, method: str = "fast") -> int:
    """The unique value of edge ``j`` that keeps vertex ``u`` (1-based) out of the deficiency set."""
    fam = tutte_family(assign.graph, assign.spec)
    return _one(candidates_label(fam, assign.values, j, u - 1, method), f"edge {j}, vertex {u}")


# -------------------------------------------------------------- algorithms


@dataclass
class MatchingSize:
    nu: int
    deficiency: frozenset[int]
    assignment: TutteAssignment
    run: CatalyticRun | None


def matching_size(g: Graph, tape: CatalyticTape, audit: bool = False, restore_method: str = "fast") -> MatchingSize:
    """Maximum matching size and deficiency set via the block loop."""
    spec = tape.spec
    fam = tutte_family(g, spec)
    if g.m == 0:
        return MatchingSize(0, frozenset(g.vertices()), TutteAssignment(g, (), spec), None)
    out: MaxRankOutcome = catalytic_max_rank(fam, tape, TUTTE_TAGS, audit=audit, restore_method=restore_method)
    return MatchingSize(out.rank // 2, _labels(out.deficiency), TutteAssignment(g, tuple(out.assignment), spec), out.run)


def max_rank_assignment(g: Graph, tape: CatalyticTape, audit: bool = False) -> TutteAssignment:
    return matching_size(g, tape, audit=audit).assignment


def geelen_greedy(g: Graph, spec: FieldSpec, method: str = "scan") -> TutteAssignment:
    """Greedy improvement from the all-zero assignment until no substitution helps."""
    a, _, _ = greedy_max_rank(tutte_family(g, spec), None, method)
    return TutteAssignment(g, tuple(a), spec)


def assignment_rank(assign: TutteAssignment) -> int:
    return rank_mod(tutte_matrix(assign.graph, assign).entries, assign.spec.p)


def decomposition_from_deficiency(g: Graph, D: Iterable[int]) -> GallaiEdmonds:
    D = frozenset(D)
    A = frozenset(v for v in g.vertices() if v not in D and g.neighbors(v) & D)
    C = frozenset(g.vertices()) - D - A
    sub = g.to_networkx().subgraph(D)
    comps = tuple(sorted((frozenset(c) for c in nx.connected_components(sub)), key=min))
    return GallaiEdmonds(D, A, C, comps)


def gallai_edmonds(g: Graph, tape: CatalyticTape, audit: bool = False) -> GallaiEdmonds:
    return decomposition_from_deficiency(g, matching_size(g, tape, audit=audit).deficiency)


__all__ = [
    "Graph",
    "TutteAssignment",
    "GallaiEdmonds",
    "MatchingSize",
    "MaxRank",
    "RankJump",
    "DeficiencyGrowth",
    "TUTTE_TAGS",
    "tutte_family",
    "tutte_matrix",
    "case_split",
    "is_max_rank",
    "restore_value_2A",
    "restore_value_2B",
    "matching_size",
    "max_rank_assignment",
    "geelen_greedy",
    "gallai_edmonds",
    "decomposition_from_deficiency",
    "assignment_rank",
    "audit_event",
]
