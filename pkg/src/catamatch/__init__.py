"""Exact finite-field matching and rank algorithms run on a restorable tape."""

from .edmonds import ApproxParams, MatrixPencil, matroid_matching_approx, pencil_approx_rank
from .errors import (
    CatamatchError,
    ContractViolation,
    DivisionByZero,
    FieldTooSmall,
    InvalidInput,
    LemmaViolation,
    PreconditionViolation,
    UniquenessViolation,
)
from .ffield import DEFAULT_PRIME, FieldElement, FieldSpec, UniPoly, interpolate, min_degree_term
from .harness import (
    Corpus,
    RunReport,
    TapeConfig,
    generate,
    oracle_gallai_edmonds,
    oracle_max_matching,
    oracle_symbolic_rank,
    verify_all,
)
from .matrix import DenseMatrix, SkewMatrix, deficiency, det_of, pfaffian, pfaffian_poly, rank_of
from .mixedrank import (
    LinearMatroidPair,
    MixedMatrix,
    geelen99_greedy,
    matroid_intersection_size,
    mixed_max_rank,
)
from .pmsearch import bipartite_max_matching, maximum_matching, perfect_matching
from .tape import CatalyticTape, compress_or_compute, tape_init, verify_restored
from .tutte import GallaiEdmonds, Graph, gallai_edmonds, geelen_greedy, matching_size

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
