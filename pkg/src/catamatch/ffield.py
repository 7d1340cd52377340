"""Prime-field scalars and dense univariate polynomials.

Algorithms work on plain ``int`` residues for speed; :class:`FieldElement`
is the checked scalar type used at API boundaries.  Polynomials are dense,
lowest degree first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sympy import isprime, nextprime

from .errors import DivisionByZero, InvalidInput

DEFAULT_PRIME = 2**31 - 1
# numpy int64 kernels need p*p < 2**63
NUMPY_SAFE_PRIME = 2**31


def inv_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise DivisionByZero(f"0 has no inverse mod {p}")
    return pow(a, -1, p)


@dataclass(frozen=True)
class FieldSpec:
    """Prime ``p`` together with the canonical value set ``{0, ..., s-1}``."""

    p: int = DEFAULT_PRIME
    s: int = 2

    def __post_init__(self) -> None:
        if self.p < 3 or not isprime(self.p):
            raise InvalidInput(f"p={self.p} is not an odd prime")
        if not 1 <= self.s <= self.p:
            raise InvalidInput(f"value-set size s={self.s} must lie in [1, p]")

    @property
    def bits(self) -> int:
        """Serialized width of one value, ceil(log2 s)."""
        return (self.s - 1).bit_length()

    def element(self, value: int) -> FieldElement:
        return FieldElement(value % self.p, self.p)

    def values(self) -> range:
        return range(self.s)

    def with_s(self, s: int) -> FieldSpec:
        return FieldSpec(self.p, s)

    @classmethod
    def for_size(cls, n: int, exponent: int = 10, p: int | None = None) -> FieldSpec:
        """Value set of size ``n**exponent`` over a prime exceeding it."""
        s = max(2, n) ** exponent
        if p is None:
            p = DEFAULT_PRIME if s < DEFAULT_PRIME else nextprime(s)
        return cls(p, s)


@dataclass(frozen=True)
class FieldElement:
    residue: int
    p: int

    def __post_init__(self) -> None:
        if not 0 <= self.residue < self.p:
            object.__setattr__(self, "residue", self.residue % self.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise InvalidInput("elements of different fields")
            return other.residue
        if isinstance(other, int):
            return other % self.p
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement((self.residue + o) % self.p, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return FieldElement((self.residue - o) % self.p, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        return FieldElement((o - self.residue) % self.p, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        return FieldElement(self.residue * o % self.p, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.residue % self.p, self.p)

    def inv(self) -> FieldElement:
        return FieldElement(inv_mod(self.residue, self.p), self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        return FieldElement(self.residue * inv_mod(o, self.p) % self.p, self.p)

    def __int__(self) -> int:
        return self.residue

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.p == other.p and self.residue == other.residue
        if isinstance(other, int):
            return self.residue == other % self.p
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.residue, self.p))

    def __repr__(self) -> str:
        return f"{self.residue} (mod {self.p})"


def field_ops(a: FieldElement, b: FieldElement) -> dict[str, FieldElement]:
    """Sum, difference, product and quotient of two elements.

    The quotient entry is omitted when ``b`` is zero; call ``a.inv()``
    directly to get :class:`DivisionByZero`.
    """
    out = {"add": a + b, "sub": a - b, "mul": a * b}
    if b.residue:
        out["div"] = a / b
    return out


@dataclass(frozen=True)
class UniPoly:
    """Dense polynomial over GF(p), lowest-degree coefficient first."""

    coeffs: tuple[int, ...]
    p: int

    def __post_init__(self) -> None:
        cs = [c % self.p for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def zero(cls, p: int) -> UniPoly:
        return cls((), p)

    @classmethod
    def monomial(cls, coeff: int, degree: int, p: int) -> UniPoly:
        return cls((0,) * degree + (coeff,), p)

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, w: int) -> int:
        return self.coeffs[w] if 0 <= w < len(self.coeffs) else 0

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def __add__(self, other: UniPoly) -> UniPoly:
        n = max(len(self.coeffs), len(other.coeffs))
        return UniPoly(tuple(self.coeff(i) + other.coeff(i) for i in range(n)), self.p)

    def __sub__(self, other: UniPoly) -> UniPoly:
        n = max(len(self.coeffs), len(other.coeffs))
        return UniPoly(tuple(self.coeff(i) - other.coeff(i) for i in range(n)), self.p)

    def __mul__(self, other: UniPoly | int) -> UniPoly:
        if isinstance(other, int):
            return UniPoly(tuple(c * other for c in self.coeffs), self.p)
        if self.is_zero() or other.is_zero():
            return UniPoly.zero(self.p)
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return UniPoly(tuple(out), self.p)

    def shift(self, k: int) -> UniPoly:
        """Multiply by z**k."""
        if self.is_zero():
            return self
        return UniPoly((0,) * k + self.coeffs, self.p)


def min_degree_term(f: UniPoly) -> tuple[int, int] | None:
    """Least degree carrying a nonzero coefficient, with that coefficient."""
    for w, c in enumerate(f.coeffs):
        if c:
            return w, c
    return None


def interpolate(points: Sequence[tuple[int, int]], d_max: int, p: int) -> UniPoly:
    """Unique polynomial of degree <= d_max through ``points``.

    The first ``d_max + 1`` points determine the fit; any further points
    are checked for consistency.
    """
    pts = [(int(x) % p, int(y) % p) for x, y in points]
    if len(pts) < d_max + 1:
        raise InvalidInput(f"need {d_max + 1} points, got {len(pts)}")
    xs = [x for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise InvalidInput("duplicate abscissae")
    fit = pts[: d_max + 1]
    # Newton divided differences
    cs = [y for _, y in fit]
    fx = [x for x, _ in fit]
    for j in range(1, len(fit)):
        for i in range(len(fit) - 1, j - 1, -1):
            cs[i] = (cs[i] - cs[i - 1]) * inv_mod(fx[i] - fx[i - j], p) % p
    poly = [0] * len(fit)
    for j in range(len(fit) - 1, -1, -1):
        # poly <- poly * (z - x_j) + c_j
        xj = fx[j]
        for k in range(len(fit) - 1, 0, -1):
            poly[k] = (poly[k - 1] - xj * poly[k]) % p
        poly[0] = (cs[j] - xj * poly[0]) % p
    result = UniPoly(tuple(poly), p)
    for x, y in pts[d_max + 1:]:
        if result(x) != y:
            raise InvalidInput("points are not on a polynomial of degree <= d_max")
    return result


def _modinv_vec(x: np.ndarray, p: int) -> np.ndarray:
    """Elementwise inverse mod p (0 maps to 0); requires p < 2**31."""
    result = np.ones_like(x)
    base = x % p
    e = p - 2
    while e:
        if e & 1:
            result = result * base % p
        base = base * base % p
        e >>= 1
    return result


def interpolate_consecutive(values: np.ndarray, p: int) -> np.ndarray:
    """Batch interpolation at the nodes 0, 1, ..., d.

    ``values`` has shape (k, d+1); row r holds f_r(0..d).  Returns the
    monomial coefficients, same shape.  Requires p < 2**31 and p > d.
    """
    c = np.array(values, dtype=np.int64) % p
    d = c.shape[1] - 1
    for j in range(1, d + 1):
        c[:, j:] = (c[:, j:] - c[:, j - 1:d]) % p * inv_mod(j, p) % p
    poly = np.zeros_like(c)
    for j in range(d, -1, -1):
        shifted = np.zeros_like(poly)
        shifted[:, 1:] = poly[:, :-1]
        poly = (shifted - j * poly) % p
        poly[:, 0] = (poly[:, 0] + c[:, j]) % p
    return poly


def polys_from_rows(rows: Iterable[Sequence[int]], p: int) -> list[UniPoly]:
    return [UniPoly(tuple(int(v) for v in row), p) for row in rows]
