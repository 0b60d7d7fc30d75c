"""Exact sparse Laurent polynomials in the formal variable q^(1/4).

Every polynomial value in the library (bosonic sums, fermionic lattice
sums, normalization prefactors, characters) is a QPoly.  Exponents are
stored as integer counts of quarter units, so an exponent of 5 means
q^(5/4); all the constants that arise are on the 1/4 lattice, which
keeps the arithmetic in plain integers with no rational bookkeeping.

Coefficients are arbitrary-precision Python ints and every operation is
exact.  QPoly values are immutable after construction and safe to share.
"""

from __future__ import annotations

from typing import Iterable, Iterator

# An exponent measured in quarter units: the exponent of q is quarters/4.
QExponent = int


class QPoly:
    """Sparse exact Laurent polynomial in q^(1/4).

    Canonical form: no stored coefficient is zero.  Do not mutate the
    term mapping; all arithmetic returns new instances.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: dict[QExponent, int] | None = None):
        if terms:
            self._terms = {e: c for e, c in terms.items() if c != 0}
        else:
            self._terms = {}

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "QPoly":
        return _ZERO

    @staticmethod
    def one() -> "QPoly":
        return _ONE

    @staticmethod
    def monomial(quarters: QExponent, coeff: int = 1) -> "QPoly":
        """coeff * q^(quarters/4)."""
        p = QPoly.__new__(QPoly)
        p._terms = {quarters: coeff} if coeff != 0 else {}
        return p

    @staticmethod
    def const(c: int) -> "QPoly":
        return QPoly.monomial(0, c)

    @staticmethod
    def _raw(terms: dict) -> "QPoly":
        # internal: caller guarantees canonical form
        p = QPoly.__new__(QPoly)
        p._terms = terms
        return p

    # -- inspection ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def items(self) -> Iterator[tuple[QExponent, int]]:
        return iter(self._terms.items())

    def coeff(self, quarters: QExponent) -> int:
        """Coefficient of q^(quarters/4)."""
        return self._terms.get(quarters, 0)

    def min_exponent(self) -> QExponent | None:
        """Smallest stored exponent in quarters, or None for the zero polynomial."""
        return min(self._terms) if self._terms else None

    def max_exponent(self) -> QExponent | None:
        """Largest stored exponent in quarters, or None for the zero polynomial."""
        return max(self._terms) if self._terms else None

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other) -> "QPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self._terms:
            return other
        if not other._terms:
            return self
        terms = dict(self._terms)
        for e, c in other._terms.items():
            acc = terms.get(e, 0) + c
            if acc:
                terms[e] = acc
            elif e in terms:
                del terms[e]
        return QPoly._raw(terms)

    __radd__ = __add__

    def __neg__(self) -> "QPoly":
        return QPoly._raw({e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "QPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "QPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "QPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._terms, other._terms
        if not a or not b:
            return _ZERO
        if len(a) > len(b):
            a, b = b, a
        if len(a) == 1:
            (e0, c0), = a.items()
            if c0 == 1 and e0 == 0:
                return QPoly._raw(dict(b))
            return QPoly._raw({e0 + e: c0 * c for e, c in b.items()})
        acc: dict[int, int] = {}
        get = acc.get
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = ea + eb
                v = get(e, 0) + ca * cb
                if v:
                    acc[e] = v
                elif e in acc:
                    del acc[e]
        return QPoly._raw(acc)

    __rmul__ = __mul__

    def shift(self, quarters: QExponent) -> "QPoly":
        """Multiply by q^(quarters/4): every exponent increased by quarters."""
        if quarters == 0:
            return self
        return QPoly._raw({e + quarters: c for e, c in self._terms.items()})

    def invert_q(self) -> "QPoly":
        """Substitute q -> q^(-1): negate every exponent."""
        return QPoly._raw({-e: c for e, c in self._terms.items()})

    def eval_at_one(self) -> int:
        """Value at q=1, i.e. the sum of all coefficients."""
        return sum(self._terms.values())

    def truncate(self, max_exponent: QExponent) -> "QPoly":
        """Drop all terms with exponent strictly above max_exponent (quarters)."""
        return QPoly._raw({e: c for e, c in self._terms.items() if e <= max_exponent})

    # -- comparison / hashing ------------------------------------------

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    # -- serialization -------------------------------------------------

    def to_pairs(self) -> list[list]:
        """JSON form: [[quarters, "coeff"], ...] sorted by exponent."""
        return [[e, str(self._terms[e])] for e in sorted(self._terms)]

    @staticmethod
    def from_pairs(pairs: Iterable) -> "QPoly":
        return QPoly({int(e): int(c) for e, c in pairs})

    def __repr__(self) -> str:
        return f"QPoly({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for e in sorted(self._terms):
            c = self._terms[e]
            if e == 0:
                out.append(str(c))
                continue
            if e % 4 == 0:
                sup = str(e // 4)
            else:
                sup = f"{e}/4"
            head = "" if c == 1 else ("-" if c == -1 else str(c) + "*")
            out.append(f"{head}q^{sup}" if sup != "1" else f"{head}q")
        return " + ".join(out).replace("+ -", "- ")


def _coerce(x) -> "QPoly":
    if isinstance(x, QPoly):
        return x
    if isinstance(x, int):
        return QPoly.const(x)
    return NotImplemented


_ZERO = QPoly()
_ONE = QPoly({0: 1})

ZERO = _ZERO
ONE = _ONE


def q_pow(quarters: QExponent) -> QPoly:
    """q raised to quarters/4."""
    return QPoly.monomial(quarters)


# Module-level aliases for the operation names used throughout.

def add(a: QPoly, b: QPoly) -> QPoly:
    return a + b


def mul(a: QPoly, b: QPoly) -> QPoly:
    return a * b


def shift(a: QPoly, e: QExponent) -> QPoly:
    return a.shift(e)


def invert_q(a: QPoly) -> QPoly:
    return a.invert_q()


def eval_at_one(a: QPoly) -> int:
    return a.eval_at_one()


def truncate(a: QPoly, max_exponent: QExponent) -> QPoly:
    return a.truncate(max_exponent)


def prod(factors: Iterable[QPoly]) -> QPoly:
    out = _ONE
    for f in factors:
        out = out * f
        if not out:
            return _ZERO
    return out


def poly_sum(terms: Iterable[QPoly]) -> QPoly:
    acc: dict[int, int] = {}
    get = acc.get
    for t in terms:
        for e, c in t.items():
            v = get(e, 0) + c
            if v:
                acc[e] = v
            elif e in acc:
                del acc[e]
    return QPoly._raw(acc)


def first_difference(a: QPoly, b: QPoly) -> dict | None:
    """Lowest exponent where two polynomials disagree, or None if equal.

    Returns {"exponent_quarters": e, "lhs": str, "rhs": str} so that
    verification reports can pin down the first differing coefficient.
    """
    if a == b:
        return None
    exps = sorted(set(a._terms) | set(b._terms))
    for e in exps:
        ca = a.coeff(e)
        cb = b.coeff(e)
        if ca != cb:
            return {"exponent_quarters": e, "lhs": str(ca), "rhs": str(cb)}
    return None


def truncated_inverse(a: QPoly, max_exponent: QExponent) -> QPoly:
    """Series inverse of a modulo q^(max_exponent/4 + 1/4).

    Requires constant term +1 or -1 and no negative exponents: the use
    case is inverting truncated Euler products like (q)_N.
    """
    c0 = a.coeff(0)
    if c0 not in (1, -1):
        raise ValueError("truncated_inverse needs constant term +-1")
    lo = a.min_exponent()
    if lo is None or lo < 0:
        raise ValueError("truncated_inverse needs a plain power series")
    # long-division recurrence: inv[k] determined by lower-order terms
    rest = [(e, c) for e, c in a.items() if e != 0]
    inv: dict[int, int] = {0: c0}
    for k in range(1, max_exponent + 1):
        acc = 0
        for e, c in rest:
            if e <= k:
                acc += c * inv.get(k - e, 0)
        if acc:
            inv[k] = -c0 * acc
    return QPoly._raw({e: c for e, c in inv.items() if c != 0})
