"""Takahashi-Suzuki combinatorics for the minimal models M(p, p').

Everything downstream is driven by the data assembled here: the zone
decomposition of p'/p, the companion integer arrays y and z, string
lengths, Takahashi lengths and their truncated partners, the unique
expansion of b in Takahashi lengths, the b -> r map, the closed-form
case classification, and the quarter-integer exponent constants.

Zones are indexed 0..n.  An index j lives in zone mu when
t_mu + 1 <= j <= t_{mu+1} (+1 for the extended top of zone n); j = 0
and j = t_{n+1}+1 are the virtual end positions.  All exponent-like
quantities are returned in quarter units (see qlaurent.QExponent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .qlaurent import QExponent


class ModelError(ValueError):
    """Base class for model construction and lookup failures."""


class NotCoprime(ModelError):
    pass


class WrongRegime(ModelError):
    """p' <= 2p: use the dual pathway instead of building this model."""


class UnsupportedP(ModelError):
    """p < 2 has no zone decomposition in the sense used here."""


class OutOfRange(ModelError):
    pass


class IndexOutOfZone(ModelError):
    pass


class NoDecomposition(ModelError):
    pass


# classification tags
CASE1 = "Case1"
CASE2A = "Case2a"
CASE2B = "Case2b"
CASE3 = "Case3"
CASE4_ALPHA1 = "Case4_alpha1"
CASE4_GE2 = "Case4_alphaGE2"
GENERAL = "General"


@dataclass(frozen=True, eq=False)
class ModelData:
    """Immutable combinatorial data for one model M(p, p') with p' > 2p."""

    p: int
    p_prime: int
    n: int                                  # highest zone index
    nu: tuple[int, ...]                     # nu_0..nu_n
    t: tuple[int, ...]                      # t_0..t_{n+1}, with t[0] = -1
    y: tuple[int, ...]                      # y_{-1}..y_{n+1}; use y_val(mu)
    z: tuple[int, ...]                      # z_{-1}..z_n; use z_val(mu)
    l: dict[int, int]                       # string lengths, 1 <= j <= t_{n+1}+1
    takahashi: dict[tuple[int, int], int]   # (mu, j) -> Takahashi length
    truncated: dict[tuple[int, int], int]   # (mu, j) -> truncated partner
    ct_quarters: tuple[int, ...]            # c(t_mu) in quarters, mu = 0..n

    def y_val(self, mu: int) -> int:
        return self.y[mu + 1]

    def z_val(self, mu: int) -> int:
        return self.z[mu + 1]

    def zone_of(self, j: int) -> int:
        for mu in range(self.n + 1):
            if self.t[mu] + 1 <= j <= self.t[mu + 1] + (1 if mu == self.n else 0):
                return mu
        raise IndexOutOfZone(f"index {j} lies in no zone of M({self.p},{self.p_prime})")

    @property
    def num_types(self) -> int:
        return self.t[self.n + 1]


def build_model(p: int, p_prime: int) -> ModelData:
    """Construct all model data for M(p, p') in the regime p' > 2p."""
    if p < 2:
        raise UnsupportedP(f"p = {p} is not supported; p must be at least 2")
    if math.gcd(p, p_prime) != 1:
        raise NotCoprime(f"p = {p} and p' = {p_prime} share a factor")
    if p_prime <= 2 * p:
        raise WrongRegime(
            f"M({p},{p_prime}) has p' <= 2p; construct M({p_prime - p},{p_prime}) "
            "and use the dual identities")

    # Euclidean quotients of p'/p; the final quotient is automatically >= 2.
    quots = []
    hi, lo = p_prime, p
    while lo:
        quots.append(hi // lo)
        hi, lo = lo, hi % lo
    nu = (quots[0] - 1,) + tuple(quots[1:-1]) + (quots[-1] - 2,)
    n = len(nu) - 1

    t = [-1]
    for mu in range(1, n + 2):
        t.append(sum(nu[:mu]))

    ys = [0, 1, nu[0] + 1]                      # y_{-1}, y_0, y_1
    for mu in range(1, n + 1):
        ys.append(ys[mu] + (nu[mu] + 2 * (mu == n)) * ys[mu + 1])
    zs = [0, 1]                                 # z_{-1}, z_0
    if n >= 1:
        zs.append(nu[1] + 2 * (1 == n))
    for mu in range(1, n):
        zs.append(zs[mu] + (nu[mu + 1] + 2 * (mu + 1 == n)) * zs[mu + 1])

    if ys[n + 2] != p_prime:
        raise ModelError(f"y array failed to close on p' for M({p},{p_prime})")
    if zs[n + 1] != p:
        raise ModelError(f"z array failed to close on p for M({p},{p_prime})")

    def zone(j: int) -> int:
        for mu in range(n + 1):
            if t[mu] + 1 <= j <= t[mu + 1] + (1 if mu == n else 0):
                return mu
        raise IndexOutOfZone(str(j))

    lengths = {}
    for j in range(1, t[n + 1] + 2):
        mu = zone(j)
        lengths[j] = ys[mu] + (j - 1 - t[mu]) * ys[mu + 1]

    takahashi: dict[tuple[int, int], int] = {}
    truncated: dict[tuple[int, int], int] = {}
    for j in range(0, t[1] + 1):
        takahashi[(0, j)] = j + 1
        truncated[(0, j)] = 0
    for mu in range(1, n + 1):
        for j in range(t[mu] + 1, t[mu + 1] + (1 if mu == n else 0) + 1):
            takahashi[(mu, j)] = ys[mu] + (j - t[mu]) * ys[mu + 1]
            truncated[(mu, j)] = zs[mu - 1] + (j - t[mu]) * zs[mu]

    if takahashi[(n, t[n + 1] + 1)] != p_prime - ys[n + 1]:
        raise ModelError("extended top Takahashi length is inconsistent")
    vals = [takahashi[k] for k in sorted(takahashi)]
    if any(a >= b for a, b in zip(vals, vals[1:])):
        raise ModelError("Takahashi lengths are not strictly increasing")

    # c(t_mu) in quarter units
    ct = [nu[0], 0]
    for mu in range(1, n):
        ct.append(ct[mu - 1] + nu[mu] * ct[mu]
                  - (nu[0] - (1 if mu % 2 == 0 else 0))
                  + (nu[mu] - 1) * (-(nu[0] + 1) + (3 if mu % 2 == 1 else 0)))
    del ct[n + 1:]  # keep exactly mu = 0..n

    return ModelData(p=p, p_prime=p_prime, n=n, nu=nu, t=tuple(t),
                     y=tuple(ys), z=tuple(zs), l=lengths,
                     takahashi=takahashi, truncated=truncated,
                     ct_quarters=tuple(ct))


def string_length(m: ModelData, j: int) -> int:
    if j not in m.l:
        raise OutOfRange(f"string length index {j} outside 1..{m.num_types + 1}")
    return m.l[j]


def takahashi_length(m: ModelData, mu: int, j: int) -> int:
    try:
        return m.takahashi[(mu, j)]
    except KeyError:
        raise IndexOutOfZone(f"no Takahashi length at zone {mu}, index {j}") from None


def truncated_takahashi_length(m: ModelData, mu: int, j: int) -> int:
    try:
        return m.truncated[(mu, j)]
    except KeyError:
        raise IndexOutOfZone(f"no truncated length at zone {mu}, index {j}") from None


@dataclass(frozen=True)
class TakahashiDecomposition:
    """b (or a truncated x) as a sum of lengths at strictly increasing zones.

    Adjacency rule: a term whose index tops out its zone (j = t_{mu+1})
    forces the next zone up to be at least mu + 2.  Under that rule the
    decomposition is unique.
    """

    terms: tuple[tuple[int, int], ...]      # (zone, index), increasing zone

    @property
    def beta(self) -> int:
        return len(self.terms)

    @property
    def mu1(self) -> int:
        return self.terms[0][0]


def _search(cands, t, remaining, zone_above):
    for value, mu, j in cands:
        if value > remaining:
            continue
        if zone_above is not None:
            if mu >= zone_above:
                continue
            if mu + 1 == zone_above and j == t[mu + 1]:
                continue
        if value == remaining:
            return [(mu, j)]
        rest = _search(cands, t, remaining - value, mu)
        if rest is not None:
            rest.append((mu, j))
            return rest
    return None


def decompose_b(m: ModelData, b: int) -> TakahashiDecomposition:
    """The unique admissible expansion of b, found greedily with backtracking."""
    if not 1 <= b <= m.p_prime - 1:
        raise OutOfRange(f"b = {b} outside 1..{m.p_prime - 1}")
    cands = sorted(((v, mu, j) for (mu, j), v in m.takahashi.items()), reverse=True)
    found = _search(cands, m.t, b, None)
    if found is None:
        raise NoDecomposition(f"no admissible expansion of b = {b}")
    return TakahashiDecomposition(tuple(found))


def decompose_truncated(m: ModelData, x: int) -> TakahashiDecomposition:
    """Expansion of x in truncated lengths (zones >= 1), same adjacency rule."""
    if not 1 <= x <= m.p - 1:
        raise OutOfRange(f"x = {x} outside 1..{m.p - 1}")
    cands = sorted(((v, mu, j) for (mu, j), v in m.truncated.items() if mu >= 1),
                   reverse=True)
    found = _search(cands, m.t, x, None)
    if found is None:
        raise NoDecomposition(f"no admissible truncated expansion of x = {x}")
    return TakahashiDecomposition(tuple(found))


def r_of_b(m: ModelData, b: int) -> int:
    """The companion label r(b): the truncated weight of b's expansion,
    bumped by one when the expansion starts in zone 0 and b is not in the
    final plateau window p' - nu_0 <= b <= p' - 1."""
    d = decompose_b(m, b)
    r = sum(m.truncated[term] for term in d.terms)
    if b <= m.p_prime - m.nu[0] - 1 and d.mu1 == 0:
        r += 1
    return r


def r_floor(m: ModelData, b: int) -> int:
    """Floor-quotient form of r(b); must agree with r_of_b everywhere."""
    if not 1 <= b <= m.p_prime - 1:
        raise OutOfRange(f"b = {b} outside 1..{m.p_prime - 1}")
    r = (b * m.p) // m.p_prime
    if b <= m.p_prime - m.nu[0] - 1 and decompose_b(m, b).mu1 % 2 == 0:
        r += 1
    return r


@dataclass(frozen=True)
class CaseInfo:
    """Closed-form dispatch result.

    terms holds the anchoring (zone, index) pairs: the single length for
    cases 1/2a/2b, or the full expansion for cases 3/4.  j0 is the zone-0
    offset for 2a (distance below the anchor), 2b (distance minus one
    above it) and case 3 (the zone-0 index itself).  alpha/beta are the
    lowest/highest zones of the case-3/4 expansion.
    """

    tag: str
    terms: tuple[tuple[int, int], ...] = ()
    j0: int | None = None
    alpha: int | None = None
    beta: int | None = None


def closed_form_eligible(m: ModelData) -> bool:
    """Interior zones of width one lack usable closed-form factors."""
    return all(m.nu[i] >= 2 for i in range(1, m.n))


def _window_ok(m: ModelData, alpha: int, beta: int, js: dict[int, int]) -> bool:
    # top slot may not reach the top of its zone (extended top excluded)
    if js[beta] > m.t[beta + 1] - 1 + (1 if beta == m.n else 0):
        return False
    # slot below the top must stay two clear of its zone top
    if beta - 1 >= alpha and js[beta - 1] > m.t[beta] - 2:
        return False
    # interior slots (zone >= 1) must stay three clear
    for mu in range(max(alpha, 1), beta - 1):
        if js[mu] > m.t[mu + 1] - 3:
            return False
    if alpha == 0 and js[0] > m.nu[0] - 1:
        return False
    return True


def classify_case(m: ModelData, b: int) -> CaseInfo:
    """Match b against the closed-form catalogue; General when nothing fits."""
    if not 1 <= b <= m.p_prime - 1:
        raise OutOfRange(f"b = {b} outside 1..{m.p_prime - 1}")
    if not closed_form_eligible(m):
        return CaseInfo(GENERAL)

    for (mu, j), v in sorted(m.takahashi.items()):
        if v == b:
            return CaseInfo(CASE1, terms=((mu, j),))

    # multi-term patterns next: their windows partially overlap the 2a/2b
    # strips, and trying them first keeps the richer forms reachable
    d = decompose_b(m, b)
    zones = [mu for mu, _ in d.terms]
    if len(zones) >= 2 and zones == list(range(zones[0], zones[0] + len(zones))):
        alpha, beta = zones[0], zones[-1]
        js = dict(d.terms)
        if beta <= m.n and _window_ok(m, alpha, beta, js):
            if alpha == 0:
                return CaseInfo(CASE3, terms=d.terms, j0=js[0], alpha=0, beta=beta)
            tag = CASE4_ALPHA1 if alpha == 1 else CASE4_GE2
            return CaseInfo(tag, terms=d.terms, alpha=alpha, beta=beta)

    nu0 = m.nu[0]
    anchors = [((mu, j), v) for (mu, j), v in sorted(m.takahashi.items())
               if mu >= 1 and j <= m.t[mu + 1] - 1 + (1 if mu == m.n else 0)]
    for (mu, j), v in anchors:
        if 1 <= v - b <= nu0 - 1:
            return CaseInfo(CASE2A, terms=((mu, j),), j0=v - b)
    for (mu, j), v in anchors:
        if 0 <= b - v - 1 <= nu0:
            return CaseInfo(CASE2B, terms=((mu, j),), j0=b - v - 1)
    return CaseInfo(GENERAL)


def case_r(m: ModelData, info: CaseInfo) -> int:
    """The r value each closed-form case claims; agrees with r_of_b."""
    if info.tag == CASE1:
        (mu, j), = info.terms
        return m.truncated[(mu, j)] + (1 if mu == 0 else 0)
    if info.tag == CASE2A:
        return m.truncated[info.terms[0]]
    if info.tag == CASE2B:
        return 1 + m.truncated[info.terms[0]]
    if info.tag == CASE3:
        return 1 + sum(m.truncated[term] for term in info.terms[1:])
    if info.tag in (CASE4_ALPHA1, CASE4_GE2):
        return sum(m.truncated[term] for term in info.terms)
    raise ModelError(f"no r formula for {info.tag}")


def s_index(m: ModelData, s: int) -> tuple[int, int]:
    """(zone, index) of a pure-length s; the extended zone-n top is excluded."""
    for (mu, j), v in m.takahashi.items():
        if v == s and j <= m.t[mu + 1]:
            return (mu, j)
    raise OutOfRange(
        f"s = {s} is not a plain Takahashi length of M({m.p},{m.p_prime})")


def phi_difference(m: ModelData, x_hi: int, x_lo: int, y: int) -> int:
    """Sum of the unit steps of the phi ladder from x_lo up to x_hi at
    fixed second label y.  Each step x -> x+1 contributes 1 - y plus the
    full Takahashi weight of the truncated expansion of x."""
    if not 0 < x_lo <= x_hi <= m.p:
        raise OutOfRange(f"need 0 < {x_lo} <= {x_hi} <= {m.p}")
    total = 0
    for x in range(x_lo, x_hi):
        step = 1 - y
        for mu, j in decompose_truncated(m, x).terms:
            step += m.takahashi[(mu, j)]
        total += step
    return total


def c_t(m: ModelData, mu: int) -> QExponent:
    """c at the zone boundary t_mu, in quarters (c(t_0) = nu_0/4, c(t_1) = 0)."""
    if not 0 <= mu <= m.n:
        raise IndexOutOfZone(f"no boundary constant for zone {mu}")
    return m.ct_quarters[mu]


def c_exponent(m: ModelData, mu: int, j: int) -> QExponent:
    """The exponent constant c(j) for index j in zone mu, in quarters.

    Zone 0 is flat at zero; for mu >= 1 the value is affine in j with a
    slope built from nu_0 and c(t_mu), offset by c(t_{mu-1}) and a
    half-unit of alternating sign.  Zone n admits j up to t_{n+1}+2.
    """
    if mu == 0:
        if 0 <= j <= m.t[1]:
            return 0
        raise IndexOutOfZone(f"index {j} not in zone 0")
    if not 1 <= mu <= m.n:
        raise IndexOutOfZone(f"no zone {mu}")
    top = m.t[mu + 1] + (2 if mu == m.n else 0)
    if not m.t[mu] + 1 <= j <= top:
        raise IndexOutOfZone(f"index {j} not in zone {mu} (allowing the overhang)")
    slope = -(m.nu[0] + 1) + (3 if mu % 2 == 1 else 0) + m.ct_quarters[mu]
    return (2 if mu % 2 == 0 else -2) + (j - m.t[mu]) * slope + m.ct_quarters[mu - 1]


def conformal_data(m: ModelData, r: int, s: int) -> tuple[Fraction, Fraction]:
    """Exact highest weight Delta_{r,s} and central charge of M(p, p')."""
    if not (1 <= r <= m.p - 1 and 1 <= s <= m.p_prime - 1):
        raise OutOfRange(f"(r, s) = ({r}, {s}) outside the Kac table")
    gap = m.p_prime - m.p
    delta = Fraction((r * m.p_prime - s * m.p) ** 2 - gap * gap,
                     4 * m.p * m.p_prime)
    charge = 1 - Fraction(6 * gap * gap, m.p * m.p_prime)
    return delta, charge


def to_dict(m: ModelData) -> dict:
    """JSON-ready snapshot of the full model: arrays, tables, the b -> r map."""
    return {
        "p": m.p,
        "p_prime": m.p_prime,
        "n": m.n,
        "nu": list(m.nu),
        "t": list(m.t),
        "y": list(m.y),
        "z": list(m.z),
        "string_lengths": {str(j): v for j, v in sorted(m.l.items())},
        "takahashi": {f"{mu},{j}": v for (mu, j), v in sorted(m.takahashi.items())},
        "truncated": {f"{mu},{j}": v for (mu, j), v in sorted(m.truncated.items())},
        "r_map": {str(b): r_of_b(m, b) for b in range(1, m.p_prime)},
    }
