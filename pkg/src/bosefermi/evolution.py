"""Column-by-column construction of the polynomial tables.

The engine starts from two seed columns of lattice sums and pushes an
adjacent pair of L-indexed tables across the strip one column at a
time.  The transfer rule applied at each column is read off the b -> r
staircase.  The finished table is checked against the bosonic side at
every column and both parity classes, against the standing waypoint
combinations at Takahashi columns, and against the closing relation at
the far edge of the strip.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import model as _model
from .bosonic import B_tilde
from .fermionic import (
    build_spec,
    e_span,
    f_poly,
    f_tilde_poly,
    f_value,
    unit_e,
    vadd,
    vneg,
    zero_u,
)
from .model import ModelData, OutOfRange, c_exponent, c_t, phi_difference, r_of_b
from .qlaurent import ONE, ZERO, QPoly, first_difference, q_pow


class DepthExhausted(RuntimeError):
    """The L budget ran out before the walk reached its last column."""


class ClosingViolation(AssertionError):
    """The far edge of a finished table fails the closing relation."""


class PropositionViolation(AssertionError):
    """A staged flow missed its predicted endpoint pair."""


class TheoremViolation(AssertionError):
    """A full-strip flow missed a waypoint or endpoint prediction."""


class CoverageViolation(AssertionError):
    """An evolved column disagrees with its bosonic counterpart."""


class StepKind(enum.Enum):
    PLATEAU = "plateau"
    UP_DIAGONAL = "up-diagonal"
    DOWN_DIAGONAL = "down-diagonal"


def _kind_at(m: ModelData, c: int) -> StepKind:
    """Transfer rule for the step whose middle column is c.

    The staircase never climbs at two neighbouring columns, so the two
    diagonal readings can never fire together.
    """
    up = r_of_b(m, c + 1) == r_of_b(m, c) + 1
    down = r_of_b(m, c) == r_of_b(m, c - 1) + 1
    if up and down:
        raise _model.ModelError(
            f"b -> r climbs twice in a row around column {c}")
    if up:
        return StepKind.UP_DIAGONAL
    if down:
        return StepKind.DOWN_DIAGONAL
    return StepKind.PLATEAU


@dataclass(frozen=True)
class FlowPath:
    """The full sequence of transfer rules across the strip.

    steps[i] is the rule applied at middle column i + 2; there are
    p' - 3 of them, carrying a pair from columns (1, 2) to
    (p' - 2, p' - 1).
    """

    p: int
    p_prime: int
    steps: tuple[StepKind, ...]

    def kind_at(self, b: int) -> StepKind:
        if not 2 <= b <= self.p_prime - 2:
            raise OutOfRange(f"no step has middle column {b}")
        return self.steps[b - 2]


def flow_path(m: ModelData) -> FlowPath:
    kinds = tuple(_kind_at(m, c) for c in range(2, m.p_prime - 1))
    return FlowPath(m.p, m.p_prime, kinds)


def step(O1, O2, kind: StepKind) -> list[QPoly]:
    """Combine the tables of two adjacent columns into the next one.

    Each output entry consumes the middle table one row higher, so the
    result is one row shorter than O2.
    """
    depth = min(len(O1), len(O2) - 1)
    if depth <= 0:
        raise DepthExhausted(
            f"step needs the middle column one row deeper "
            f"(lengths {len(O1)}, {len(O2)})")
    out = []
    for L in range(depth):
        if kind is StepKind.UP_DIAGONAL:
            val = (O2[L + 1] - O1[L]).shift(-2 * L)
        elif kind is StepKind.DOWN_DIAGONAL:
            val = O2[L + 1] - O1[L].shift(2 * (L + 1))
        else:
            # at L = 0 the trailing term carries the factor 1 - q^0 = 0
            val = O2[L + 1] - O1[L]
            if L >= 1:
                val = val + O2[L - 1] - O2[L - 1].shift(4 * L)
        out.append(val)
    return out


@dataclass(frozen=True)
class EvolutionTable:
    """All columns F(L, b) of one finished walk.

    values maps (b, L) to the polynomial at that cell; column b holds
    rows 0..L_max(b), shrinking by one per step taken past column 2.
    """

    model: ModelData
    s: int
    parity: int
    budget: int
    values: dict[tuple[int, int], QPoly] = field(repr=False)

    def L_max(self, b: int) -> int:
        if not 1 <= b <= self.model.p_prime - 1:
            raise OutOfRange(f"column {b} outside the strip")
        return self.budget - max(b - 2, 0)

    def value(self, b: int, L: int) -> QPoly:
        return self.values[(b, L)]

    def column(self, b: int) -> list[QPoly]:
        return [self.values[(b, L)] for L in range(self.L_max(b) + 1)]


def seed_vectors(m: ModelData, parity: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Defect vectors of the two seed columns for one parity class."""
    if parity not in (0, 1):
        raise ValueError(f"parity must be 0 or 1, got {parity}")
    u1 = vneg(e_span(m, 1, m.n))
    if parity:
        u1 = vadd(u1, unit_e(m, m.num_types + 1))
    return u1, vadd(unit_e(m, 1), u1)


def evolve(m: ModelData, s: int, parity: int, L_max: int,
           *, perturb_seed: tuple[int, int] | None = None) -> EvolutionTable:
    """Walk the seed pair across the whole strip.

    Seeds are tabulated L_max + (p' - 3) rows deep so that the far
    column still reaches L_max.  perturb_seed=(b, L) adds 1 to one seed
    cell; it exists purely as a negative control for the verifiers.
    """
    if L_max < 0:
        raise ValueError("L_max must be nonnegative")
    pp = m.p_prime
    budget = L_max + (pp - 3)
    u1, u2 = seed_vectors(m, parity)
    spec1 = build_spec(m, s, u1)
    spec2 = build_spec(m, s, u2)
    cols: dict[int, list[QPoly]] = {
        1: [f_poly(m, spec1, L) for L in range(budget + 1)],
        2: [f_poly(m, spec2, L) for L in range(budget + 1)],
    }
    if perturb_seed is not None:
        pb, pl = perturb_seed
        if pb not in (1, 2) or not 0 <= pl <= budget:
            raise ValueError(f"perturbation {perturb_seed} is not a seed cell")
        cols[pb][pl] = cols[pb][pl] + ONE
    prev, cur = cols[1], cols[2]
    for c in range(2, pp - 1):
        nxt = step(prev, cur, _kind_at(m, c))
        cols[c + 1] = nxt
        prev, cur = cur, nxt
    values = {(b, L): poly
              for b, col in cols.items() for L, poly in enumerate(col)}
    return EvolutionTable(m, s, parity, budget, values)


def verify_closing(table: EvolutionTable, *, strict: bool = False) -> dict:
    """The far column must reproduce its neighbour one row lower."""
    m = table.model
    last = m.p_prime - 1
    checked = 0
    failures: list[dict] = []
    for L in range(1, table.L_max(last) + 1):
        checked += 1
        diff = first_difference(table.value(last, L), table.value(last - 1, L - 1))
        if diff is not None:
            failures.append({"check": f"closing b={last}", "L": L,
                             "difference": diff})
    report = {"model": [m.p, m.p_prime], "s": table.s,
              "parity": table.parity, "checked": checked,
              "passed": checked - len(failures), "failures": failures}
    if strict and failures:
        raise ClosingViolation(f"{len(failures)} closing checks failed; "
                               f"first: {failures[0]}")
    return report


# -- waypoint combinations ----------------------------------------------

def _mix(m: ModelData, s: int, kind: int, mu: int,
         u: tuple[int, ...], L: int) -> QPoly:
    """The three standing combinations sitting next to milestone columns.

    kind -1 carries L-dependent amplitudes and a plain tail; kinds 0
    and 1 carry constant amplitudes and a twisted tail.  u may only
    populate slots above t_mu.
    """
    if kind not in (-1, 0, 1):
        raise ValueError(f"mix kind must be -1, 0 or 1, got {kind}")
    nu0 = m.nu[0]
    if kind == -1:
        total = f_value(m, s, vadd(unit_e(m, nu0 - 1),
                                   vneg(unit_e(m, nu0)), u), L)
    else:
        total = f_tilde_poly(m, s, L, kind, u)
    for i in range(2, mu + 1):
        amp = -(nu0 - (1 if i % 2 else 0))
        if kind == -1:
            amp += 2 * L
        arg = vadd(vneg(e_span(m, 1, i)), unit_e(m, m.t[i] - 1), u)
        if kind == 1:
            arg = vadd(unit_e(m, 1), arg)
        total = total + q_pow(amp) * f_value(m, s, arg, L)
    return total


def _check_u_support(m: ModelData, mu: int, u: tuple[int, ...]) -> tuple[int, ...]:
    u = tuple(u)
    if len(u) != m.num_types + 1:
        raise ValueError(f"auxiliary vector must have length {m.num_types + 1}")
    if any(u[i] for i in range(m.t[mu])):
        raise ValueError(f"auxiliary vector must vanish at slots 1..{m.t[mu]}")
    return u


_MIN_MU = {0: 1, -1: 2, 1: 3}


def verify_propositions(m: ModelData, which: int, mu: int, a: int,
                        u_prime: tuple[int, ...] | None = None,
                        L_max: int = 8, *, s: int = 1,
                        strict: bool = False) -> dict:
    """Check one staged flow against its predicted endpoint pair.

    which=1 starts from two plain sums and must arrive at the kind -1
    combination next to a plain sum; which=2 starts from the kind 0/1
    combinations and must arrive at a twisted sum next to zero.  The
    offset a shifts where along the strip the rules are read."""
    if which not in (1, 2):
        raise ValueError(f"which must be 1 or 2, got {which}")
    if a not in (-1, 0, 1):
        raise ValueError(f"a must be -1, 0 or 1, got {a}")
    if not _MIN_MU[a] <= mu <= m.n:
        raise OutOfRange(f"zone {mu} outside the admissible range for a={a}")
    u_prime = _check_u_support(m, mu, u_prime if u_prime is not None
                               else zero_u(m))
    x = m.y_val(mu) - 2
    base = {0: 1, 1: 1 + m.y_val(mu - 1), -1: 1 + m.y_val(mu)}[a]
    if base + x + 1 > m.p_prime - 1:
        raise OutOfRange(f"flow from column {base} leaves the strip")
    budget = L_max + x
    if which == 1:
        u_lhs = vadd(vneg(e_span(m, 1, mu)), u_prime)
        o1 = [f_value(m, s, u_lhs, L) for L in range(budget + 1)]
        o2 = [f_value(m, s, vadd(unit_e(m, 1), u_lhs), L)
              for L in range(budget + 1)]
    else:
        o1 = [_mix(m, s, 0, mu, u_prime, L) for L in range(budget + 1)]
        o2 = [_mix(m, s, 1, mu, u_prime, L) for L in range(budget + 1)]
    for c in range(base + 1, base + x + 1):
        o1, o2 = o2, step(o1, o2, _kind_at(m, c))

    sign = -1 if mu % 2 else 1
    if which == 1:
        f4 = c_t(m, mu) + 2 * a * sign

        def want(L):
            amp = q_pow(f4)
            return (amp * _mix(m, s, -1, mu, u_prime, L),
                    amp * f_value(m, s, u_prime, L))
    else:
        f4 = c_t(m, mu) - 2 * (0 if mu % 2 else 1) + 2 * a * sign
        u_tilt = vadd(vneg(e_span(m, 2, mu)), u_prime)

        def want(L):
            return (q_pow(f4) * f_tilde_poly(m, s, L, m.nu[0] - 1, u_tilt),
                    ZERO)

    checked = 0
    failures: list[dict] = []
    for L in range(L_max + 1):
        w1, w2 = want(L)
        for tag, got, exp in (("first", o1[L], w1), ("second", o2[L], w2)):
            checked += 1
            diff = first_difference(got, exp)
            if diff is not None:
                failures.append({"check": f"which={which} mu={mu} a={a} {tag}",
                                 "L": L, "difference": diff})
    report = {"model": [m.p, m.p_prime], "s": s, "which": which, "mu": mu,
              "a": a, "factor_quarters": f4, "checked": checked,
              "passed": checked - len(failures), "failures": failures}
    if strict and failures:
        raise PropositionViolation(f"{len(failures)} endpoint checks failed; "
                                   f"first: {failures[0]}")
    return report


def _waypoints(m: ModelData):
    """All (mu, j) whose Takahashi column carries a predicted pair."""
    for mu in range(1, m.n + 1):
        lo = 1 + (1 if mu == 1 else 0) + m.t[mu]
        hi = m.t[mu + 1] + (1 if mu == m.n else 0)
        for j in range(lo, hi + 1):
            yield mu, j


def verify_theorems(m: ModelData, s: int, L_max: int = 8,
                    *, strict: bool = False) -> dict:
    """Check evolved tables at every waypoint column and at the far end.

    For each parity class the table must show, at the column of each
    admissible Takahashi length, the predicted pair built from the
    standing combinations, two rows later its successor pair, and at
    the last two columns the parity-swapped seeds times a fixed power
    of q."""
    pp = m.p_prime
    d = m.num_types
    checked = 0
    failures: list[dict] = []
    skipped: list[dict] = []
    waypoint_columns = []

    def cmp(tag, parity, L, got, exp):
        nonlocal checked
        checked += 1
        diff = first_difference(got, exp)
        if diff is not None:
            failures.append({"check": tag, "parity": parity, "L": L,
                             "difference": diff})

    for parity in (0, 1):
        table = evolve(m, s, parity, L_max)
        ptail = unit_e(m, d + 1) if parity else zero_u(m)
        for mu, j in _waypoints(m):
            b = m.takahashi[(mu, j)]
            if parity == 0:
                waypoint_columns.append({"mu": mu, "j": j, "b": b})
            c4 = c_exponent(m, mu, j)
            sign = 1 if mu % 2 == 0 else -1
            # the top slot only matters mod 2, so fold a doubled entry away
            u_pair = vadd(unit_e(m, j), vneg(e_span(m, mu + 1, m.n)), ptail)
            u_pair = u_pair[:d] + (u_pair[d] % 2,)
            mix_mu = mu - (1 if j == 1 + m.t[mu] else 0)
            u_extra = vadd(unit_e(m, j - 1), vneg(e_span(m, 1, m.n)), ptail)
            for L in range(L_max + 1):
                amp = 2 * L - (m.nu[0] - (0 if mu % 2 else 1))
                cmp(f"waypoint b={b} left", parity, L, table.value(b - 1, L),
                    q_pow(c4) * (_mix(m, s, -1, mix_mu, u_pair, L)
                                 + q_pow(amp) * f_value(m, s, u_extra, L)))
                cmp(f"waypoint b={b} right", parity, L, table.value(b, L),
                    q_pow(c4) * f_value(m, s, u_pair, L))
            # two steps past the waypoint
            g4 = (-(m.nu[0] + 1) + (3 if mu % 2 else 0)
                  + sign * (1 if m.n > mu and j == m.t[mu + 1] else 0))
            if 1 + j > d + 1:
                plain = None          # slot overflow: both plain terms vanish
            else:
                arg = vadd(unit_e(m, 1 + j), vneg(e_span(m, 1, m.n)), ptail)
                if m.n > mu and j == m.t[mu + 1]:
                    arg = vadd(unit_e(m, m.t[mu + 1]), arg)
                plain = arg
            for L in range(L_max + 1):
                exp1 = _mix(m, s, 0, mu, u_pair, L)
                exp2 = _mix(m, s, 1, mu, u_pair, L)
                if plain is not None:
                    exp1 = exp1 + q_pow(g4) * f_value(m, s, plain, L)
                    exp2 = exp2 + q_pow(g4) * f_value(
                        m, s, vadd(unit_e(m, 1), plain), L)
                cmp(f"two-step b={b} left", parity, L, table.value(b + 1, L),
                    q_pow(c4) * exp1)
                if b + 2 <= pp - 1:
                    cmp(f"two-step b={b} right", parity, L,
                        table.value(b + 2, L), q_pow(c4) * exp2)
            if b + 2 > pp - 1:
                skipped.append({"check": f"two-step b={b} right",
                                "parity": parity,
                                "reason": "second column leaves the strip"})
        # far edge: parity-swapped seeds times the fixed factor
        f4 = (c_exponent(m, m.n, m.t[m.n + 1] + 1) + c_t(m, m.n)
              - 2 * (0 if m.n % 2 else 1))
        u_last, u_prev = seed_vectors(m, 1 - parity)
        for L in range(L_max + 1):
            cmp("endpoint left", parity, L, table.value(pp - 2, L),
                q_pow(f4) * f_value(m, s, u_prev, L))
            cmp("endpoint right", parity, L, table.value(pp - 1, L),
                q_pow(f4) * f_value(m, s, u_last, L))

    report = {"model": [m.p, m.p_prime], "s": s,
              "waypoints": waypoint_columns, "checked": checked,
              "passed": checked - len(failures), "failures": failures,
              "skipped": skipped}
    if strict and failures:
        raise TheoremViolation(f"{len(failures)} waypoint checks failed; "
                               f"first: {failures[0]}")
    return report


def coverage_normalization(m: ModelData, s: int, parity: int) -> int:
    """Power of q (in quarters) relating a column to its bosonic side."""
    mu_s, j_s = _model.s_index(m, s)
    c4s = c_exponent(m, mu_s, j_s)
    if parity == 0:
        return c4s
    sbar = m.p_prime - s
    swap4 = (c_exponent(m, m.n, m.t[m.n + 1] + 1) + c_t(m, m.n)
             - 2 * (0 if m.n % 2 else 1))
    phi4 = 2 * (-phi_difference(m, r_of_b(m, s), 1, s)
                + phi_difference(m, r_of_b(m, sbar), 1, sbar)
                - phi_difference(m, m.p - 1, 1, sbar))
    return swap4 + c4s + phi4


def verify_full_coverage(m: ModelData, s: int, parity: int, L_max: int = 10,
                         *, table: EvolutionTable | None = None,
                         strict: bool = False) -> dict:
    """Every evolved column must equal its rescaled bosonic partner.

    Parity class 0 pairs with the label s itself; class 1 pairs with
    p' - s.  Rows whose parities disagree must vanish on both sides,
    which the same comparison enforces."""
    if table is None:
        table = evolve(m, s, parity, L_max)
    s_eff = s if parity == 0 else m.p_prime - s
    norm4 = coverage_normalization(m, s, parity)
    checked = 0
    failures: list[dict] = []
    for b in range(1, m.p_prime):
        for L in range(min(L_max, table.L_max(b)) + 1):
            checked += 1
            want = q_pow(norm4) * B_tilde(m, s_eff, L, b)
            diff = first_difference(table.value(b, L), want)
            if diff is not None:
                failures.append({"check": f"coverage b={b}", "L": L,
                                 "parity": parity, "difference": diff})
    report = {"model": [m.p, m.p_prime], "s": s, "parity": parity,
              "normalization_quarters": norm4, "checked": checked,
              "passed": checked - len(failures), "failures": failures}
    if strict and failures:
        raise CoverageViolation(f"{len(failures)} coverage checks failed; "
                                f"first: {failures[0]}")
    return report
