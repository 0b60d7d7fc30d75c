"""Alternating-sign polynomials with prescribed hook differences.

B_poly is the two-family sum over a certified finite window; B_tilde
removes an L-independent power of q so that the three-term recursions
lose their explicit s dependence.  The recursion checker proves, value
by value, that every branch closes exactly, and character_B produces
the truncated character series the polynomials converge to.
"""

from __future__ import annotations

from math import isqrt

from .qlaurent import ONE, ZERO, QPoly, first_difference, q_pow, truncated_inverse
from .qbinomial import gauss, q_pochhammer
from .model import ModelData, decompose_b, phi_difference, r_of_b


class RecursionViolation(AssertionError):
    """An exact polynomial recursion failed."""


def _phi_signed(m: ModelData, x: int, y: int, s: int) -> int:
    """phi_{x,s} - phi_{y,s}, either order."""
    if x >= y:
        return phi_difference(m, x, y, s)
    return -phi_difference(m, y, x, s)


def B_poly(m: ModelData, r: int, s: int, L: int, b: int) -> QPoly:
    """The pair of theta-weighted binomial sums at (r, s), length L,
    endpoint b.  Zero whenever L + s - b is odd, and for L < |s - b|."""
    p, pp = m.p, m.p_prime
    if (L + s - b) % 2:
        return ZERO
    J = (L + s + b) // (2 * pp) + 2
    acc = ZERO
    for j in range(-J - 1, J + 2):
        t1 = gauss(L, (L + s - b) // 2 - j * pp)
        if t1:
            t1 = q_pow(4 * j * (j * p * pp + r * pp - s * p)) * t1
        t2 = gauss(L, (L - s - b) // 2 - j * pp)
        if t2:
            t2 = q_pow(4 * (j * p + r) * (j * pp + s)) * t2
        if t1.is_zero() and t2.is_zero():
            continue
        if abs(j) > J:
            # the window bound is part of the contract, not a heuristic
            raise ArithmeticError(
                f"summation window violated at j={j} for "
                f"B_{r},{s}(L={L}, b={b}) in M({p},{pp})")
        acc = acc + t1 - t2
    return acc


def B_tilde(m: ModelData, s: int, L: int, b: int) -> QPoly:
    """B at the companion label r(b), rescaled by the L-independent
    power q^(phi_{r(b),s} - phi_{r(s),s})/2."""
    rb = r_of_b(m, b)
    rs = r_of_b(m, s)
    shift = 2 * _phi_signed(m, rb, rs, s)
    return q_pow(shift) * B_poly(m, rb, s, L, b)


def _record(failures: list, tag: str, L: int, lhs: QPoly, rhs: QPoly) -> None:
    failures.append({"check": tag, "L": L,
                     "difference": first_difference(lhs, rhs)})


def verify_bosonic_recursions(m: ModelData, s: int, *, L_max: int = 12,
                              strict: bool = False) -> dict:
    """Exact check of every length-lowering recursion: the three-branch
    relation on the interior, the closing relations at both ends, the
    final plateau window, and the label-shifting one-step relations for
    unrelated (r, b) on a sampled grid."""
    p, pp = m.p, m.p_prime
    nu0 = m.nu[0]
    checked = 0
    failures: list[dict] = []

    def cmp(tag, L, lhs, rhs):
        nonlocal checked
        checked += 1
        if lhs != rhs:
            _record(failures, tag, L, lhs, rhs)

    def B(r, L, b):
        return B_poly(m, r, s, L, b)

    for b in range(2, pp - nu0):
        dec = decompose_b(m, b)
        mu1, j0 = dec.terms[0]
        r = r_of_b(m, b)
        for L in range(2, L_max + 1):
            if mu1 == 0 and j0 >= 1:
                cmp(f"interior plateau b={b}", L, B(r, L, b),
                    B(r, L - 1, b + 1) + B(r, L - 1, b - 1)
                    + (q_pow(4 * (L - 1)) - ONE) * B(r, L - 2, b))
            elif mu1 >= 1:
                up = 2 * (L - 1) + 2 * phi_difference(m, r + 1, r, s)
                cmp(f"interior up b={b}", L, B(r, L, b),
                    q_pow(up) * B(r + 1, L - 1, b + 1) + B(r, L - 1, b - 1))
            else:
                down = 2 * L - 2 * phi_difference(m, r, r - 1, s)
                cmp(f"interior down b={b}", L, B(r, L, b),
                    B(r, L - 1, b + 1) + q_pow(down) * B(r - 1, L - 1, b - 1))

    for L in range(2, L_max + 1):
        cmp("closing b=1", L, B(1, L, 1), B(1, L - 1, 2))
        for b in range(pp - nu0, pp - 1):
            cmp(f"final plateau b={b}", L, B(p - 1, L, b),
                B(p - 1, L - 1, b + 1) + B(p - 1, L - 1, b - 1)
                + (q_pow(4 * (L - 1)) - ONE) * B(p - 1, L - 2, b))
        cmp("closing b=p'-1", L, B(p - 1, L, pp - 1), B(p - 1, L - 1, pp - 2))

    # the label-shifting relations hold with b and r unrelated
    for r in range(1, p + 1):
        for b in range(2, pp - 1):
            for L in range(2, L_max + 1, 3):
                cmp(f"free pair up r={r} b={b}", L, B(r, L, b),
                    B(r, L - 1, b - 1)
                    + q_pow(2 * (L + b - s)) * B(r + 1, L - 1, b + 1))
                cmp(f"free pair down r={r} b={b}", L, B(r, L, b),
                    q_pow(2 * (L - b + s)) * B(r - 1, L - 1, b - 1)
                    + B(r, L - 1, b + 1))
                cmp(f"free pair depth-2 r={r} b={b}", L, B(r, L, b),
                    B(r, L - 1, b - 1) + B(r, L - 1, b + 1)
                    + (q_pow(4 * (L - 1)) - ONE) * B(r, L - 2, b))

    report = {"checked": checked, "passed": checked - len(failures),
              "failures": failures}
    if strict and failures:
        raise RecursionViolation(f"{len(failures)} recursion checks failed; "
                                 f"first: {failures[0]}")
    return report


def character_B(m: ModelData, r: int, s: int, max_deg: int) -> QPoly:
    """Truncation to q^max_deg of the normalized character series: the
    bilateral theta difference divided by the Euler product."""
    if max_deg < 0:
        raise ValueError("max_deg must be >= 0")
    p, pp = m.p, m.p_prime
    num = ZERO

    def e1(j):
        return j * (j * p * pp + r * pp - s * p)

    def e2(j):
        return (j * pp + s) * (j * p + r)

    j = 0
    while True:
        keep = False
        for jj in (j, -j) if j else (0,):
            if e1(jj) <= max_deg:
                num = num + q_pow(4 * e1(jj))
                keep = True
            if e2(jj) <= max_deg:
                num = num - q_pow(4 * e2(jj))
                keep = True
        if not keep and j > max(p, pp):
            break
        j += 1

    inv = truncated_inverse(q_pochhammer(max_deg + 1), 4 * max_deg)
    return (num * inv).truncate(4 * max_deg)
