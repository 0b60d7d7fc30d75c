"""Gaussian binomials and the two extended q-binomial branches.

The extended binomial [top choose bottom] comes in two flavours that
differ only in which entry plays the role of m in the value

    (q^(n+1))_m / (q)_m      (m >= 0, n any integer; 0 if m < 0)

branch 0:  n = bottom, m = top - bottom   (natural when n_j are independent)
branch 1:  m = bottom, n = top - bottom   (natural when m_j are independent)

For n < 0 the numerator picks up factors (1 - q^(<=0)); the value is 0
exactly when 0 lands in the product window (-m <= n <= -1) and is a
genuine Laurent polynomial with negative exponents when n <= -m-1.
"""

from __future__ import annotations

from .qlaurent import ONE, ZERO, QPoly, q_pow

_poch_cache: dict[int, QPoly] = {0: ONE}
_val_cache: dict[tuple[int, int], QPoly] = {}


def q_pochhammer(m: int) -> QPoly:
    """(q)_m for m >= 0."""
    if m < 0:
        raise ValueError("pochhammer index must be >= 0")
    out = _poch_cache.get(m)
    if out is None:
        hi = max(_poch_cache)
        out = _poch_cache[hi]
        for j in range(hi + 1, m + 1):
            out = out * (ONE - q_pow(4 * j))
            _poch_cache[j] = out
    return out


def _exact_div(num: QPoly, den: QPoly) -> QPoly:
    """Exact division num/den where den has constant term +-1 (min exp 0)."""
    if num.is_zero():
        return ZERO
    shift_q = num.min_exponent()
    num_s = num.shift(-shift_q)
    d0 = den.coeff(0)
    den_rest = [(e, c) for e, c in den.items() if e != 0]
    top = num_s.max_exponent() - den.max_exponent()
    quot: dict[int, int] = {}
    for k in range(0, top + 1):
        acc = num_s.coeff(k)
        for e, c in den_rest:
            if e <= k:
                acc -= c * quot.get(k - e, 0)
        if acc % d0:
            raise ArithmeticError("non-exact polynomial division")
        v = acc // d0
        if v:
            quot[k] = v
    q = QPoly(quot).shift(shift_q)
    if q * den != num:
        raise ArithmeticError("non-exact polynomial division")
    return q


def _value(n: int, m: int) -> QPoly:
    """(q^(n+1))_m / (q)_m as an exact Laurent polynomial."""
    if m < 0:
        return ZERO
    if -m <= n <= -1:
        return ZERO
    key = (n, m)
    out = _val_cache.get(key)
    if out is None:
        num = ONE
        for j in range(m):
            num = num * (ONE - q_pow(4 * (n + 1 + j)))
        out = _exact_div(num, q_pochhammer(m))
        _val_cache[key] = out
    return out


def gauss(top: int, bottom: int) -> QPoly:
    """Classical Gaussian binomial [top choose bottom]; 0 unless 0 <= bottom <= top."""
    if bottom < 0 or top - bottom < 0:
        return ZERO
    m, n = bottom, top - bottom
    if m > n:
        m, n = n, m  # symmetric for nonnegative entries; smaller m is cheaper
    return _value(n, m)


def ext_binom(top: int, bottom: int, branch: int) -> QPoly:
    """Extended q-binomial [top choose bottom] on branch 0 or 1."""
    if branch == 0:
        return _value(bottom, top - bottom)
    if branch == 1:
        return _value(top - bottom, bottom)
    raise ValueError("branch must be 0 or 1")
