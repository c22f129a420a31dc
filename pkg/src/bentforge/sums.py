"""Exponential sums over the subfield GF(2^m1): Kloosterman sums, cubic sums and
their restrictions to cosets of the cubes.

Every closed form has a direct-enumeration twin (``*_direct``); the public
entry points take ``check=True`` to run both and raise on disagreement.
"""
from __future__ import annotations

import functools
from fractions import Fraction

import numpy as np

from .field import (
    FieldContext,
    FieldElement,
    FieldError,
    GF4Element,
    ONE4,
    GF4_NONZERO,
    abs_trace_bit,
    is_in_subfield,
    rel_trace,
)
from .polar import additive_char, cube_root, cubic_char, subfield_elements, subfield_inverses
from .vec import mul_map, parity, signs, subgroup_elements, trace_mask


class ClosedFormMismatch(AssertionError):
    """A closed form disagreed with direct enumeration."""


def _require_sub(a: FieldElement, m: int) -> None:
    if a.ctx.m0 % m:
        raise FieldError(f"{m} does not divide {a.ctx.m0}")
    if not is_in_subfield(a, m):
        raise FieldError(f"{a!r} is not in GF(2^{m})")


def _checked(closed: int, direct: int, what: str) -> int:
    if closed != direct:
        raise ClosedFormMismatch(f"{what}: closed form {closed} != enumeration {direct}")
    return closed


def _tr_signs(ctx: FieldContext, values: np.ndarray, m: int) -> np.ndarray:
    mask = values.dtype.type(trace_mask(ctx, m))
    return signs(parity(values & mask))


@functools.lru_cache(maxsize=16)
def _subfield_cubes(ctx: FieldContext, m: int) -> np.ndarray:
    star = subgroup_elements(ctx, (1 << m) - 1)
    n = len(star)
    return np.concatenate([np.zeros(1, dtype=star.dtype), star[(3 * np.arange(n)) % n]])


def _chi_logs(m: int) -> np.ndarray:
    """log_w chi_m(z^k) = k mod 3 for the star part of subfield_elements."""
    return np.arange((1 << m) - 1) % 3


# -- Kloosterman sums -------------------------------------------------------

def kloosterman(a: FieldElement, m1: int | None = None) -> int:
    """K_m1(a) = sum over x in GF(2^m1) of (-1)^tr(a x + 1/x), with 1/0 = 0."""
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    xs = subfield_elements(ctx, m1)
    inv = subfield_inverses(ctx, m1)
    return int(_tr_signs(ctx, mul_map(a)(xs) ^ inv, m1).sum())


def kloosterman_mod3_class(a: FieldElement, m1: int | None = None) -> int:
    return kloosterman(a, m1) % 3


def hasse_weil_bound(m1: int) -> float:
    return 2.0 ** (m1 / 2 + 1)


# -- cubic sums -------------------------------------------------------------

def cubic_sum(a: FieldElement, b: FieldElement, m1: int | None = None) -> int:
    """C_m1(a, b) = sum over x in GF(2^m1) of (-1)^tr(a x^3 + b x)."""
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    _require_sub(b, m1)
    xs = subfield_elements(ctx, m1)
    cubes = _subfield_cubes(ctx, m1)
    return int(_tr_signs(ctx, mul_map(a)(cubes) ^ mul_map(b)(xs), m1).sum())


def half_trace(x: FieldElement, m1: int) -> FieldElement:
    """tr from GF(2^m1) down to GF(4)."""
    return rel_trace(x, 2, m1)


def _u0_cube_branch(alpha: FieldElement, m2: int, gamma: FieldElement) -> FieldElement:
    acc = gamma
    for i in range((m2 - 3) // 2 + 1):
        acc = acc + alpha ** (4 ** (2 * i + 2))
    return acc


def _u0_noncube_branch(a: FieldElement, m1: int) -> FieldElement:
    m2 = m1 // 2
    acc = a.ctx.zero
    for i in range(m2):
        acc = acc + a ** (4 ** i) * a ** ((4 ** i - 1) // 3)
    return cubic_char(a, m1).embed(a.ctx) * acc


def cubic_sum_aa_closed(a: FieldElement, m1: int | None = None, check: bool = False) -> int:
    """Carlitz's value of C_m1(a, a) for even m1 = 2 m2.

    The explicit solution of u^4 + u = alpha^4 only exists for odd m2; for even
    m2 the same equation is solved by linear algebra and the overall sign
    picks up the (-1)^(m2+1) factor familiar from C(a, 0).
    """
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    if m1 % 2:
        raise FieldError(f"cubic_sum_aa_closed needs even m1, got {m1}")
    if not a:
        raise FieldError("cubic_sum_aa_closed(0)")
    m2 = m1 // 2
    sign = (-1) ** (m2 + 1)
    alpha = cube_root(a, m1)
    if alpha is not None:
        if half_trace(alpha, m1):
            value = 0
        else:
            if m2 % 2:
                u0 = _u0_cube_branch(alpha, m2, ctx.zero)
            else:
                u0 = solve_linear(lambda u: u ** 4 + u, alpha ** 4, m1)
            value = sign * (1 << (m2 + 1)) * additive_char(u0 ** 3, m1)
            if check and m2 % 2:
                # result must not depend on the GF(4) shift
                for gamma in GF4_NONZERO:
                    alt = _u0_cube_branch(alpha, m2, gamma.embed(ctx))
                    if alt ** 4 + alt != alpha ** 4:
                        raise ClosedFormMismatch("u0 does not solve u^4 + u = alpha^4")
                    if additive_char(alt ** 3, m1) != additive_char(u0 ** 3, m1):
                        raise ClosedFormMismatch("u0 shift changed the cubic sum")
    else:
        u0 = _u0_noncube_branch(a, m1)
        if check and u0 ** 4 + u0 / a != ctx.one:
            raise ClosedFormMismatch("u0 does not solve u^4 + u/a = 1")
        value = -sign * (1 << m2) * additive_char(a * u0 ** 3, m1)
    if check:
        _checked(value, cubic_sum(a, a, m1), "C(a,a)")
    return value


def _jacobi_two(m: int) -> int:
    return 1 if m % 8 in (1, 7) else -1


def cubic_sum_aa_odd_closed(a: FieldElement, m1: int | None = None, check: bool = False) -> int:
    """C_m1(a, a) for odd m1.

    Zero iff the (unique) cube root of a has trace 0.  Otherwise a translation
    x -> x + c reduces it to C(1, 1) = (2/m1) 2^((m1+1)/2).
    """
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    if m1 % 2 == 0:
        raise FieldError(f"cubic_sum_aa_odd_closed needs odd m1, got {m1}")
    if not a:
        raise FieldError("cubic_sum_aa_odd_closed(0)")
    alpha = cube_root(a, m1)
    if abs_trace_bit(alpha, m1) == 0:
        value = 0
    else:
        # C(a, a) = C(1, beta) with beta = alpha^2; solve c^4 + c = beta^2 + 1
        beta = alpha * alpha
        c = solve_linear(lambda x: x ** 4 + x, beta * beta + 1, m1)
        value = additive_char(c ** 3 + beta * c, m1) * _jacobi_two(m1) * (1 << ((m1 + 1) // 2))
    if check:
        _checked(value, cubic_sum(a, a, m1), "C(a,a) odd")
    return value


def solve_linear(fn, rhs: FieldElement, m: int) -> FieldElement:
    """Some x in GF(2^m) with fn(x) = rhs, for a GF(2)-linear fn on GF(2^m)."""
    ctx = rhs.ctx
    z = ctx.subfield_generator(m)
    basis = [z ** i for i in range(m)]
    pivots: dict[int, tuple[int, int]] = {}
    for idx, e in enumerate(basis):
        r, combo = fn(e).bits, 1 << idx
        while r:
            top = r.bit_length() - 1
            if top not in pivots:
                pivots[top] = (r, combo)
                break
            pr, pc = pivots[top]
            r, combo = r ^ pr, combo ^ pc
    t, combo = rhs.bits, 0
    while t:
        top = t.bit_length() - 1
        if top not in pivots:
            raise FieldError("linear equation has no solution in the subfield")
        pr, pc = pivots[top]
        t, combo = t ^ pr, combo ^ pc
    out = ctx.zero
    for idx, e in enumerate(basis):
        if combo >> idx & 1:
            out = out + e
    return out


def cubic_sum_a0_closed(a: FieldElement, m1: int | None = None, check: bool = False) -> int:
    """Carlitz's value of C_m1(a, 0) for even m1 = 2 m2."""
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    if m1 % 2:
        raise FieldError(f"cubic_sum_a0_closed needs even m1, got {m1}")
    if not a:
        raise FieldError("cubic_sum_a0_closed(0)")
    m2 = m1 // 2
    if cubic_char(a, m1) == ONE4:
        value = (-1) ** (m2 + 1) * (1 << (m2 + 1))
    else:
        value = (-1) ** m2 * (1 << m2)
    if check:
        _checked(value, cubic_sum(a, ctx.zero, m1), "C(a,0)")
    return value


# -- sums restricted to a coset of the cubes ---------------------------------

def _coset_selector(ctx: FieldContext, m1: int, gamma: GF4Element) -> np.ndarray:
    if not gamma:
        raise FieldError("gamma must be nonzero")
    return _chi_logs(m1) == gamma.log


def _nu2_precondition(a: FieldElement, m1: int) -> None:
    if m1 % 2 or (m1 // 2) % 2 == 0:
        raise FieldError(f"coset sums need m1 = 2 * odd, got {m1}")
    if not a:
        raise FieldError("a must be nonzero")


def coset_cubic_direct(a: FieldElement, gamma: GF4Element, m1: int | None = None) -> int:
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    star = subgroup_elements(ctx, (1 << m1) - 1)
    sel = _coset_selector(ctx, m1, gamma)
    return int(_tr_signs(ctx, mul_map(a)(star[sel]), m1).sum())


def coset_cubic(a: FieldElement, gamma: GF4Element, m1: int | None = None, check: bool = False) -> int:
    """Sum of (-1)^tr(a x) over x in GF(2^m1)* with chi_m1(x) = gamma."""
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    _nu2_precondition(a, m1)
    if not gamma:
        raise FieldError("gamma must be nonzero")
    m2 = m1 // 2
    alpha = cubic_char(a, m1)
    if gamma == alpha.inverse():
        value = ((1 << (m2 + 1)) - 1) // 3
    else:
        value = (-(1 << m2) - 1) // 3
    if check:
        _checked(value, coset_cubic_direct(a, gamma, m1), "coset cubic")
    return value


def coset_kloosterman_direct(a: FieldElement, gamma: GF4Element, m1: int | None = None) -> int:
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    star = subgroup_elements(ctx, (1 << m1) - 1)
    n = len(star)
    inv = star[(-np.arange(n)) % n]
    sel = _coset_selector(ctx, m1, gamma)
    return int(_tr_signs(ctx, mul_map(a)(star[sel]) ^ inv[sel], m1).sum())


def coset_kloosterman(a: FieldElement, gamma: GF4Element, m1: int | None = None, check: bool = False) -> int:
    """Sum of (-1)^tr(a x + 1/x) over x in GF(2^m1)* with chi_m1(x) = gamma."""
    ctx = a.ctx
    m1 = ctx.m1 if m1 is None else m1
    _require_sub(a, m1)
    _nu2_precondition(a, m1)
    if not gamma:
        raise FieldError("gamma must be nonzero")
    alpha = cubic_char(a, m1)
    c = cubic_sum_aa_closed(a, m1, check=check)
    k = kloosterman(a, m1)
    num = 2 * c + k - 1 if gamma == alpha else -c + k - 1
    if num % 3:
        raise ClosedFormMismatch(f"coset Kloosterman numerator {num} not divisible by 3")
    value = num // 3
    if check:
        _checked(value, coset_kloosterman_direct(a, gamma, m1), "coset Kloosterman")
    return value


# -- the sum-of-products identity ----------------------------------------------

def _as_int_degree(m) -> int:
    m = Fraction(m)
    if m <= 0 or m.denominator != 1:
        raise FieldError(f"Sigma(m, k) is only integral for positive integer m, got {m}")
    return int(m)


def sigma_direct(m, k: int) -> int:
    m = _as_int_degree(m)
    total = 0
    for i in range(2, k):
        term = 1
        for j in range(2, i):
            term *= 1 << ((1 << (k - j)) * m)
        for j in range(i + 1, k + 1):
            term *= (1 << ((1 << (k - j)) * m)) + 1
        total += term
    return total


def sigma_closed(m, k: int) -> int:
    m = _as_int_degree(m)
    num = (1 << (2 * ((1 << (k - 2)) - 1) * m)) - 1
    den = (1 << m) - 1
    if num % den:
        raise ClosedFormMismatch("closed form of Sigma is not integral")
    return num // den


def sigma_identity(m, k: int) -> int:
    """Sigma(m, k) from the double product-sum, checked against its closed form."""
    if not 3 <= k <= 6:
        raise FieldError(f"k must be in [3, 6], got {k}")
    return _checked(sigma_closed(m, k), sigma_direct(m, k), f"Sigma({m},{k})")
