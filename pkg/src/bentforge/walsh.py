"""Binomial Boolean functions f_{a,b}, their Walsh transforms, and bentness.

f_{a,b}(x) = tr_m0(a x^(2^m1 - 1)) + tr_2(b chi_m0(x)),  a in GF(2^m0)*, b in GF(4)*.

Brute-force evaluators work for any a; closed forms expect a reduced
coefficient a in GF(2^m1)* (see :func:`reduce_coefficient`).
"""
from __future__ import annotations

import functools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .field import (
    FieldContext,
    FieldElement,
    FieldError,
    GF4Element,
    ONE4,
    abs_trace_bit,
    is_in_subfield,
)
from .polar import cubic_char, polar_split, unit_group
from .sums import (
    cubic_sum_aa_closed,
    cubic_sum_aa_odd_closed,
    kloosterman,
)
from .vec import LinearMap, exp_table, mul_map, parity, signs, trace_map, trace_mask, word_dtype

log = logging.getLogger(__name__)

SPECTRUM_MAX_DEGREE = 28
# smallest odd m1 for which K = 4 characterizes bentness
ODD_CRITERION_MIN_M1 = 5
_CHUNK = 1 << 21


class ConjectureViolation(RuntimeError):
    """A computed value contradicts a conjectured identity."""


@dataclass(frozen=True)
class BinomialFunction:
    ctx: FieldContext
    a: FieldElement
    b: GF4Element
    # (original a, alpha_tilde, beta) when obtained from reduce_coefficient
    reduction_witness: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.a:
            raise FieldError("a must be nonzero")
        if not self.b:
            raise FieldError("b must be nonzero")
        if self.a.ctx.m0 != self.ctx.m0:
            raise FieldError("a does not live in the function's field")

    @property
    def is_reduced(self) -> bool:
        return is_in_subfield(self.a, self.ctx.m1)

    def require_reduced(self) -> None:
        if not self.is_reduced:
            raise FieldError("closed forms need a in GF(2^m1)*; call reduce_coefficient first")

    def key(self) -> tuple:
        return (self.ctx.m0, self.a.bits, self.b.code)


# -- evaluation ---------------------------------------------------------------

def eval_f_direct(fab: BinomialFunction, x: FieldElement) -> int:
    if not x:
        return 0
    ctx = fab.ctx
    t1 = abs_trace_bit(fab.a * x ** ((1 << ctx.m1) - 1))
    t2 = (fab.b * GF4Element.from_field(x ** (ctx.order // 3))).trace()
    return t1 ^ t2


def f_a(a: FieldElement, u: FieldElement) -> int:
    """Dillon's monomial tr_m0(a u^(2^m1 - 1))."""
    if not u:
        return 0
    return abs_trace_bit(a * u ** ((1 << a.ctx.m1) - 1))


def g_b(b: GF4Element, u: FieldElement) -> int:
    if not u:
        return 0
    return (b * GF4Element.from_field(u ** (u.ctx.order // 3))).trace()


def eval_f_polar(fab: BinomialFunction, x: FieldElement) -> int:
    """f_a(u_1) + g_b(u_nu) from the polar form of x."""
    if not x:
        return 0
    p = polar_split(x)
    return f_a(fab.a, p.u[0]) ^ g_b(fab.b, p.u[-1])


def eval_f(fab: BinomialFunction, x: FieldElement, check: bool = False) -> int:
    v = eval_f_direct(fab, x)
    if check and v != eval_f_polar(fab, x):
        raise AssertionError(f"direct and polar evaluation of f disagree at {x!r}")
    return v


def reduce_coefficient(a: FieldElement, b: GF4Element):
    """a = alpha * a_tilde with alpha in U_1, a_tilde in GF(2^m1)*.

    Returns (a_tilde, beta * b, alpha_tilde) where alpha_tilde is the square root of
    alpha in U_1 and beta = chi_m0(alpha)^(-1), so that
    W_{f_{a,b}}(w) = W_{f_{a_tilde, beta b}}(alpha_tilde w).
    """
    if not a:
        raise FieldError("reduce_coefficient(0)")
    ctx = a.ctx
    q = 1 << ctx.m1
    y = a ** (pow(q + 1, -1, q - 1) * (q + 1))
    alpha = a * y.inverse()
    alpha_t = alpha ** ((q + 2) // 2)
    beta = cubic_char(alpha).inverse()
    return y, beta * b, alpha_t


def reduced(fab: BinomialFunction) -> BinomialFunction:
    if fab.is_reduced:
        return fab
    a_t, b_t, alpha_t = reduce_coefficient(fab.a, fab.b)
    return BinomialFunction(fab.ctx, a_t, b_t, reduction_witness=(fab.a, alpha_t, b_t * fab.b.inverse()))


# -- vectorized evaluation ------------------------------------------------------

def _f_bits_from_logs(fab: BinomialFunction, L: np.ndarray, exp: np.ndarray) -> np.ndarray:
    ctx = fab.ctx
    N = ctx.order
    mono = exp[(L * ((1 << ctx.m1) - 1)) % N]
    t1 = parity(mul_map(fab.a)(mono) & mono.dtype.type(trace_mask(ctx)))
    # chi_m0(g^L) = w^L ; tr_2(b w^L) = 1 iff b w^L != 1
    t2 = ((L + fab.b.log) % 3 != 0).astype(np.int8)
    return t1 ^ t2


def truth_table(fab: BinomialFunction) -> np.ndarray:
    """f(x) for every bitmask x, straight from the definition."""
    ctx = fab.ctx
    if ctx.m0 > SPECTRUM_MAX_DEGREE:
        raise FieldError(f"full truth tables are limited to m0 <= {SPECTRUM_MAX_DEGREE}")
    exp = exp_table(ctx)
    out = np.zeros(1 << ctx.m0, dtype=np.int8)
    for lo in range(0, ctx.order, _CHUNK):
        L = np.arange(lo, min(lo + _CHUNK, ctx.order), dtype=np.int64)
        out[exp[lo: lo + len(L)]] = _f_bits_from_logs(fab, L, exp)
    return out


@functools.lru_cache(maxsize=4)
def _truth_cached(fab_key: tuple, fab: BinomialFunction) -> np.ndarray:
    t = truth_table(fab)
    t.setflags(write=False)
    return t


def _truth(fab: BinomialFunction) -> np.ndarray:
    return _truth_cached(fab.key(), fab)


def f_bits_on_U(fab: BinomialFunction) -> np.ndarray:
    """f_{a,b}(h^j) for every j, from the definition, on U = <g^(2^m_nu - 1)>."""
    ctx = fab.ctx
    ug = unit_group(ctx)
    U = ug.elements
    j = np.arange(ug.order, dtype=np.int64)
    mono = U[(j * ((1 << ctx.m1) - 1)) % ug.order]
    t1 = parity(mul_map(fab.a)(mono) & U.dtype.type(trace_mask(ctx)))
    t2 = ((ug.chi_log(j) + fab.b.log) % 3 != 0).astype(np.int8)
    return t1 ^ t2


def fa_bits_on_U(a: FieldElement) -> np.ndarray:
    """f_a(h^j) for every j."""
    return _fa_bits_cached(a.ctx, a.bits)


@functools.lru_cache(maxsize=8)
def _fa_bits_cached(ctx: FieldContext, bits: int) -> np.ndarray:
    a = ctx(bits)
    ug = unit_group(ctx)
    U = ug.elements
    j = np.arange(ug.order, dtype=np.int64)
    mono = U[(j * ((1 << ctx.m1) - 1)) % ug.order]
    out = parity(mul_map(a)(mono) & U.dtype.type(trace_mask(ctx)))
    out.setflags(write=False)
    return out


# -- brute force Walsh transform -------------------------------------------------

def _dual_vector(ctx: FieldContext, w: int) -> int:
    """v with tr(w x) = parity(x & v) for all x."""
    return sum(ctx.rel_trace_bits(ctx.mul_bits(w, 1 << i), 1) << i for i in range(ctx.m0))


def walsh_bruteforce(fab: BinomialFunction, omega: FieldElement) -> int:
    """sum over all x of (-1)^(f(x) + tr(omega x))."""
    ctx = fab.ctx
    t = _truth(fab)
    xs = np.arange(1 << ctx.m0, dtype=word_dtype(ctx.m0))
    v = xs.dtype.type(_dual_vector(ctx, omega.bits))
    total = 0
    for lo in range(0, len(xs), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        total += int(signs(t[sl] ^ parity(xs[sl] & v)).sum())
    return total


def fwht(values: np.ndarray) -> np.ndarray:
    """In-place unnormalized Walsh-Hadamard transform of a length-2^n array."""
    a = values
    n = len(a)
    h = 1
    while h < n:
        v = a.reshape(-1, 2, h)
        x = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = x - v[:, 1, :]
        h *= 2
    return a


@functools.lru_cache(maxsize=4)
def _dual_permutation(ctx: FieldContext) -> np.ndarray:
    cols = [_dual_vector(ctx, 1 << i) for i in range(ctx.m0)]
    lm = LinearMap(cols, ctx.m0)
    perm = lm(np.arange(1 << ctx.m0, dtype=word_dtype(ctx.m0)))
    perm.setflags(write=False)
    return perm


def walsh_spectrum_bruteforce(fab: BinomialFunction) -> np.ndarray:
    """W(omega) for every omega, indexed by the omega bitmask."""
    ctx = fab.ctx
    if ctx.m0 > SPECTRUM_MAX_DEGREE:
        raise FieldError(f"full spectra are limited to m0 <= {SPECTRUM_MAX_DEGREE}")
    vals = (1 - 2 * _truth(fab).astype(np.int32)).astype(np.int32)
    fwht(vals)
    return vals[_dual_permutation(ctx)]


def is_bent_spectrum(spec: np.ndarray, m1: int) -> bool:
    return bool(np.all(np.abs(spec) == (1 << m1)))


def parseval_ok(spec: np.ndarray, m0: int) -> bool:
    return int((spec.astype(np.int64) ** 2).sum()) == 1 << (2 * m0)


# -- reduction to U ------------------------------------------------------------

def walsh_split(fab: BinomialFunction, omega: FieldElement) -> int:
    """Walsh transform from a sum over U only (|U| = (2^m0-1)/(2^m_nu-1) terms)."""
    ctx = fab.ctx
    ug = unit_group(ctx)
    sg = signs(f_bits_on_U(fab))
    total = int(sg.sum())
    q = 1 << ctx.m_nu
    if not omega:
        return 1 + (q - 1) * total
    z = trace_map(ctx, ctx.m_nu)(mul_map(omega)(ug.elements))
    return 1 - total + q * int(sg[z == 0].sum())


# -- odd case (nu = 1) ---------------------------------------------------------

def _w1(omega: FieldElement) -> FieldElement:
    return polar_split(omega).u[0]


def walsh_odd_closed(fab: BinomialFunction, omega: FieldElement, K: int | None = None,
                     C: int | None = None) -> int:
    ctx = fab.ctx
    if ctx.nu != 1:
        raise FieldError("walsh_odd_closed needs nu = 1")
    if not fab.is_reduced:
        red = reduced(fab)
        return walsh_odd_closed(red, red.reduction_witness[1] * omega, K, C)
    m1 = ctx.m1
    K = kloosterman(fab.a, m1) if K is None else K
    C = cubic_sum_aa_odd_closed(fab.a, m1) if C is None else C
    inner = 1 - K - 4 * C if fab.b == ONE4 else 1 - K + 2 * C
    if inner % 3:
        raise ConjectureViolation(f"odd-case numerator {inner} not divisible by 3")
    if not omega:
        # W(0) = 1 + (2^m1 - 1) * sum over U_1, and that sum is -inner/3
        return 1 - ((1 << m1) - 1) * (inner // 3)
    w1 = _w1(omega)
    return 1 + (1 << m1) * (1 - 2 * eval_f_direct(fab, w1.inverse())) + inner // 3


# -- even case (nu > 1) --------------------------------------------------------

def _require_even(ctx: FieldContext) -> None:
    if ctx.nu < 2:
        raise FieldError("this closed form needs nu > 1")


def sum_over_U_closed(fab: BinomialFunction, K: int | None = None) -> int:
    ctx = fab.ctx
    _require_even(ctx)
    fab.require_reduced()
    K = kloosterman(fab.a) if K is None else K
    num = -((1 << ctx.m1) - 1) * (1 - K)
    den = 3 * ((1 << ctx.m_nu) - 1)
    if num % den:
        raise ConjectureViolation("sum over U is not integral")
    return num // den


def sum_over_U_direct(fab: BinomialFunction) -> int:
    return int(signs(f_bits_on_U(fab)).sum())


def walsh_zero_closed(fab: BinomialFunction, K: int | None = None) -> int:
    ctx = fab.ctx
    _require_even(ctx)
    fab.require_reduced()
    K = kloosterman(fab.a) if K is None else K
    return 1 - ((1 << ctx.m1) - 1) * (1 - K) // 3


def s_nu_direct(fab: BinomialFunction, omega: FieldElement) -> int:
    """S_nu(a, b, omega) by enumerating every u in U."""
    ctx = fab.ctx
    _require_even(ctx)
    fab.require_reduced()
    if not omega:
        raise FieldError("S_nu is defined for omega != 0")
    ug = unit_group(ctx)
    mul = mul_map(omega)
    t_hi = mul.then(trace_map(ctx, ctx.tower[-2]))(ug.elements)
    t_lo = mul.then(trace_map(ctx, ctx.m_nu))(ug.elements)
    chi, u1 = _component_tables(ctx)
    keep = (t_hi != 0) & (t_lo == 0) & ((chi + fab.b.log) % 3 == 0)
    fa = fa_bits_on_U(fab.a)
    return int(signs(fa[u1[keep]]).sum())


@functools.lru_cache(maxsize=4)
def _component_tables(ctx: FieldContext):
    """chi_m0(u_nu) logs and U-indices of u_1, for every h^j."""
    ug = unit_group(ctx)
    j = np.arange(ug.order, dtype=np.int64)
    chi = ug.chi_log(ug.project(j, ctx.nu))
    u1 = ug.project(j, 1)
    chi.setflags(write=False)
    u1.setflags(write=False)
    return chi, u1


def walsh_full_coefficients(ctx: FieldContext) -> tuple[Fraction, Fraction, int]:
    """(c_K, c_f, c_S) with W = 1 + c_K (1 - K) + c_f (-1)^f_a(w1) + c_S S_nu."""
    _require_even(ctx)
    mnu, nu = ctx.m_nu, ctx.nu
    big = 2 * (1 << (((1 << (nu - 1)) - 1) * mnu))
    c_k = -Fraction(big - 1, 3)
    c_f = -Fraction(big * ((1 << (mnu - 1)) - 1), 3)
    return c_k, c_f, 1 << (mnu + 1)


def walsh_from_s_nu(fab: BinomialFunction, omega: FieldElement, s_nu: int, K: int | None = None,
                    w1_inverse: bool = True) -> int:
    """Walsh value at omega != 0 assembled from S_nu.

    ``w1_inverse`` chooses between f_a(w1^-1) and f_a(w1) in the middle term;
    the two agree for a in GF(2^m1).
    """
    ctx = fab.ctx
    fab.require_reduced()
    K = kloosterman(fab.a) if K is None else K
    w1 = _w1(omega)
    fv = f_a(fab.a, w1.inverse() if w1_inverse else w1)
    c_k, c_f, c_s = walsh_full_coefficients(ctx)
    w = 1 + c_k * (1 - K) + c_f * (1 - 2 * fv) + c_s * s_nu
    if w.denominator != 1:
        raise ConjectureViolation(f"non-integral Walsh value {w}")
    return int(w)


def s2_subfield_closed(fab: BinomialFunction, omega: FieldElement, K: int | None = None,
                       C: int | None = None) -> int:
    """S_2 for nu = 2 and omega in GF(2^m1)*."""
    ctx = fab.ctx
    if ctx.nu != 2:
        raise FieldError("s2_subfield_closed needs nu = 2")
    fab.require_reduced()
    if not omega or not is_in_subfield(omega, ctx.m1):
        raise FieldError("omega must be a nonzero element of GF(2^m1)")
    m1, m2 = ctx.m1, ctx.m_nu
    K = kloosterman(fab.a) if K is None else K
    C = cubic_sum_aa_closed(fab.a) if C is None else C
    w2 = polar_split(omega).u[1]
    gamma = fab.b * cubic_char(w2, m1)
    alpha = cubic_char(fab.a, m1)
    c_term = -2 * C if gamma == alpha else C
    p_term = (1 << (m2 + 1)) if gamma == alpha.inverse() else -(1 << m2)
    num = p_term + c_term - K
    if num % 3:
        raise ConjectureViolation(f"S_2 numerator {num} not divisible by 3")
    return num // 3


def gamma_of(fab: BinomialFunction, omega: FieldElement) -> GF4Element:
    """b chi_m1(w2) for nu = 2."""
    return fab.b * cubic_char(polar_split(omega).u[1], fab.ctx.m1)


# -- Conjecture on S_2 ---------------------------------------------------------

@dataclass(frozen=True)
class ConjectureResult:
    """Outcome of fitting the S_2 identity at one omega.

    ``walsh`` is the value implied by substituting the fitted S_2 into the
    S_nu expansion, whose sign is (-1)^(h + f).  ``walsh_product`` is the
    variant with sign (-1)^(h f); the two differ whenever f = 0 and h = 1.
    """
    s2: int
    h_bit: int | None
    consistent: bool
    f_bit: int
    walsh: int | None
    walsh_product: int | None

    def to_dict(self) -> dict:
        return {"s2": self.s2, "h_bit": self.h_bit, "consistent": self.consistent,
                "f_bit": self.f_bit, "walsh": self.walsh, "walsh_product": self.walsh_product}


def solve_h(s2: int, K: int, f_bit: int, m2: int) -> int | None:
    """Solve S2 = (2^(m2+1) - K)/3 - 2 f (2^(m2+1) - 1)/3 - h (-1)^f 2^m2 for h in {0, 1}."""
    rest = Fraction((1 << (m2 + 1)) - K, 3) - Fraction(2 * f_bit * ((1 << (m2 + 1)) - 1), 3) - s2
    h = rest / ((1 - 2 * f_bit) * (1 << m2))
    if h == 0:
        return 0
    if h == 1:
        return 1
    return None


def solve_h_vec(S: np.ndarray, K: int, f: np.ndarray, m2: int):
    """Array version of :func:`solve_h`; returns (h, consistent) with h = 0 where inconsistent."""
    f = np.asarray(f).astype(np.int64)
    rest3 = ((1 << (m2 + 1)) - K) - 2 * f * ((1 << (m2 + 1)) - 1) - 3 * np.asarray(S, dtype=np.int64)
    unit = 3 * (1 - 2 * f) * (1 << m2)
    ok = (rest3 == 0) | (rest3 == unit)
    return (rest3 == unit).astype(np.int8), ok


def conjectured_walsh(h_bit: int, f_bit: int, K: int, m1: int, product: bool = False) -> int:
    e = h_bit & f_bit if product else h_bit ^ f_bit
    return (1 - 2 * e) * (1 << m1) + (4 - K) // 3


def conjecture2_check(fab: BinomialFunction, omega: FieldElement, K: int | None = None,
                      s2: int | None = None) -> ConjectureResult:
    ctx = fab.ctx
    if ctx.nu != 2:
        raise FieldError("the S_2 conjecture concerns nu = 2")
    fab.require_reduced()
    if not omega:
        raise FieldError("omega must be nonzero")
    K = kloosterman(fab.a) if K is None else K
    if K % 3 != 1:
        raise FieldError(f"K = {K} is not 1 mod 3; outside the conjecture's hypothesis")
    s2 = s_nu_direct(fab, omega) if s2 is None else s2
    fv = f_a(fab.a, _w1(omega).inverse())
    h = solve_h(s2, K, fv, ctx.m_nu)
    if h is None:
        return ConjectureResult(s2, None, False, fv, None, None)
    return ConjectureResult(s2, h, True, fv, conjectured_walsh(h, fv, K, ctx.m1),
                            conjectured_walsh(h, fv, K, ctx.m1, product=True))


# -- batched S_nu over many omega ----------------------------------------------

class GaussSumEngine:
    """S_nu(a, b, omega) for many omega at once by enumerating U.

    For omega = h^s * y (y in GF(2^m_nu)*) the traces of u * omega vanish exactly
    when those of u * h^s do, so the u with the right trace pattern are a fixed
    index set shifted by -s.
    """

    def __init__(self, ctx: FieldContext):
        _require_even(ctx)
        self.ctx = ctx
        self.ug = ug = unit_group(ctx)
        U = ug.elements
        t_hi = trace_map(ctx, ctx.tower[-2])(U)
        t_lo = trace_map(ctx, ctx.m_nu)(U)
        self.sel = np.flatnonzero((t_hi != 0) & (t_lo == 0)).astype(np.int64)
        j = np.arange(ug.order, dtype=np.int64)
        self.u1_index = ug.project(j, 1)
        self.chi_nu = ug.chi_log(ug.project(j, ctx.nu)).astype(np.int8)
        # s for every omega given by log: h^s = U-part of g^L
        self._s_of_log1 = ug.unit_index(ctx.g)

    def unit_index(self, omega: FieldElement) -> int:
        return self.ug.unit_index(omega)

    def unit_index_from_log(self, L: np.ndarray) -> np.ndarray:
        n = self.ug.order
        return ((L % n) * self._s_of_log1) % n

    def fa_signs(self, a: FieldElement) -> np.ndarray:
        """(-1)^f_a(u_1(h^j)) for every j."""
        return signs(fa_bits_on_U(a))[self.u1_index].astype(np.int32)

    def s_table(self, fa_signs: np.ndarray, method: str | None = None, block: int = 1024) -> np.ndarray:
        """S_nu at every U-index s, shape (|U|, 3).

        ``gather`` sums the shifted index set directly; ``fft`` computes the
        same cyclic cross-correlation with real FFTs and rounds, refusing any
        entry that is not within 1/4 of an integer.
        """
        n = self.ug.order
        if method is None:
            method = "gather" if n * len(self.sel) <= 1 << 22 else "fft"
        if method == "gather":
            out = np.empty((n, 3), dtype=np.int64)
            for lo in range(0, n, block):
                out[lo: lo + block] = self.s_values(fa_signs, np.arange(lo, min(lo + block, n)))
            return out
        if method != "fft":
            raise ValueError(f"unknown method {method!r}")
        ind = np.zeros(n)
        ind[self.sel] = 1.0
        fa = np.fft.rfft(ind)
        out = np.empty((n, 3), dtype=np.int64)
        for b_log in range(3):
            bc = np.where(self.chi_nu == (-b_log) % 3, fa_signs, 0).astype(np.float64)
            corr = np.fft.irfft(fa * np.conj(np.fft.rfft(bc)), n)
            r = np.rint(corr)
            if np.abs(corr - r).max() > 0.25:
                raise ArithmeticError("FFT correlation lost integrality")
            out[:, b_log] = r.astype(np.int64)
        return out

    def s_values(self, fa_signs: np.ndarray, s: np.ndarray) -> np.ndarray:
        """S_nu for b = 1, w, w^2 (columns) at the U-indices s (rows)."""
        n = self.ug.order
        s = np.asarray(s, dtype=np.int64)
        idx = (self.sel[None, :] - s[:, None]) % n
        vals = fa_signs[idx]
        cls = self.chi_nu[idx]
        out = np.empty((len(s), 3), dtype=np.int64)
        for b_log in range(3):
            # b chi(u_nu) = 1  <=>  chi log = -b log
            out[:, b_log] = np.where(cls == (-b_log) % 3, vals, 0).sum(axis=1)
        return out


# -- Parseval counting relation ---------------------------------------------------

@dataclass
class ParsevalReport:
    """Per-gamma counts of w1 in U_1 whose Walsh sign exponent h + f vanishes.

    ``product_zero_counts`` counts h f = 0 instead, for comparison.
    """
    K: int
    zero_counts: dict
    product_zero_counts: dict
    expected: dict
    weighted_sum: int
    expected_sum: int
    non_integral: bool
    inconsistent: int

    @property
    def ok(self) -> bool:
        return (not self.inconsistent and self.zero_counts == self.expected
                and self.weighted_sum == self.expected_sum)

    def to_dict(self) -> dict:
        return {"K": self.K, "zero_counts": {str(k): v for k, v in self.zero_counts.items()},
                "product_zero_counts": {str(k): v for k, v in self.product_zero_counts.items()},
                "expected": {str(k): v for k, v in self.expected.items()},
                "weighted_sum": self.weighted_sum, "expected_sum": self.expected_sum,
                "non_integral": self.non_integral, "inconsistent": self.inconsistent, "ok": self.ok}


def _gamma_representatives(ctx: FieldContext, b: GF4Element) -> dict:
    """For each gamma, an exponent c with w2 = g2^c in U_2 and b chi_m1(w2) = gamma."""
    n2 = (1 << ctx.tower[2]) + 1
    g2 = ctx.gen_power(ctx.order // n2)
    reps = {b * cubic_char(g2 ** c, ctx.m1): c for c in range(3)}
    assert len(reps) == 3
    return reps


def parseval_count_check(fab: BinomialFunction, K: int | None = None,
                         engine: GaussSumEngine | None = None,
                         s_table: np.ndarray | None = None) -> ParsevalReport:
    ctx = fab.ctx
    if ctx.nu != 2:
        raise FieldError("the counting relation concerns nu = 2")
    fab.require_reduced()
    K = kloosterman(fab.a) if K is None else K
    if K % 3 != 1:
        raise FieldError(f"K = {K} is outside the conjecture's hypothesis")
    engine = engine or GaussSumEngine(ctx)
    ug = engine.ug
    n = ug.order
    m1, m2 = ctx.m1, ctx.m_nu
    n1, n2 = (1 << m1) + 1, (1 << m2) + 1
    s_g = ug.unit_index(ctx.g)
    # U-indices of w1 = g1^k and of g2
    w1_idx = np.arange(n1, dtype=np.int64) * ((ctx.order // n1) * s_g % n) % n
    g2_idx = (ctx.order // n2) * s_g % n
    f_bits = fa_bits_on_U(fab.a)[(-w1_idx) % n]
    counts, pcounts, inconsistent, weighted = {}, {}, 0, 0
    for gamma, c in sorted(_gamma_representatives(ctx, fab.b).items()):
        s = (w1_idx + c * g2_idx) % n
        rows = engine.s_values(engine.fa_signs(fab.a), s) if s_table is None else s_table[s]
        h, ok = solve_h_vec(rows[:, fab.b.log], K, f_bits, m2)
        inconsistent += int((~ok).sum())
        e = (h ^ f_bits)[ok]
        counts[gamma.code] = int((e == 0).sum())
        pcounts[gamma.code] = int(((h & f_bits)[ok] == 0).sum())
        weighted += int((1 - 2 * e.astype(np.int64)).sum())
    excess = Fraction(K - 4)
    exp1 = (1 << (m1 - 1)) + Fraction(5, 6) * excess + 3
    exp2 = (1 << (m1 - 1)) - Fraction(1, 6) * excess
    non_integral = exp1.denominator != 1 or exp2.denominator != 1
    expected = {g.code: (exp1 if g == ONE4 else exp2) for g in _gamma_representatives(ctx, fab.b)}
    expected = {k: (int(v) if v.denominator == 1 else float(v)) for k, v in sorted(expected.items())}
    # each (w1, gamma) stands for (2^m1 - 1)/3 values of omega; total must be W(0) - 1
    weight = ((1 << m1) - 1) // 3
    return ParsevalReport(K, counts, pcounts, expected, weighted * weight,
                          walsh_zero_closed(fab, K) - 1, non_integral, inconsistent)


# -- bentness ------------------------------------------------------------------

@dataclass(frozen=True)
class BentVerdict:
    bent: bool
    method: str
    K: int
    criterion: bool
    spectrum_bent: bool | None
    agree: bool | None

    def to_dict(self) -> dict:
        return {"bent": self.bent, "method": self.method, "K": self.K,
                "kloosterman_criterion": self.criterion, "spectrum_bent": self.spectrum_bent,
                "agree": self.agree}


def bent_certify(fab: BinomialFunction, spectrum: bool | None = None) -> BentVerdict:
    """Bentness of f_{a,b}.

    For nu = 1 and m1 >= 5 the criterion K = 4 is a theorem.  At m1 = 3 the
    bound on K is too weak to rule out K = -4, C(a,a) = -4, which does give bent
    functions, so the spectrum decides.  For nu > 1 the criterion is only
    conjectured, so the spectrum is computed too (default when m0 <= 28) and any
    disagreement is reported and logged as an error.
    """
    ctx = fab.ctx
    red = reduced(fab)
    K = kloosterman(red.a)
    crit = K == 4
    proved = ctx.nu == 1 and ctx.m1 >= ODD_CRITERION_MIN_M1
    if spectrum is None:
        spectrum = not proved and ctx.m0 <= SPECTRUM_MAX_DEGREE
    if spectrum and ctx.m0 > SPECTRUM_MAX_DEGREE:
        raise FieldError(f"spectrum verdict requested above m0 = {SPECTRUM_MAX_DEGREE}")
    spec_bent = is_bent_spectrum(walsh_spectrum_bruteforce(fab), ctx.m1) if spectrum else None
    agree = None if spec_bent is None else spec_bent == crit
    if agree is False and (proved or ctx.nu > 1):
        log.error("bentness disagreement for a=%r b=%s: spectrum %s, K=%d", fab.a, fab.b, spec_bent, K)
    if proved:
        return BentVerdict(crit, "kloosterman", K, crit, spec_bent, agree)
    if spec_bent is None:
        return BentVerdict(crit, "kloosterman", K, crit, None, None)
    return BentVerdict(spec_bent, "spectrum", K, crit, spec_bent, agree)


# -- spectrum export ------------------------------------------------------------

def export_spectrum(fab: BinomialFunction, path, spectrum: np.ndarray | None = None) -> dict:
    """Write W(omega) as little-endian int32 in omega-bitmask order plus a JSON sidecar."""
    spec = walsh_spectrum_bruteforce(fab) if spectrum is None else spectrum
    path = Path(path)
    spec.astype("<i4").tofile(path)
    meta = {
        "context": fab.ctx.to_dict(),
        "a_hex": hex(fab.a.bits),
        "b": str(fab.b),
        "count": int(len(spec)),
        "dtype": "int32-le",
        "order": "omega-bitmask",
        "sum_of_squares": int((spec.astype(np.int64) ** 2).sum()),
        "parseval_ok": parseval_ok(spec, fab.ctx.m0),
        "bent": is_bent_spectrum(spec, fab.ctx.m1),
    }
    path.with_name(path.name + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def load_spectrum(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    spec = np.fromfile(path, dtype="<i4")
    if len(spec) != meta["count"] or int((spec.astype(np.int64) ** 2).sum()) != meta["sum_of_squares"]:
        raise ValueError(f"{path} does not match its sidecar checksum")
    return spec, meta
