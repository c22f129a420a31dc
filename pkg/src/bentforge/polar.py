"""Multiplicative structure of GF(2^m0)*: polar decomposition, unit circles,
Hilbert-90 trace sets, the Dickson polynomial D3 and the two characters.

The tower m_0 > m_1 > ... > m_nu gives
GF(2^m0)* = U_1 x ... x U_nu x GF(2^m_nu)*, where U_i is the group of
(2^m_i + 1)-th roots of unity inside GF(2^m_{i-1})*.  Every factor is a
subgroup of one cyclic group, so the decomposition is computed with
exponents rather than discrete logarithms.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .field import (
    FieldContext,
    FieldElement,
    FieldError,
    GF4Element,
    abs_trace_bit,
    is_in_subfield,
)
from .vec import subgroup_elements

TRACE_SET_MAX_DEGREE = 24


@dataclass(frozen=True)
class PolarForm:
    u: tuple[FieldElement, ...]
    y: FieldElement

    def product(self) -> FieldElement:
        acc = self.y
        for ui in self.u:
            acc = acc * ui
        return acc

    def unit_part(self) -> FieldElement:
        acc = self.y.ctx.one
        for ui in self.u:
            acc = acc * ui
        return acc


@functools.lru_cache(maxsize=None)
def _split_exponents(ctx: FieldContext) -> tuple[int, ...]:
    exps = []
    for i in range(ctx.nu):
        q = 1 << ctx.tower[i + 1]
        # q + 1 and q - 1 are coprime (both odd, differ by 2)
        exps.append(pow(q + 1, -1, q - 1) * (q + 1))
    return tuple(exps)


def polar_split(x: FieldElement) -> PolarForm:
    """Unique x = u_1 ... u_nu * y with u_i in U_i and y in GF(2^m_nu)*."""
    if not x:
        raise FieldError("polar decomposition of 0")
    ctx = x.ctx
    us = []
    cur = x
    for e in _split_exponents(ctx):
        y = cur ** e
        us.append(cur * y.inverse())
        cur = y
    return PolarForm(tuple(us), cur)


def enumerate_U(ctx: FieldContext, level: int):
    """All elements of U_level, as increasing powers of g^((2^m0-1)/(2^m_level+1))."""
    if not 1 <= level <= ctx.nu:
        raise FieldError(f"level must be in [1, {ctx.nu}], got {level}")
    n = (1 << ctx.tower[level]) + 1
    gi = ctx.gen_power(ctx.order // n)
    u = ctx.one
    for _ in range(n):
        yield u
        u = u * gi


def ht90_image(u: FieldElement) -> FieldElement:
    if not u:
        raise FieldError("ht90_image(0)")
    return u + u.inverse()


def dickson3(x: FieldElement) -> FieldElement:
    return x * x * x + x


def additive_char(x: FieldElement, degree: int | None = None) -> int:
    """(-1)^tr(x), the trace taken from GF(2^degree) (default the whole field)."""
    return 1 - 2 * abs_trace_bit(x, degree)


def cubic_char(x: FieldElement, degree: int | None = None) -> GF4Element:
    """x^((2^degree - 1)/3) for x in GF(2^degree)*, degree even."""
    ctx = x.ctx
    degree = ctx.m0 if degree is None else degree
    if degree % 2 or ctx.m0 % degree:
        raise FieldError(f"cubic character needs an even subfield degree, got {degree}")
    if not x:
        raise FieldError("cubic character of 0")
    if not is_in_subfield(x, degree):
        raise FieldError(f"{x!r} is not in GF(2^{degree})")
    return GF4Element.from_field(x ** (((1 << degree) - 1) // 3))


class TraceSet:
    """T^j_m = {x in GF(2^m) : tr_m(x^{-1}) = j}, with 0^{-1} = 0."""

    def __init__(self, ctx: FieldContext, degree: int, j: int):
        if ctx.m0 % degree:
            raise FieldError(f"{degree} does not divide {ctx.m0}")
        self.ctx, self.level, self.j = ctx, degree, j

    def __contains__(self, x: FieldElement) -> bool:
        return is_in_subfield(x, self.level) and abs_trace_bit(x.inverse(), self.level) == self.j

    @functools.cached_property
    def members(self) -> np.ndarray:
        if self.level > TRACE_SET_MAX_DEGREE:
            raise FieldError(f"trace sets are only materialized for degree <= {TRACE_SET_MAX_DEGREE}")
        from .vec import parity, trace_mask

        elems = subfield_elements(self.ctx, self.level)
        inv = subfield_inverses(self.ctx, self.level)
        bits = parity(inv & self.ctx_dtype(trace_mask(self.ctx, self.level)))
        return elems[bits == self.j]

    def ctx_dtype(self, v):
        return subfield_elements(self.ctx, self.level).dtype.type(v)

    def __len__(self) -> int:
        return len(self.members)


@functools.lru_cache(maxsize=16)
def subfield_elements(ctx: FieldContext, degree: int) -> np.ndarray:
    """GF(2^degree) as [0, z^0, z^1, ..., z^(2^degree - 2)] with z its primitive element."""
    star = subgroup_elements(ctx, (1 << degree) - 1)
    out = np.concatenate([np.zeros(1, dtype=star.dtype), star])
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=16)
def subfield_inverses(ctx: FieldContext, degree: int) -> np.ndarray:
    """Inverses aligned with :func:`subfield_elements` (0 maps to 0)."""
    star = subgroup_elements(ctx, (1 << degree) - 1)
    n = len(star)
    inv = star[(-np.arange(n)) % n]
    out = np.concatenate([np.zeros(1, dtype=star.dtype), inv])
    out.setflags(write=False)
    return out


class UnitGroup:
    """The cyclic group U = U_1 x ... x U_nu of order (2^m0-1)/(2^m_nu-1).

    Elements are indexed by j for h^j, h = g^(2^m_nu - 1), so component
    projections and the cubic character are plain integer arithmetic on j.
    """

    def __init__(self, ctx: FieldContext):
        self.ctx = ctx
        self.q_nu = (1 << ctx.m_nu) - 1
        self.order = ctx.order // self.q_nu
        self.level_orders = [(1 << m) + 1 for m in ctx.tower[1:]]
        # CRT idempotents of Z_order for each U_i
        self.idempotents = []
        for n in self.level_orders:
            rest = self.order // n
            self.idempotents.append(rest * pow(rest, -1, n) % self.order)

    @functools.cached_property
    def elements(self) -> np.ndarray:
        return subgroup_elements(self.ctx, self.order)

    @functools.cached_property
    def _sorted(self):
        order = np.argsort(self.elements, kind="stable")
        return self.elements[order], order

    def index_of(self, u: FieldElement) -> int:
        keys, order = self._sorted
        pos = int(np.searchsorted(keys, u.bits))
        if pos >= len(keys) or int(keys[pos]) != u.bits:
            raise FieldError(f"{u!r} is not in U")
        return int(order[pos])

    def unit_index(self, x: FieldElement) -> int:
        """Index s with h^s the U-part of x."""
        return self.index_of(polar_split(x).unit_part())

    def project(self, j, level: int):
        """Index of the U_level component of h^j (works on ints and int arrays)."""
        n = self.level_orders[level - 1]
        return ((j % n) * self.idempotents[level - 1]) % self.order

    def chi_log(self, j):
        """log_w of the cubic character chi_{m0}(h^j)."""
        return (self.q_nu % 3) * (j % 3) % 3


@functools.lru_cache(maxsize=8)
def unit_group(ctx: FieldContext) -> UnitGroup:
    return UnitGroup(ctx)


def cube_root(a: FieldElement, degree: int) -> FieldElement | None:
    """Some cube root of a inside GF(2^degree), or None if a is not a cube there."""
    ctx = a.ctx
    if not a:
        return a
    n = (1 << degree) - 1
    if n % 3:
        return a ** pow(3, -1, n)
    e, t = 0, n
    while t % 3 == 0:
        e, t = e + 1, t // 3
    if a ** (n // 3) != ctx.one:
        return None
    d = pow(3, -1, t) if t > 1 else 0
    x0 = a ** d
    s = x0 ** 3 / a  # lies in the 3-Sylow subgroup
    gen = ctx.subfield_generator(degree) ** t  # order 3^e
    target = s.inverse()
    acc = ctx.one
    for k in range(3 ** e):
        if acc == target:
            # k is a multiple of 3 because target is a cube in the 3-Sylow subgroup
            return x0 * gen ** (k // 3)
        acc = acc * gen
    raise FieldError("cube root search failed")  # unreachable for cubes
