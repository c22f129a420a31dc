"""Vectorized helpers: GF(2)-linear maps on bitmask arrays and power tables.

Multiplication by a fixed element and every relative trace are GF(2)-linear on
the polynomial-basis bitmask, so they are applied to whole numpy arrays through
byte-sliced lookup tables.
"""
from __future__ import annotations

import functools
import sys

import numpy as np

from .field import FieldContext, FieldElement


def word_dtype(m0: int):
    return np.uint32 if m0 <= 32 else np.uint64


def parity(x: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(x) & 1).astype(np.int8)


def signs(bits: np.ndarray) -> np.ndarray:
    """(-1)^bits as int64."""
    return 1 - 2 * bits.astype(np.int64)


class LinearMap:
    """A GF(2)-linear map on m0-bit words, given by the images of the basis vectors."""

    def __init__(self, columns: list[int], m0: int):
        self.m0 = m0
        self.columns = list(columns)
        dt = word_dtype(max(m0, max(columns).bit_length() if columns else 1))
        nbytes = (m0 + 7) // 8
        tables = np.zeros((nbytes, 256), dtype=dt)
        for k in range(nbytes):
            t = tables[k]
            for j in range(8):
                i = 8 * k + j
                col = columns[i] if i < m0 else 0
                t[1 << j: 2 << j] = t[: 1 << j] ^ dt(col)
        self.tables = tables
        self.dtype = dt

    @classmethod
    def from_function(cls, fn, m0: int) -> LinearMap:
        return cls([fn(1 << i) for i in range(m0)], m0)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.dtype.kind == "u" and x.dtype.byteorder in "=<|" and sys.byteorder == "little":
            b = np.ascontiguousarray(x).view(np.uint8).reshape(x.shape + (x.dtype.itemsize,))
            out = self.tables[0][b[..., 0]]
            for k in range(1, min(len(self.tables), x.dtype.itemsize)):
                out ^= self.tables[k][b[..., k]]
            return out
        out = self.tables[0][x & 0xFF]
        for k in range(1, len(self.tables)):
            out ^= self.tables[k][(x >> (8 * k)) & 0xFF]
        return out

    def scalar(self, x: int) -> int:
        acc = 0
        for i, c in enumerate(self.columns):
            if x >> i & 1:
                acc ^= c
        return acc

    def then(self, other: LinearMap) -> LinearMap:
        """other o self."""
        return LinearMap([other.scalar(c) for c in self.columns], self.m0)


def mul_map(c: FieldElement) -> LinearMap:
    ctx = c.ctx
    return LinearMap.from_function(lambda b: ctx.mul_bits(c.bits, b), ctx.m0)


@functools.lru_cache(maxsize=None)
def trace_map(ctx: FieldContext, target: int, source: int | None = None) -> LinearMap:
    return LinearMap.from_function(lambda b: ctx.rel_trace_bits(b, target, source), ctx.m0)


@functools.lru_cache(maxsize=None)
def trace_mask(ctx: FieldContext, degree: int | None = None) -> int:
    """Bitmask v with tr(x) = parity(x & v); meaningful on elements of GF(2^degree)."""
    return sum((ctx.rel_trace_bits(1 << i, 1, degree) & 1) << i for i in range(ctx.m0))


def powers(h: FieldElement, n: int) -> np.ndarray:
    """[h^0, h^1, ..., h^(n-1)] as a word array, built by repeated doubling."""
    ctx = h.ctx
    out = np.empty(n, dtype=word_dtype(ctx.m0))
    out[0] = 1
    filled = 1
    while filled < n:
        step = min(filled, n - filled)
        out[filled: filled + step] = mul_map(h ** filled)(out[:step])
        filled += step
    return out


@functools.lru_cache(maxsize=4)
def exp_table(ctx: FieldContext) -> np.ndarray:
    """g^L for L in [0, 2^m0 - 1)."""
    return powers(ctx.g, ctx.order)


@functools.lru_cache(maxsize=8)
def subgroup_elements(ctx: FieldContext, n: int) -> np.ndarray:
    """The cyclic subgroup of order n as increasing powers of g^((2^m0-1)/n)."""
    if ctx.order % n:
        raise ValueError(f"{n} does not divide 2^{ctx.m0}-1")
    arr = powers(ctx.gen_power(ctx.order // n), n)
    arr.setflags(write=False)
    return arr
