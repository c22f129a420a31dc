"""Binary extension fields GF(2^m0) for even m0, with their 2-adic subfield tower.

Elements are bit-packed polynomials over GF(2) in the basis 1, t, ..., t^(m0-1)
where t is a root of the context modulus.  All arithmetic fits in a machine
word because m0 <= 40.
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass

MIN_DEGREE = 4
MAX_DEGREE = 40

# Prime factorizations of 2^m - 1 for every even m in [4, 40].
ORDER_FACTORS: dict[int, dict[int, int]] = {
    4: {3: 1, 5: 1},
    6: {3: 2, 7: 1},
    8: {3: 1, 5: 1, 17: 1},
    10: {3: 1, 11: 1, 31: 1},
    12: {3: 2, 5: 1, 7: 1, 13: 1},
    14: {3: 1, 43: 1, 127: 1},
    16: {3: 1, 5: 1, 17: 1, 257: 1},
    18: {3: 3, 7: 1, 19: 1, 73: 1},
    20: {3: 1, 5: 2, 11: 1, 31: 1, 41: 1},
    22: {3: 1, 23: 1, 89: 1, 683: 1},
    24: {3: 2, 5: 1, 7: 1, 13: 1, 17: 1, 241: 1},
    26: {3: 1, 2731: 1, 8191: 1},
    28: {3: 1, 5: 1, 29: 1, 43: 1, 113: 1, 127: 1},
    30: {3: 2, 7: 1, 11: 1, 31: 1, 151: 1, 331: 1},
    32: {3: 1, 5: 1, 17: 1, 257: 1, 65537: 1},
    34: {3: 1, 43691: 1, 131071: 1},
    36: {3: 3, 5: 1, 7: 1, 13: 1, 19: 1, 37: 1, 73: 1, 109: 1},
    38: {3: 1, 174763: 1, 524287: 1},
    40: {3: 1, 5: 2, 11: 1, 17: 1, 31: 1, 41: 1, 61681: 1},
}

LOG_TABLE_MAX_DEGREE = 24


class FieldError(ValueError):
    pass


class ContextMismatch(FieldError):
    pass


def _prime_divisors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over GF(2) as int bitmasks ---------------------------------

def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2)[x] bitmasks."""
    if a < b:
        a, b = b, a
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _poly_sqr_iter(x: int, k: int, m: int) -> int:
    for _ in range(k):
        x = poly_mod(clmul(x, x), m)
    return x


def is_irreducible(poly: int) -> bool:
    """Rabin's test for a GF(2)[x] polynomial given as a bitmask."""
    n = poly.bit_length() - 1
    if n < 1:
        return False
    if n == 1:
        return True
    if not poly & 1:
        return False
    x = 0b10
    if _poly_sqr_iter(x, n, poly) != poly_mod(x, poly):
        return False
    for p in _prime_divisors(n):
        h = _poly_sqr_iter(x, n // p, poly) ^ x
        if poly_gcd(poly, h) != 1:
            return False
    return True


def smallest_irreducible(degree: int) -> int:
    for poly in range((1 << degree) | 1, 1 << (degree + 1), 2):
        if is_irreducible(poly):
            return poly
    raise FieldError(f"no irreducible polynomial of degree {degree}")  # unreachable


def two_adic_valuation(n: int) -> int:
    return (n & -n).bit_length() - 1


# -- field context ----------------------------------------------------------

class FieldContext:
    """One extension GF(2^m0) together with its tower m0 > m1 > ... > m_nu.

    Build through :func:`context_new`, which caches one instance per degree.
    """

    def __init__(self, m0: int, log_tables: bool = False):
        if m0 % 2 or not MIN_DEGREE <= m0 <= MAX_DEGREE:
            raise FieldError(f"m0 must be even with {MIN_DEGREE} <= m0 <= {MAX_DEGREE}, got {m0}")
        if log_tables and m0 > LOG_TABLE_MAX_DEGREE:
            raise FieldError(f"log tables are limited to m0 <= {LOG_TABLE_MAX_DEGREE}")
        self.m0 = m0
        self.nu = two_adic_valuation(m0)
        self.tower = [m0 >> i for i in range(self.nu + 1)]
        self.order = (1 << m0) - 1
        self.order_factors = dict(ORDER_FACTORS[m0])
        self.subgroup_orders = [(1 << m) + 1 for m in self.tower[1:]]
        self.modulus = smallest_irreducible(m0)
        self._mask = (1 << m0) - 1
        self._exp = self._log = None
        self.generator_bits = self._find_generator()
        if log_tables:
            self._build_log_tables()

    # Pickling goes through the cache so worker processes share one instance.
    def __reduce__(self):
        return (context_new, (self.m0, self._exp is not None))

    def __repr__(self) -> str:
        return f"FieldContext(m0={self.m0}, modulus={self.modulus:#x})"

    @property
    def m1(self) -> int:
        return self.tower[1]

    @property
    def m_nu(self) -> int:
        return self.tower[-1]

    # raw bitmask arithmetic
    def mul_bits(self, a: int, b: int) -> int:
        if self._log is not None:
            if a == 0 or b == 0:
                return 0
            return self._exp[(self._log[a] + self._log[b]) % self.order]
        return poly_mod(clmul(a, b), self.modulus)

    def sqr_bits(self, a: int) -> int:
        return self.mul_bits(a, a)

    def pow_bits(self, a: int, e: int) -> int:
        if e < 0:
            a, e = self.inv_bits(a), -e
        if a == 0:
            return 0 if e else 1
        if self._log is not None:
            return self._exp[(self._log[a] * e) % self.order]
        e %= self.order
        r = 1
        while e:
            if e & 1:
                r = self.mul_bits(r, a)
            a = self.mul_bits(a, a)
            e >>= 1
        return r

    def inv_bits(self, a: int) -> int:
        # 0^{-1} = 0
        if a == 0:
            return 0
        return self.pow_bits(a, self.order - 1)

    def frobenius_bits(self, a: int, k: int = 1) -> int:
        """a^(2^k)."""
        for _ in range(k % self.m0):
            a = self.mul_bits(a, a)
        return a

    def rel_trace_bits(self, a: int, target: int, source: int | None = None) -> int:
        source = self.m0 if source is None else source
        if source % target or self.m0 % source:
            raise FieldError(f"no trace from degree {source} down to {target} inside GF(2^{self.m0})")
        acc, y = 0, a
        for _ in range(source // target):
            acc ^= y
            y = self.frobenius_bits(y, target)
        return acc

    def element_order(self, a: int) -> int:
        if a == 0:
            raise FieldError("zero has no multiplicative order")
        n = self.order
        for p, k in self.order_factors.items():
            for _ in range(k):
                if self.pow_bits(a, n // p) == 1:
                    n //= p
                else:
                    break
        return n

    def _find_generator(self) -> int:
        n = self.order
        for cand in range(2, 1 << self.m0):
            if all(self.pow_bits(cand, n // p) != 1 for p in self.order_factors):
                return cand
        raise FieldError("no primitive element found")  # unreachable

    def _build_log_tables(self) -> None:
        exp = [0] * self.order
        log = [0] * (1 << self.m0)
        x = 1
        for i in range(self.order):
            exp[i] = x
            log[x] = i
            x = poly_mod(clmul(x, self.generator_bits), self.modulus)
        self._exp, self._log = exp, log

    # element construction
    def __call__(self, bits: int) -> FieldElement:
        return FieldElement(bits, self)

    @property
    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    @property
    def one(self) -> FieldElement:
        return FieldElement(1, self)

    @property
    def g(self) -> FieldElement:
        return FieldElement(self.generator_bits, self)

    def gen_power(self, k: int) -> FieldElement:
        return FieldElement(self.pow_bits(self.generator_bits, k), self)

    def subfield_generator(self, degree: int) -> FieldElement:
        """Primitive element of GF(2^degree): g^((2^m0-1)/(2^degree-1))."""
        if self.m0 % degree:
            raise FieldError(f"{degree} does not divide {self.m0}")
        return self.gen_power(self.order // ((1 << degree) - 1))

    @functools.cached_property
    def omega(self) -> FieldElement:
        """The canonical primitive cube root of unity g^((2^m0-1)/3)."""
        return self.gen_power(self.order // 3)

    def parse(self, token: str, base: FieldElement | None = None) -> FieldElement:
        """Parse ``0x1a3``, a decimal bitmask, or ``g^17`` (power of ``base``, default g)."""
        token = token.strip()
        m = re.fullmatch(r"[gz]\^(-?\d+)", token)
        if m:
            b = self.g if base is None else base
            return b ** int(m.group(1))
        try:
            bits = int(token, 0)
        except ValueError:
            raise FieldError(f"cannot parse field element {token!r}") from None
        if not 0 <= bits <= self._mask:
            raise FieldError(f"{token} does not fit in GF(2^{self.m0})")
        return FieldElement(bits, self)

    def to_dict(self) -> dict:
        return {"m0": self.m0, "modulus_hex": hex(self.modulus), "generator_hex": hex(self.generator_bits)}

    def describe(self) -> dict:
        d = self.to_dict()
        d.update(nu=self.nu, tower=self.tower,
                 order_factors={str(p): k for p, k in self.order_factors.items()},
                 subgroup_orders=self.subgroup_orders)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> FieldContext:
        ctx = context_new(int(d["m0"]))
        if int(d["modulus_hex"], 16) != ctx.modulus or int(d["generator_hex"], 16) != ctx.generator_bits:
            raise FieldError("serialized context does not match the canonical context for this degree")
        return ctx


def context_new(m0: int, log_tables: bool = False) -> FieldContext:
    """The shared canonical context for degree m0."""
    return _context(int(m0), bool(log_tables))


@functools.lru_cache(maxsize=None)
def _context(m0: int, log_tables: bool) -> FieldContext:
    return FieldContext(m0, log_tables)


class FieldElement:
    __slots__ = ("bits", "ctx")

    def __init__(self, bits: int, ctx: FieldContext):
        if not 0 <= bits < (1 << ctx.m0):
            raise FieldError(f"bitmask {bits:#x} out of range for GF(2^{ctx.m0})")
        self.bits = bits
        self.ctx = ctx

    def _check(self, other) -> int:
        if isinstance(other, int) and other in (0, 1):
            return other
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.ctx is not self.ctx and other.ctx.m0 != self.ctx.m0:
            raise ContextMismatch(f"GF(2^{self.ctx.m0}) vs GF(2^{other.ctx.m0})")
        return other.bits

    def __add__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.bits ^ o, self.ctx)

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__
    __xor__ = __add__

    def __mul__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.ctx.mul_bits(self.bits, o), self.ctx)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.ctx.mul_bits(self.bits, self.ctx.inv_bits(o)), self.ctx)

    def __pow__(self, e: int):
        return FieldElement(self.ctx.pow_bits(self.bits, e), self.ctx)

    def __neg__(self):
        return self

    def __eq__(self, other):
        if isinstance(other, int):
            return self.bits == other
        if isinstance(other, FieldElement):
            return self.bits == other.bits and self.ctx.m0 == other.ctx.m0
        return NotImplemented

    def __hash__(self):
        return hash((self.ctx.m0, self.bits))

    def __bool__(self):
        return self.bits != 0

    def __int__(self):
        return self.bits

    def __repr__(self):
        return f"{self.bits:#x}"

    def square(self) -> FieldElement:
        return FieldElement(self.ctx.sqr_bits(self.bits), self.ctx)

    def inverse(self) -> FieldElement:
        return FieldElement(self.ctx.inv_bits(self.bits), self.ctx)

    def frobenius(self, k: int = 1) -> FieldElement:
        return FieldElement(self.ctx.frobenius_bits(self.bits, k), self.ctx)

    def order(self) -> int:
        return self.ctx.element_order(self.bits)


# -- free-function API ------------------------------------------------------

def _same(x: FieldElement, y: FieldElement) -> None:
    if x.ctx.m0 != y.ctx.m0:
        raise ContextMismatch(f"GF(2^{x.ctx.m0}) vs GF(2^{y.ctx.m0})")


def add(x: FieldElement, y: FieldElement) -> FieldElement:
    _same(x, y)
    return x + y


def mul(x: FieldElement, y: FieldElement) -> FieldElement:
    _same(x, y)
    return x * y


def square(x: FieldElement) -> FieldElement:
    return x.square()


def inverse(x: FieldElement) -> FieldElement:
    return x.inverse()


def power(x: FieldElement, k: int) -> FieldElement:
    return x ** k


def rel_trace(x: FieldElement, target_degree: int, source_degree: int | None = None) -> FieldElement:
    """Trace from GF(2^source_degree) (default the whole field) down to GF(2^target_degree)."""
    return FieldElement(x.ctx.rel_trace_bits(x.bits, target_degree, source_degree), x.ctx)


def abs_trace_bit(x: FieldElement, degree: int | None = None) -> int:
    """Absolute trace of x, x viewed inside GF(2^degree) (default the whole field)."""
    t = x.ctx.rel_trace_bits(x.bits, 1, degree)
    if t > 1:
        raise FieldError(f"{x!r} is not in GF(2^{degree})")
    return t


def is_in_subfield(x: FieldElement, degree: int) -> bool:
    if x.ctx.m0 % degree:
        raise FieldError(f"{degree} does not divide {x.ctx.m0}")
    return x.ctx.frobenius_bits(x.bits, degree) == x.bits


# -- GF(4) ------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class GF4Element:
    """Element of GF(4) = {0, 1, w, w^2} in the 2-bit basis (1, w); w^2 = w + 1 is 0b11.

    The embedding into GF(2^m0) sends w to the context's canonical cube root of unity.
    """

    code: int

    def __post_init__(self):
        if self.code not in (0, 1, 2, 3):
            raise FieldError(f"invalid GF(4) code {self.code}")

    @staticmethod
    def from_log(k: int) -> GF4Element:
        return GF4Element((1, 2, 3)[k % 3])

    @property
    def log(self) -> int:
        if self.code == 0:
            raise FieldError("log of zero")
        return {1: 0, 2: 1, 3: 2}[self.code]

    def __add__(self, other: GF4Element) -> GF4Element:
        return GF4Element(self.code ^ other.code)

    def __mul__(self, other: GF4Element) -> GF4Element:
        if self.code == 0 or other.code == 0:
            return ZERO4
        return GF4Element.from_log(self.log + other.log)

    def __pow__(self, e: int) -> GF4Element:
        if self.code == 0:
            return ZERO4 if e else ONE4
        return GF4Element.from_log(self.log * e)

    def inverse(self) -> GF4Element:
        return GF4Element.from_log(-self.log)

    def trace(self) -> int:
        """Absolute trace GF(4) -> GF(2): z + z^2."""
        return self.code >> 1

    def __bool__(self) -> bool:
        return self.code != 0

    def embed(self, ctx: FieldContext) -> FieldElement:
        if self.code == 0:
            return ctx.zero
        return ctx.omega ** self.log

    @staticmethod
    def from_field(x: FieldElement) -> GF4Element:
        if x.bits == 0:
            return ZERO4
        w = x.ctx.omega
        for k, v in enumerate((x.ctx.one, w, w * w)):
            if v == x:
                return GF4Element.from_log(k)
        raise FieldError(f"{x!r} is not in the GF(4) subfield")

    @staticmethod
    def parse(token: str) -> GF4Element:
        t = token.strip().lower()
        table = {"0": 0, "1": 1, "w": 2, "w1": 2, "w^1": 2, "w2": 3, "w^2": 3, "w+1": 3}
        if t not in table:
            raise FieldError(f"cannot parse GF(4) element {token!r}; use 1, w or w2")
        return GF4Element(table[t])

    def __str__(self) -> str:
        return ("0", "1", "w", "w2")[self.code]


ZERO4 = GF4Element(0)
ONE4 = GF4Element(1)
W4 = GF4Element(2)
W4SQ = GF4Element(3)
GF4_NONZERO = (ONE4, W4, W4SQ)
