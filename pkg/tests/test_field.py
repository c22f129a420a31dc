import pickle
import random

import pytest
from hypothesis import given, strategies as st
from sympy import Poly, factorint, symbols

from bentforge.field import (
    MAX_DEGREE,
    ORDER_FACTORS,
    ContextMismatch,
    FieldContext,
    FieldError,
    GF4Element,
    GF4_NONZERO,
    ONE4,
    W4,
    W4SQ,
    ZERO4,
    abs_trace_bit,
    add,
    context_new,
    inverse,
    is_in_subfield,
    is_irreducible,
    mul,
    power,
    rel_trace,
    smallest_irreducible,
    square,
)

X = symbols("x")

# smallest irreducible polynomials and smallest primitive elements, found with sympy
# and a schoolbook multiplier written independently of the library
FROZEN_MODULI = {4: 0x13, 6: 0x43, 8: 0x11B, 10: 0x409, 12: 0x1009, 14: 0x4021, 16: 0x1002B,
                 20: 0x100009, 24: 0x100001B}
FROZEN_GENERATORS = {4: 0x2, 6: 0x2, 12: 0x3, 20: 0x2, 24: 0x2}


def elements(m0):
    return st.integers(min_value=0, max_value=(1 << m0) - 1)


def sympy_poly(bits):
    return Poly(sum(X ** i for i in range(bits.bit_length()) if bits >> i & 1), X, modulus=2)


def schoolbook(a, b, modulus):
    deg = modulus.bit_length() - 1
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> deg & 1:
            a ^= modulus
    return r


@pytest.mark.parametrize("m0,nu,tower", [(4, 2, [4, 2, 1]), (12, 2, [12, 6, 3]), (24, 3, [24, 12, 6, 3]),
                                         (6, 1, [6, 3]), (40, 3, [40, 20, 10, 5])])
def test_tower(m0, nu, tower):
    ctx = context_new(m0)
    assert ctx.nu == nu and ctx.tower == tower
    assert ctx.m_nu % 2 == 1
    assert ctx.subgroup_orders == [(1 << m) + 1 for m in tower[1:]]


@pytest.mark.parametrize("m0", sorted(FROZEN_MODULI))
def test_modulus_is_smallest_irreducible(m0):
    assert context_new(m0).modulus == FROZEN_MODULI[m0]
    assert sympy_poly(FROZEN_MODULI[m0]).is_irreducible


@pytest.mark.parametrize("m0", sorted(FROZEN_GENERATORS))
def test_generator_frozen(m0):
    assert context_new(m0).generator_bits == FROZEN_GENERATORS[m0]


@pytest.mark.parametrize("m0", range(4, MAX_DEGREE + 1, 2))
def test_order_factor_table(m0):
    assert ORDER_FACTORS[m0] == factorint((1 << m0) - 1)


@pytest.mark.parametrize("m0", [4, 6, 8, 10, 12, 16, 22, 30, 36, 40])
def test_generator_has_full_order(m0):
    ctx = context_new(m0)
    N = ctx.order
    assert ctx.g ** N == ctx.one
    for p in ctx.order_factors:
        assert ctx.g ** (N // p) != ctx.one


def test_irreducibility_against_sympy():
    rng = random.Random(5)
    for _ in range(300):
        d = rng.randint(2, 14)
        p = (1 << d) | rng.getrandbits(d)
        assert is_irreducible(p) == sympy_poly(p).is_irreducible, hex(p)


def _clmul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a, b = a << 1, b >> 1
    return r


def test_reducible_products_are_rejected():
    # (x+1)(x^2+x+1)(x^3+x+1): every factor degree divides 6, so x^64 = x, yet
    # neither x^4 nor x^8 equals x; only the gcd conditions expose it
    prod = _clmul(_clmul(0b11, 0b111), 0b1011)
    assert prod.bit_length() == 7
    assert not is_irreducible(prod)
    assert not sympy_poly(prod).is_irreducible
    reducible = 0
    for c in range(1 << 6):
        b = (1 << 6) | c
        if not sympy_poly(b).is_irreducible:
            assert not is_irreducible(b)
            reducible += 1
    assert reducible > 0


@pytest.mark.parametrize("m0", [3, 5, 2, 0, 42, 44, -4])
def test_rejects_bad_degree(m0):
    with pytest.raises(FieldError):
        context_new(m0)


def test_context_is_cached_and_pickles():
    ctx = context_new(12)
    assert context_new(12) is ctx
    assert pickle.loads(pickle.dumps(ctx)) is ctx
    x = ctx(0x5A5)
    assert pickle.loads(pickle.dumps(x)) == x


def test_serialization_round_trip():
    ctx = context_new(20)
    d = ctx.to_dict()
    assert d == {"m0": 20, "modulus_hex": "0x100009", "generator_hex": "0x2"}
    assert FieldContext.from_dict(d) is ctx
    with pytest.raises(FieldError):
        FieldContext.from_dict({"m0": 20, "modulus_hex": "0x100003", "generator_hex": "0x2"})


def test_parse(ctx12):
    assert ctx12.parse("0x1a3").bits == 0x1A3
    assert ctx12.parse("17").bits == 17
    assert ctx12.parse("g^17") == ctx12.g ** 17
    assert ctx12.parse("g^-1") == ctx12.g.inverse()
    z = ctx12.subfield_generator(6)
    assert ctx12.parse("z^5", base=z) == z ** 5
    for bad in ("0x1000", "h^3", "", "g^"):
        with pytest.raises(FieldError):
            ctx12.parse(bad)


def test_basic_examples(ctx12):
    g = ctx12.g
    x = ctx12(0x777)
    assert add(x, x) == ctx12.zero
    assert inverse(ctx12.zero) == ctx12.zero
    assert mul(g, inverse(g)) == ctx12.one
    assert power(g, ctx12.order) == ctx12.one
    assert square(x) == x * x


def test_context_mismatch():
    a, b = context_new(12).one, context_new(6).one
    with pytest.raises(ContextMismatch):
        a + b
    with pytest.raises(ContextMismatch):
        a * b
    with pytest.raises(FieldError):
        context_new(12)(1 << 12)


@given(elements(12), elements(12))
def test_mul_matches_schoolbook(a, b):
    ctx = context_new(12)
    assert (ctx(a) * ctx(b)).bits == schoolbook(a, b, ctx.modulus)


@given(elements(40), elements(40))
def test_mul_matches_schoolbook_m40(a, b):
    ctx = context_new(40)
    assert (ctx(a) * ctx(b)).bits == schoolbook(a, b, ctx.modulus)


@pytest.mark.parametrize("m0", [12, 24, 40])
@given(data=st.data())
def test_frobenius_is_a_ring_map(m0, data):
    ctx = context_new(m0)
    x, y = ctx(data.draw(elements(m0))), ctx(data.draw(elements(m0)))
    assert (x + y) ** 2 == x ** 2 + y ** 2
    assert (x * y) ** 2 == x ** 2 * y ** 2
    assert x.frobenius(3) == x ** 8


@given(elements(24).filter(bool))
def test_inverse_and_division(a):
    ctx = context_new(24)
    x = ctx(a)
    assert x * x.inverse() == ctx.one
    assert (x / x) == ctx.one


def test_every_nonzero_power_is_one(ctx12):
    for a in range(1, 1 << 12):
        assert ctx12(a) ** ctx12.order == ctx12.one


@given(elements(12))
def test_trace_transitivity(a):
    ctx = context_new(12)
    x = ctx(a)
    assert rel_trace(x, 1) == rel_trace(rel_trace(x, 6), 1, 6)
    assert rel_trace(x, 1) == rel_trace(rel_trace(x, 3), 1, 3)
    assert rel_trace(x, 3) == rel_trace(rel_trace(x, 6), 3, 6)
    assert rel_trace(x, 12) == x
    t = rel_trace(x, 6)
    assert t ** 64 == t


@given(elements(24), elements(24))
def test_trace_is_subfield_linear(a, b):
    ctx = context_new(24)
    x, y = ctx(a), ctx(b)
    c = ctx.subfield_generator(6) ** (a % 63)
    assert rel_trace(c * x + y, 6) == c * rel_trace(x, 6) + rel_trace(y, 6)


def test_trace_surjective_and_balanced(ctx12):
    images = {rel_trace(ctx12(a), 6).bits for a in range(1 << 12)}
    assert len(images) == 64
    assert all(is_in_subfield(ctx12(v), 6) for v in images)
    assert sum(abs_trace_bit(ctx12(a)) for a in range(1 << 12)) == 1 << 11
    assert abs_trace_bit(ctx12.zero) == 0 and abs_trace_bit(ctx12.one) == 0


def test_trace_rejects_non_divisor(ctx12):
    with pytest.raises(FieldError):
        rel_trace(ctx12.one, 5)
    with pytest.raises(FieldError):
        abs_trace_bit(ctx12.g, 6)  # g is not in GF(2^6)


def test_subfield_membership(ctx12):
    members = [a for a in range(1 << 12) if is_in_subfield(ctx12(a), 6)]
    assert len(members) == 64
    assert is_in_subfield(ctx12.zero, 3)
    assert not is_in_subfield(ctx12.g, 6)
    s = set(members)
    rng = random.Random(0)
    for _ in range(200):
        x, y = ctx12(rng.choice(members)), ctx12(rng.choice(members))
        assert (x + y).bits in s and (x * y).bits in s


def test_log_tables_agree():
    plain, logged = FieldContext(16), FieldContext(16, log_tables=True)
    rng = random.Random(3)
    for _ in range(500):
        a, b = rng.getrandbits(16), rng.getrandbits(16)
        assert plain.mul_bits(a, b) == logged.mul_bits(a, b)
        assert plain.inv_bits(a) == logged.inv_bits(a)


def test_gf4_arithmetic():
    assert W4 * W4 == W4SQ and W4 + ONE4 == W4SQ and W4 ** 3 == ONE4
    assert W4.inverse() == W4SQ
    assert [e.trace() for e in (ZERO4, ONE4, W4, W4SQ)] == [0, 0, 1, 1]
    assert [GF4Element.parse(t) for t in ("1", "w", "w2")] == list(GF4_NONZERO)
    with pytest.raises(FieldError):
        GF4Element.parse("x")


@pytest.mark.parametrize("m0", [4, 12, 24])
def test_gf4_embedding_is_a_homomorphism(m0):
    ctx = context_new(m0)
    w = W4.embed(ctx)
    assert w * w + w + ctx.one == ctx.zero
    assert w == ctx.omega == ctx.g ** (ctx.order // 3)
    for x in (ZERO4, ONE4, W4, W4SQ):
        assert GF4Element.from_field(x.embed(ctx)) == x
        for y in (ZERO4, ONE4, W4, W4SQ):
            assert (x * y).embed(ctx) == x.embed(ctx) * y.embed(ctx)
            assert (x + y).embed(ctx) == x.embed(ctx) + y.embed(ctx)
    with pytest.raises(FieldError):
        GF4Element.from_field(ctx.g)
