import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from bentforge.field import FieldError, GF4Element, GF4_NONZERO, ONE4, context_new, rel_trace
from bentforge.polar import TraceSet, additive_char, cube_root, cubic_char, dickson3, enumerate_U, subfield_elements
from bentforge.sums import (
    ClosedFormMismatch,
    coset_cubic,
    coset_cubic_direct,
    coset_kloosterman,
    coset_kloosterman_direct,
    cubic_sum,
    cubic_sum_a0_closed,
    cubic_sum_aa_closed,
    cubic_sum_aa_odd_closed,
    half_trace,
    hasse_weil_bound,
    kloosterman,
    kloosterman_mod3_class,
    sigma_closed,
    sigma_direct,
    sigma_identity,
    solve_linear,
)

# K_6(a) over GF(2^6)*, computed with an independent schoolbook oracle
K6_DISTRIBUTION = {-12: 6, -8: 7, -4: 12, 0: 12, 4: 6, 8: 9, 12: 8, 16: 3}


def sub_nonzero(ctx, m):
    return [ctx(int(v)) for v in subfield_elements(ctx, m)[1:]]


def test_kloosterman_small():
    ctx = context_new(4)
    assert kloosterman(ctx.zero, 2) == 0
    assert kloosterman(ctx.one, 2) == 4
    assert kloosterman_mod3_class(ctx.one, 2) == 1
    with pytest.raises(FieldError):
        kloosterman(ctx.g, 2)


def test_kloosterman_distribution_and_bound(ctx12):
    values = [kloosterman(a) for a in sub_nonzero(ctx12, 6)]
    assert Counter(values) == K6_DISTRIBUTION
    assert all(abs(k) <= hasse_weil_bound(6) for k in values)
    residues = Counter(k % 3 for k in values)
    assert sum(residues.values()) == 63 and set(residues) <= {0, 1, 2}


@pytest.mark.parametrize("m0", [8, 10, 14, 20, 24])
def test_hasse_weil_everywhere(m0):
    ctx = context_new(m0)
    m1 = ctx.m1
    values = [kloosterman(a) for a in sub_nonzero(ctx, m1)]
    # the Weil bound is on the sum over x != 0, i.e. on K - 1
    assert all(abs(k - 1) <= hasse_weil_bound(m1) for k in values)
    if m1 % 2 == 0:
        assert all(abs(k) <= hasse_weil_bound(m1) for k in values)


def test_hasse_weil_odd_degree_offset():
    ctx = context_new(10)
    assert max(kloosterman(a, 5) for a in sub_nonzero(ctx, 5)) == 12 > hasse_weil_bound(5)


def test_kloosterman_frobenius_invariance(ctx12):
    for a in sub_nonzero(ctx12, 6):
        assert kloosterman(a) == kloosterman(a * a)


def test_u1_identity_three_forms(ctx12):
    U1 = list(enumerate_U(ctx12, 1))
    T0 = [ctx12(int(v)) for v in TraceSet(ctx12, 6, 0).members]
    T1 = [ctx12(int(v)) for v in TraceSet(ctx12, 6, 1).members]
    for a in sub_nonzero(ctx12, 6):
        lhs = sum(additive_char(a * u) for u in U1)
        k = kloosterman(a)
        assert lhs == 1 - k
        assert lhs == 1 + 2 * sum(additive_char(a * t, 6) for t in T1)
        assert lhs == 1 - 2 * sum(additive_char(a * t, 6) for t in T0)


def test_cubic_sum_degenerate(ctx12):
    assert cubic_sum(ctx12.zero, ctx12.zero) == 64
    for b in sub_nonzero(ctx12, 6)[:10]:
        assert cubic_sum(ctx12.zero, b) == 0
    with pytest.raises(FieldError):
        cubic_sum(ctx12.g, ctx12.one)


@given(k=st.integers(0, 62))
def test_cubic_sum_aa_dickson(k):
    ctx = context_new(12)
    a = ctx.subfield_generator(6) ** k
    xs = [ctx(int(v)) for v in subfield_elements(ctx, 6)]
    assert cubic_sum(a, a) == sum(additive_char(a * dickson3(x), 6) for x in xs)


@pytest.mark.parametrize("m0,m1", [(8, 4), (12, 6), (16, 8), (20, 10), (24, 6), (24, 12)])
def test_carlitz_closed_forms(m0, m1):
    ctx = context_new(m0)
    for a in sub_nonzero(ctx, m1):
        aa = cubic_sum_aa_closed(a, m1, check=True)
        a0 = cubic_sum_a0_closed(a, m1, check=True)
        assert aa == cubic_sum(a, a, m1)
        assert a0 == cubic_sum(a, ctx.zero, m1)
        assert (aa == 0) == (kloosterman(a, m1) % 3 == 1)


def test_carlitz_a0_signs(ctx12):
    # m2 = 3 is odd
    for a in sub_nonzero(ctx12, 6):
        expected = 16 if cubic_char(a, 6) == ONE4 else -8
        assert cubic_sum_a0_closed(a) == expected


def test_carlitz_zero_branch(ctx12):
    hits = 0
    for a in sub_nonzero(ctx12, 6):
        alpha = cube_root(a, 6)
        if alpha is not None and half_trace(alpha, 6):
            assert cubic_sum_aa_closed(a) == 0
            hits += 1
    assert hits


def test_u0_solves_quartic(ctx12):
    for a in sub_nonzero(ctx12, 6):
        alpha = cube_root(a, 6)
        if alpha is None or half_trace(alpha, 6):
            continue
        for gamma in (ctx12.zero, *(g.embed(ctx12) for g in GF4_NONZERO)):
            u = alpha ** 16 + gamma
            assert u ** 4 + u == alpha ** 4


def test_carlitz_rejects(ctx12):
    with pytest.raises(FieldError):
        cubic_sum_aa_closed(ctx12.zero)
    with pytest.raises(FieldError):
        cubic_sum_a0_closed(ctx12.zero)
    ctx = context_new(10)
    with pytest.raises(FieldError):
        cubic_sum_aa_closed(ctx.one, 5)


@pytest.mark.parametrize("m0,m1", [(10, 5), (6, 3), (14, 7)])
def test_odd_carlitz_criterion(m0, m1):
    ctx = context_new(m0)
    for a in sub_nonzero(ctx, m1):
        v = cubic_sum_aa_odd_closed(a, m1, check=True)
        alpha = cube_root(a, m1)
        assert (v == 0) == (rel_trace(alpha, 1, m1) == ctx.zero)


def test_m2_one_closed_form():
    ctx = context_new(4)
    for a in sub_nonzero(ctx, 2):
        assert cubic_sum_aa_closed(a, 2) == cubic_sum(a, a, 2)
        assert cubic_sum_a0_closed(a, 2) == cubic_sum(a, ctx.zero, 2)


def test_solve_linear(ctx12):
    rng = random.Random(7)
    z = ctx12.subfield_generator(6)
    for _ in range(30):
        x = z ** rng.randrange(63)
        rhs = x ** 4 + x
        sol = solve_linear(lambda u: u ** 4 + u, rhs, 6)
        assert sol ** 4 + sol == rhs
    ctx10 = context_new(10)
    with pytest.raises(FieldError):
        # tr_5(1) = 1, so u^2 + u = 1 has no root in GF(2^5)
        solve_linear(lambda u: u * u + u, ctx10.one, 5)


def test_coset_closed_forms(ctx12):
    for a in sub_nonzero(ctx12, 6):
        alpha = cubic_char(a, 6)
        cub = {g: coset_cubic(a, g, check=True) for g in GF4_NONZERO}
        kl = {g: coset_kloosterman(a, g, check=True) for g in GF4_NONZERO}
        assert sum(cub.values()) == -1
        assert cub[alpha.inverse()] == 5
        assert sum(kl.values()) == kloosterman(a) - 1
        beta = GF4Element(2)
        assert kl[alpha * beta] == kl[alpha * beta * beta]
        for g in GF4_NONZERO:
            assert cub[g] == coset_cubic_direct(a, g)
            assert kl[g] == coset_kloosterman_direct(a, g)


def test_coset_preconditions(ctx12, ctx24):
    with pytest.raises(FieldError):
        coset_cubic(ctx12.one, GF4Element(0))
    with pytest.raises(FieldError):
        coset_kloosterman(ctx12.zero, ONE4)
    with pytest.raises(FieldError):
        coset_cubic(ctx24.one, ONE4)  # m1 = 12 has even m2


def test_closed_form_mismatch_is_assertion():
    assert issubclass(ClosedFormMismatch, AssertionError)


@pytest.mark.parametrize("k", [3, 4, 5, 6])
@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_sigma_identity(m, k):
    assert sigma_identity(m, k) == sigma_direct(m, k) == sigma_closed(m, k)


def test_sigma_values():
    assert sigma_identity(1, 3) == 3
    # k = 4, m = 1 by hand: (2^2+1)(2+1) + 2^4 (2+1)
    assert sigma_direct(1, 4) == 15 + 48 == 63
    assert sigma_closed(1, 4) == 2 ** 6 - 1
    with pytest.raises(FieldError):
        sigma_identity(1, 7)
    with pytest.raises(FieldError):
        sigma_direct("3/2", 4)
