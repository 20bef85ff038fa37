"""Operator algebra tests: total derivatives, Euler-Lagrange operators,
multi-index coefficients, the closed-form power expansion, and the
operator-identity property suites."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest

from conftest import IDENTITY_SUITES, assert_zeroish, comb0, rand_expr
from varmult.jetops import (
    MultiIndex,
    OperatorTerm,
    a_coeff,
    apply_expansion,
    apply_term,
    d_pow,
    euler_op,
    expand_d_pow,
    total_derivative,
)
from varmult.symexpr import (
    X,
    ZERO,
    add,
    antideriv,
    diff,
    exp,
    jet,
    mul,
    pow_int,
)

p0, p1, p2, p3, p4 = (jet(k) for k in range(5))


# ---------------------------------------------------------------------------
# total_derivative / d_pow / euler_op
# ---------------------------------------------------------------------------


def test_total_derivative_examples():
    assert total_derivative(2, p2) is ZERO  # D_2 has no d/dp2 term
    assert total_derivative(4, p3) == p4
    got = total_derivative(2, mul(X, p0, p1))
    assert got == add(mul(p0, p1), mul(X, pow_int(p1, 2)), mul(X, p0, p2))


def test_total_derivative_validates():
    with pytest.raises(ValueError):
        total_derivative(-1, p1)


def test_d_pow_examples():
    e = mul(Fraction(1, 2), pow_int(p2, 2))
    assert d_pow(4, 1, e) == mul(p2, p3)
    assert d_pow(4, 2, e) == add(pow_int(p3, 2), mul(p2, p4))
    assert d_pow(7, 0, e) == e
    assert d_pow(2, 3, p0) is ZERO  # D_2^3 p0 = D_2^2 p1 = D_2 p2 = 0


def test_euler_op_examples():
    e = rand_expr(3)
    assert euler_op(6, 0, e) == diff(e, p0)
    assert euler_op(4, 2, mul(Fraction(1, 2), pow_int(p2, 2))) == p4
    a2 = antideriv(exp(mul(-1, p2)), p2, times=2)
    assert euler_op(2, 2, a2) is ZERO


# ---------------------------------------------------------------------------
# MultiIndex and coefficients
# ---------------------------------------------------------------------------


def test_multi_index_norms():
    i = MultiIndex((3, 1, 1))
    assert i.size == 5
    assert i.weighted_norm == 1 * 3 + 2 * 1 + 3 * 1
    assert i.multiplicative_norm == (1 ** 3) * 2 * 6
    assert i.factorial == 6
    assert a_coeff(i, 10) == Fraction(math.factorial(10), 12 * 6 * math.factorial(2))


def test_multi_index_validation():
    with pytest.raises(ValueError):
        MultiIndex(())
    with pytest.raises(ValueError):
        MultiIndex((1, -1))
    i = MultiIndex((0, 2))
    assert i.try_sub(1) is None
    assert i.try_sub(2) == MultiIndex((0, 1))
    assert i.try_sub(3) is None


def test_a_coeff_examples():
    # all-zero index has coefficient 1 at any k
    assert a_coeff(MultiIndex((0, 0, 0, 0)), 7) == 1
    # single slot-2 entry at m=4, k=2 (the p4 d2 term of D_4^2)
    assert a_coeff(MultiIndex((0, 1, 0, 0)), 2) == 1
    # above the norm bound the coefficient vanishes
    assert a_coeff(MultiIndex((0, 0, 1)), 2) == 0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_a_coeff_inductive_table(n):
    """The five nonzero solutions of the order-reduction inequality at
    m = 2n-2, with entries i_n, i_{n-1}, i_{n-2} sitting in slots
    n-2, n-1, n; coefficients (1, n, 1, n-1, 1)."""
    m = 2 * n - 2

    def single(slot):
        entries = [0] * m
        entries[slot - 1] = 1
        return MultiIndex(tuple(entries))

    rows = [
        (n, single(n), Fraction(1)),          # i_{n-2} = 1
        (n, single(n - 1), Fraction(n)),      # i_{n-1} = 1
        (n - 1, single(n - 1), Fraction(1)),
        (n - 1, single(n - 2), Fraction(n - 1)),  # i_n = 1
        (n - 2, single(n - 2), Fraction(1)),
    ]
    for k, index, expected in rows:
        assert a_coeff(index, k) == expected


def test_a_coeff_recurrence_exact():
    """a_I^(k+1) = a_I^(k) + sum_j C(k+j-||I||, j-1) a_{I-e_j}^(k), exactly,
    for all indices with ||I|| <= 4, lengths m <= 6, k <= 5."""
    for m in range(1, 7):
        for entries in _indices(m, 4):
            index = MultiIndex(entries)
            norm = index.weighted_norm
            for k in range(0, 6):
                rhs = a_coeff(index, k)
                for j in range(1, m + 1):
                    sub = index.try_sub(j)
                    if sub is not None:
                        rhs += comb0(k + j - norm, j - 1) * a_coeff(sub, k)
                assert a_coeff(index, k + 1) == rhs, (entries, k)


def _indices(m, max_norm):
    def rec(j, budget, prefix):
        if j > m:
            yield tuple(prefix)
            return
        for i in range(budget // j + 1):
            yield from rec(j + 1, budget - j * i, prefix + [i])

    yield from rec(1, max_norm, [])


# ---------------------------------------------------------------------------
# expand_d_pow
# ---------------------------------------------------------------------------


def test_expand_d4_squared_exact():
    """D_4^2 = D_3^2 + 2 p4 D_3 d3 + p4^2 d3^2 + p4 d2."""
    got = expand_d_pow(4, 2)
    expected = [
        OperatorTerm(Fraction(1), 0, 2, MultiIndex((0, 0, 0, 0))),
        OperatorTerm(Fraction(2), 1, 1, MultiIndex((1, 0, 0, 0))),
        OperatorTerm(Fraction(1), 1, 0, MultiIndex((0, 1, 0, 0))),
        OperatorTerm(Fraction(1), 2, 0, MultiIndex((2, 0, 0, 0))),
    ]
    assert got == expected


def test_expand_d2_once():
    # D_2 = D_1 + p2 d1
    got = expand_d_pow(2, 1)
    assert got == [
        OperatorTerm(Fraction(1), 0, 1, MultiIndex((0, 0))),
        OperatorTerm(Fraction(1), 1, 0, MultiIndex((1, 0))),
    ]


def test_expand_precondition():
    with pytest.raises(ValueError):
        expand_d_pow(2, 2)
    with pytest.raises(ValueError):
        expand_d_pow(3, 0)


@pytest.mark.parametrize("m,k", [(m, k) for m in range(2, 8)
                                 for k in range(1, min(m, 5))])
def test_expand_matches_repeated_application(m, k):
    # every admissible pair with k <= 4, m <= 7
    terms = expand_d_pow(m, k)
    for seed in range(3):
        e = rand_expr(seed + 10 * m + k, max_index=m, degree=3, terms=3)
        assert apply_expansion(terms, e) == d_pow(m, k, e)


def test_apply_term_single():
    # the p4 d2 term of D_4^2 applied to p2^2/2 gives p4 p2
    term = OperatorTerm(Fraction(1), 1, 0, MultiIndex((0, 1, 0, 0)))
    assert apply_term(term, mul(Fraction(1, 2), pow_int(p2, 2))) == mul(p2, p4)


def test_operator_term_validation():
    with pytest.raises(ValueError):
        OperatorTerm(Fraction(0), 0, 1, MultiIndex((0,)))
    with pytest.raises(ValueError):
        OperatorTerm(Fraction(1), 0, -1, MultiIndex((0,)))


# ---------------------------------------------------------------------------
# operator-identity property suites
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(IDENTITY_SUITES))
@pytest.mark.parametrize("seed", range(10))
def test_operator_identity(name, seed):
    residual = IDENTITY_SUITES[name](seed)
    assert_zeroish(residual, msg=f"{name} seed={seed}")
