"""Jet-space operator algebra.

Implements the truncated total derivative
``D_m = d/dx + p_1 d/dp_0 + ... + p_m d/dp_{m-1}``, its powers, the
Euler-Lagrange operators ``E_m^n = sum_{k=0..n} (-1)^k D_m^k d/dp_k``, and
the closed-form expansion of ``D_m^k`` over ``D_{m-1}`` in terms of
multi-indices with exact rational coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .symexpr import Expr, ExprLike, X, add, as_expr, diff, jet, mul, pow_int

__all__ = [
    "MultiIndex",
    "OperatorTerm",
    "total_derivative",
    "d_pow",
    "euler_op",
    "a_coeff",
    "expand_d_pow",
    "apply_term",
    "apply_expansion",
]


def total_derivative(m: int, e: ExprLike) -> Expr:
    """Apply the truncated total derivative D_m.  D_0 is d/dx; note D_m has
    no d/dp_m term, so D_m annihilates functions of p_m alone."""
    if m < 0:
        raise ValueError("total derivative order must be >= 0")
    e = as_expr(e)
    parts = [diff(e, X)]
    for j in range(1, m + 1):
        parts.append(mul(jet(j), diff(e, jet(j - 1))))
    return add(*parts)


def d_pow(m: int, k: int, e: ExprLike) -> Expr:
    """k-fold application of D_m."""
    if k < 0:
        raise ValueError("power must be >= 0")
    out = as_expr(e)
    for _ in range(k):
        out = total_derivative(m, out)
    return out


def euler_op(m: int, n: int, e: ExprLike) -> Expr:
    """The m-th order Euler-Lagrange operator with n+1 terms,
    sum_{k=0..n} (-1)^k D_m^k d/dp_k."""
    if m < 0 or n < 0:
        raise ValueError("operator orders must be >= 0")
    e = as_expr(e)
    parts = []
    sign = 1
    for k in range(n + 1):
        parts.append(mul(sign, d_pow(m, k, diff(e, jet(k)))))
        sign = -sign
    return add(*parts)


@dataclass(frozen=True)
class MultiIndex:
    """Multi-index I = (i_{m-1}, ..., i_0) with the descending labeling:
    entry j (1-based from the left) is the exponent of d/dp_{m-j}."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(i) for i in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < 1:
            raise ValueError("multi-index needs at least one entry")
        if any(i < 0 for i in entries):
            raise ValueError("multi-index entries must be nonnegative")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def size(self) -> int:
        """|I|: total number of partials."""
        return sum(self.entries)

    @property
    def weighted_norm(self) -> int:
        """||I||: sum of j * i_{m-j}."""
        return sum(j * i for j, i in enumerate(self.entries, start=1))

    @property
    def multiplicative_norm(self) -> int:
        """||I||*: product of (j!)^{i_{m-j}}."""
        out = 1
        for j, i in enumerate(self.entries, start=1):
            if i:
                out *= math.factorial(j) ** i
        return out

    @property
    def factorial(self) -> int:
        """I!: product of the entry factorials."""
        out = 1
        for i in self.entries:
            out *= math.factorial(i)
        return out

    def try_sub(self, j: int) -> "MultiIndex | None":
        """I - e_j (slot j, 1-based from the left), or None if that entry
        would go negative."""
        if not 1 <= j <= len(self.entries):
            return None
        if self.entries[j - 1] == 0:
            return None
        e = list(self.entries)
        e[j - 1] -= 1
        return MultiIndex(tuple(e))


@dataclass(frozen=True)
class OperatorTerm:
    """One term a * p_m^{pm_power} * D_{m-1}^{d_power} * d^I of the expansion
    of D_m^k, with m = len(index)."""

    coeff: Fraction
    pm_power: int
    d_power: int
    index: MultiIndex

    def __post_init__(self):
        if self.coeff <= 0:
            raise ValueError("expansion coefficients are positive")
        if self.d_power < 0:
            raise ValueError("derivative power must be >= 0")


def a_coeff(index: MultiIndex, k: int) -> Fraction:
    """Expansion coefficient k! / (||I||* I! (k - ||I||)!) when ||I|| <= k,
    else 0."""
    norm = index.weighted_norm
    if k < 0 or norm > k:
        return Fraction(0)
    return Fraction(math.factorial(k),
                    index.multiplicative_norm * index.factorial * math.factorial(k - norm))


def _indices_with_norm_at_most(m: int, k: int):
    """All multi-indices of length m with weighted norm <= k.  Only the k
    leading slots can be nonzero since slot j contributes weight j."""
    slots = min(m, k)

    def rec(j: int, budget: int, prefix: list[int]):
        if j > slots:
            yield tuple(prefix) + (0,) * (m - slots)
            return
        for i in range(budget // j + 1):
            prefix.append(i)
            yield from rec(j + 1, budget - j * i, prefix)
            prefix.pop()

    yield from rec(1, k, [])


def expand_d_pow(m: int, k: int) -> list[OperatorTerm]:
    """Expansion of D_m^k over D_{m-1}:

        D_m^k = sum over ||I|| <= k of a_I^(k) p_m^|I| D_{m-1}^{k-||I||} d^I,

    valid for m > k >= 1.  Terms are returned in a deterministic order
    (by weighted norm, then entries)."""
    if not (m > k >= 1):
        raise ValueError(f"expansion requires m > k >= 1, got m={m}, k={k}")
    terms = []
    for entries in _indices_with_norm_at_most(m, k):
        index = MultiIndex(entries)
        coeff = a_coeff(index, k)
        if coeff == 0:
            continue
        terms.append(OperatorTerm(coeff=coeff,
                                  pm_power=index.size,
                                  d_power=k - index.weighted_norm,
                                  index=index))
    terms.sort(key=lambda t: (t.index.weighted_norm, t.index.entries))
    return terms


def apply_term(term: OperatorTerm, e: ExprLike) -> Expr:
    """Apply one expansion term to an expression: the partials d^I first,
    then D_{m-1}^{d_power}, then the p_m power and coefficient."""
    m = len(term.index)
    out = as_expr(e)
    for j, i in enumerate(term.index.entries, start=1):
        if i:
            out = diff(out, jet(m - j), times=i)
    out = d_pow(m - 1, term.d_power, out)
    return mul(term.coeff, pow_int(jet(m), term.pm_power), out)


def apply_expansion(terms: list[OperatorTerm], e: ExprLike) -> Expr:
    """Apply a full expansion (as returned by `expand_d_pow`) to an
    expression; agrees with `d_pow` on the expanded operator."""
    return add(*(apply_term(t, e) for t in terms))
