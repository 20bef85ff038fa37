"""Exact symbolic kernel for jet-space expressions.

The coordinates are ``x`` and the jet variables ``p0, p1, p2, ...``, all
treated as mutually independent.  Expressions are immutable, interned and
canonical by construction: sums and products are flattened, constants are
folded into exact rationals, products are fully distributed over sums, and
exponentials are kept split so that ``exp(a)*exp(b)`` and ``exp(a + b)``
reach the same normal form.  On top of the algebra the module provides
partial differentiation, definite antiderivatives from 0 (with an opaque
integral node as fallback), parsing/printing, floating evaluation with
Gauss-Legendre quadrature for opaque integrals, and a probabilistic
zero-testing decision procedure.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

__all__ = [
    "MAX_JET_INDEX",
    "ExprError",
    "ParseError",
    "DomainError",
    "Expr",
    "Rat",
    "VarX",
    "Jet",
    "Sum",
    "Prod",
    "Pow",
    "Exp",
    "Log",
    "Sin",
    "Cos",
    "AntiDeriv",
    "X",
    "ZERO",
    "ONE",
    "jet",
    "rational",
    "as_expr",
    "add",
    "mul",
    "pow_int",
    "exp",
    "log",
    "sin",
    "cos",
    "diff",
    "antideriv",
    "substitute",
    "simplify",
    "max_jet",
    "free_jets",
    "parse",
    "render",
    "evaluate",
    "is_zero",
    "sort_key",
    "ZeroTestConfig",
    "BudgetExceeded",
    "ZeroVerdict",
    "ZeroStructural",
    "ZeroNumeric",
    "NonZero",
    "Inconclusive",
]

#: Largest admissible jet index.  High enough for any reasonable equation
#: order while catching runaway index arithmetic early.
MAX_JET_INDEX = 64

ExprLike = Union["Expr", int, Fraction]


class ExprError(ValueError):
    """Invalid expression construction or operation."""


class ParseError(ExprError):
    """Syntax error in expression text, with the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class DomainError(ArithmeticError):
    """Floating evaluation left the domain (log of a nonpositive value,
    division by zero, overflow)."""


# ---------------------------------------------------------------------------
# Nodes
# ---------------------------------------------------------------------------


class Expr:
    """Base class of all expression nodes.  Immutable; use the module-level
    constructors (`add`, `mul`, `exp`, ...) or the arithmetic operators to
    build canonical expressions."""

    __slots__ = ("_hash", "_key", "free_atoms")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if self.__class__ is not other.__class__ or self._hash != other._hash:
            return False
        return self._payload() == other._payload()

    def _payload(self):  # pragma: no cover - overridden everywhere
        raise NotImplementedError

    def __repr__(self) -> str:
        return render(self)

    # -- arithmetic sugar ---------------------------------------------------

    def __add__(self, other: ExprLike) -> "Expr":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ExprLike) -> "Expr":
        return add(self, mul(-1, other))

    def __rsub__(self, other: ExprLike) -> "Expr":
        return add(other, mul(-1, self))

    def __mul__(self, other: ExprLike) -> "Expr":
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: ExprLike) -> "Expr":
        return mul(self, pow_int(other, -1))

    def __rtruediv__(self, other: ExprLike) -> "Expr":
        return mul(other, pow_int(self, -1))

    def __pow__(self, n: int) -> "Expr":
        return pow_int(self, n)

    def __neg__(self) -> "Expr":
        return mul(-1, self)


class Rat(Expr):
    """Exact rational constant."""

    __slots__ = ("value",)

    def __init__(self, value: Fraction):
        self.value = value
        self.free_atoms = _EMPTY
        self._hash = hash(("rat", value))
        self._key = None

    def _payload(self):
        return self.value


class VarX(Expr):
    """The independent variable x."""

    __slots__ = ()

    def __init__(self):
        self._hash = hash("var-x")
        self.free_atoms = frozenset((self,))
        self._key = (1,)

    def _payload(self):
        return ()


class Jet(Expr):
    """The jet variable p_k, standing for the k-th derivative of the unknown."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index
        self._hash = hash(("jet", index))
        self.free_atoms = frozenset((self,))
        self._key = (2, index)

    def _payload(self):
        return self.index


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        self.terms = terms
        self.free_atoms = frozenset().union(*(t.free_atoms for t in terms))
        self._hash = hash(("sum",) + terms)
        self._key = None

    def _payload(self):
        return self.terms


class Prod(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        self.factors = factors
        self.free_atoms = frozenset().union(*(f.free_atoms for f in factors))
        self._hash = hash(("prod",) + factors)
        self._key = None

    def _payload(self):
        return self.factors


class Pow(Expr):
    """Integer power with exponent outside {0, 1}."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: int):
        self.base = base
        self.exponent = exponent
        self.free_atoms = base.free_atoms
        self._hash = hash(("pow", base, exponent))
        self._key = None

    def _payload(self):
        return (self.base, self.exponent)


class _Unary(Expr):
    __slots__ = ("arg",)
    _tag = "?"

    def __init__(self, arg: Expr):
        self.arg = arg
        self.free_atoms = arg.free_atoms
        self._hash = hash((self._tag, arg))
        self._key = None

    def _payload(self):
        return self.arg


class Exp(_Unary):
    __slots__ = ()
    _tag = "exp"


class Log(_Unary):
    __slots__ = ()
    _tag = "log"


class Sin(_Unary):
    __slots__ = ()
    _tag = "sin"


class Cos(_Unary):
    __slots__ = ()
    _tag = "cos"


class AntiDeriv(Expr):
    """Opaque definite integral of `integrand` over `var` from 0 to the
    current value of `var`.  Only built when no closed-form antiderivative
    rule applies; differentiates by the fundamental theorem and evaluates by
    quadrature."""

    __slots__ = ("integrand", "var")

    def __init__(self, integrand: Expr, var: Expr):
        self.integrand = integrand
        self.var = var
        self.free_atoms = integrand.free_atoms | var.free_atoms
        self._hash = hash(("int", integrand, var))
        self._key = None

    def _payload(self):
        return (self.integrand, self.var)


_EMPTY: frozenset = frozenset()

_RANKS = {Rat: 0, VarX: 1, Jet: 2, Pow: 3, Exp: 4, Log: 5, Sin: 6, Cos: 7,
          AntiDeriv: 8, Prod: 9, Sum: 10}


def sort_key(e: Expr):
    """Deterministic total order on canonical expressions."""
    k = e._key
    if k is None:
        cls = e.__class__
        if cls is Rat:
            k = (0, e.value)
        elif cls is Pow:
            k = (3, sort_key(e.base), e.exponent)
        elif cls is AntiDeriv:
            k = (8, sort_key(e.integrand), sort_key(e.var))
        elif cls is Prod:
            k = (9, tuple(sort_key(f) for f in e.factors))
        elif cls is Sum:
            k = (10, tuple(sort_key(t) for t in e.terms))
        else:  # Exp/Log/Sin/Cos
            k = (_RANKS[cls], sort_key(e.arg))
        e._key = k
    return k


# ---------------------------------------------------------------------------
# Interning
# ---------------------------------------------------------------------------

_INTERN: dict = {}


def _intern(key, cls, *args) -> Expr:
    node = _INTERN.get(key)
    if node is None:
        node = cls(*args)
        _INTERN[key] = node
    return node


def rational(value) -> Expr:
    """Exact rational constant node."""
    v = value if isinstance(value, Fraction) else Fraction(value)
    return _intern(("r", v), Rat, v)


ZERO = rational(0)
ONE = rational(1)
_MINUS_ONE = rational(-1)
_HALF = rational(Fraction(1, 2))

X = _intern(("x",), VarX)


def jet(k: int) -> Expr:
    """The jet variable p_k."""
    if not isinstance(k, int) or k < 0:
        raise ExprError(f"jet index must be a nonnegative integer, got {k!r}")
    if k > MAX_JET_INDEX:
        raise ExprError(f"jet index {k} exceeds the maximum {MAX_JET_INDEX}")
    return _intern(("j", k), Jet, k)


def as_expr(v: ExprLike) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return rational(v)
    raise TypeError(f"cannot coerce {type(v).__name__} to Expr (use Fraction for exactness)")


# ---------------------------------------------------------------------------
# Canonical constructors
# ---------------------------------------------------------------------------


def _coeff_core(t: Expr) -> tuple[Fraction, Expr]:
    """Split a canonical non-Sum term into (rational coefficient, core)."""
    if isinstance(t, Prod):
        head = t.factors[0]
        if isinstance(head, Rat):
            rest = t.factors[1:]
            core = rest[0] if len(rest) == 1 else _intern(("p", rest), Prod, rest)
            return head.value, core
    return Fraction(1), t


def _with_coeff(c: Fraction, core: Expr) -> Expr:
    if c == 1:
        return core
    head = rational(c)
    if isinstance(core, Prod):
        fs = (head,) + core.factors
    else:
        fs = (head, core)
    return _intern(("p", fs), Prod, fs)


def add(*terms: ExprLike) -> Expr:
    """Canonical sum: flattens, folds constants, combines like terms."""
    const = Fraction(0)
    acc: dict[Expr, Fraction] = {}
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if isinstance(t, Rat):
            const += t.value
        elif isinstance(t, Sum):
            stack.extend(reversed(t.terms))
        else:
            c, core = _coeff_core(t)
            acc[core] = acc.get(core, Fraction(0)) + c
    out = [_with_coeff(c, core) for core, c in acc.items() if c != 0]
    if const != 0:
        out.append(rational(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=sort_key)
    return _intern(("s", tuple(out)), Sum, tuple(out))


def _exp_raw(arg: Expr) -> Expr:
    # arg is a canonical non-Sum term
    if arg is ZERO:
        return ONE
    return _intern(("e", arg), Exp, arg)


def mul(*factors: ExprLike) -> Expr:
    """Canonical product: flattens, folds constants, merges powers and
    exponentials, and distributes over sums."""
    coeff = Fraction(1)
    powers: dict[Expr, int] = {}
    exp_terms: list[Expr] = []
    sums: list[Expr] = []
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if isinstance(f, Rat):
            coeff *= f.value
        elif isinstance(f, Prod):
            stack.extend(reversed(f.factors))
        elif isinstance(f, Sum):
            sums.append(f)
        elif isinstance(f, Exp):
            exp_terms.append(f.arg)
        elif isinstance(f, Pow):
            powers[f.base] = powers.get(f.base, 0) + f.exponent
        else:
            powers[f] = powers.get(f, 0) + 1
    if coeff == 0:
        return ZERO

    if sums and powers:
        # cancel sum factors against their own negative powers before
        # distributing, so that S * S^-1 folds exactly
        remaining = []
        for s in sums:
            n = powers.get(s, 0)
            if n < 0:
                powers[s] = n + 1
            else:
                remaining.append(s)
        sums = remaining

    if sums:
        core = [rational(coeff)]
        core.extend(pow_int(b, n) for b, n in powers.items() if n != 0)
        core.extend(_exp_raw(a) for a in exp_terms)
        parts = [mul(*core)] if core else [ONE]
        for s in sums:
            parts = [mul(p, t) for p in parts for t in s.terms]
        return add(*parts)

    pieces: list[Expr] = []
    redispatch = False
    for b, n in powers.items():
        if n == 0:
            continue
        r = pow_int(b, n)
        if r is ONE:
            continue
        if isinstance(r, (Sum, Prod, Rat, Exp)):
            redispatch = True
        pieces.append(r)
    if exp_terms:
        total = add(*exp_terms)
        if total is not ZERO:
            if isinstance(total, Sum):
                pieces.extend(_exp_raw(t) for t in total.terms)
            else:
                pieces.append(_exp_raw(total))
    if redispatch:
        return mul(rational(coeff), *pieces)
    if not pieces:
        return rational(coeff)
    pieces.sort(key=sort_key)
    if coeff != 1:
        pieces.insert(0, rational(coeff))
    if len(pieces) == 1:
        return pieces[0]
    return _intern(("p", tuple(pieces)), Prod, tuple(pieces))


def pow_int(base: ExprLike, n: int) -> Expr:
    """Canonical integer power."""
    b = as_expr(base)
    if isinstance(n, Fraction):
        if n.denominator != 1:
            raise ExprError(f"exponent must be an integer, got {n}")
        n = int(n)
    if not isinstance(n, int):
        raise ExprError(f"exponent must be an integer, got {n!r}")
    if n == 0:
        return ONE
    if n == 1:
        return b
    if isinstance(b, Rat):
        if b.value == 0:
            if n < 0:
                raise ExprError("division by zero")
            return ZERO
        return rational(b.value ** n)
    if isinstance(b, Prod):
        return mul(*(pow_int(f, n) for f in b.factors))
    if isinstance(b, Pow):
        return pow_int(b.base, b.exponent * n)
    if isinstance(b, Exp):
        return exp(mul(n, b.arg))
    if isinstance(b, Sum) and n > 0:
        out = b
        for _ in range(n - 1):
            out = mul(out, b)
        return out
    return _intern(("^", b, n), Pow, b, n)


def exp(arg: ExprLike) -> Expr:
    """Canonical exponential; a sum in the argument splits into a product of
    single-term exponentials so that products of exponentials stay confluent."""
    a = as_expr(arg)
    if a is ZERO:
        return ONE
    if isinstance(a, Sum):
        return mul(*(_exp_raw(t) for t in a.terms))
    return _exp_raw(a)


def log(arg: ExprLike) -> Expr:
    a = as_expr(arg)
    if a is ONE:
        return ZERO
    return _intern(("l", a), Log, a)


def sin(arg: ExprLike) -> Expr:
    a = as_expr(arg)
    if a is ZERO:
        return ZERO
    return _intern(("si", a), Sin, a)


def cos(arg: ExprLike) -> Expr:
    a = as_expr(arg)
    if a is ZERO:
        return ONE
    return _intern(("co", a), Cos, a)


def _ad_raw(integrand: Expr, var: Expr) -> Expr:
    if not isinstance(var, (VarX, Jet)):
        raise ExprError("integration variable must be x or a jet variable")
    return _intern(("i", integrand, var), AntiDeriv, integrand, var)


# ---------------------------------------------------------------------------
# Calculus
# ---------------------------------------------------------------------------

_DIFF_CACHE: dict[tuple[Expr, Expr], Expr] = {}


def _require_atom(v: Expr) -> Expr:
    if not isinstance(v, (VarX, Jet)):
        raise ExprError(f"expected a variable (x or p_k), got {v!r}")
    return v


def diff(e: ExprLike, v: Expr, times: int = 1) -> Expr:
    """Exact partial derivative of `e` with respect to `v`, applied `times`
    times.  x and all jet variables are mutually independent."""
    _require_atom(v)
    out = as_expr(e)
    for _ in range(times):
        out = _diff1(out, v)
    return out


def _diff1(e: Expr, v: Expr) -> Expr:
    if v not in e.free_atoms:
        return ZERO
    key = (e, v)
    out = _DIFF_CACHE.get(key)
    if out is not None:
        return out
    cls = e.__class__
    if cls is VarX or cls is Jet:
        out = ONE
    elif cls is Sum:
        out = add(*(_diff1(t, v) for t in e.terms))
    elif cls is Prod:
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            if v in f.free_atoms:
                parts.append(mul(*fs[:i], _diff1(f, v), *fs[i + 1:]))
        out = add(*parts)
    elif cls is Pow:
        out = mul(e.exponent, pow_int(e.base, e.exponent - 1), _diff1(e.base, v))
    elif cls is Exp:
        out = mul(e, _diff1(e.arg, v))
    elif cls is Log:
        out = mul(_diff1(e.arg, v), pow_int(e.arg, -1))
    elif cls is Sin:
        out = mul(cos(e.arg), _diff1(e.arg, v))
    elif cls is Cos:
        out = mul(_MINUS_ONE, sin(e.arg), _diff1(e.arg, v))
    elif cls is AntiDeriv:
        if v is e.var:
            out = e.integrand
        else:
            # differentiation under the integral sign; valid because the
            # lower limit is the constant 0
            out = _anti1(_diff1(e.integrand, v), e.var)
    else:  # pragma: no cover
        raise ExprError(f"cannot differentiate {e!r}")
    _DIFF_CACHE[key] = out
    return out


def _linear_coeff(term: Expr, v: Expr) -> Expr | None:
    """For a canonical non-Sum `term`, return a with term == a*v and a free
    of v, else None."""
    if term is v:
        return ONE
    if isinstance(term, Prod):
        cof = []
        seen = False
        for f in term.factors:
            if f is v:
                seen = True
            elif v in f.free_atoms:
                return None
            else:
                cof.append(f)
        if seen:
            return mul(*cof)
    return None


def antideriv(e: ExprLike, v: Expr, times: int = 1) -> Expr:
    """Definite antiderivative of `e` over `v` from 0, applied once or twice.
    Closed forms cover linearity, powers of `v`, factors free of `v`, and
    exponentials linear in `v`; anything else becomes an opaque integral
    node.  The result always vanishes at v = 0."""
    _require_atom(v)
    if times not in (1, 2):
        raise ExprError("antideriv supports times = 1 or 2")
    out = as_expr(e)
    for _ in range(times):
        out = _anti1(out, v)
    return out


def _core_coeff_map(e: Expr) -> dict[Expr, Fraction]:
    """Canonical expression as a map core -> rational coefficient."""
    out: dict[Expr, Fraction] = {}
    for t in (e.terms if isinstance(e, Sum) else (e,)):
        if isinstance(t, Rat):
            out[ONE] = t.value
        else:
            c, core = _coeff_core(t)
            out[core] = c
    return out


def _rat_multiple(u: Expr, a: Expr) -> Fraction | None:
    """The rational c with u == c * a structurally, or None."""
    if u is a:
        return Fraction(1)
    um, am = _core_coeff_map(u), _core_coeff_map(a)
    if um.keys() != am.keys():
        return None
    ratio = None
    for core, ca in am.items():
        r = um[core] / ca
        if ratio is None:
            ratio = r
        elif r != ratio:
            return None
    return ratio


def _anti1(e: Expr, v: Expr) -> Expr:
    if v not in e.free_atoms:
        return mul(e, v)
    # group by the v-dependent part so that derivative-shaped integrands
    # like (a + b) * exp((a + b) v) integrate without a symbolic division
    groups: dict[Expr, list[Expr]] = {}
    for t in (e.terms if isinstance(e, Sum) else (e,)):
        fs = t.factors if isinstance(t, Prod) else (t,)
        dep = [f for f in fs if v in f.free_atoms]
        indep = [f for f in fs if v not in f.free_atoms]
        core = mul(*dep) if dep else ONE
        groups.setdefault(core, []).append(mul(*indep))
    return add(*(_anti_group(add(*us), core, v)
                 for core, us in groups.items()))


def _anti_group(u: Expr, core: Expr, v: Expr) -> Expr:
    """Antiderivative over v of u * core where u is free of v and core is a
    canonical product of v-dependent factors (or 1)."""
    if core is ONE:
        return mul(u, v)
    if core is v:
        return mul(u, _HALF, pow_int(v, 2))
    if isinstance(core, Pow) and core.base is v and core.exponent >= 2:
        j = core.exponent
        return mul(u, rational(Fraction(1, j + 1)), pow_int(v, j + 1))
    factors = core.factors if isinstance(core, Prod) else (core,)
    if all(isinstance(d, Exp) for d in factors):
        coeffs = []
        for d in factors:
            c = _linear_coeff(d.arg, v)
            if c is None:
                coeffs = None
                break
            coeffs.append(c)
        if coeffs is not None:
            slope = add(*coeffs)
            if slope is not ZERO:
                ratio = _rat_multiple(u, slope)
                if ratio is not None:
                    return mul(ratio, add(core, _MINUS_ONE))
                return mul(u, pow_int(slope, -1), add(core, _MINUS_ONE))
    return mul(u, _ad_raw(core, v))


def substitute(e: ExprLike, bindings: Mapping[Expr, ExprLike]) -> Expr:
    """Simultaneous substitution of variables by expressions, re-canonicalized.
    Binding the integration variable of an opaque integral is rejected (it is
    bound, not free), except for the identity binding."""
    b = {}
    for k, val in bindings.items():
        _require_atom(k)
        b[k] = as_expr(val)
    return _subst(as_expr(e), b)


def _subst(e: Expr, b: dict[Expr, Expr]) -> Expr:
    if not (e.free_atoms & b.keys()):
        return e
    cls = e.__class__
    if cls is VarX or cls is Jet:
        return b.get(e, e)
    if cls is Sum:
        return add(*(_subst(t, b) for t in e.terms))
    if cls is Prod:
        return mul(*(_subst(f, b) for f in e.factors))
    if cls is Pow:
        return pow_int(_subst(e.base, b), e.exponent)
    if cls is Exp:
        return exp(_subst(e.arg, b))
    if cls is Log:
        return log(_subst(e.arg, b))
    if cls is Sin:
        return sin(_subst(e.arg, b))
    if cls is Cos:
        return cos(_subst(e.arg, b))
    if cls is AntiDeriv:
        v = e.var
        if v in b:
            if b[v] is not v:
                raise ExprError(
                    f"cannot substitute the integration variable {render(v)} "
                    "of an opaque integral")
            b = {k: val for k, val in b.items() if k is not v}
            if not b:
                return e
        for k, val in b.items():
            # the integration variable is bound; a replacement mentioning it
            # would be captured
            if k in e.integrand.free_atoms and v in val.free_atoms:
                raise ExprError(
                    f"substituting {render(k)} -> {render(val)} inside an "
                    f"integral over {render(v)} would capture the "
                    "integration variable")
        return _anti1(_subst(e.integrand, b), v)
    raise ExprError(f"cannot substitute into {e!r}")  # pragma: no cover


def _bind_zero(e: Expr, v: Expr) -> Expr:
    """Internal: representative of `e` on the slice v = 0, for expressions
    known to be functionally independent of v.  Unlike `substitute`, an
    opaque integral over v collapses to 0 (the integral from 0 to 0)."""
    if v not in e.free_atoms:
        return e
    cls = e.__class__
    if cls is VarX or cls is Jet:
        return ZERO
    if cls is Sum:
        return add(*(_bind_zero(t, v) for t in e.terms))
    if cls is Prod:
        return mul(*(_bind_zero(f, v) for f in e.factors))
    if cls is Pow:
        return pow_int(_bind_zero(e.base, v), e.exponent)
    if cls is Exp:
        return exp(_bind_zero(e.arg, v))
    if cls is Log:
        return log(_bind_zero(e.arg, v))
    if cls is Sin:
        return sin(_bind_zero(e.arg, v))
    if cls is Cos:
        return cos(_bind_zero(e.arg, v))
    if cls is AntiDeriv:
        if e.var is v:
            return ZERO
        return _anti1(_bind_zero(e.integrand, v), e.var)
    raise ExprError(f"cannot bind zero in {e!r}")  # pragma: no cover


def simplify(e: ExprLike) -> Expr:
    """Canonical form of `e`.  Idempotent and value-preserving; expressions
    built through this module's constructors are already canonical."""
    e = as_expr(e)
    cls = e.__class__
    if cls in (Rat, VarX, Jet):
        return e
    if cls is Sum:
        return add(*(simplify(t) for t in e.terms))
    if cls is Prod:
        return mul(*(simplify(f) for f in e.factors))
    if cls is Pow:
        return pow_int(simplify(e.base), e.exponent)
    if cls is Exp:
        return exp(simplify(e.arg))
    if cls is Log:
        return log(simplify(e.arg))
    if cls is Sin:
        return sin(simplify(e.arg))
    if cls is Cos:
        return cos(simplify(e.arg))
    if cls is AntiDeriv:
        return _anti1(simplify(e.integrand), e.var)
    raise ExprError(f"cannot simplify {e!r}")  # pragma: no cover


def max_jet(e: ExprLike) -> int:
    """Largest jet index occurring syntactically, -1 if none.  A conservative
    over-approximation of true dependence."""
    e = as_expr(e)
    return max((a.index for a in e.free_atoms if isinstance(a, Jet)), default=-1)


def free_jets(e: ExprLike) -> frozenset:
    """Set of jet indices occurring syntactically."""
    e = as_expr(e)
    return frozenset(a.index for a in e.free_atoms if isinstance(a, Jet))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_FUNCS = {"exp": exp, "log": log, "sin": sin, "cos": cos}


class _Token:
    __slots__ = ("kind", "text", "offset", "value")

    def __init__(self, kind, text, offset, value=None):
        self.kind = kind
        self.text = text
        self.offset = offset
        self.value = value


def _tokenize(text: str) -> list[_Token]:
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if not c.isascii():
            raise ParseError(f"non-ASCII character {c!r}", len(text[:i].encode()))
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            lexeme = text[i:j]
            is_int = True
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                lexeme = text[i:j]
                is_int = False
            toks.append(_Token("num", lexeme, i, (Fraction(lexeme), is_int)))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Token("ident", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            toks.append(_Token(c, c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    toks.append(_Token("eof", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Token:
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.offset)
        return t

    def expr(self) -> Expr:
        out = self.term()
        while self.peek().kind in "+-":
            op = self.next()
            rhs = self.term()
            out = add(out, rhs if op.kind == "+" else mul(-1, rhs))
        return out

    def term(self) -> Expr:
        out = self.factor()
        while self.peek().kind in "*/":
            op = self.next()
            rhs = self.factor()
            out = mul(out, rhs if op.kind == "*" else pow_int(rhs, -1))
        return out

    def factor(self) -> Expr:
        t = self.peek()
        if t.kind == "-":
            self.next()
            return mul(-1, self.factor())
        out = self.atom()
        if self.peek().kind == "^":
            self.next()
            out = pow_int(out, self.integer())
        return out

    def integer(self) -> int:
        neg = False
        t = self.next()
        if t.kind == "-":
            neg = True
            t = self.next()
        if t.kind != "num" or not t.value[1]:
            raise ParseError("exponent must be an integer literal", t.offset)
        n = int(t.value[0])
        return -n if neg else n

    def variable(self) -> Expr:
        t = self.next()
        e = self._ident_to_var(t)
        if e is None:
            raise ParseError(f"expected a variable (x or p<k>), found {t.text!r}", t.offset)
        return e

    def _ident_to_var(self, t: _Token) -> Expr | None:
        if t.kind != "ident":
            return None
        if t.text == "x":
            return X
        if t.text[0] == "p" and t.text[1:].isdigit():
            k = int(t.text[1:])
            if k > MAX_JET_INDEX:
                raise ParseError(f"jet index {k} exceeds the maximum {MAX_JET_INDEX}", t.offset)
            return jet(k)
        return None

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return rational(t.value[0])
        if t.kind == "(":
            out = self.expr()
            self.expect(")")
            return out
        if t.kind == "ident":
            v = self._ident_to_var(t)
            if v is not None:
                return v
            if t.text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCS[t.text](arg)
            if t.text == "Int":
                self.expect("(")
                g = self.expr()
                self.expect(",")
                v = self.variable()
                self.expect(")")
                return _anti1(g, v)
            raise ParseError(f"unknown identifier {t.text!r}", t.offset)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.offset)


def parse(text: str) -> Expr:
    """Parse expression text into a canonical Expr.

    Grammar: sums/differences of terms, terms of factors with * and /,
    factors are atoms with an optional integer exponent after ^ or a unary
    minus; atoms are rationals, decimals, x, p<k>, exp/log/sin/cos calls,
    Int(g, v) opaque integrals, and parenthesized expressions.
    """
    p = _Parser(text)
    out = p.expr()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected trailing {t.text!r}", t.offset)
    return out


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _is_negative_term(t: Expr) -> bool:
    if isinstance(t, Rat):
        return t.value < 0
    if isinstance(t, Prod) and isinstance(t.factors[0], Rat):
        return t.factors[0].value < 0
    return False


def _render_atomish(e: Expr) -> str:
    s = _render(e)
    if isinstance(e, (Sum, Prod)) or (isinstance(e, Rat) and (e.value < 0 or e.value.denominator != 1)):
        return f"({s})"
    return s


def _render(e: Expr) -> str:
    cls = e.__class__
    if cls is Rat:
        return str(e.value)
    if cls is VarX:
        return "x"
    if cls is Jet:
        return f"p{e.index}"
    if cls is Sum:
        parts = [_render(e.terms[0])]
        for t in e.terms[1:]:
            if _is_negative_term(t):
                parts.append(" - " + _render(mul(-1, t)))
            else:
                parts.append(" + " + _render(t))
        return "".join(parts)
    if cls is Prod:
        fs = e.factors
        prefix = ""
        if isinstance(fs[0], Rat):
            c = fs[0].value
            fs = fs[1:]
            if c == -1:
                prefix = "-"
            else:
                prefix = str(c) + "*"
        return prefix + "*".join(_render_atomish(f) for f in fs)
    if cls is Pow:
        return f"{_render_atomish(e.base)}^{e.exponent}"
    if cls is AntiDeriv:
        return f"Int({_render(e.integrand)}, {_render(e.var)})"
    return f"{e._tag}({_render(e.arg)})"


def _to_obj(e: Expr):
    cls = e.__class__
    if cls is Rat:
        return {"const": str(e.value)}
    if cls is VarX:
        return {"var": "x"}
    if cls is Jet:
        return {"jet": e.index}
    if cls is Sum:
        return {"op": "sum", "args": [_to_obj(t) for t in e.terms]}
    if cls is Prod:
        return {"op": "prod", "args": [_to_obj(f) for f in e.factors]}
    if cls is Pow:
        return {"op": "pow", "args": [_to_obj(e.base), {"const": str(e.exponent)}]}
    if cls is AntiDeriv:
        return {"op": "int", "args": [_to_obj(e.integrand), _to_obj(e.var)]}
    return {"op": e._tag, "args": [_to_obj(e.arg)]}


def render(e: ExprLike, format: str = "plain") -> str:
    """Print an expression.  The plain format round-trips through `parse`;
    the json format nests {"op": ..., "args": [...]} objects with
    {"const"|"var"|"jet"} leaves."""
    e = as_expr(e)
    if format == "plain":
        return _render(e)
    if format == "json":
        return json.dumps(_to_obj(e))
    raise ExprError(f"unknown render format {format!r}")


# ---------------------------------------------------------------------------
# Numeric evaluation and zero testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroTestConfig:
    """Configuration for floating evaluation and the probabilistic zero test."""

    samples: int = 20
    box: tuple[float, float] = (-1.0, 1.0)
    atol: float = 1e-9
    rtol: float = 1e-8
    seed: int = 0
    max_retries_per_point: int = 50
    quadrature_order: int = 32
    quadrature_panels: int = 4
    #: opaque integrals nested deeper than this (after same-variable
    #: flattening) fail evaluation instead of costing order^depth per point
    max_quadrature_depth: int = 2
    #: total node-visit budget for one evaluation or zero-test call;
    #: exceeding it fails the call (inconclusive for the zero test) rather
    #: than letting deeply nested quadrature run unboundedly
    eval_budget: int = 2_000_000

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.atol <= 0 or self.rtol <= 0:
            raise ValueError("tolerances must be positive")
        if not self.box[0] <= self.box[1]:
            raise ValueError("box must be a nonempty closed interval")
        if self.quadrature_order < 1 or self.quadrature_panels < 1:
            raise ValueError("quadrature parameters must be >= 1")
        if self.max_quadrature_depth < 1:
            raise ValueError("max_quadrature_depth must be >= 1")
        if self.eval_budget < 1:
            raise ValueError("eval_budget must be >= 1")


class ZeroVerdict:
    """Outcome of the zero decision procedure."""

    __slots__ = ()

    @property
    def is_zero(self) -> bool:
        return isinstance(self, (ZeroStructural, ZeroNumeric))

    def to_obj(self) -> dict:
        if isinstance(self, ZeroStructural):
            return {"kind": "zero-structural"}
        if isinstance(self, ZeroNumeric):
            return {"kind": "zero-numeric", "points": self.points}
        if isinstance(self, NonZero):
            return {"kind": "nonzero",
                    "point": {render(a): v for a, v in sorted(self.point.items(), key=lambda kv: sort_key(kv[0]))},
                    "value": self.value}
        return {"kind": "inconclusive", "reason": self.reason}

    def describe(self) -> str:
        o = self.to_obj()
        kind = o.pop("kind")
        if not o:
            return kind
        return kind + " " + json.dumps(o, sort_keys=True)


@dataclass(frozen=True, eq=False)
class ZeroStructural(ZeroVerdict):
    """The expression simplifies to the literal 0."""

    def __eq__(self, other):
        return isinstance(other, ZeroStructural)

    def __hash__(self):
        return hash("zero-structural")


@dataclass(frozen=True)
class ZeroNumeric(ZeroVerdict):
    """Within tolerance of 0 at every sampled point."""

    points: int


@dataclass(frozen=True, eq=False)
class NonZero(ZeroVerdict):
    """A witness point where the magnitude exceeds the tolerance."""

    point: dict
    value: float

    def __eq__(self, other):
        return (isinstance(other, NonZero) and other.point == self.point
                and other.value == self.value)


@dataclass(frozen=True)
class Inconclusive(ZeroVerdict):
    """No sample point could be evaluated."""

    reason: str


_DEFAULT_CFG = ZeroTestConfig()


@lru_cache(maxsize=None)
def _gauss_nodes(order: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    xs, ws = np.polynomial.legendre.leggauss(order)
    return tuple(xs.tolist()), tuple(ws.tolist())


class BudgetExceeded(DomainError):
    """A single-point evaluation ran past the configured node-visit budget."""


class _Scale:
    __slots__ = ("value", "remaining")

    def __init__(self, budget: int):
        self.value = 0.0
        self.remaining = budget

    def tick(self):
        self.remaining -= 1
        if self.remaining < 0:
            raise BudgetExceeded("evaluation budget exceeded")

    def feed(self, v: float) -> float:
        if not math.isfinite(v):
            raise DomainError("non-finite intermediate value")
        a = abs(v)
        if a > self.value:
            self.value = a
        return v


def _eval_rec(e: Expr, env: dict, cache: dict, cfg: ZeroTestConfig, scale: _Scale,
              depth: int = 0) -> float:
    v = cache.get(e)
    if v is not None:
        return v
    scale.tick()
    cls = e.__class__
    if cls is Rat:
        v = float(e.value)
    elif cls is VarX or cls is Jet:
        try:
            v = env[e]
        except KeyError:
            raise ExprError(f"unassigned variable {render(e)}") from None
    elif cls is Sum:
        v = math.fsum(_eval_rec(t, env, cache, cfg, scale, depth) for t in e.terms)
    elif cls is Prod:
        v = 1.0
        for f in e.factors:
            v *= _eval_rec(f, env, cache, cfg, scale, depth)
    elif cls is Pow:
        b = _eval_rec(e.base, env, cache, cfg, scale, depth)
        if b == 0.0 and e.exponent < 0:
            raise DomainError("division by zero")
        try:
            v = b ** e.exponent
        except OverflowError:
            raise DomainError("overflow in power") from None
    elif cls is Exp:
        try:
            v = math.exp(_eval_rec(e.arg, env, cache, cfg, scale, depth))
        except OverflowError:
            raise DomainError("overflow in exp") from None
    elif cls is Log:
        a = _eval_rec(e.arg, env, cache, cfg, scale, depth)
        if a <= 0.0:
            raise DomainError("log of a nonpositive value")
        v = math.log(a)
    elif cls is Sin:
        v = math.sin(_eval_rec(e.arg, env, cache, cfg, scale, depth))
    elif cls is Cos:
        v = math.cos(_eval_rec(e.arg, env, cache, cfg, scale, depth))
    elif cls is AntiDeriv:
        v = _eval_quad(e, env, cfg, scale, depth)
    else:  # pragma: no cover
        raise ExprError(f"cannot evaluate {e!r}")
    scale.feed(v)
    cache[e] = v
    return v


def _eval_quad(node: AntiDeriv, env: dict, cfg: ZeroTestConfig, scale: _Scale,
               depth: int) -> float:
    upper = env.get(node.var)
    if upper is None:
        raise ExprError(f"unassigned variable {render(node.var)}")
    if upper == 0.0:
        return 0.0
    if depth >= cfg.max_quadrature_depth:
        raise DomainError("opaque integrals nested deeper than "
                          f"{cfg.max_quadrature_depth} levels")
    g = node.integrand
    # iterated integral over the same variable collapses to a single pass
    # with kernel (t - s)
    kernel = isinstance(g, AntiDeriv) and g.var is node.var
    if kernel:
        g = g.integrand
    # inner integrals of nested nodes run at reduced order: full depth
    # recursion at the configured order would cost order^depth per point
    if depth == 0:
        order, panels = cfg.quadrature_order, cfg.quadrature_panels
    elif depth == 1:
        order, panels = max(8, cfg.quadrature_order // 2), max(1, cfg.quadrature_panels // 2)
    else:
        order, panels = 8, 1
    xs, ws = _gauss_nodes(order)
    total = 0.0
    for p in range(panels):
        a = upper * p / panels
        b = upper * (p + 1) / panels
        half = (b - a) / 2.0
        mid = (a + b) / 2.0
        for xi, wi in zip(xs, ws):
            s = mid + half * xi
            env2 = dict(env)
            env2[node.var] = s
            val = _eval_rec(g, env2, {}, cfg, scale, depth + 1)
            if kernel:
                val *= upper - s
            total += wi * half * val
    return scale.feed(total)


def evaluate(e: ExprLike, point: Mapping[Expr, float], cfg: ZeroTestConfig | None = None) -> float:
    """Floating evaluation at a point assigning every free variable.  Opaque
    integrals are evaluated by composite Gauss-Legendre quadrature over
    [0, upper limit], recursively for nested nodes."""
    val, _ = _evaluate_scaled(as_expr(e), dict(point), cfg or _DEFAULT_CFG)
    return val


def _evaluate_scaled(e: Expr, env: dict, cfg: ZeroTestConfig,
                     state: _Scale | None = None) -> tuple[float, float]:
    scale = state if state is not None else _Scale(cfg.eval_budget)
    scale.value = 0.0
    v = _eval_rec(e, env, {}, cfg, scale)
    return v, scale.value


def is_zero(e: ExprLike, cfg: ZeroTestConfig | None = None) -> ZeroVerdict:
    """Decide whether `e` is identically zero.

    Structural fast path: the canonical form is the literal 0.  Otherwise the
    expression is sampled at `cfg.samples` uniform points of the box
    (resampling on domain errors); the verdict is zero-numeric when every
    sampled magnitude is within atol + rtol * scale, where scale is the
    largest intermediate magnitude at that point.  A zero-numeric verdict is
    probabilistic; nonzero verdicts carry an explicit witness.
    """
    cfg = cfg or _DEFAULT_CFG
    s = simplify(e)
    if s is ZERO:
        return ZeroStructural()
    atoms = sorted(s.free_atoms, key=sort_key)
    rng = random.Random(cfg.seed)
    lo, hi = cfg.box
    evaluated = 0
    state = _Scale(cfg.eval_budget)  # one budget for the whole call
    for _ in range(cfg.samples):
        result = None
        for _ in range(cfg.max_retries_per_point):
            pt = {a: rng.uniform(lo, hi) for a in atoms}
            try:
                result = (_evaluate_scaled(s, pt, cfg, state), pt)
                break
            except BudgetExceeded:
                return Inconclusive("evaluation budget exceeded")
            except DomainError:
                continue
        if result is None:
            continue
        (val, scale), pt = result
        evaluated += 1
        if abs(val) > cfg.atol + cfg.rtol * scale:
            return NonZero(point=pt, value=val)
    if evaluated == 0:
        return Inconclusive("no sample point could be evaluated")
    return ZeroNumeric(points=evaluated)
