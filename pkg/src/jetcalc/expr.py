"""Immutable symbolic expressions over named coordinates.

Every expression has a normal form obtained by expanding it into a sparse
Laurent polynomial with exact rational (or float) coefficients over a set of
*atoms*: variables, elementary-function applications and inverse powers of
sums.  Function nodes and inverse sums are opaque, so identities such as
``sin(x)^2 + cos(x)^2 = 1`` are not recognised symbolically; that is what
:func:`equivalence_check` falls back to sampling for.

Trees built directly from the node classes are *raw*; :func:`normalize`,
the arithmetic operators and the parser return normal forms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Union

from jetcalc._rng import PRNG_ID, make_rng
from jetcalc.errors import DomainError, MissingVariable

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")

Number = Union[int, Fraction, float]


class Expr:
    __slots__ = ("_key", "_hash", "_poly", "_fv")

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _init_cache(self):
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_hash", None)
        object.__setattr__(self, "_poly", None)
        object.__setattr__(self, "_fv", None)

    @property
    def key(self) -> tuple:
        """Structural sort key; defines both equality and the term order."""
        k = self._key
        if k is None:
            k = self._make_key()
            object.__setattr__(self, "_key", k)
        return k

    def _make_key(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and self.key == other.key

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.key)
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"Expr({str(self)!r})"

    # arithmetic always yields normal forms
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _from_poly(_poly_add(to_poly(self), to_poly(other)))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _from_poly(_poly_add(to_poly(self), _poly_scale(to_poly(other), -1)))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return _from_poly(_poly_scale(to_poly(self), -1))

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _from_poly(_poly_mul(to_poly(self), to_poly(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _from_poly(_poly_mul(to_poly(self), to_poly(Pow(other, -1))))

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        return normalize(Pow(self, n))


class Rational(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: int, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("Rational with zero denominator")
        q = Fraction(num, den)
        self._init_cache()
        object.__setattr__(self, "num", q.numerator)
        object.__setattr__(self, "den", q.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    def _make_key(self):
        return (0, 0, Fraction(self.num, self.den))

    def __str__(self):
        return str(self.num) if self.den == 1 else f"{self.num}/{self.den}"


class Float(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self._init_cache()
        object.__setattr__(self, "value", float(value))

    def _make_key(self):
        return (0, 1, self.value)

    def __str__(self):
        return repr(self.value)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self._init_cache()
        object.__setattr__(self, "name", name)

    def _make_key(self):
        return (1, self.name)

    def __str__(self):
        return self.name


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        if not isinstance(exp, int):
            raise TypeError("Pow exponent must be an integer")
        self._init_cache()
        object.__setattr__(self, "base", _coerce_strict(base))
        object.__setattr__(self, "exp", exp)

    def _make_key(self):
        return (2, self.base.key, self.exp)

    def __str__(self):
        b = str(self.base)
        if not isinstance(self.base, (Var, Func)) and not (
            isinstance(self.base, Rational) and self.base.den == 1 and self.base.num >= 0
        ):
            b = f"({b})"
        return f"{b}^{self.exp}"


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self._init_cache()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", _coerce_strict(arg))

    def _make_key(self):
        return (3, self.name, self.arg.key)

    def __str__(self):
        return f"{self.name}({self.arg})"


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self._init_cache()
        object.__setattr__(self, "factors", tuple(_coerce_strict(f) for f in factors))

    def _make_key(self):
        return (4, tuple(f.key for f in self.factors))

    def __str__(self):
        parts = []
        for f in self.factors:
            s = str(f)
            if isinstance(f, Add):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts) if parts else "1"


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self._init_cache()
        object.__setattr__(self, "terms", tuple(_coerce_strict(t) for t in terms))

    def _make_key(self):
        return (5, tuple(t.key for t in self.terms))

    def __str__(self):
        if not self.terms:
            return "0"
        out = [str(self.terms[0])]
        for t in self.terms[1:]:
            neg = _negated_if_negative(t)
            if neg is None:
                out.append(f" + {t}")
            else:
                out.append(f" - {neg}")
        return "".join(out)


ZERO = Rational(0)
ONE = Rational(1)


def _negated_if_negative(t: Expr) -> Optional[Expr]:
    """Return -t as a printable term when t carries a negative sign, else None."""
    if isinstance(t, Rational) and t.num < 0:
        return Rational(-t.num, t.den)
    if isinstance(t, Float) and t.value < 0:
        return Float(-t.value)
    if isinstance(t, Mul) and t.factors:
        c = t.factors[0]
        rest = t.factors[1:]
        if isinstance(c, Rational) and c.num < 0:
            if c.num == -1 and c.den == 1:
                return rest[0] if len(rest) == 1 else Mul(rest)
            return Mul((Rational(-c.num, c.den),) + rest)
        if isinstance(c, Float) and c.value < 0:
            return Mul((Float(-c.value),) + rest)
    return None


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        return NotImplemented
    if isinstance(x, int):
        return Rational(x)
    if isinstance(x, Fraction):
        return Rational(x.numerator, x.denominator)
    if isinstance(x, float):
        return Float(x)
    return NotImplemented


def _coerce_strict(x) -> Expr:
    e = _coerce(x)
    if e is NotImplemented:
        raise TypeError(f"cannot convert {type(x).__name__} to Expr")
    return e


def const(x: Number) -> Expr:
    return _coerce_strict(x)


# ---------------------------------------------------------------------------
# sparse Laurent polynomials over atoms
#
# Poly: dict monomial -> coefficient (Fraction or float, never zero)
# monomial: tuple of (atom, nonzero int exponent) sorted by atom.key
# atoms: Var, Func (normalized argument), Add (normalized, leading coefficient
# one, only ever with negative exponent) and the zero constant (only with a
# negative exponent, i.e. a division by zero kept for evaluation to reject).


def _atom_key(pair):
    return pair[0].key


def _mono_key(mono):
    return tuple((a.key, e) for a, e in mono)


def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for atom, e in b:
        ne = d.get(atom, 0) + e
        if ne:
            d[atom] = ne
        else:
            del d[atom]
    return tuple(sorted(d.items(), key=_atom_key))


def _poly_add(p, q):
    if not p:
        return q
    if not q:
        return p
    r = dict(p)
    for m, c in q.items():
        nc = r.get(m, 0) + c
        if nc == 0:
            r.pop(m, None)
        else:
            r[m] = nc
    return r


def _poly_scale(p, c):
    if c == 0:
        return {}
    return {m: v * c for m, v in p.items()}


def _poly_mul(p, q):
    if not p or not q:
        return {}
    if len(q) == 1 and () in q:
        return _poly_scale(p, q[()])
    if len(p) == 1 and () in p:
        return _poly_scale(q, p[()])
    r = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            nc = r.get(m, 0) + c1 * c2
            if nc == 0:
                r.pop(m, None)
            else:
                r[m] = nc
    return r


def _poly_pow(p, n):
    result = {(): Fraction(1)}
    base = p
    while n:
        if n & 1:
            result = _poly_mul(result, base)
        n >>= 1
        if n:
            base = _poly_mul(base, base)
    return result


def _const_poly(c):
    return {} if c == 0 else {(): c}


def _poly_inverse_power(P, n):
    """P**n for n < 0."""
    if not P:
        return {((ZERO, n),): Fraction(1)}
    if len(P) == 1:
        (mono, c), = P.items()
        out = _const_poly(c ** n)
        plain = []
        for atom, e in mono:
            ne = e * n
            if isinstance(atom, Add) and ne > 0:
                out = _poly_mul(out, _poly_pow(to_poly(atom), ne))
            else:
                plain.append((atom, ne))
        return _poly_mul(out, {tuple(sorted(plain, key=_atom_key)): Fraction(1)})
    lead = min(P, key=_mono_key)
    c = P[lead]
    monic = {m: v / c for m, v in P.items()}
    atom = _from_poly(monic)
    return {((atom, n),): c ** n}


_FOLD = {
    ("sin", Fraction(0)): Fraction(0),
    ("cos", Fraction(0)): Fraction(1),
    ("exp", Fraction(0)): Fraction(1),
    ("sqrt", Fraction(0)): Fraction(0),
    ("sqrt", Fraction(1)): Fraction(1),
    ("ln", Fraction(1)): Fraction(0),
}


def to_poly(e: Expr) -> dict:
    """Normal-form polynomial of ``e`` (cached on the node)."""
    p = e._poly
    if p is not None:
        return p
    if isinstance(e, Rational):
        p = _const_poly(Fraction(e.num, e.den))
    elif isinstance(e, Float):
        p = _const_poly(e.value)
    elif isinstance(e, Var):
        p = {((e, 1),): Fraction(1)}
    elif isinstance(e, Add):
        p = {}
        for t in e.terms:
            p = _poly_add(p, to_poly(t))
    elif isinstance(e, Mul):
        p = {(): Fraction(1)}
        for f in e.factors:
            p = _poly_mul(p, to_poly(f))
            if not p:
                break
    elif isinstance(e, Pow):
        bp = to_poly(e.base)
        if e.exp >= 0:
            p = _poly_pow(bp, e.exp)
        else:
            p = _poly_inverse_power(bp, e.exp)
    elif isinstance(e, Func):
        arg = _from_poly(to_poly(e.arg))
        folded = None
        if isinstance(arg, Rational):
            folded = _FOLD.get((e.name, arg.value))
        if folded is not None:
            p = _const_poly(folded)
        else:
            p = {((Func(e.name, arg), 1),): Fraction(1)}
    else:
        raise TypeError(f"not an expression node: {e!r}")
    object.__setattr__(e, "_poly", p)
    return p


def _const_expr(c) -> Expr:
    if isinstance(c, float):
        return Float(c)
    c = Fraction(c)
    return Rational(c.numerator, c.denominator)


def _from_poly(P) -> Expr:
    if not P:
        out = Rational(0)
    else:
        terms = []
        for mono in sorted(P, key=_mono_key):
            c = P[mono]
            factors = [atom if ex == 1 else Pow(atom, ex) for atom, ex in mono]
            if not factors:
                terms.append(_const_expr(c))
            elif c == 1 and not isinstance(c, float):
                terms.append(factors[0] if len(factors) == 1 else Mul(factors))
            else:
                terms.append(Mul([_const_expr(c)] + factors))
        out = terms[0] if len(terms) == 1 else Add(terms)
    object.__setattr__(out, "_poly", P)
    return out


def normalize(e: Expr) -> Expr:
    """Canonical form: expanded, like terms merged, operands in a fixed order."""
    return _from_poly(to_poly(_coerce_strict(e)))


def is_constant(e: Expr) -> bool:
    p = to_poly(e)
    return not p or (len(p) == 1 and () in p)


def constant_value(e: Expr):
    """Exact value of a constant expression (Fraction or float)."""
    p = to_poly(e)
    if not p:
        return Fraction(0)
    if len(p) == 1 and () in p:
        return p[()]
    raise ValueError(f"{e} is not constant")


def is_polynomial(e: Expr) -> bool:
    """True for expressions in the exact polynomial fragment."""
    for mono, c in to_poly(e).items():
        if isinstance(c, float):
            return False
        for atom, ex in mono:
            if not isinstance(atom, Var) or ex < 0:
                return False
    return True


def _atom_free_vars(atom) -> frozenset:
    if isinstance(atom, Var):
        return frozenset((atom.name,))
    if isinstance(atom, Func):
        return free_vars(atom.arg)
    if isinstance(atom, Add):
        return free_vars(atom)
    return frozenset()


def free_vars(e: Expr) -> frozenset:
    fv = e._fv
    if fv is not None:
        return fv
    s = set()
    for mono in to_poly(e):
        for atom, _ in mono:
            s |= _atom_free_vars(atom)
    fv = frozenset(s)
    object.__setattr__(e, "_fv", fv)
    return fv


# ---------------------------------------------------------------------------
# differentiation


@lru_cache(maxsize=1 << 16)
def _diff_atom(atom: Expr, var: str) -> dict:
    if isinstance(atom, Var):
        return {(): Fraction(1)} if atom.name == var else {}
    if isinstance(atom, Add):
        return _diff_poly(to_poly(atom), var)
    if isinstance(atom, Func):
        du = _diff_poly(to_poly(atom.arg), var)
        if not du:
            return {}
        u = atom.arg
        if atom.name == "sin":
            outer = to_poly(Func("cos", u))
        elif atom.name == "cos":
            outer = _poly_scale(to_poly(Func("sin", u)), -1)
        elif atom.name == "exp":
            outer = to_poly(atom)
        elif atom.name == "ln":
            outer = to_poly(Pow(u, -1))
        else:  # sqrt
            outer = _poly_scale(_poly_inverse_power(to_poly(atom), -1), Fraction(1, 2))
        return _poly_mul(outer, du)
    return {}


def _diff_poly(P: dict, var: str) -> dict:
    out = {}
    for mono, c in P.items():
        for i, (atom, ex) in enumerate(mono):
            if var not in _atom_free_vars(atom):
                continue
            da = _diff_atom(atom, var)
            if not da:
                continue
            rest = list(mono)
            if ex == 1:
                del rest[i]
            else:
                rest[i] = (atom, ex - 1)
            out = _poly_add(out, _poly_mul({tuple(rest): c * ex}, da))
    return out


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative with respect to the coordinate ``var``."""
    e = _coerce_strict(e)
    if var not in free_vars(e):
        return Rational(0)
    return _from_poly(_diff_poly(to_poly(e), var))


# ---------------------------------------------------------------------------
# substitution


def substitute(e: Expr, subst: Mapping[str, object]) -> Expr:
    """Simultaneous substitution of coordinates by expressions, then normalize."""
    e = _coerce_strict(e)
    if not subst or not (free_vars(e) & subst.keys()):
        return normalize(e)
    table = {k: _coerce_strict(v) for k, v in subst.items()}
    memo: dict = {}

    def walk(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit[1]
        if isinstance(node, Var):
            out = table.get(node.name, node)
        elif isinstance(node, (Rational, Float)):
            out = node
        elif isinstance(node, Add):
            out = Add([walk(t) for t in node.terms])
        elif isinstance(node, Mul):
            out = Mul([walk(f) for f in node.factors])
        elif isinstance(node, Pow):
            out = Pow(walk(node.base), node.exp)
        elif isinstance(node, Func):
            out = Func(node.name, walk(node.arg))
        else:
            raise TypeError(node)
        memo[id(node)] = (node, out)
        return out

    return normalize(walk(normalize(e)))


# ---------------------------------------------------------------------------
# numerical evaluation

_FLOAT_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


def evaluate(e: Expr, at: Mapping[str, float]) -> float:
    """IEEE double value of ``e`` at the assignment ``at``."""
    try:
        return float(_ev(_coerce_strict(e), at))
    except OverflowError as exc:
        raise DomainError(f"overflow evaluating {e}", point=dict(at)) from exc


def _ev(node, at):
    if isinstance(node, Var):
        try:
            return float(at[node.name])
        except KeyError:
            raise MissingVariable(node.name) from None
    if isinstance(node, Rational):
        return node.num / node.den
    if isinstance(node, Float):
        return node.value
    if isinstance(node, Add):
        return math.fsum(_ev(t, at) for t in node.terms)
    if isinstance(node, Mul):
        r = 1.0
        for f in node.factors:
            r *= _ev(f, at)
        return r
    if isinstance(node, Pow):
        b = _ev(node.base, at)
        if node.exp < 0 and b == 0.0:
            raise DomainError(f"division by zero in {node}", point=dict(at))
        return b ** node.exp
    if isinstance(node, Func):
        u = _ev(node.arg, at)
        if node.name == "ln":
            if u <= 0.0:
                raise DomainError(f"ln of non-positive value {u!r}", point=dict(at))
            return math.log(u)
        if node.name == "sqrt":
            if u < 0.0:
                raise DomainError(f"sqrt of negative value {u!r}", point=dict(at))
            return math.sqrt(u)
        return _FLOAT_FUNCS[node.name](u)
    raise TypeError(node)


# ---------------------------------------------------------------------------
# zero-equivalence


class Verdict(str, enum.Enum):
    PROVED_EQUAL = "ProvedEqual"
    PROVED_UNEQUAL = "ProvedUnequal"
    NUMERICALLY_EQUAL = "NumericallyEqual"
    NUMERICALLY_UNEQUAL = "NumericallyUnequal"

    @property
    def equal(self) -> bool:
        return self in (Verdict.PROVED_EQUAL, Verdict.NUMERICALLY_EQUAL)

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Equivalence:
    verdict: Verdict
    path: str
    samples: int = 0
    seed: Optional[int] = None
    max_residual: Optional[float] = None
    witness: Optional[dict] = None
    prng: str = PRNG_ID

    @property
    def equal(self) -> bool:
        return self.verdict.equal


def _draw(rng, names, ranges):
    point = {}
    for n in names:
        lo, hi = ranges.get(n, (-2.0, 2.0)) if ranges else (-2.0, 2.0)
        point[n] = float(rng.uniform(lo, hi))
    return point


def equivalence_check(
    a: Expr,
    b: Expr,
    samples: int = 200,
    tol: float = 1e-9,
    seed: int = 0,
    ranges: Optional[Mapping[str, tuple]] = None,
    retry_factor: int = 10,
) -> Equivalence:
    """Decide a == b: by normal form when possible, else by seeded sampling.

    A sampled point where either side is undefined is redrawn, up to
    ``retry_factor * samples`` redraws in total.
    """
    if samples < 1 or tol <= 0:
        raise ValueError("need samples >= 1 and tol > 0")
    a = _coerce_strict(a)
    b = _coerce_strict(b)
    diff = a - b
    names = sorted(free_vars(a) | free_vars(b))
    if is_constant(diff):
        c = constant_value(diff)
        if c == 0:
            return Equivalence(Verdict.PROVED_EQUAL, "symbolic")
        witness = _draw(make_rng(seed), names, ranges)
        return Equivalence(
            Verdict.PROVED_UNEQUAL, "symbolic", seed=seed,
            max_residual=abs(float(c)), witness=witness,
        )
    rng = make_rng(seed)
    budget = retry_factor * samples
    worst = 0.0
    done = 0
    while done < samples:
        point = _draw(rng, names, ranges)
        try:
            va = evaluate(a, point)
            vb = evaluate(b, point)
        except DomainError as exc:
            budget -= 1
            if budget < 0:
                raise DomainError(
                    f"retry budget exhausted while sampling: {exc}", point=point
                ) from exc
            continue
        done += 1
        delta = abs(va - vb)
        worst = max(worst, delta)
        if not delta <= tol * (1.0 + max(abs(va), abs(vb))):
            return Equivalence(
                Verdict.NUMERICALLY_UNEQUAL, "numeric", samples=done, seed=seed,
                max_residual=delta, witness=point,
            )
    return Equivalence(
        Verdict.NUMERICALLY_EQUAL, "numeric", samples=samples, seed=seed,
        max_residual=worst,
    )


def var(name: str) -> Var:
    return Var(name)


__all__ = [
    "Expr", "Rational", "Float", "Var", "Add", "Mul", "Pow", "Func",
    "FUNCTIONS", "ZERO", "ONE", "const", "var", "normalize", "differentiate",
    "substitute", "evaluate", "equivalence_check", "Verdict", "Equivalence",
    "free_vars", "is_constant", "constant_value", "is_polynomial", "to_poly",
]
