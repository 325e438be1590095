"""Scalar coefficients: rational functions of the even coordinates.

A :class:`ScalarExpr` is a reduced fraction ``num/den`` of sparse multivariate
polynomials over QQ.  The generators are the even coordinate symbols plus
*atoms*, opaque generators standing for ``sin(u)``, ``cos(u)``, ``exp(u)``,
``log(u)`` and ``sqrt(u)`` applied to some other ScalarExpr ``u``.  Atoms are
interned, so structurally equal transcendental nodes are the same generator.

sqrt atoms are reduced algebraically (``s**2 -> u``): numerators are kept
linear in every sqrt atom and denominators free of them.  Everything else about
the transcendental functions is left alone, so an expression that still
contains atoms after normalization can only be tested for zero numerically.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from sympy import Symbol
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyRing

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_lock = threading.RLock()
_names: list[str] = ["_one"]  # slot 0 is a never-used placeholder generator
_index: dict[str, int] = {"_one": 0}
_atoms: dict[int, tuple[str, "ScalarExpr"]] = {}
_atom_lookup: dict[tuple, int] = {}
_atom_derivs: dict[tuple[int, int], "ScalarExpr"] = {}


@lru_cache(maxsize=None)
def _ring(ngens: int) -> PolyRing:
    return PolyRing([Symbol(n) for n in _names[:ngens]], QQ, "lex")


def _register(name: str) -> int:
    with _lock:
        idx = _index.get(name)
        if idx is None:
            idx = len(_names)
            _names.append(name)
            _index[name] = idx
        return idx


def _lift(p, ring: PolyRing):
    if p.ring is ring:
        return p
    pad = (0,) * (ring.ngens - p.ring.ngens)
    return ring.from_dict({m + pad: c for m, c in p.items()})


def _common(a: "ScalarExpr", b: "ScalarExpr"):
    ra, rb = a.num.ring, b.num.ring
    if ra is rb:
        return a.num, a.den, b.num, b.den
    ring = ra if ra.ngens > rb.ngens else rb
    return _lift(a.num, ring), _lift(a.den, ring), _lift(b.num, ring), _lift(b.den, ring)


def _support(p) -> frozenset[int]:
    seen: set[int] = set()
    for m in p.itermonoms():
        for i, e in enumerate(m):
            if e:
                seen.add(i)
    return frozenset(seen)


def _split_by(p, j: int) -> dict[int, object]:
    """Collect ``p`` as sum_k  x_j**k * c_k  (c_k free of x_j)."""
    ring = p.ring
    parts: dict[int, dict] = {}
    for m, c in p.items():
        k = m[j]
        mm = m[:j] + (0,) + m[j + 1:]
        parts.setdefault(k, {})[mm] = c
    return {k: ring.from_dict(d) for k, d in parts.items()}


def _reduce_sqrt_poly(p, j: int, rad_num, rad_den):
    """Reduce powers of sqrt atom j in ``p``; returns (num, den) with den free of x_j."""
    parts = _split_by(p, j)
    top = max(k // 2 for k in parts)
    ring = p.ring
    if top == 0:
        return p, ring.one
    s = ring.gens[j]
    out = ring.zero
    for k, c in parts.items():
        h = k // 2
        term = c * rad_num**h * rad_den ** (top - h)
        if k % 2:
            term = term * s
        out += term
    return out, rad_den**top


def _reduce_sqrt(num, den, j: int):
    fn, arg = _atoms[j]
    ring = num.ring
    rn, rd = _lift(arg.num, ring), _lift(arg.den, ring)
    n1, dn1 = _reduce_sqrt_poly(num, j, rn, rd)
    d1, dd1 = _reduce_sqrt_poly(den, j, rn, rd)
    num, den = n1 * dd1, dn1 * d1
    parts = _split_by(den, j)
    if 1 in parts:
        a = parts.get(0, ring.zero)
        b = parts[1]
        conj = a - b * ring.gens[j]
        num, extra = _reduce_sqrt_poly(num * conj, j, rn, rd)
        den = (a * a * rd - b * b * rn) * extra
        num = num * rd
    return num, den


def _canonical(num, den) -> "ScalarExpr":
    ring = num.ring
    if not num:
        return ScalarExpr._raw(ring.zero, ring.one)
    while _atoms:
        js = _sqrt_atoms(num, den)
        if not js:
            break
        num, den = _reduce_sqrt(num, den, max(js))
        if not num:
            return ScalarExpr._raw(ring.zero, ring.one)
    if den != ring.one and not den.is_ground:
        g, num, den = num.cofactors(den)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return ScalarExpr._raw(num, den)


def _sqrt_atoms(num, den) -> list[int]:
    out = []
    for j in _support(num) | _support(den):
        atom = _atoms.get(j)
        if atom is not None and atom[0] == "sqrt":
            if j in _support(den) or num.degree(j) >= 2:
                out.append(j)
    return out


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def _to_float(c) -> float:
    return int(c.numerator) / int(c.denominator)


def _coerce(value):
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, float, Fraction, np.integer, np.floating)):
        return ScalarExpr.const(value.item() if isinstance(value, np.generic) else value)
    return None


class ScalarExpr:
    """Immutable rational function in the even coordinates (plus atoms).

    Instances are always in canonical form, so ``==`` and ``hash`` are
    structural.  Use :meth:`coordinate`, :meth:`const` and :meth:`apply` to
    build them; arithmetic operators accept ints and Fractions as well.
    """

    __slots__ = ("num", "den", "_key", "_supp")

    def __init__(self, value=0):
        other = ScalarExpr.const(value)
        self.num, self.den = other.num, other.den
        self._key = None
        self._supp = None

    @classmethod
    def _raw(cls, num, den) -> "ScalarExpr":
        obj = object.__new__(cls)
        obj.num = num
        obj.den = den
        obj._key = None
        obj._supp = None
        return obj

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, value) -> "ScalarExpr":
        if isinstance(value, ScalarExpr):
            return value
        ring = _ring(1)
        if isinstance(value, float):
            value = Fraction(value).limit_denominator(10**12)
        q = Fraction(value)
        return cls._raw(ring.ground_new(QQ(q.numerator, q.denominator)), ring.one)

    @classmethod
    def coordinate(cls, name: str) -> "ScalarExpr":
        if name.startswith("_"):
            raise ValueError(f"coordinate names may not start with '_': {name!r}")
        idx = _register(name)
        ring = _ring(idx + 1)
        return cls._raw(ring.gens[idx], ring.one)

    @classmethod
    def apply(cls, fn: str, arg) -> "ScalarExpr":
        """Apply one of :data:`FUNCTIONS`, interning the resulting atom."""
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        arg = cls.const(arg)
        if arg.is_constant:
            folded = _fold_constant(fn, arg.constant_value)
            if folded is not None:
                return cls.const(folded)
        key = (fn, arg.key)
        with _lock:
            idx = _atom_lookup.get(key)
            if idx is None:
                idx = _register(f"_{fn}{len(_atoms)}")
                _atoms[idx] = (fn, arg)
                _atom_lookup[key] = idx
        ring = _ring(idx + 1)
        return _canonical(ring.gens[idx], ring.one)

    # -- inspection ---------------------------------------------------
    @property
    def key(self) -> tuple:
        if self._key is None:
            def strip(m):
                m = list(m)
                while m and m[-1] == 0:
                    m.pop()
                return tuple(m)

            self._key = (
                tuple(sorted((strip(m), c) for m, c in self.num.items())),
                tuple(sorted((strip(m), c) for m, c in self.den.items())),
            )
        return self._key

    @property
    def support(self) -> frozenset[int]:
        if self._supp is None:
            self._supp = _support(self.num) | _support(self.den)
        return self._supp

    @property
    def is_zero_exact(self) -> bool:
        return not self.num

    @property
    def is_constant(self) -> bool:
        return self.num.is_ground and self.den.is_ground

    @property
    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        return _to_fraction(self.num.LC if self.num else QQ(0)) / _to_fraction(self.den.LC)

    @property
    def has_atoms(self) -> bool:
        return any(j in _atoms for j in self.support)

    def atom_names(self) -> set[str]:
        out = set()
        for j in self.support:
            if j in _atoms:
                fn, arg = _atoms[j]
                out.add(fn)
                out |= arg.atom_names()
        return out

    def free_coordinates(self) -> set[str]:
        out: set[str] = set()
        for j in self.support:
            if j in _atoms:
                out |= _atoms[j][1].free_coordinates()
            elif j:
                out.add(_names[j])
        return out

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        a, b, c, d = _common(self, other)
        one = a.ring.one
        if b == one and d == one:
            return _canonical(a + c, one)
        if b == d:
            return _canonical(a + c, b)
        if b == one:
            return ScalarExpr._raw(a * d + c, d) if not _sqrt_in(a, c, d) else _canonical(a * d + c, d)
        if d == one:
            return ScalarExpr._raw(a + c * b, b) if not _sqrt_in(a, c, b) else _canonical(a + c * b, b)
        return _canonical(a * d + c * b, b * d)

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr._raw(-self.num, self.den)

    def __sub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        a, b, c, d = _common(self, other)
        one = a.ring.one
        if not a or not c:
            return ScalarExpr._raw(a.ring.zero, one)
        if b == one and d == one:
            return _canonical(a * c, one) if len(_atoms) else ScalarExpr._raw(a * c, one)
        return _canonical(a * c, b * d)

    __rmul__ = __mul__

    def inverse(self) -> "ScalarExpr":
        if not self.num:
            raise ZeroDivisionError("inverse of zero ScalarExpr")
        return _canonical(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        return NotImplemented if other is None else other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            return self.inverse() ** (-k)
        return _canonical(self.num**k, self.den**k)

    def __eq__(self, other):
        if not isinstance(other, ScalarExpr):
            if isinstance(other, (int, Fraction)):
                other = ScalarExpr.const(other)
            else:
                return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    # -- calculus -----------------------------------------------------
    def _partial_gen(self, j: int) -> "ScalarExpr":
        ring = self.num.ring
        if j >= ring.ngens:
            return ScalarExpr.const(0)
        x = ring.gens[j]
        n, d = self.num, self.den
        dn = n.diff(x)
        if d.is_ground:
            return _canonical(dn, d)
        return _canonical(dn * d - n * d.diff(x), d * d)

    def diff(self, name: str) -> "ScalarExpr":
        """Total derivative with respect to the coordinate ``name``."""
        i = _index.get(name)
        result = ScalarExpr.const(0)
        if i is None:
            return result
        for j in self.support:
            if j == i:
                result = result + self._partial_gen(j)
            elif j in _atoms:
                da = _atom_derivative(j, i)
                if not da.is_zero_exact:
                    result = result + self._partial_gen(j) * da
        return result

    # -- substitution and evaluation -----------------------------------
    def subs(self, mapping: Mapping[str, "ScalarExpr"]) -> "ScalarExpr":
        """Simultaneously replace coordinates by ScalarExprs."""
        idx = {_index[k]: ScalarExpr.const(v) for k, v in mapping.items() if k in _index}
        if not idx:
            return self
        return _substitute(self, idx, {})

    def evaluate(self, env: Mapping[str, object], lib=None):
        """Numerically evaluate; ``env`` maps coordinate names to numbers/arrays.

        ``lib`` supplies ``sin, cos, exp, log, sqrt`` (numpy by default) so
        that alternative number types, e.g. dual numbers, can be pushed through.
        """
        lib = lib or np
        memo: dict[int, object] = {}
        return _evaluate(self, env, lib, memo)

    # -- printing -----------------------------------------------------
    def to_str(self) -> str:
        n = _poly_str(self.num)
        if self.den == self.den.ring.one:
            return n
        d = _poly_str(self.den)
        return f"({n})/({d})"

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"ScalarExpr({self.to_str()!r})"


def _sqrt_in(*polys) -> bool:
    if not _atoms:
        return False
    for p in polys:
        for j in _support(p):
            a = _atoms.get(j)
            if a is not None and a[0] == "sqrt":
                return True
    return False


def _fold_constant(fn: str, q: Fraction):
    if fn == "sin" and q == 0:
        return 0
    if fn == "cos" and q == 0:
        return 1
    if fn == "exp" and q == 0:
        return 1
    if fn == "log" and q == 1:
        return 0
    if fn == "sqrt" and q >= 0:
        rn, rd = _isqrt_exact(q.numerator), _isqrt_exact(q.denominator)
        if rn is not None and rd is not None:
            return Fraction(rn, rd)
    return None


def _isqrt_exact(n: int):
    import math

    r = math.isqrt(n)
    return r if r * r == n else None


def _atom_derivative(j: int, i: int) -> ScalarExpr:
    cached = _atom_derivs.get((j, i))
    if cached is not None:
        return cached
    fn, arg = _atoms[j]
    du = arg.diff(_names[i])
    ring = _ring(j + 1)
    me = _canonical(_lift(ring.gens[j], ring), ring.one)
    if du.is_zero_exact:
        out = ScalarExpr.const(0)
    elif fn == "sin":
        out = ScalarExpr.apply("cos", arg) * du
    elif fn == "cos":
        out = -ScalarExpr.apply("sin", arg) * du
    elif fn == "exp":
        out = me * du
    elif fn == "log":
        out = du / arg
    else:  # sqrt
        out = du / (2 * me)
    with _lock:
        _atom_derivs[(j, i)] = out
    return out


def _eval_poly(p, values: list, one, zero, coerce=_to_fraction):
    total = zero
    pows: dict[tuple[int, int], object] = {}
    for m, c in p.items():
        term = None
        for i, e in enumerate(m):
            if e:
                key = (i, e)
                v = pows.get(key)
                if v is None:
                    v = values[i] ** e if e > 1 else values[i]
                    pows[key] = v
                term = v if term is None else term * v
        cf = coerce(c)
        if term is None:
            term = one * cf
        elif cf != 1:
            term = term * cf
        total = total + term
    return total


def _substitute(e: ScalarExpr, idx: dict[int, ScalarExpr], memo: dict[int, ScalarExpr]) -> ScalarExpr:
    supp = e.support
    if not any(j in idx or j in _atoms for j in supp):
        return e
    ring = e.num.ring
    values: list = [None] * ring.ngens
    for j in range(ring.ngens):
        if j not in supp:
            continue
        if j in idx:
            values[j] = idx[j]
        elif j in _atoms:
            v = memo.get(j)
            if v is None:
                fn, arg = _atoms[j]
                v = ScalarExpr.apply(fn, _substitute(arg, idx, memo))
                memo[j] = v
            values[j] = v
        else:
            values[j] = ScalarExpr.coordinate(_names[j])
    one = ScalarExpr.const(1)
    zero = ScalarExpr.const(0)
    num = _eval_poly(e.num, values, one, zero)
    den = _eval_poly(e.den, values, one, zero)
    return num / den


def _evaluate(e: ScalarExpr, env, lib, memo):
    ring = e.num.ring
    values: list = [None] * ring.ngens
    for j in e.support:
        if j in _atoms:
            v = memo.get(j)
            if v is None:
                fn, arg = _atoms[j]
                v = getattr(lib, fn)(_evaluate(arg, env, lib, memo))
                memo[j] = v
            values[j] = v
        else:
            values[j] = env[_names[j]]
    num = _eval_poly(e.num, values, 1.0, 0.0, _to_float)
    den = _eval_poly(e.den, values, 1.0, 0.0, _to_float)
    return num / den


def _gen_str(j: int) -> str:
    if j in _atoms:
        fn, arg = _atoms[j]
        return f"{fn}({arg.to_str()})"
    return _names[j]


def _poly_str(p) -> str:
    if not p:
        return "0"
    parts = []
    for m, c in p.terms():
        q = _to_fraction(c)
        factors = []
        for j, e in enumerate(m):
            if e:
                g = _gen_str(j)
                factors.append(g if e == 1 else f"{g}^{e}")
        sign = "-" if q < 0 else "+"
        q = abs(q)
        if factors:
            body = "*".join(factors)
            if q != 1:
                body = f"{q}*{body}"
        else:
            body = str(q)
        parts.append((sign, body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def as_scalar(value) -> ScalarExpr:
    return ScalarExpr.const(value)


def symbols(names: Iterable[str]) -> list[ScalarExpr]:
    return [ScalarExpr.coordinate(n) for n in names]


def atom_table() -> dict[str, tuple[str, ScalarExpr]]:
    """Snapshot of interned atoms, keyed by generator name (for debugging)."""
    return {_names[j]: v for j, v in _atoms.items()}

