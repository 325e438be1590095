"""Z2-graded functions on a coordinate chart.

A :class:`SuperFunction` is a finite sum ``sum_mu f_mu(x) xi^mu`` over sorted
odd monomials with :class:`~superkilling.scalar.ScalarExpr` coefficients.
Odd derivatives are LEFT derivatives throughout.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from .scalar import ScalarExpr

if TYPE_CHECKING:
    from .charts import Chart

Monomial = tuple[int, ...]


class Parity(IntEnum):
    EVEN = 0
    ODD = 1

    def __add__(self, other):
        return Parity((int(self) + int(other)) % 2)

    __radd__ = __add__

    def __str__(self):
        return self.name.lower()


class ChartMismatch(ValueError):
    pass


class NotInvertible(ArithmeticError):
    pass


# -- sampling configuration for numeric zero tests ---------------------------

@dataclass(frozen=True)
class Sampling:
    samples: int = 32
    tol: float = 1e-9
    seed: int = 0
    default_box: tuple[float, float] = (0.1, 3.0)
    retries: int = 8


_sampling: contextvars.ContextVar[Sampling] = contextvars.ContextVar("sampling", default=Sampling())


def current_sampling() -> Sampling:
    return _sampling.get()


@contextlib.contextmanager
def sampling(**overrides):
    """Temporarily override the numeric zero-test settings."""
    token = _sampling.set(Sampling(**{**current_sampling().__dict__, **overrides}))
    try:
        yield _sampling.get()
    finally:
        _sampling.reset(token)


@dataclass(frozen=True)
class ZeroTest:
    status: str  # "zero" | "nonzero" | "unknown"
    method: str  # "symbolic" | "numeric"
    max_abs: float | None = None

    @property
    def zero(self) -> bool:
        return self.status == "zero"

    def __bool__(self):
        return self.zero


def sample_points(names: Iterable[str], box: Mapping[str, tuple[float, float]],
                  n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    cfg = current_sampling()
    out = {}
    for name in sorted(names):
        lo, hi = box.get(name, cfg.default_box)
        out[name] = rng.uniform(lo, hi, size=n)
    return out


def scalar_zero_test(e: ScalarExpr, box: Mapping[str, tuple[float, float]] | None = None) -> ZeroTest:
    """Exact for atom-free expressions, numeric sampling otherwise."""
    if e.is_zero_exact:
        return ZeroTest("zero", "symbolic", 0.0)
    if not e.has_atoms:
        return ZeroTest("nonzero", "symbolic")
    return _numeric_zero(e, box or {})


def _numeric_zero(e: ScalarExpr, box) -> ZeroTest:
    cfg = current_sampling()
    rng = np.random.default_rng(cfg.seed)
    names = e.free_coordinates()
    good: list[float] = []
    with np.errstate(all="ignore"):
        for _ in range(cfg.retries):
            pts = sample_points(names, box, cfg.samples, rng)
            num = ScalarExpr._raw(e.num, e.num.ring.one).evaluate(pts)
            den = ScalarExpr._raw(e.den, e.den.ring.one).evaluate(pts)
            num = np.broadcast_to(np.asarray(num, dtype=float), (cfg.samples,))
            den = np.broadcast_to(np.asarray(den, dtype=float), (cfg.samples,))
            ok = np.isfinite(num) & np.isfinite(den) & (np.abs(den) > 1e-12)
            good.extend(np.abs(num[ok] / den[ok]).tolist())
            if len(good) >= cfg.samples:
                break
    if len(good) < cfg.samples:
        return ZeroTest("unknown", "numeric")
    worst = max(good[: cfg.samples])
    return ZeroTest("zero" if worst < cfg.tol else "nonzero", "numeric", worst)


# -- odd monomials -----------------------------------------------------------

def merge_sign(mu: Monomial, nu: Monomial) -> int:
    """Sign of ``xi^mu xi^nu`` relative to the sorted monomial, 0 if they overlap."""
    inversions = 0
    j = 0
    for a in mu:
        while j < len(nu) and nu[j] < a:
            j += 1
        if j < len(nu) and nu[j] == a:
            return 0
        inversions += j
    return -1 if inversions % 2 else 1


def _merge(mu: Monomial, nu: Monomial) -> Monomial:
    return tuple(sorted(mu + nu))


# -- superfunctions ----------------------------------------------------------

def _coerce_scalar(c) -> ScalarExpr:
    return c if isinstance(c, ScalarExpr) else ScalarExpr.const(c)


class SuperFunction:
    """Element of C^oo(U) (x) Lambda(xi^1..xi^m) on a chart; immutable."""

    __slots__ = ("chart", "terms", "_hash")

    def __init__(self, chart: "Chart", terms: Mapping[Monomial, object] | None = None):
        self.chart = chart
        clean: dict[Monomial, ScalarExpr] = {}
        m = chart.m
        for mono, c in (terms or {}).items():
            mono = tuple(mono)
            if any(b <= a for a, b in zip(mono, mono[1:])) or any(i < 0 or i >= m for i in mono):
                raise ValueError(f"invalid odd monomial {mono} for chart {chart.name}")
            c = _coerce_scalar(c)
            if not c.is_zero_exact:
                clean[mono] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _trusted(cls, chart, terms: dict) -> "SuperFunction":
        obj = object.__new__(cls)
        obj.chart = chart
        obj.terms = terms
        obj._hash = None
        return obj

    # -- constructors --------------------------------------------------
    @classmethod
    def constant(cls, chart, value) -> "SuperFunction":
        return cls(chart, {(): value})

    @classmethod
    def zero(cls, chart) -> "SuperFunction":
        return cls._trusted(chart, {})

    @classmethod
    def coordinate(cls, chart, a: int) -> "SuperFunction":
        """The coordinate function x^a, using the chart's global index."""
        if a < 0 or a >= chart.dim:
            raise IndexError(f"coordinate index {a} out of range for chart {chart.name}")
        if a < chart.n:
            return cls(chart, {(): ScalarExpr.coordinate(chart.even[a])})
        return cls(chart, {(a - chart.n,): 1})

    @classmethod
    def scalar(cls, chart, e) -> "SuperFunction":
        return cls(chart, {(): e})

    # -- structure -----------------------------------------------------
    @property
    def body(self) -> ScalarExpr:
        return self.terms.get((), ScalarExpr.const(0))

    @property
    def is_structurally_zero(self) -> bool:
        return not self.terms

    def parity_homogeneous(self) -> bool:
        return len({len(k) % 2 for k in self.terms}) <= 1

    @property
    def parity(self) -> Parity:
        """Parity of a homogeneous function (zero counts as even)."""
        ps = {len(k) % 2 for k in self.terms}
        if len(ps) > 1:
            raise ValueError("function is not parity-homogeneous")
        return Parity(ps.pop()) if ps else Parity.EVEN

    def even_part(self) -> "SuperFunction":
        return SuperFunction._trusted(self.chart, {k: v for k, v in self.terms.items() if len(k) % 2 == 0})

    def odd_part(self) -> "SuperFunction":
        return SuperFunction._trusted(self.chart, {k: v for k, v in self.terms.items() if len(k) % 2 == 1})

    def nilpotent_part(self) -> "SuperFunction":
        return SuperFunction._trusted(self.chart, {k: v for k, v in self.terms.items() if k})

    def coefficient(self, mono: Iterable[int]) -> ScalarExpr:
        return self.terms.get(tuple(mono), ScalarExpr.const(0))

    def _check(self, other: "SuperFunction"):
        if other.chart != self.chart:
            raise ChartMismatch(f"chart mismatch: {self.chart.name} vs {other.chart.name}")

    def _wrap(self, other) -> "SuperFunction":
        if isinstance(other, SuperFunction):
            self._check(other)
            return other
        return SuperFunction.constant(self.chart, other)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        other = self._wrap(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            if k in out:
                s = out[k] + v
                if s.is_zero_exact:
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = v
        return SuperFunction._trusted(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return SuperFunction._trusted(self.chart, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, SuperFunction):
            c = _coerce_scalar(other)
            if c.is_zero_exact:
                return SuperFunction.zero(self.chart)
            return SuperFunction._trusted(self.chart, {k: v * c for k, v in self.terms.items()})
        return mul(self, other)

    def __rmul__(self, other):
        # scalars are even, so they commute with everything
        return self.__mul__(other)

    def __pow__(self, k: int):
        if k < 0:
            return invert(self) ** (-k)
        out = SuperFunction.constant(self.chart, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __truediv__(self, other):
        if isinstance(other, SuperFunction):
            return self * invert(other)
        return self * (1 / _coerce_scalar(other))

    def __rtruediv__(self, other):
        return invert(self) * _coerce_scalar(other)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ScalarExpr)):
            other = SuperFunction.constant(self.chart, other)
        if not isinstance(other, SuperFunction):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self.terms.items())))
        return self._hash

    # -- calculus and friends -------------------------------------------
    def partial(self, a: int) -> "SuperFunction":
        return partial(self, a)

    def is_zero(self) -> ZeroTest:
        return is_zero(self)

    def map_coefficients(self, fn) -> "SuperFunction":
        return SuperFunction(self.chart, {k: fn(v) for k, v in self.terms.items()})

    def with_chart(self, chart) -> "SuperFunction":
        """Reinterpret on a chart with the same odd dimension prefix (no checks on names)."""
        return SuperFunction._trusted(chart, dict(self.terms))

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        names = self.chart.odd
        parts = []
        for mono in sorted(self.terms, key=lambda k: (len(k), k)):
            c = self.terms[mono]
            cs = c.to_str()
            if not mono:
                parts.append(cs)
                continue
            gens = "*".join(names[i] for i in mono)
            if cs == "1":
                parts.append(gens)
            elif cs == "-1":
                parts.append(f"-{gens}")
            else:
                parts.append(f"({cs})*{gens}")
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"SuperFunction[{self.chart.name}]({self.to_str()})"


def mul(f: SuperFunction, g: SuperFunction) -> SuperFunction:
    """Graded product with Koszul signs."""
    f._check(g)
    out: dict[Monomial, ScalarExpr] = {}
    for mu, a in f.terms.items():
        for nu, b in g.terms.items():
            s = merge_sign(mu, nu)
            if not s:
                continue
            key = _merge(mu, nu) if mu and nu else (mu or nu)
            c = a * b
            if s < 0:
                c = -c
            prev = out.get(key)
            if prev is not None:
                c = prev + c
                if c.is_zero_exact:
                    del out[key]
                    continue
            out[key] = c
    return SuperFunction._trusted(f.chart, out)


def partial(f: SuperFunction, a: int) -> SuperFunction:
    """Derivative along coordinate ``a`` (left derivative for odd ``a``)."""
    chart = f.chart
    if a < 0 or a >= chart.dim:
        raise IndexError(f"coordinate index {a} out of range for chart {chart.name}")
    if a < chart.n:
        name = chart.even[a]
        return SuperFunction(chart, {k: v.diff(name) for k, v in f.terms.items()})
    k = a - chart.n
    out = {}
    for mono, c in f.terms.items():
        if k in mono:
            pos = mono.index(k)
            rest = mono[:pos] + mono[pos + 1:]
            out[rest] = -c if pos % 2 else c
    return SuperFunction._trusted(chart, out)


def _require_even_unit(f: SuperFunction, what: str) -> ScalarExpr:
    if not f.parity_homogeneous() or f.parity != Parity.EVEN:
        raise ValueError(f"{what} needs an even function")
    f0 = f.body
    if f0.is_zero_exact:
        raise NotInvertible(f"{what}: body is identically zero")
    return f0


def _series(f: SuperFunction, coeffs) -> SuperFunction:
    """sum_k coeffs(k) * (n / f0)^k where n is the nilpotent part of f."""
    f0 = f.body
    n = f.nilpotent_part() * (1 / f0)
    kmax = f.chart.m // 2
    out = SuperFunction.constant(f.chart, coeffs(0))
    power = SuperFunction.constant(f.chart, 1)
    for k in range(1, kmax + 1):
        power = power * n
        if power.is_structurally_zero:
            break
        out = out + power * coeffs(k)
    return out


def invert(f: SuperFunction) -> SuperFunction:
    f0 = _require_even_unit(f, "invert")
    return _series(f, lambda k: (-1) ** k) * (1 / f0)


def _binom_half(k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out *= (Fraction(1, 2) - i) / (i + 1)
    return out


def sqrt_even(f: SuperFunction) -> SuperFunction:
    """Square root with the positive branch taken on the body."""
    f0 = _require_even_unit(f, "sqrt_even")
    return _series(f, _binom_half) * ScalarExpr.apply("sqrt", f0)


def _function_derivative(fn: str, k: int, u: ScalarExpr) -> ScalarExpr:
    """k-th derivative of ``fn`` evaluated at ``u``."""
    if fn == "sin":
        base = ("sin", "cos", "sin", "cos")[k % 4]
        sign = (1, 1, -1, -1)[k % 4]
        return sign * ScalarExpr.apply(base, u)
    if fn == "cos":
        base = ("cos", "sin", "cos", "sin")[k % 4]
        sign = (1, -1, -1, 1)[k % 4]
        return sign * ScalarExpr.apply(base, u)
    if fn == "exp":
        return ScalarExpr.apply("exp", u)
    if fn == "log":
        if k == 0:
            return ScalarExpr.apply("log", u)
        return (-1) ** (k - 1) * math.factorial(k - 1) * u ** (-k)
    if fn == "sqrt":
        return _binom_half(k) * math.factorial(k) * ScalarExpr.apply("sqrt", u) * u ** (-k)
    raise ValueError(f"unknown function {fn!r}")


def apply_function(fn: str, f: SuperFunction) -> SuperFunction:
    """fn(f) for an even ``f`` by finite Taylor expansion around the body."""
    if not f.parity_homogeneous() or f.parity != Parity.EVEN:
        raise ValueError(f"{fn} needs an even argument")
    f0 = f.body
    n = f.nilpotent_part()
    out = SuperFunction.constant(f.chart, _function_derivative(fn, 0, f0))
    power = SuperFunction.constant(f.chart, 1)
    for k in range(1, f.chart.m // 2 + 1):
        power = power * n
        if power.is_structurally_zero:
            break
        out = out + power * (_function_derivative(fn, k, f0) / math.factorial(k))
    return out


def exp_even(f: SuperFunction) -> SuperFunction:
    return apply_function("exp", f)


def is_zero(f: SuperFunction) -> ZeroTest:
    """Zero test: exact on rational coefficients, sampled on transcendental ones."""
    if not f.terms:
        return ZeroTest("zero", "symbolic", 0.0)
    box = f.chart.box_dict
    method = "symbolic"
    worst = 0.0
    unknown = False
    for c in f.terms.values():
        r = scalar_zero_test(c, box)
        if r.status == "nonzero":
            return r
        if r.status == "unknown":
            unknown = True
        if r.method == "numeric":
            method = "numeric"
            worst = max(worst, r.max_abs or 0.0)
    if unknown:
        return ZeroTest("unknown", "numeric")
    return ZeroTest("zero", method, worst)


def supercommutator(f: SuperFunction, g: SuperFunction) -> SuperFunction:
    return mul(f, g) - (-1) ** (int(f.parity) * int(g.parity)) * mul(g, f)
