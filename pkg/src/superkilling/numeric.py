"""Floating-point model of the function algebra, used as an independent oracle.

A :class:`NumericSuperValue` holds, for a batch of sample points, the
coefficients of an element of  J_r(n) (x) Lambda(k):  truncated Taylor jets of
order ``r`` in ``n`` even directions tensored with the exterior algebra on
``k`` generators.  With ``r = 0`` this is the plain 2^k-dimensional exterior
algebra.  Even derivatives read off jet coefficients, odd derivatives are bit
operations.  Nothing here calls the symbolic differentiation or the symbolic
product, so agreement with the symbolic path is a genuine cross-check.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .scalar import ScalarExpr


class PoleError(ArithmeticError):
    """Evaluation hit a (numerical) pole; the caller should resample."""


@lru_cache(maxsize=None)
def _jets(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    out = [()] if n == 0 else []
    if n:
        for deg in range(r + 1):
            for combo in itertools.combinations_with_replacement(range(n), deg):
                alpha = [0] * n
                for i in combo:
                    alpha[i] += 1
                out.append(tuple(alpha))
    return tuple(out)


def _popcount(x: int) -> int:
    return bin(x).count("1")


class NumericAlgebra:
    """Multiplication tables for J_r(n) (x) Lambda(k)."""

    def __init__(self, n: int, r: int, k: int):
        self.n, self.r, self.k = n, r, k
        self.jets = _jets(n, r)
        self.jet_index = {a: i for i, a in enumerate(self.jets)}
        self.nodd = 1 << k
        self.size = len(self.jets) * self.nodd
        I, J, T, S = [], [], [], []
        for (ia, a), (ib, b) in itertools.product(enumerate(self.jets), repeat=2):
            c = tuple(x + y for x, y in zip(a, b))
            if c not in self.jet_index:
                continue
            ic = self.jet_index[c]
            for ma in range(self.nodd):
                for mb in range(self.nodd):
                    if ma & mb:
                        continue
                    # sign of xi^A xi^B: generators of B jump over larger ones in A
                    inv = sum(_popcount(ma >> (j + 1)) for j in range(k) if mb >> j & 1)
                    I.append(ia * self.nodd + ma)
                    J.append(ib * self.nodd + mb)
                    T.append(ic * self.nodd + (ma | mb))
                    S.append(-1.0 if inv % 2 else 1.0)
        self.I = np.array(I, dtype=np.intp)
        self.J = np.array(J, dtype=np.intp)
        self.T = np.array(T, dtype=np.intp)
        self.S = np.array(S)
        self.scatter = np.zeros((len(I), self.size))
        self.scatter[np.arange(len(I)), self.T] = self.S
        # odd left derivatives and even derivatives as linear maps on coefficient vectors
        self.odd_maps = []
        for i in range(k):
            M = np.zeros((self.size, self.size))
            for ja in range(len(self.jets)):
                for mask in range(self.nodd):
                    if mask >> i & 1:
                        sign = -1.0 if _popcount(mask & ((1 << i) - 1)) % 2 else 1.0
                        M[ja * self.nodd + mask, ja * self.nodd + (mask & ~(1 << i))] = sign
            self.odd_maps.append(M)
        self.even_maps = []
        for mu in range(n):
            M = np.zeros((self.size, self.size))
            for ja, a in enumerate(self.jets):
                up = list(a)
                up[mu] += 1
                up = tuple(up)
                if up in self.jet_index:
                    ju = self.jet_index[up]
                    for mask in range(self.nodd):
                        M[ju * self.nodd + mask, ja * self.nodd + mask] = up[mu]
            self.even_maps.append(M)

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return (a[:, self.I] * b[:, self.J]) @ self.scatter


@lru_cache(maxsize=None)
def algebra(n: int, r: int, k: int) -> NumericAlgebra:
    return NumericAlgebra(n, r, k)


def _fn_derivatives(fn: str, x: np.ndarray, upto: int) -> list[np.ndarray]:
    out = []
    for j in range(upto + 1):
        if fn == "sin":
            out.append([np.sin, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v)][j % 4](x))
        elif fn == "cos":
            out.append([np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v), np.sin][j % 4](x))
        elif fn == "exp":
            out.append(np.exp(x))
        elif fn == "log":
            out.append(np.log(x) if j == 0 else (-1) ** (j - 1) * math.factorial(j - 1) * x ** (-j))
        elif fn == "sqrt":
            c = 1.0
            for i in range(j):
                c *= 0.5 - i
            out.append(c * x ** (0.5 - j))
        else:
            raise ValueError(f"unknown function {fn!r}")
    return out


class NumericSuperValue:
    """Element of J_r(n) (x) Lambda(k) at P sample points; coefficients shape (P, size)."""

    __array_priority__ = 100
    __slots__ = ("alg", "c", "valid")

    def __init__(self, alg: NumericAlgebra, c: np.ndarray, valid: int | None = None):
        self.alg = alg
        self.c = c
        self.valid = alg.r if valid is None else valid

    # -- constructors --------------------------------------------------
    @classmethod
    def constant(cls, alg: NumericAlgebra, value, points: int) -> "NumericSuperValue":
        c = np.zeros((points, alg.size))
        c[:, 0] = value
        return cls(alg, c)

    @classmethod
    def generator(cls, alg: NumericAlgebra, i: int, points: int) -> "NumericSuperValue":
        c = np.zeros((points, alg.size))
        c[:, 1 << i] = 1.0
        return cls(alg, c)

    @classmethod
    def even_coordinate(cls, alg: NumericAlgebra, mu: int, values: np.ndarray) -> "NumericSuperValue":
        c = np.zeros((len(values), alg.size))
        c[:, 0] = values
        if alg.r >= 1:
            e = [0] * alg.n
            e[mu] = 1
            c[:, alg.jet_index[tuple(e)] * alg.nodd] = 1.0
        return cls(alg, c)

    @property
    def points(self) -> int:
        return self.c.shape[0]

    def _new(self, c, valid=None):
        return NumericSuperValue(self.alg, c, self.valid if valid is None else valid)

    def _lift(self, other):
        if isinstance(other, NumericSuperValue):
            if other.alg is not self.alg:
                raise ValueError("numeric values from different algebras")
            return other
        return NumericSuperValue.constant(self.alg, np.asarray(other, dtype=float), self.points)

    # -- ring operations -----------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        return self._new(self.c + o.c, min(self.valid, o.valid))

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.c)

    def __sub__(self, other):
        o = self._lift(other)
        return self._new(self.c - o.c, min(self.valid, o.valid))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, NumericSuperValue):
            return self._new(self.c * np.asarray(other, dtype=float).reshape(-1, 1)
                             if np.ndim(other) else self.c * float(other))
        o = self._lift(other)
        return self._new(self.alg.multiply(self.c, o.c), min(self.valid, o.valid))

    def __rmul__(self, other):
        return self * other  # plain numbers are central

    def __truediv__(self, other):
        if isinstance(other, NumericSuperValue):
            return self * other.inverse()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("integer powers only")
        if k < 0:
            return self.inverse() ** (-k)
        out = NumericSuperValue.constant(self.alg, 1.0, self.points)
        out.valid = self.valid
        for _ in range(k):
            out = out * self
        return out

    # -- structure -----------------------------------------------------
    @property
    def body(self) -> np.ndarray:
        return self.c[:, 0]

    def value_part(self) -> np.ndarray:
        """Grassmann coefficients at jet order zero, shape (P, 2^k)."""
        if self.valid < 0:
            raise ValueError("value of this jet is no longer determined")
        return self.c[:, : self.alg.nodd]

    def nilpotent(self) -> "NumericSuperValue":
        c = self.c.copy()
        c[:, 0] = 0.0
        return self._new(c)

    def _series(self, derivs: list[np.ndarray]) -> "NumericSuperValue":
        """sum_j derivs[j] / j! * n^j with n the nilpotent part."""
        n = self.nilpotent()
        out = NumericSuperValue.constant(self.alg, derivs[0], self.points)
        out.valid = self.valid
        power = NumericSuperValue.constant(self.alg, 1.0, self.points)
        for j in range(1, len(derivs)):
            power = power * n
            if not np.any(power.c):
                break
            out = out + power * (derivs[j] / math.factorial(j))
        return out

    def _nil_order(self) -> int:
        return self.alg.r + self.alg.k // 2 + 1

    def _check_body(self, what: str):
        if np.any(np.abs(self.body) < 1e-12) or not np.all(np.isfinite(self.body)):
            raise PoleError(f"{what}: body vanishes at a sample point")

    def inverse(self) -> "NumericSuperValue":
        self._check_body("inverse")
        x = self.body
        N = self._nil_order()
        return self._series([(-1) ** j * math.factorial(j) * x ** (-(j + 1)) for j in range(N + 1)])

    def apply(self, fn: str) -> "NumericSuperValue":
        x = self.body
        if fn in ("log", "sqrt"):
            self._check_body(fn)
        with np.errstate(all="ignore"):
            derivs = _fn_derivatives(fn, x, self._nil_order())
        if not all(np.all(np.isfinite(d)) for d in derivs):
            raise PoleError(f"{fn}: invalid value at a sample point")
        return self._series(derivs)

    def sqrt(self):
        return self.apply("sqrt")

    def sin(self):
        return self.apply("sin")

    def cos(self):
        return self.apply("cos")

    def exp(self):
        return self.apply("exp")

    def log(self):
        return self.apply("log")

    # -- derivatives ---------------------------------------------------
    def odd_partial(self, i: int) -> "NumericSuperValue":
        return self._new(self.c @ self.alg.odd_maps[i])

    def even_partial(self, mu: int) -> "NumericSuperValue":
        if self.alg.r == 0:
            raise ValueError("no jet directions available for even derivatives")
        return self._new(self.c @ self.alg.even_maps[mu], self.valid - 1)

    def max_abs(self) -> float:
        v = self.value_part()
        return float(np.max(np.abs(v))) if v.size else 0.0


class _JetLib:
    @staticmethod
    def sin(v):
        return v.sin() if isinstance(v, NumericSuperValue) else np.sin(v)

    @staticmethod
    def cos(v):
        return v.cos() if isinstance(v, NumericSuperValue) else np.cos(v)

    @staticmethod
    def exp(v):
        return v.exp() if isinstance(v, NumericSuperValue) else np.exp(v)

    @staticmethod
    def log(v):
        return v.log() if isinstance(v, NumericSuperValue) else np.log(v)

    @staticmethod
    def sqrt(v):
        return v.sqrt() if isinstance(v, NumericSuperValue) else np.sqrt(v)


class NumericChart:
    """Sample points on a chart plus the numeric algebra used there.

    ``extra_odd`` adds auxiliary generators after the chart's own.
    """

    def __init__(self, chart, points: Mapping[str, np.ndarray], order: int = 2, extra_odd: int = 0,
                 count: int | None = None):
        self.chart = chart
        self.order = order
        self.k = chart.m + extra_odd
        self.alg = algebra(chart.n, order if chart.n else 0, self.k)
        self.points = {name: np.asarray(points[name], dtype=float) for name in chart.even}
        self.P = len(next(iter(self.points.values()))) if self.points else (count or 1)
        self.env = {name: NumericSuperValue.even_coordinate(self.alg, mu, self.points[name])
                    for mu, name in enumerate(chart.even)}

    def scalar(self, e: ScalarExpr) -> NumericSuperValue:
        """Jet of a coefficient, evaluated through the numeric model of its operations."""
        with np.errstate(all="ignore"):
            v = e.evaluate(self.env, lib=_JetLib)
        if not isinstance(v, NumericSuperValue):
            v = NumericSuperValue.constant(self.alg, np.broadcast_to(np.asarray(v, dtype=float), (self.P,)), self.P)
        if not np.all(np.isfinite(v.c)):
            raise PoleError("non-finite coefficient at a sample point")
        return v

    def constant(self, value) -> NumericSuperValue:
        return NumericSuperValue.constant(self.alg, value, self.P)

    def zero(self) -> NumericSuperValue:
        return self.constant(0.0)

    def generator(self, i: int) -> NumericSuperValue:
        return NumericSuperValue.generator(self.alg, i, self.P)

    def function(self, f) -> NumericSuperValue:
        """numeric_eval of a SuperFunction: sum_mu f_mu * xi^mu built by numeric products."""
        out = self.zero()
        for mono, c in f.terms.items():
            term = self.scalar(c)
            for i in mono:
                term = term * self.generator(i)
            out = out + term
        return out

    def coordinate(self, a: int) -> NumericSuperValue:
        ch = self.chart
        if a < ch.n:
            return self.env[ch.even[a]]
        return self.generator(a - ch.n)

    def partial(self, v: NumericSuperValue, a: int) -> NumericSuperValue:
        ch = self.chart
        return v.even_partial(a) if a < ch.n else v.odd_partial(a - ch.n)

    def parity(self, a: int) -> int:
        return 0 if a < self.chart.n else 1


def numeric_eval(f, point: Mapping[str, float], order: int = 0) -> NumericSuperValue:
    """Evaluate a SuperFunction at one point as an element of the exterior algebra."""
    pts = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in point.items()}
    return NumericChart(f.chart, pts, order=order).function(f)


# -- numeric counterparts of the geometric formulas -------------------------

def _sgn(k: int) -> float:
    return -1.0 if k % 2 else 1.0


def apply_field(nc: NumericChart, X: Sequence[NumericSuperValue], f: NumericSuperValue) -> NumericSuperValue:
    out = nc.zero()
    for a, xa in enumerate(X):
        out = out + xa * nc.partial(f, a)
    return out


def homological_residuals(nc, Q):
    return [apply_field(nc, Q, Q[b]) for b in range(len(Q))]


def lie_derivative(nc: NumericChart, g, X, px: int):
    d = len(X)
    out = [[None] * d for _ in range(d)]
    dX = [[nc.partial(X[c], b) for c in range(d)] for b in range(d)]
    for b in range(d):
        pb = nc.parity(b)
        for a in range(d):
            pa = nc.parity(a)
            t1 = nc.zero()
            t2 = nc.zero()
            for c in range(d):
                t1 = t1 + dX[b][c] * g[c][a]
                t2 = t2 + dX[a][c] * g[c][b]
            out[b][a] = (t1 * _sgn(px * pa) + t2 * _sgn(pb * (px + pa))
                         + apply_field(nc, X, g[b][a]) * _sgn(px * (pa + pb)))
    return out


def pairing(nc, g, X, Y, py: int):
    out = nc.zero()
    d = len(X)
    for a in range(d):
        for b in range(d):
            out = out + X[a] * Y[b] * g[b][a] * _sgn(py * nc.parity(a))
    return out


def _det_laplace(M):
    n = len(M)
    if n == 0:
        return None
    if n == 1:
        return M[0][0]
    out = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_laplace(minor) * _sgn(j)
        out = term if out is None else out + term
    return out


def gauss_jordan_inverse(nc, M):
    """Left-row-operation inverse with partial pivoting on |body|."""
    n = len(M)
    A = [list(M[i]) + [nc.constant(1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    for k in range(n):
        p = max(range(k, n), key=lambda r: float(np.min(np.abs(A[r][k].body))))
        A[k], A[p] = A[p], A[k]
        inv = A[k][k].inverse()
        A[k] = [inv * x for x in A[k]]
        for i in range(n):
            if i != k:
                f = A[i][k]
                A[i] = [x - f * y for x, y in zip(A[i], A[k])]
    return [row[n:] for row in A]


def berezinian(nc, M, parities):
    """Ber via the even-block Schur complement: det(P) / det(S - R P^-1 Q)."""
    E = [i for i, p in enumerate(parities) if p == 0]
    O = [i for i, p in enumerate(parities) if p == 1]
    P = [[M[i][j] for j in E] for i in E]
    if not O:
        return _det_laplace(P) if P else nc.constant(1.0)
    Q = [[M[i][j] for j in O] for i in E]
    R = [[M[i][j] for j in E] for i in O]
    S = [[M[i][j] for j in O] for i in O]
    if E:
        Pinv = gauss_jordan_inverse(nc, P)
        schur = [[S[i][j] - sum((R[i][k] * Pinv[k][l] * Q[l][j] for k in range(len(E)) for l in range(len(E))),
                                nc.zero()) for j in range(len(O))] for i in range(len(O))]
        return _det_laplace(P) * _det_laplace(schur).inverse()
    return _det_laplace(S).inverse()


def divergence(nc, rho, X, px: int):
    flux = nc.zero()
    for a, xa in enumerate(X):
        flux = flux + nc.partial(xa * rho, a) * _sgn(nc.parity(a) * (px + 1))
    return rho.inverse() * flux


def metric_trace(nc, ginv, T):
    d = len(T)
    out = nc.zero()
    for a in range(d):
        for b in range(d):
            out = out + ginv[a][b] * T[b][a] * _sgn(nc.parity(a))
    return out


def canonical_density(nc, g):
    return berezinian(nc, g, [nc.parity(a) for a in range(len(g))]).sqrt()


# -- plain numeric supermatrices (acceptance suite for the Berezinian) -------

def random_even_supermatrix(rng: np.random.Generator, p: int, q: int, alg: NumericAlgebra,
                            points: int = 1, scale: float = 1.0):
    """Random even-format (p|q) matrix over Lambda(k) with well-conditioned body."""
    k = alg.k
    n = p + q
    par = [0] * p + [1] * q
    M = [[None] * n for _ in range(n)]
    masks_even = [m for m in range(1 << k) if _popcount(m) % 2 == 0]
    masks_odd = [m for m in range(1 << k) if _popcount(m) % 2 == 1]
    for i in range(n):
        for j in range(n):
            c = np.zeros((points, alg.size))
            masks = masks_even if par[i] == par[j] else masks_odd
            for mk in masks:
                c[:, mk] = rng.normal(scale=scale, size=points)
            if par[i] == par[j] and i == j:
                c[:, 0] += 3.0 * np.sign(rng.normal(size=points))
            M[i][j] = NumericSuperValue(alg, c)
    return M, par


def supertranspose(M, parities):
    """[[P, Q], [R, S]] -> [[P^T, R^T], [-Q^T, S^T]] for an even-format numeric matrix."""
    n = len(M)
    return [[-M[j][i] if parities[i] == 1 and parities[j] == 0 else M[j][i] for j in range(n)] for i in range(n)]


def matmul(nc, A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [[sum((A[i][l] * B[l][j] for l in range(k)), nc.zero()) for j in range(m)] for i in range(n)]
