"""Parity-blocked matrices of superfunctions and the Berezinian."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .superalgebra import NotInvertible, SuperFunction, invert, scalar_zero_test


def _is_unit(f: SuperFunction) -> bool:
    b = f.body
    if b.is_zero_exact:
        return False
    return scalar_zero_test(b, f.chart.box_dict).status == "nonzero"


@dataclass(frozen=True)
class SuperMatrix:
    """Matrix with row/column parities; entry (r, c) has parity p(r)+p(c) (+1 if odd)."""

    chart: object
    row_parities: tuple[int, ...]
    col_parities: tuple[int, ...]
    entries: tuple[tuple[SuperFunction, ...], ...]
    odd: bool = False

    def __post_init__(self):
        if len(self.entries) != len(self.row_parities):
            raise ValueError("row count does not match row parities")
        for r, row in enumerate(self.entries):
            if len(row) != len(self.col_parities):
                raise ValueError("column count does not match column parities")
            for c, f in enumerate(row):
                if f.chart != self.chart:
                    raise ValueError("entries live on different charts")
                if f.terms:
                    want = (self.row_parities[r] + self.col_parities[c] + int(self.odd)) % 2
                    if not f.parity_homogeneous() or int(f.parity) != want:
                        raise ValueError(f"entry ({r},{c}) has the wrong parity")

    @classmethod
    def build(cls, chart, row_parities, col_parities, rows, odd=False) -> "SuperMatrix":
        return cls(chart, tuple(row_parities), tuple(col_parities),
                   tuple(tuple(r) for r in rows), odd)

    @classmethod
    def identity(cls, chart, parities) -> "SuperMatrix":
        n = len(parities)
        one = SuperFunction.constant(chart, 1)
        zero = SuperFunction.zero(chart)
        return cls.build(chart, parities, parities,
                         [[one if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def shape(self):
        return len(self.row_parities), len(self.col_parities)

    def __getitem__(self, rc):
        r, c = rc
        return self.entries[r][c]

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        if self.col_parities != other.row_parities:
            raise ValueError("incompatible supermatrix shapes")
        k = len(self.col_parities)
        rows = []
        for r in range(len(self.row_parities)):
            row = []
            for c in range(len(other.col_parities)):
                acc = SuperFunction.zero(self.chart)
                for j in range(k):
                    a, b = self.entries[r][j], other.entries[j][c]
                    if a.terms and b.terms:
                        acc = acc + a * b
                row.append(acc)
            rows.append(row)
        return SuperMatrix.build(self.chart, self.row_parities, other.col_parities, rows,
                                 self.odd != other.odd)

    def __add__(self, other):
        return SuperMatrix.build(self.chart, self.row_parities, self.col_parities,
                                 [[a + b for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.entries, other.entries)], self.odd)

    def __sub__(self, other):
        return SuperMatrix.build(self.chart, self.row_parities, self.col_parities,
                                 [[a - b for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.entries, other.entries)], self.odd)

    def scale(self, f) -> "SuperMatrix":
        """Left multiplication of every entry by an even function or scalar."""
        return SuperMatrix.build(self.chart, self.row_parities, self.col_parities,
                                 [[e * f if not isinstance(f, SuperFunction) else f * e for e in r]
                                  for r in self.entries], self.odd)

    def map(self, fn) -> "SuperMatrix":
        return SuperMatrix.build(self.chart, self.row_parities, self.col_parities,
                                 [[fn(e) for e in r] for r in self.entries], self.odd)

    def equals(self, other: "SuperMatrix") -> bool:
        return all(a == b for r1, r2 in zip(self.entries, other.entries) for a, b in zip(r1, r2))

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> list[list[SuperFunction]]:
        return [[self.entries[r][c] for c in cols] for r in rows]

    def even_rows(self):
        return [i for i, p in enumerate(self.row_parities) if p == 0]

    def odd_rows(self):
        return [i for i, p in enumerate(self.row_parities) if p == 1]

    def __str__(self):
        return "[" + ",\n ".join("[" + ", ".join(e.to_str() for e in r) + "]" for r in self.entries) + "]"


def supertranspose(A: SuperMatrix) -> SuperMatrix:
    """[[P, Q], [R, S]] -> [[P^T, R^T], [-Q^T, S^T]] for even-format matrices."""
    if A.odd:
        raise ValueError("supertranspose is only defined here for even-format matrices")
    rp, cp = A.col_parities, A.row_parities
    rows = []
    for i in range(len(rp)):
        row = []
        for j in range(len(cp)):
            e = A.entries[j][i]
            row.append(-e if rp[i] == 1 and cp[j] == 0 else e)
        rows.append(row)
    return SuperMatrix.build(A.chart, rp, cp, rows)


def supertrace(A: SuperMatrix) -> SuperFunction:
    if A.row_parities != A.col_parities:
        raise ValueError("supertrace needs a square matrix with matching parities")
    acc = SuperFunction.zero(A.chart)
    for i, p in enumerate(A.row_parities):
        acc = acc + (A.entries[i][i] if p == 0 else -A.entries[i][i])
    return acc


def _laplace(M: list[list[SuperFunction]], chart) -> SuperFunction:
    n = len(M)
    if n == 0:
        return SuperFunction.constant(chart, 1)
    if n == 1:
        return M[0][0]
    acc = SuperFunction.zero(chart)
    for j in range(n):
        if not M[0][j].terms:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _laplace(minor, chart)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def det_commutative(M: list[list[SuperFunction]], chart) -> SuperFunction:
    """Determinant over even (commuting) entries by fraction-free elimination.

    Divisions by the previous pivot are exact; they are carried out as
    multiplication by the inverse of a unit pivot.  Falls back to cofactor
    expansion when a column has no unit pivot.
    """
    n = len(M)
    if n == 0:
        return SuperFunction.constant(chart, 1)
    A = [list(r) for r in M]
    sign = 1
    prev_inv = None
    for k in range(n - 1):
        p = next((r for r in range(k, n) if _is_unit(A[r][k])), None)
        if p is None:
            return _laplace(M, chart)
        if p != k:
            A[k], A[p] = A[p], A[k]
            sign = -sign
        piv = A[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                v = A[i][j] * piv - A[i][k] * A[k][j]
                A[i][j] = v if prev_inv is None else v * prev_inv
            A[i][k] = SuperFunction.zero(chart)
        prev_inv = invert(piv)
    d = A[n - 1][n - 1]
    return d if sign > 0 else -d


def inverse_rows(M: list[list[SuperFunction]], chart) -> list[list[SuperFunction]]:
    """Gauss-Jordan inverse using only left row operations (valid for supermatrices)."""
    n = len(M)
    one = SuperFunction.constant(chart, 1)
    zero = SuperFunction.zero(chart)
    A = [list(M[i]) + [one if i == j else zero for j in range(n)] for i in range(n)]
    for k in range(n):
        p = next((r for r in range(k, n) if _is_unit(A[r][k])), None)
        if p is None:
            raise NotInvertible("matrix body is singular")
        A[k], A[p] = A[p], A[k]
        pinv = invert(A[k][k])
        A[k] = [pinv * x if x.terms else x for x in A[k]]
        for i in range(n):
            if i == k or not A[i][k].terms:
                continue
            f = A[i][k]
            A[i] = [x - f * y if y.terms else x for x, y in zip(A[i], A[k])]
    return [row[n:] for row in A]


def inverse(A: SuperMatrix) -> SuperMatrix:
    if A.shape[0] != A.shape[1] or A.odd:
        raise ValueError("inverse needs a square even-format matrix")
    rows = inverse_rows([list(r) for r in A.entries], A.chart)
    return SuperMatrix.build(A.chart, A.col_parities, A.row_parities, rows)


def berezinian(A: SuperMatrix) -> SuperFunction:
    """Ber A = det(P - Q S^-1 R) / det(S) with S the odd-odd block."""
    if A.odd:
        raise ValueError("Berezinian needs an even-format matrix")
    if A.row_parities != A.col_parities:
        raise ValueError("Berezinian needs a square matrix with matching parities")
    chart = A.chart
    E, O = A.even_rows(), A.odd_rows()
    P, Q = A.block(E, E), A.block(E, O)
    R, S = A.block(O, E), A.block(O, O)
    if not O:
        return det_commutative(P, chart)
    try:
        Sinv = inverse_rows(S, chart)
    except NotInvertible as exc:
        raise NotInvertible("odd-odd block of the supermatrix is singular") from exc
    schur = []
    for i in range(len(E)):
        row = []
        for j in range(len(E)):
            acc = P[i][j]
            for k in range(len(O)):
                if not Q[i][k].terms:
                    continue
                for l in range(len(O)):
                    if Sinv[k][l].terms and R[l][j].terms:
                        acc = acc - Q[i][k] * Sinv[k][l] * R[l][j]
            row.append(acc)
        schur.append(row)
    return det_commutative(schur, chart) * invert(det_commutative(S, chart))


def body_matrix(A: SuperMatrix):
    return [[e.body for e in r] for r in A.entries]
