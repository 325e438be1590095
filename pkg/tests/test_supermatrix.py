from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from superkilling.charts import Chart
from superkilling.numeric import NumericChart, berezinian as num_ber
from superkilling.superalgebra import NotInvertible, SuperFunction
from superkilling.supermatrix import (SuperMatrix, berezinian, det_commutative, inverse, supertrace,
                                      supertranspose)

C = Chart("C", ("u", "v"), ("a", "b"), {"u": (0.5, 2.0), "v": (0.5, 2.0)})
u, v, a, b = C.coords()
PAR = (0, 0, 1, 1)


def M(rows):
    return SuperMatrix.build(C, PAR, PAR, rows)


def one(k=1):
    return SuperFunction.constant(C, k)


Z = SuperFunction.zero(C)


def test_identity_properties():
    I = SuperMatrix.identity(C, PAR)
    assert berezinian(I) == one()
    assert supertranspose(I).equals(I)
    assert supertrace(I) == one(0)  # 2 - 2


def test_even_block_transpose_is_ordinary():
    A = SuperMatrix.build(C, (0, 0), (0, 0), [[u, v], [one(3), u * v]])
    At = supertranspose(A)
    assert At[0, 1] == one(3) and At[1, 0] == v


def test_supertranspose_block_rule():
    A = M([[u, v, a, b], [one(), u, b, a], [a, b, u, v], [b, a, one(), u]])
    At = supertranspose(A)
    # [[P^T, R^T], [-Q^T, S^T]]
    assert At[0, 2] == A[2, 0] and At[2, 0] == -A[0, 2]
    assert At[3, 1] == -A[1, 3] and At[2, 3] == A[3, 2]


def test_block_diagonal_berezinian():
    A = M([[u, Z, Z, Z], [Z, v, Z, Z], [Z, Z, Z, one(-1)], [Z, Z, one(2), Z]])
    assert berezinian(A) == u * v / 2


def test_flat_metric_matrix_has_unit_berezinian():
    F = Chart("F", ("t",), ("xi1", "xi2"))
    o, z = SuperFunction.constant(F, 1), SuperFunction.zero(F)
    A = SuperMatrix.build(F, (0, 1, 1), (0, 1, 1), [[o, z, z], [z, z, -o], [z, o, z]])
    assert berezinian(A) == o


def test_fraction_free_determinant():
    rows = [[u, v, one()], [one(2), u * u, v], [v, one(), u]]
    d = det_commutative(rows, C)
    want = u * (u ** 3 - v) - v * (2 * u - v * v) + (2 - u * u * v)
    assert d == want


def test_inverse_and_error():
    A = M([[u, v * a * b, a, Z], [Z, one(), b, a], [a, Z, one(), Z], [b, a, v, u]])
    Ai = inverse(A)
    assert (A @ Ai).equals(SuperMatrix.identity(C, PAR))
    sing = M([[u, Z, Z, Z], [Z, v, Z, Z], [Z, Z, a * b, Z], [Z, Z, Z, one()]])
    with pytest.raises(NotInvertible):
        berezinian(sing)


def test_berezinian_against_other_schur_complement():
    A = M([[1 + u, a * b, a, b], [v, 2 + a * b, b, Z], [b, a, 1 + v, u * a * b], [a, Z, one(), 3 + u]])
    nc = NumericChart(C, {"u": np.array([0.6, 1.4]), "v": np.array([0.9, 1.7])})
    rows = [[nc.function(A[i, j]) for j in range(4)] for i in range(4)]
    assert (num_ber(nc, rows, list(PAR)) - nc.function(berezinian(A))).max_abs() < 1e-12


_small = st.integers(-2, 2)


@st.composite
def even_matrix(draw):
    def ent(i, j):
        if PAR[i] == PAR[j]:
            base = one(draw(_small)) + (one(3) if i == j else Z)
            return base + a * b * draw(_small)
        return a * draw(_small) + b * draw(_small)
    return M([[ent(i, j) for j in range(4)] for i in range(4)])


@given(even_matrix(), even_matrix())
def test_berezinian_multiplicative_and_transpose_invariant(A, B):
    try:
        bA, bB = berezinian(A), berezinian(B)
    except NotInvertible:
        return
    AB = A @ B
    try:
        bAB = berezinian(AB)
    except NotInvertible:
        return
    assert bAB == bA * bB
    assert berezinian(supertranspose(A)) == bA
