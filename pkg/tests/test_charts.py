from __future__ import annotations

import numpy as np
import pytest

from superkilling.charts import (Chart, CoordinateChange, embed, linear_change, pullback_metric_components,
                                 transform_metric, transform_vector)
from superkilling.geometry import MetricTensor, VectorField, pairing
from superkilling.numeric import NumericChart, berezinian as num_ber
from superkilling.samples import bundled_changes, bundled_metrics, random_field
from superkilling.superalgebra import ChartMismatch, NotInvertible, SuperFunction, apply_function, is_zero, sqrt_even
from superkilling.scalar import ScalarExpr

M = Chart("M", ("t",), ("xi1", "xi2"), {"t": (0.5, 3.0)})
N = Chart("N", ("s",), ("e1", "e2"), {"s": (0.5, 3.0)})
t, x1, x2 = M.coords()
s, e1, e2 = N.coords()
ONE_M = SuperFunction.constant(M, 1)
ZERO_M = SuperFunction.zero(M)


def test_chart_validation():
    with pytest.raises(ValueError):
        Chart("A", ("t",), ("t",))
    with pytest.raises(ValueError):
        Chart("A", ("t",), ("xi",), {"xi": (0, 1)})
    with pytest.raises(ValueError):
        Chart("A", ("t",), (), {"t": (2, 1)})
    A = Chart("A", ("u", "v"), ("a",))
    assert A.parities == (0, 0, 1) and A.index("a") == 2


def test_identity_jacobian():
    J = CoordinateChange.identity(M).jacobian()
    for r in range(3):
        for c in range(3):
            assert J[r, c] == (ONE_M if r == c else ZERO_M)


def test_odd_scaling_jacobian_is_diagonal():
    c = CoordinateChange(M, N, (t, 3 * x1, x2), (s, e1 / 3, e2))
    J = c.jacobian()
    assert [J[i, i] for i in range(3)] == [ONE_M, 3 * ONE_M, ONE_M]
    assert all(J[i, j].is_structurally_zero for i in range(3) for j in range(3) if i != j)


def test_odd_shear_jacobian_places_odd_entry():
    c = CoordinateChange(M, N, (t, x1 + t * x2, x2), (s, e1 - s * e2, e2))
    J = c.jacobian()
    # row e1 (odd target), column t (even source): odd entry
    assert J[1, 0] == x2
    assert J[1, 2] == t
    assert J.row_parities == (0, 1, 1) and J.col_parities == (0, 1, 1)


def test_pullback_examples():
    swap = CoordinateChange(M, N, (t, x2, x1), (s, e2, e1))
    assert swap.pullback(e1) == x2
    assert swap.pullback(e1 * e2) == -(x1 * x2)
    dbl = CoordinateChange(M, N, (2 * t, x1, x2), (s / 2, e1, e2))
    assert dbl.pullback(s ** -2) == (t ** -2) * ScalarExpr.const(1) / 4


def test_pullback_is_parity_preserving_homomorphism(rng):
    for c in bundled_changes()[2]:
        for _ in range(3):
            f = random_field(rng, N, 0).components[0]
            g = random_field(rng, N, 1).components[0]
            assert c.pullback(f * g) == c.pullback(f) * c.pullback(g)
            if g.terms:
                assert c.pullback(g).parity == g.parity


def test_pullback_expands_nilpotent_shift():
    c = CoordinateChange(M, N, (t + x1 * x2, x1, x2), (s - e1 * e2, e1, e2))
    f = apply_function("sin", s)
    got = c.pullback(f)
    want = apply_function("sin", t) + apply_function("cos", t) * x1 * x2
    assert (got - want).is_zero().zero


def test_change_validation():
    with pytest.raises(ValueError):
        CoordinateChange(M, N, (x1, t, x2))
    with pytest.raises(NotInvertible):
        CoordinateChange(M, N, (t, x1, x1))
    with pytest.raises(ValueError):
        CoordinateChange(M, N, (t, x1, x2), (s, e1, 2 * e2))


def test_transform_metric_identity_and_odd_scaling():
    g = MetricTensor(N, [[SuperFunction.constant(N, 1), SuperFunction.zero(N), SuperFunction.zero(N)],
                         [SuperFunction.zero(N), SuperFunction.zero(N), SuperFunction.constant(N, -1)],
                         [SuperFunction.zero(N), SuperFunction.constant(N, 1), SuperFunction.zero(N)]])
    ident = CoordinateChange(N, N, tuple(N.coords()), tuple(N.coords()))
    assert transform_metric(ident, g).rows() == g.rows()
    c = CoordinateChange(M, N, (t, 5 * x1, x2), (s, e1 / 5, e2))
    h = transform_metric(c, g)
    assert h[2, 1] == 5 * ONE_M and h[1, 2] == -5 * ONE_M and h[0, 0] == ONE_M


def test_reduced_sphere_embedding_pulls_back_round_metric():
    S = Chart("S", ("theta", "phi"), (), {"theta": (0.2, 2.9), "phi": (0.0, 6.2)})
    E = Chart("E", ("x", "y", "z"), ())
    th, ph = S.coords()
    sin = lambda f: apply_function("sin", f)  # noqa: E731
    cos = lambda f: apply_function("cos", f)  # noqa: E731
    emb = CoordinateChange(S, E, (sin(th) * cos(ph), sin(th) * sin(ph), cos(th)), name="emb",
                           require_invertible=False)
    one, z = SuperFunction.constant(E, 1), SuperFunction.zero(E)
    G = pullback_metric_components(emb, [[one, z, z], [z, one, z], [z, z, one]])
    assert is_zero(G[0][0] - 1).zero
    assert is_zero(G[1][1] - sin(th) ** 2).zero
    assert G[0][1].is_structurally_zero


def test_transform_vector_examples():
    c = CoordinateChange(M, N, (t, 7 * x1, x2), (s, e1 / 7, e2))
    Y = transform_vector(c, VectorField.coordinate(M, 1))
    assert Y.components[1] == 7 * SuperFunction.constant(N, 1)
    T = Chart("T", ("t",), (), {"t": (0.5, 3.0)})
    U = Chart("U", ("u",), (), {"u": (0.5, 9.0)})
    tt, = T.coords()
    u, = U.coords()
    sq = CoordinateChange(T, U, (tt * tt,), (sqrt_even(u),))
    Z = transform_vector(sq, VectorField.coordinate(T, 0))
    assert Z.components[0] == 2 * sqrt_even(u)


def test_transform_vector_needs_inverse():
    c = CoordinateChange(M, N, (t, x1, x2))
    with pytest.raises(NotInvertible):
        transform_vector(c, VectorField.coordinate(M, 0))


def test_pairing_invariance_under_changes(rng):
    g = bundled_metrics("R12")["warped"]
    gN = MetricTensor(N, [[f.with_chart(N).map_coefficients(lambda e: e.subs({"t": ScalarExpr.coordinate("s")}))
                           for f in row] for row in g.rows()])
    for c in bundled_changes()[2]:
        gM = transform_metric(c, gN)
        X, Y = random_field(rng, M, 0, degree=1), random_field(rng, M, 1, degree=1)
        lhs = pairing(gM, X, Y)
        rhs = c.pullback(pairing(gN, transform_vector(c, X), transform_vector(c, Y)))
        assert (lhs - rhs).is_zero().zero


def test_berezinian_of_composition_is_product():
    _, _, chs = bundled_changes()
    back = CoordinateChange(N, M, (s, e1 + e2 * s * s, e2), (t, x1 - x2 * t * t, x2), name="back")
    for c in chs:
        comp = c.compose(back)
        lhs = comp.berezinian()
        rhs = c.berezinian() * c.pullback(back.berezinian())
        assert (lhs - rhs).is_zero().zero
        # numeric oracle on the composite Jacobian
        nc = NumericChart(M, {"t": np.array([0.7, 1.9])})
        J = [[nc.function(comp.jacobian()[i, j]) for j in range(3)] for i in range(3)]
        diff = num_ber(nc, J, [0, 1, 1]) - nc.function(lhs)
        assert diff.max_abs() < 1e-9


def test_chart_mismatch_in_pullback():
    c = CoordinateChange(M, N, (t, x1, x2))
    with pytest.raises(ChartMismatch):
        c.pullback(t)


def test_linear_change_helper():
    c = linear_change(M, N, [[1, 0, 0], [0, 2, 1], [0, 0, 1]], [[1, 0, 0], [0, "1/2", "-1/2"], [0, 0, 1]])
    assert c.images[1] == 2 * x1 + x2
    assert embed(t, M) == t
