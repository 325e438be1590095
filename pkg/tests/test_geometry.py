from __future__ import annotations

import itertools

import numpy as np
import pytest
import sympy

from superkilling.charts import Chart, CoordinateChange
from superkilling.dsl import parse
from superkilling.geometry import (MetricTensor, SymTensor2, VectorField, check_killing_shander, check_rq_morphism,
                                   inverse_metric, inverse_metric_symmetry, is_homological, is_killing, lie_bracket,
                                   lie_derivative_metric, metric_trace, pairing)
from superkilling.berezin import canonical_volume, divergence
from superkilling.oracles import vertical_lift_pairing
from superkilling.samples import R12, R22, bundled_metrics, random_field, random_metric
from superkilling.superalgebra import Parity, SuperFunction, apply_function, is_zero
from superkilling.scalar import ScalarExpr

SRC = """
chart M { even: t; odd: xi1, xi2; box: t in (0.1, 3.0); }
metric flat on M = dt*dt + 2*dxi1*dxi2;
metric half on M = (dt*dt + 2*dxi1*dxi2)/t^2;
"""
DOC = parse(SRC)
M = DOC.charts["M"]
FLAT, HALF = DOC.metrics["flat"], DOC.metrics["half"]
t, x1, x2 = M.coords()
ZERO, ONE = SuperFunction.zero(M), SuperFunction.constant(M, 1)
dt, dx1, dx2 = (VectorField.coordinate(M, a) for a in range(3))


def field(parity, *comps):
    return VectorField(M, parity, [c if isinstance(c, SuperFunction) else SuperFunction.constant(M, c)
                                   for c in comps])


def test_vector_field_parity_is_validated():
    with pytest.raises(ValueError):
        field(0, x1, t, ZERO)
    assert field(1, x1, t, ZERO).parity == Parity.ODD


def test_bracket_examples():
    assert lie_bracket(dx1, dx1).is_structurally_zero()
    E = field(0, t, 0, 0)
    assert lie_bracket(E, dt) == -dt
    # odd coefficient times odd derivation: both fields are even
    A = field(0, 0, 0, x1)      # xi1 d/dxi2
    B = field(0, 0, x2, 0)      # xi2 d/dxi1
    assert lie_bracket(A, B) == field(0, 0, x1, -x2)


def _commutator_on(X, Y, f):
    s = -1 if int(X.parity) * int(Y.parity) % 2 else 1
    return X(Y(f)) - Y(X(f)) * s


def test_bracket_matches_operator_commutator(rng):
    f = apply_function("exp", t) * (1 + x1) + t * t * x2 + x1 * x2
    for _ in range(20):
        X = random_field(rng, M, int(rng.integers(2)))
        Y = random_field(rng, M, int(rng.integers(2)))
        g = f.even_part() if rng.random() < 0.5 else f.odd_part()
        assert (lie_bracket(X, Y)(g) - _commutator_on(X, Y, g)).is_zero().zero


def test_bracket_graded_antisymmetry_and_jacobi(rng):
    for _ in range(15):
        X, Y, Z = (random_field(rng, R22, int(rng.integers(2)), degree=1) for _ in range(3))
        px, py, pz = int(X.parity), int(Y.parity), int(Z.parity)
        s = -1 if px * py % 2 else 1
        assert lie_bracket(X, Y) == -lie_bracket(Y, X).scaled(s)
        lhs = lie_bracket(X, lie_bracket(Y, Z))
        rhs = lie_bracket(lie_bracket(X, Y), Z) + lie_bracket(Y, lie_bracket(X, Z)).scaled(-1 if px * py % 2 else 1)
        assert (lhs - rhs).is_zero()


def test_homological_examples():
    assert is_homological(dx1).holds
    assert is_homological(field(1, x1, 0, 0)).holds
    bad = field(1, x1 + x2, t, 0)
    v = is_homological(bad)
    assert v.status == "fail" and v.witnesses
    with pytest.raises(ValueError):
        is_homological(dt)


def test_pairing_examples():
    assert pairing(FLAT, dt, dt) == ONE
    assert pairing(FLAT, dx1, dx2) == -ONE
    assert pairing(FLAT, dx2, dx1) == ONE
    assert pairing(FLAT, VectorField.zero(M), dx2).is_structurally_zero


def test_loaded_metric_components():
    assert FLAT[0, 0] == ONE
    assert FLAT[2, 1] == ONE and FLAT[1, 2] == -ONE


def test_pairing_properties(rng):
    for g in list(bundled_metrics("R12").values()):
        ch = g.chart
        for _ in range(5):
            X = random_field(rng, ch, int(rng.integers(2)), degree=1)
            Y = random_field(rng, ch, int(rng.integers(2)), degree=1)
            p = pairing(g, X, Y)
            s = -1 if int(X.parity) * int(Y.parity) % 2 else 1
            assert (p - pairing(g, Y, X) * s).is_zero().zero
            if p.terms:
                assert p.parity == X.parity + Y.parity
            f = random_field(rng, ch, 0, degree=1).components[0]
            assert (pairing(g, X.scaled(f), Y) - f * p).is_zero().zero


def test_pairing_recovers_components():
    for key in ("R12", "R22"):
        for g in bundled_metrics(key).values():
            ch = g.chart
            for a, b in itertools.product(range(ch.dim), repeat=2):
                Xa, Xb = VectorField.coordinate(ch, a), VectorField.coordinate(ch, b)
                s = -1 if int(ch.parity(a)) * int(ch.parity(b)) % 2 else 1
                assert pairing(g, Xa, Xb) == g[b, a] * s


def test_vertical_lift_agrees_with_pairing(rng):
    for key in ("R12", "R22"):
        for g in bundled_metrics(key).values():
            for _ in range(4):
                X = random_field(rng, g.chart, int(rng.integers(2)), degree=1)
                Y = random_field(rng, g.chart, int(rng.integers(2)), degree=1)
                assert (vertical_lift_pairing(g, X, Y) - pairing(g, X, Y)).is_zero().zero


def test_lie_derivative_examples():
    assert lie_derivative_metric(HALF, VectorField.zero(M)).is_zero()
    assert lie_derivative_metric(FLAT, dx1).is_zero()
    L = lie_derivative_metric(HALF, field(0, t, 0, 0))
    assert L[0, 0].is_structurally_zero
    # odd block: X(t^-2) = -2 t^-2
    assert L[2, 1] == -2 * HALF[2, 1] and L[2, 1] == -2 / (t * t)


def test_killing_examples():
    assert is_killing(FLAT, dx1).holds
    assert is_killing(HALF, dx1).holds
    v = is_killing(HALF, dt)
    assert v.status == "fail"
    labels = dict(v.witnesses)
    assert "L_xi1xi2" in labels


def _linear_fields(ch):
    xs = ch.coords()
    basis = []
    lin = [SuperFunction.constant(ch, 1)] + xs
    for p in (0, 1):
        for a in range(ch.dim):
            for mono in lin:
                comps = [SuperFunction.zero(ch)] * ch.dim
                want = (p + int(ch.parity(a))) % 2
                if mono.parity_homogeneous() and int(mono.parity) == want:
                    comps = list(comps)
                    comps[a] = mono
                    basis.append(VectorField(ch, p, comps))
    return basis


def _killing_basis(g, parity):
    fields = [X for X in _linear_fields(g.chart) if int(X.parity) == parity]
    cols = []
    for X in fields:
        L = lie_derivative_metric(g, X)
        col = []
        for b, a in itertools.product(range(g.chart.dim), repeat=2):
            for mono in itertools.chain([()], [(0,), (1,), (0, 1)]):
                col.append(sympy.Rational(str(L[b, a].coefficient(mono).constant_value))
                           if L[b, a].coefficient(mono).is_constant else None)
        cols.append(col)
    mat = sympy.Matrix([[c[i] for c in cols] for i in range(len(cols[0]))])
    out = []
    for vec in mat.nullspace():
        acc = VectorField.zero(g.chart, parity)
        for coef, X in zip(vec, fields):
            if coef:
                acc = acc + X.scaled(ScalarExpr.const(str(coef)))
        out.append(acc)
    return out


def test_killing_fields_close_under_bracket(rng):
    basis = {p: _killing_basis(FLAT, p) for p in (0, 1)}
    assert len(basis[0]) >= 3 and len(basis[1]) >= 2
    for X in basis[0] + basis[1]:
        assert is_killing(FLAT, X).holds
    for _ in range(20):
        px, py = int(rng.integers(2)), int(rng.integers(2))
        X = sum((B.scaled(int(rng.integers(-2, 3))) for B in basis[px]), VectorField.zero(M, px))
        Y = sum((B.scaled(int(rng.integers(-2, 3))) for B in basis[py]), VectorField.zero(M, py))
        assert is_killing(FLAT, lie_bracket(X, Y)).holds


def test_inverse_metric_examples():
    g = MetricTensor(M, [[ONE, ZERO, ZERO], [ZERO, ZERO, ONE], [ZERO, -ONE, ZERO]])
    gi = inverse_metric(g)
    assert gi.rows() == [[ONE, ZERO, ZERO], [ZERO, ZERO, -ONE], [ZERO, ONE, ZERO]]
    assert inverse_metric(FLAT)[1, 2] == ONE
    S = parse("chart S { even: th, ph; odd: xi1, xi2; box: th in (0.2, 2.9); }\n"
              "metric g on S = dth*dth + sin(th)^2*dph*dph - 2*dxi1*dxi2;")
    gs = S.metrics["g"]
    si = inverse_metric(gs)
    th = S.charts["S"].coords()[0]
    assert si[0, 0] == SuperFunction.constant(gs.chart, 1)
    assert is_zero(si[1, 1] * apply_function("sin", th) ** 2 - 1).zero


def test_inverse_of_inverse_matrix_is_original():
    from superkilling.supermatrix import inverse
    for g in bundled_metrics("R22").values():
        A = g.matrix()
        assert inverse(inverse(A)).equals(A)


def test_inverse_symmetry_bundled_and_random(rng):
    for key in ("R12", "R22"):
        for g in bundled_metrics(key).values():
            assert inverse_metric_symmetry(g).holds
    for ch in (R12, R22):
        for _ in range(8):
            assert inverse_metric_symmetry(random_metric(rng, ch)).holds


def test_metric_trace_examples():
    as_tensor = SymTensor2(M, FLAT.rows())
    assert metric_trace(FLAT, as_tensor) == -ONE
    assert metric_trace(FLAT, SymTensor2(M, [[ZERO] * 3] * 3)).is_structurally_zero
    X = field(0, t, 0, 0)
    tr = metric_trace(HALF, lie_derivative_metric(HALF, X))
    div = divergence(canonical_volume(HALF), X)
    assert tr == 2 * div
    assert div == 2 * ONE


def test_shander_examples():
    v = check_killing_shander(FLAT, "xi1")
    assert v.holds and v.payload["g_tautau_zero"]
    bad = parse("chart M { even: t; odd: xi1, xi2; }\nmetric g on M = (1 + xi1*xi2)*dt*dt + 2*dxi1*dxi2;")
    g = bad.metrics["g"]
    v = check_killing_shander(g, "xi1")
    assert v.status == "fail"
    assert dict(v.witnesses)["d_xi1 g_tt"] == "xi2"
    with pytest.raises(ValueError):
        check_killing_shander(g, "t")


def test_shander_agrees_with_killing(rng):
    for _ in range(10):
        g = random_metric(rng, R12)
        tau = VectorField.coordinate(R12, 1)
        assert check_killing_shander(g, 1).holds == is_killing(g, tau).holds


def test_morphism_examples():
    ident = CoordinateChange.identity(M)
    assert check_rq_morphism(FLAT, dx1, FLAT, dx1, ident).holds
    swap = CoordinateChange(M, M, (t, x2, x1), (t, x2, x1))
    v = check_rq_morphism(FLAT, dx1, FLAT, dx1, swap)
    labels = {k for k, _ in v.witnesses}
    assert v.status == "fail"
    assert "metric_xi1xi2" in labels
    assert "Q-related_xi1" in labels and "Q-related_xi2" in labels
    shift = CoordinateChange(M, M, (t + 1, x1, x2), (t - 1, x1, x2))
    assert check_rq_morphism(FLAT, dx1, FLAT, dx1, shift).holds


def test_metric_rejects_degenerate_and_asymmetric():
    with pytest.raises(ValueError):
        MetricTensor(M, [[ONE, ZERO, ZERO], [ZERO, ZERO, ONE], [ZERO, ONE, ZERO]])
    with pytest.raises(Exception):
        MetricTensor(M, [[ONE, ZERO, ZERO], [ZERO, ZERO, ZERO], [ZERO, ZERO, ZERO]])
