"""Acceptance criteria, one test per criterion."""
from __future__ import annotations

import itertools
import time

import numpy as np

from superkilling import numeric as nm
from superkilling.berezin import (BerezinVolume, canonical_volume, certify_unimodular, divergence,
                                  local_representative, pullback_volume, trace_divergence_residual)
from superkilling.charts import Chart, transform_vector
from superkilling.cli import fixture_paths
from superkilling.dsl import parse
from superkilling.geometry import (MetricTensor, VectorField, check_killing_shander, inverse_metric_symmetry,
                                   is_homological, is_killing, lie_bracket, lie_derivative_metric)
from superkilling.liealg import (LieAlgebraData, build_homological, check_algebraic_killing,
                                 check_unimodular_trace, search)
from superkilling.oracles import flow_lie_derivative
from superkilling.samples import (R12, R22, bundled_changes, bundled_fields, bundled_metrics, random_field,
                                  random_metric, random_polynomial)
from superkilling.scalar import ScalarExpr
from superkilling.superalgebra import SuperFunction, apply_function, is_zero, sampling

FIXTURES = {p.stem: p for p in fixture_paths() if p.suffix == ".sk"}


def _doc(name):
    return parse(FIXTURES[name].read_text())


def _exact_zero(f: SuperFunction) -> bool:
    return f.is_structurally_zero


def test_criterion_01_euclidean_superspace(criterion):
    criterion(1, "Euclidean superspace: homological, Killing, density 1, Div 0, certificate")
    doc = _doc("euclidean_superspace")
    g, Q = doc.metrics["g"], doc.vectors["Q"]
    assert is_homological(Q).holds and is_homological(Q).method == "symbolic"
    k = is_killing(g, Q)
    assert k.holds and k.method == "symbolic"
    rho = canonical_volume(g)
    assert rho.density == SuperFunction.constant(g.chart, 1)
    assert _exact_zero(divergence(rho, Q))
    cert = certify_unimodular(g, Q)
    assert cert.verdict.holds and _exact_zero(cert.divergence)


def test_criterion_02_half_superline(criterion):
    criterion(2, "half-superline: d_xi1 Killing, d_t not Killing (odd-block witness), certificate")
    doc = _doc("half_superline")
    g = doc.metrics["g"]
    ch = g.chart
    Q = VectorField.coordinate(ch, "xi1")
    assert is_killing(g, Q).holds
    v = is_killing(g, VectorField.coordinate(ch, "t"))
    assert not v.holds
    odd = {ch.names[i] for i in range(ch.n, ch.dim)}
    labels = dict(v.witnesses)
    assert any(all(n in lab for n in odd) for lab in labels)
    L = lie_derivative_metric(g, VectorField.coordinate(ch, "t"))
    assert not L[ch.n + 1, ch.n].is_zero().zero
    cert = certify_unimodular(g, Q)
    assert cert.verdict.holds and _exact_zero(cert.divergence)


def test_criterion_03_super_sphere(criterion):
    criterion(3, "super-sphere: Killing, |g| = sin^2, trace-divergence for d_xi1 and d_phi")
    doc = _doc("super_sphere")
    g = doc.metrics["g"]
    ch = g.chart
    th = ScalarExpr.coordinate("theta")
    assert g.determinant().body == ScalarExpr.apply("sin", th) ** 2
    assert not [m for m in g.determinant().terms if m]
    Q = VectorField.coordinate(ch, "xi1")
    assert is_killing(g, Q).holds
    with sampling(samples=32, tol=1e-9):
        for X in (Q, VectorField.coordinate(ch, "phi")):
            assert is_killing(g, X).holds
            z = is_zero(trace_divergence_residual(g, X))
            assert z.zero and z.method in ("symbolic", "numeric")


def test_criterion_04_trace_divergence(criterion):
    criterion(4, "trace-divergence on 200 random fields, 3 metrics on each of R^{1|2}, R^{2|2}")
    rng = np.random.default_rng(2024)
    pairs = [(g, ch) for ch, key in ((R12, "R12"), (R22, "R22")) for g in bundled_metrics(key).values()]
    count = 0
    for i in range(200):
        g, ch = pairs[i % len(pairs)]
        X = random_field(rng, ch, int(rng.integers(2)), degree=2, density=0.3)
        r = trace_divergence_residual(g, X)
        z = is_zero(r)
        assert z.zero and z.method == "symbolic", (i, X.to_str())
        count += 1
    assert count == 200


def _rational_volume(rng, ch):
    xs = ch.coords()
    body = SuperFunction.constant(ch, 2) + xs[0] * xs[0]
    return BerezinVolume(ch, body + random_polynomial(rng, ch, 0, degree=1) * xs[ch.n] * xs[ch.n + 1])


def test_criterion_05_divergence_identities(criterion):
    criterion(5, "three divergence identities on 200 random tuples")
    rng = np.random.default_rng(7)
    for i in range(200):
        ch = R12 if i % 2 else R22
        rho = _rational_volume(rng, ch)
        X = random_field(rng, ch, int(rng.integers(2)), degree=1)
        Y = random_field(rng, ch, int(rng.integers(2)), degree=1)
        pf = int(rng.integers(2))
        f = random_polynomial(rng, ch, pf, degree=1)
        fp = random_polynomial(rng, ch, 0, degree=1)
        sf = -1 if pf * int(X.parity) else 1
        sxy = -1 if int(X.parity) * int(Y.parity) else 1
        d1 = divergence(rho, X.scaled(f)) - f * divergence(rho, X) - X(f) * sf
        d2 = divergence(rho.scaled_exp(fp), X) - divergence(rho, X) - X(fp)
        d3 = divergence(rho, lie_bracket(X, Y)) - X(divergence(rho, Y)) + Y(divergence(rho, X)) * sxy
        assert _exact_zero(d1) and _exact_zero(d3), i
        z = is_zero(d2)
        assert z.zero and z.method == "symbolic", i


def test_criterion_06_flow_oracle(criterion):
    criterion(6, "flow oracle equals the Lie derivative on all bundled pairs")
    n = 0
    for key in ("R12", "R22"):
        for g in bundled_metrics(key).values():
            for X in bundled_fields(g.chart):
                flow = flow_lie_derivative(g, X)
                L = lie_derivative_metric(g, X)
                d = g.chart.dim
                assert all(_exact_zero(flow[b][a] - L[b, a]) for b in range(d) for a in range(d))
                n += 1
    assert n == 3 * 5 + 3 * 6


def test_criterion_07_berezinian(criterion):
    criterion(7, "Ber multiplicative and supertranspose-invariant; first-order slope 2")
    rng = np.random.default_rng(99)
    nc = nm.NumericChart(Chart("G", (), ("a", "b", "c", "d")), {}, order=0)
    worst = 0.0
    for _ in range(100):
        A, par = nm.random_even_supermatrix(rng, 2, 2, nc.alg)
        B, _ = nm.random_even_supermatrix(rng, 2, 2, nc.alg)
        bA = nm.berezinian(nc, A, par)
        worst = max(worst, (nm.berezinian(nc, nm.supertranspose(A, par), par) - bA).max_abs())
        lhs = nm.berezinian(nc, nm.matmul(nc, A, B), par)
        worst = max(worst, (lhs - bA * nm.berezinian(nc, B, par)).max_abs())
    assert worst < 1e-9
    slopes = []
    for _ in range(10):
        A, par = nm.random_even_supermatrix(rng, 2, 2, nc.alg)
        dA, _ = nm.random_even_supermatrix(rng, 2, 2, nc.alg)
        b0 = nm.berezinian(nc, A, par)
        P = nm.matmul(nc, dA, nm.gauss_jordan_inverse(nc, A))
        st = sum((P[i][i] * (-1.0 if par[i] else 1.0) for i in range(4)), nc.zero())
        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            Ah = [[A[i][j] + dA[i][j] * h for j in range(4)] for i in range(4)]
            errs.append((nm.berezinian(nc, Ah, par) - b0 - b0 * st * h).max_abs())
        slopes += [np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])]
    assert abs(np.median(slopes) - 2.0) <= 0.2, slopes


def test_criterion_08_inverse_symmetry(criterion):
    criterion(8, "inverse-metric symmetry on bundled metrics and 50 random metrics on R^{2|2}")
    rng = np.random.default_rng(8)
    metrics = list(bundled_metrics("R12").values()) + list(bundled_metrics("R22").values())
    metrics += [random_metric(rng, R22) for _ in range(50)]
    for g in metrics:
        v = inverse_metric_symmetry(g)
        assert v.holds and v.method == "symbolic"


def test_criterion_09_liealg(criterion):
    criterion(9, "Lie-algebra mode: [e1,e2]=e1 fails both; search finds fixtures, no counterexample")
    L = LieAlgebraData.from_entries(2, [(1, 1, 2, 1)], [(1, 2, 1)])
    assert not check_algebraic_killing(L).holds and not check_unimodular_trace(L).holds
    res = search(dims=(2, 4), coeffs=(-1, 0, 1))
    assert res.counterexamples == []
    assert any(f.dim == 2 for f in res.fixtures) and any(f.dim == 4 for f in res.fixtures)
    for f in res.fixtures:
        assert not f.structure
        assert check_algebraic_killing(f).holds and check_unimodular_trace(f).holds
    assert res.killing == 486 and res.instances == 2254006


def _strip(f: SuperFunction, i: int) -> SuperFunction:
    return SuperFunction(f.chart, {m: c for m, c in f.terms.items() if i not in m})


def test_criterion_10_killing_shander(criterion):
    criterion(10, "reduced equation agrees with is_killing on 100 random metrics; g_tautau = 0")
    rng = np.random.default_rng(10)
    seen = set()
    for i in range(100):
        tau = R12.n + i % 2
        g = random_metric(rng, R12)
        if i % 3 == 0:
            g = MetricTensor(R12, [[_strip(f, tau - R12.n) for f in row] for row in g.rows()])
        v = check_killing_shander(g, tau)
        assert v.payload["g_tautau_zero"]
        k = is_killing(g, VectorField.coordinate(R12, tau))
        assert v.holds == k.holds
        seen.add(v.holds)
    assert seen == {True, False}


def _volumes(ch):
    xs = ch.coords()
    one = SuperFunction.constant(ch, 1)
    vols = [one]
    if ch.n:
        vols.append(one * 2 + xs[0] * xs[0] + xs[ch.n] * xs[ch.n + 1])
        vols.append(apply_function("exp", xs[0] + xs[ch.n] * xs[ch.n + 1]))
    else:
        vols.append(one + xs[0] * xs[1])
        vols.append(one * 3 - xs[0] * xs[1] + xs[ch.m - 2] * xs[ch.m - 1] * 2)
    return [BerezinVolume(ch, r) for r in vols]


def test_criterion_11_q_closed(criterion):
    criterion(11, "Q(Div_rho Q) = 0 for every homological fixture field and 3 volumes")
    fields = []
    for name, path in FIXTURES.items():
        doc = parse(path.read_text())
        fields += [X for X in doc.vectors.values() if X.parity == 1 and is_homological(X).holds]
        fields += [build_homological(L) for L in doc.liealgs.values()]
    tt, y1, y2 = R12.coords()
    z = SuperFunction.zero(R12)
    fields += [VectorField(R12, 1, [tt * y1, z, z]), VectorField(R12, 1, [z, y1 * y2, z])]
    assert len(fields) >= 8
    for Q in fields:
        assert is_homological(Q).holds
        for rho in _volumes(Q.chart):
            r = Q(divergence(rho, Q))
            z0 = is_zero(r)
            assert z0.zero and z0.method == "symbolic", Q.to_str()


def test_criterion_12_invariance(criterion):
    criterion(12, "divergence invariant under 5 coordinate changes; local representative is not")
    M, N, changes = bundled_changes()
    assert len(changes) == 5
    rng = np.random.default_rng(12)
    s, e1, e2 = N.coords()
    rhoN = BerezinVolume(N, SuperFunction.constant(N, 2) + s * s + s * e1 * e2)
    for c in changes:
        rhoM = pullback_volume(c, rhoN)
        for _ in range(4):
            X = random_field(rng, M, int(rng.integers(2)), degree=1)
            r = divergence(rhoM, X) - c.pullback(divergence(rhoN, transform_vector(c, X)))
            assert is_zero(r).zero
    tt, y1, y2 = M.coords()
    zM = SuperFunction.zero(M)
    Q = VectorField(M, 1, [y1, zM, zM])
    assert is_homological(Q).holds
    witness = {}
    for c in changes:
        there = c.pullback(local_representative(transform_vector(c, Q)))
        if not (there - local_representative(Q)).is_zero().zero:
            witness[c.name] = there.to_str()
    assert witness.get("odd_rescale_by_t") == (-y1 / tt).to_str()
    print(f"non-invariance witness: {witness}")
