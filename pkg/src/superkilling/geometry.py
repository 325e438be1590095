"""Vector fields, metrics and Killing-type checks in a fixed chart.

Index conventions: metric components are stored as ``rows[b][a] = g_{ba}``
with ``g = xdot^a xdot^b g_{ba}``; vector fields act as ``X = X^a d_a`` with
components on the left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .charts import Chart, CoordinateChange, pullback_metric_components
from .superalgebra import ChartMismatch, NotInvertible, Parity, SuperFunction, is_zero, scalar_zero_test
from .supermatrix import SuperMatrix, berezinian, det_commutative, inverse


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


# -- verdicts ----------------------------------------------------------------

@dataclass
class Verdict:
    """Outcome of a check: status is ``pass``, ``fail`` or ``unknown``."""

    name: str
    status: str
    method: str = "symbolic"
    witnesses: list[tuple[str, str]] = field(default_factory=list)
    residuals: list[tuple[str, SuperFunction]] = field(default_factory=list, repr=False)
    payload: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == "pass"

    def __bool__(self):
        return self.holds


def verdict_from(name: str, residuals: Sequence[tuple[str, SuperFunction]], **payload) -> Verdict:
    """Pass iff every residual is zero; failures list the nonzero components."""
    method = "symbolic"
    witnesses = []
    unknown = False
    for label, f in residuals:
        z = is_zero(f)
        if z.method == "numeric":
            method = "numeric"
        if z.status == "nonzero":
            witnesses.append((label, f.to_str()))
        elif z.status == "unknown":
            unknown = True
    status = "fail" if witnesses else ("unknown" if unknown else "pass")
    return Verdict(name, status, method, witnesses, list(residuals), dict(payload))


# -- vector fields -----------------------------------------------------------

class VectorField:
    __slots__ = ("chart", "parity", "components")

    def __init__(self, chart: Chart, parity, components: Sequence[SuperFunction]):
        self.chart = chart
        self.parity = Parity(int(parity))
        comps = tuple(components)
        if len(comps) != chart.dim:
            raise ValueError("a vector field needs one component per coordinate")
        for a, f in enumerate(comps):
            if f.chart != chart:
                raise ChartMismatch("vector field component on a different chart")
            if f.terms and (not f.parity_homogeneous() or f.parity != self.parity + chart.parity(a)):
                raise ValueError(f"component {chart.names[a]} has the wrong parity for an {self.parity} field")
        self.components = comps

    @classmethod
    def coordinate(cls, chart: Chart, a) -> "VectorField":
        a = chart.index(a) if isinstance(a, str) else a
        one = SuperFunction.constant(chart, 1)
        zero = SuperFunction.zero(chart)
        return cls(chart, chart.parity(a), [one if b == a else zero for b in range(chart.dim)])

    @classmethod
    def zero(cls, chart: Chart, parity=Parity.EVEN) -> "VectorField":
        return cls(chart, parity, [SuperFunction.zero(chart)] * chart.dim)

    def __call__(self, f: SuperFunction) -> SuperFunction:
        """X(f) = X^a d_a f."""
        if f.chart != self.chart:
            raise ChartMismatch("function and field on different charts")
        acc = SuperFunction.zero(self.chart)
        for a, c in enumerate(self.components):
            if c.terms:
                d = f.partial(a)
                if d.terms:
                    acc = acc + c * d
        return acc

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        if other.parity != self.parity:
            raise ValueError("cannot add fields of different parity")
        return VectorField(self.chart, self.parity, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return VectorField(self.chart, self.parity, [-c for c in self.components])

    def scaled(self, f) -> "VectorField":
        """Left multiplication (fX)^a = f X^a by a homogeneous function or scalar."""
        if isinstance(f, SuperFunction):
            return VectorField(self.chart, self.parity + f.parity, [f * c for c in self.components])
        return VectorField(self.chart, self.parity, [c * f for c in self.components])

    def _check(self, other):
        if other.chart != self.chart:
            raise ChartMismatch("vector fields on different charts")

    def is_structurally_zero(self) -> bool:
        return all(not c.terms for c in self.components)

    def is_zero(self) -> bool:
        return all(is_zero(c).zero for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.chart == other.chart and self.components == other.components

    def __hash__(self):
        return hash((self.chart, self.components))

    def to_str(self) -> str:
        parts = []
        for a, c in enumerate(self.components):
            if c.terms:
                parts.append(f"({c.to_str()})*d_{self.chart.names[a]}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"VectorField[{self.chart.name}, {self.parity}]({self.to_str()})"


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X,Y]^b = X^a d_a Y^b - (-1)^{p(X)p(Y)} Y^a d_a X^b."""
    X._check(Y)
    s = _sign(int(X.parity) * int(Y.parity))
    comps = [X(Y.components[b]) - Y(X.components[b]) * s for b in range(X.chart.dim)]
    return VectorField(X.chart, X.parity + Y.parity, comps)


def is_homological(Q: VectorField) -> Verdict:
    """Q^a d_a Q^b = 0 for every b (odd fields only)."""
    if Q.parity != Parity.ODD:
        raise ValueError("homological fields must be odd")
    res = [(f"Q(Q^{Q.chart.names[b]})", Q(Q.components[b])) for b in range(Q.chart.dim)]
    return verdict_from("homological", res)


# -- symmetric rank-2 tensors -----------------------------------------------

def _check_graded_symmetric(chart: Chart, rows) -> None:
    for a in range(chart.dim):
        for b in range(a, chart.dim):
            s = _sign(int(chart.parity(a)) * int(chart.parity(b)))
            if not is_zero(rows[a][b] - rows[b][a] * s).zero:
                raise ValueError(f"components ({chart.names[a]},{chart.names[b]}) violate graded symmetry")


class SymTensor2:
    """Components T_{ba} of T = xdot^a xdot^b T_{ba}; either parity."""

    def __init__(self, chart: Chart, components: Sequence[Sequence[SuperFunction]], parity=Parity.EVEN,
                 validate: bool = True):
        self.chart = chart
        self.parity = Parity(int(parity))
        rows = tuple(tuple(r) for r in components)
        if len(rows) != chart.dim or any(len(r) != chart.dim for r in rows):
            raise ValueError("component array has the wrong shape")
        if validate:
            for b in range(chart.dim):
                for a in range(chart.dim):
                    f = rows[b][a]
                    if f.chart != chart:
                        raise ChartMismatch("tensor component on a different chart")
                    want = self.parity + chart.parity(a) + chart.parity(b)
                    if f.terms and (not f.parity_homogeneous() or f.parity != want):
                        raise ValueError(f"component ({chart.names[b]},{chart.names[a]}) has the wrong parity")
            _check_graded_symmetric(chart, rows)
        self.components = rows

    def rows(self) -> list[list[SuperFunction]]:
        return [list(r) for r in self.components]

    def __getitem__(self, ba):
        b, a = ba
        return self.components[b][a]

    def is_zero(self) -> bool:
        return all(is_zero(f).zero for r in self.components for f in r)

    def residuals(self, prefix: str) -> list[tuple[str, SuperFunction]]:
        names = self.chart.names
        return [(f"{prefix}_{names[b]}{names[a]}", self.components[b][a])
                for b in range(self.chart.dim) for a in range(b, self.chart.dim)]

    def __eq__(self, other):
        if not isinstance(other, SymTensor2):
            return NotImplemented
        return self.chart == other.chart and self.components == other.components

    __hash__ = None


class MetricTensor(SymTensor2):
    """Even, graded-symmetric, nondegenerate components g_{ba}."""

    def __init__(self, chart: Chart, components, validate: bool = True):
        super().__init__(chart, components, Parity.EVEN, validate)
        if validate:
            self._check_nondegenerate()

    def _check_nondegenerate(self):
        ch = self.chart
        if ch.m % 2:
            raise ValueError("a nondegenerate even metric needs an even number of odd coordinates")
        for block in (range(ch.n), range(ch.n, ch.dim)):
            rows = [[SuperFunction.scalar(ch, self.components[b][a].body) for a in block] for b in block]
            det = det_commutative(rows, ch).body
            if scalar_zero_test(det, ch.box_dict).status != "nonzero":
                raise NotInvertible("metric is degenerate (Berezinian body vanishes)")

    @classmethod
    def from_rows(cls, chart, rows, validate=True):
        return cls(chart, rows, validate)

    def matrix(self) -> SuperMatrix:
        return SuperMatrix.build(self.chart, self.chart.parities, self.chart.parities, self.rows())

    def determinant(self) -> SuperFunction:
        """|g| = Ber(g_{ba})."""
        return berezinian(self.matrix())


class InverseMetric:
    """Components g^{ab} with g^{ac} g_{cb} = delta^a_b."""

    def __init__(self, chart: Chart, components):
        self.chart = chart
        self.components = tuple(tuple(r) for r in components)

    def __getitem__(self, ab):
        a, b = ab
        return self.components[a][b]

    def rows(self):
        return [list(r) for r in self.components]


# -- metric operations -------------------------------------------------------

def pairing(g: MetricTensor, X: VectorField, Y: VectorField) -> SuperFunction:
    """<X|Y>_g = (-1)^{p(Y)p(a)} X^a Y^b g_{ba}."""
    if not (g.chart == X.chart == Y.chart):
        raise ChartMismatch("pairing on different charts")
    ch = g.chart
    acc = SuperFunction.zero(ch)
    for a in range(ch.dim):
        xa = X.components[a]
        if not xa.terms:
            continue
        s = _sign(int(Y.parity) * int(ch.parity(a)))
        for b in range(ch.dim):
            yb, gba = Y.components[b], g.components[b][a]
            if yb.terms and gba.terms:
                acc = acc + (xa * yb * gba) * s
    return acc


def lie_derivative_metric(g: MetricTensor, X: VectorField) -> SymTensor2:
    """(L_X g)_{ba} from components; result has the parity of X."""
    if g.chart != X.chart:
        raise ChartMismatch("metric and field on different charts")
    ch = g.chart
    px = int(X.parity)
    dim = ch.dim
    dX = [[X.components[c].partial(b) for c in range(dim)] for b in range(dim)]  # dX[b][c] = d_b X^c
    Xg = [[X(g.components[b][a]) for a in range(dim)] for b in range(dim)]
    rows = []
    for b in range(dim):
        pb = int(ch.parity(b))
        row = []
        for a in range(dim):
            pa = int(ch.parity(a))
            acc = SuperFunction.zero(ch)
            t1 = SuperFunction.zero(ch)
            t2 = SuperFunction.zero(ch)
            for c in range(dim):
                if dX[b][c].terms and g.components[c][a].terms:
                    t1 = t1 + dX[b][c] * g.components[c][a]
                if dX[a][c].terms and g.components[c][b].terms:
                    t2 = t2 + dX[a][c] * g.components[c][b]
            acc = acc + t1 * _sign(px * pa)
            acc = acc + t2 * _sign(pb * (px + pa))
            acc = acc + Xg[b][a] * _sign(px * (pa + pb))
            row.append(acc)
        rows.append(row)
    return SymTensor2(ch, rows, X.parity, validate=False)


def is_killing(g: MetricTensor, X: VectorField) -> Verdict:
    L = lie_derivative_metric(g, X)
    return verdict_from("killing", L.residuals("L"), lie_derivative=L)


def inverse_metric(g: MetricTensor) -> InverseMetric:
    H = inverse(g.matrix())
    return InverseMetric(g.chart, H.entries)


def inverse_metric_symmetry(g: MetricTensor, ginv: InverseMetric | None = None) -> Verdict:
    """(-1)^{p(b)} g^{ab} = (-1)^{p(a)p(b)+p(a)} g^{ba}, plus both defining relations."""
    ch = g.chart
    ginv = ginv or inverse_metric(g)
    res = []
    for a in range(ch.dim):
        pa = int(ch.parity(a))
        for b in range(ch.dim):
            pb = int(ch.parity(b))
            lhs = ginv[a, b] * _sign(pb)
            rhs = ginv[b, a] * _sign(pa * pb + pa)
            res.append((f"sym^{ch.names[a]}{ch.names[b]}", lhs - rhs))
    G = g.matrix()
    H = SuperMatrix.build(ch, ch.parities, ch.parities, ginv.rows())
    one = SuperMatrix.identity(ch, ch.parities)
    for label, P in (("left", H @ G), ("right", G @ H)):
        D = P - one
        res += [(f"{label}_{i}{j}", D[i, j]) for i in range(ch.dim) for j in range(ch.dim)]
    return verdict_from("inverse_symmetry", res)


def metric_trace(g: MetricTensor, T: SymTensor2, ginv: InverseMetric | None = None) -> SuperFunction:
    """Str_g T = (-1)^{p(a)} g^{ab} T_{ba}."""
    if g.chart != T.chart:
        raise ChartMismatch("metric and tensor on different charts")
    ch = g.chart
    ginv = ginv or inverse_metric(g)
    acc = SuperFunction.zero(ch)
    for a in range(ch.dim):
        pa = int(ch.parity(a))
        for b in range(ch.dim):
            h, t = ginv[a, b], T.components[b][a]
            if h.terms and t.terms:
                acc = acc + (h * t) * _sign(pa)
    return acc


def check_killing_shander(g: MetricTensor, tau) -> Verdict:
    """Reduced Killing equation d_tau g_{ba} = 0 with the split normal form as payload."""
    ch = g.chart
    t = ch.index(tau) if isinstance(tau, str) else tau
    if ch.parity(t) != Parity.ODD:
        raise ValueError("Killing-Shander coordinate must be odd")
    names = ch.names
    res = [(f"d_{names[t]} g_{names[b]}{names[a]}", g.components[b][a].partial(t))
           for b in range(ch.dim) for a in range(b, ch.dim)]
    v = verdict_from("shander", res)
    g_tt = g.components[t][t]
    others = [i for i in range(ch.dim) if i != t]
    v.payload.update(
        tau=names[t],
        g_tautau_zero=is_zero(g_tt).zero,
        reduced={(names[j], names[i]): g.components[j][i] for j in others for i in others},
        mixed={names[i]: g.components[i][t] * 2 for i in others},
    )
    if not v.payload["g_tautau_zero"]:
        v.status = "fail"
        v.witnesses.append((f"g_{names[t]}{names[t]}", g_tt.to_str()))
    return v


def check_rq_morphism(g: MetricTensor, Q: VectorField, g2: MetricTensor, Q2: VectorField,
                      phi: CoordinateChange) -> Verdict:
    """Metric pullback and Q-relatedness along ``phi`` from (g, Q) to (g2, Q2)."""
    if g.chart != phi.source or Q.chart != phi.source:
        raise ChartMismatch("source data must live on the source chart of the morphism")
    if g2.chart != phi.target or Q2.chart != phi.target:
        raise ChartMismatch("target data must live on the target chart of the morphism")
    src, tgt = phi.source, phi.target
    pulled = pullback_metric_components(phi, g2.rows())
    res = [(f"metric_{src.names[b]}{src.names[a]}", pulled[b][a] - g.components[b][a])
           for b in range(src.dim) for a in range(b, src.dim)]
    for al in range(tgt.dim):
        res.append((f"Q-related_{tgt.names[al]}", Q(phi.images[al]) - phi.pullback(Q2.components[al])))
    return verdict_from("morphism", res)


__all__ = [
    "Verdict", "verdict_from", "VectorField", "SymTensor2", "MetricTensor", "InverseMetric",
    "lie_bracket", "is_homological", "pairing", "lie_derivative_metric", "is_killing",
    "inverse_metric", "inverse_metric_symmetry", "metric_trace", "check_killing_shander",
    "check_rq_morphism",
]
