"""Independent constructions used to cross-check component formulas.

* fiber charts: tensors as functions polynomial in the velocities xdot^a;
* the vertical-lift pairing  <X|Y> = 1/2 i_X i_Y g;
* the infinitesimal flow  x^a -> x^a + eps X^a  with a nilpotent parameter.
"""
from __future__ import annotations

from .charts import Chart, CoordinateChange, embed, pullback_metric_components
from .scalar import ScalarExpr
from .superalgebra import ChartMismatch, Parity, SuperFunction, is_zero


def fiber_name(coord: str) -> str:
    return "d" + coord


def fiber_chart(chart: Chart) -> Chart:
    """Chart with velocity coordinates of the same parities appended."""
    return Chart(chart.name + "_T",
                 chart.even + tuple(fiber_name(s) for s in chart.even),
                 chart.odd + tuple(fiber_name(s) for s in chart.odd),
                 chart.box)


def fiber_index(chart: Chart, a: int) -> int:
    """Index of xdot^a in :func:`fiber_chart`."""
    if a < chart.n:
        return chart.n + a
    return 2 * chart.n + chart.m + (a - chart.n)


def fiber_coordinate(T: Chart, chart: Chart, a: int) -> SuperFunction:
    return SuperFunction.coordinate(T, fiber_index(chart, a))


def project(f: SuperFunction, chart: Chart) -> SuperFunction:
    """Inverse of :func:`embed`; fails if f depends on the extra coordinates."""
    extra_even = set(f.chart.even) - set(chart.even)
    for mono, c in f.terms.items():
        if any(i >= chart.m for i in mono) or c.free_coordinates() & extra_even:
            raise ValueError("function depends on coordinates outside the chart")
    return SuperFunction._trusted(chart, dict(f.terms))


def quadratic_form(chart: Chart, rows) -> SuperFunction:
    """xdot^a xdot^b T_{ba} on the fiber chart."""
    T = fiber_chart(chart)
    xd = [fiber_coordinate(T, chart, a) for a in range(chart.dim)]
    acc = SuperFunction.zero(T)
    for a in range(chart.dim):
        for b in range(chart.dim):
            c = rows[b][a]
            if c.terms:
                acc = acc + xd[a] * xd[b] * embed(c, T)
    return acc


def components_from_quadratic(chart: Chart, G: SuperFunction) -> list[list[SuperFunction]]:
    """T_{ba} = 1/2 d_{xdot^b} d_{xdot^a} G (rightmost first), checked to reproduce G."""
    T = fiber_chart(chart)
    if G.chart != T:
        raise ChartMismatch("expression is not on the fiber chart")
    rows = [[None] * chart.dim for _ in range(chart.dim)]
    for a in range(chart.dim):
        da = G.partial(fiber_index(chart, a))
        for b in range(chart.dim):
            c = da.partial(fiber_index(chart, b)) * ScalarExpr.const(1) / 2
            rows[b][a] = project(c, chart)
    if not is_zero(quadratic_form(chart, rows) - G).zero:
        raise ValueError("expression is not homogeneous quadratic in the velocities")
    return rows


def contraction(X, G: SuperFunction, chart: Chart) -> SuperFunction:
    """i_X G = X^a d G / d xdot^a (vertical lift acting from the left)."""
    T = G.chart
    acc = SuperFunction.zero(T)
    for a, c in enumerate(X.components):
        if c.terms:
            acc = acc + embed(c, T) * G.partial(fiber_index(chart, a))
    return acc


def vertical_lift_pairing(g, X, Y) -> SuperFunction:
    chart = g.chart
    G = quadratic_form(chart, g.rows())
    val = contraction(X, contraction(Y, G, chart), chart) * ScalarExpr.const(1) / 2
    return project(val, chart)


# -- infinitesimal flow ------------------------------------------------------

def _fresh(chart: Chart, base: str, k: int) -> list[str]:
    used = set(chart.names)
    out = []
    i = 1
    while len(out) < k:
        name = f"{base}{i}"
        if name not in used and fiber_name(name) not in used:
            out.append(name)
        i += 1
    return out


def flow_chart(chart: Chart, parity: Parity) -> tuple[Chart, SuperFunction]:
    """Chart with auxiliary odd generators and the nilpotent parameter eps."""
    k = 1 if parity == Parity.ODD else 2
    lam = _fresh(chart, "lam", k)
    E = chart.extended(chart.name + "_flow", extra_odd=lam)
    gens = [SuperFunction.coordinate(E, E.n + chart.m + i) for i in range(k)]
    eps = gens[0] if k == 1 else gens[0] * gens[1]
    return E, eps


def flow_lie_derivative(g, X) -> list[list[SuperFunction]]:
    """(L_X g)_{ba} from the eps-linear part of the pullback along x -> x + eps X."""
    chart = g.chart
    E, eps = flow_chart(chart, X.parity)
    k = E.m - chart.m
    images = []
    for a in range(E.dim):
        xa = SuperFunction.coordinate(E, a)
        if a < chart.dim:
            xa = xa + eps * embed(X.components[a], E)
        images.append(xa)
    phi = CoordinateChange(E, E, tuple(images), name="flow", require_invertible=False)
    zero = SuperFunction.zero(E)
    big = [[embed(g.components[b][a], E) if a < chart.dim and b < chart.dim else zero
            for a in range(E.dim)] for b in range(E.dim)]
    pulled = pullback_metric_components(phi, big)
    lam_idx = [E.n + chart.m + i for i in range(k)]
    px = int(X.parity)
    out = []
    for b in range(chart.dim):
        row = []
        for a in range(chart.dim):
            c = pulled[b][a]
            for i in lam_idx:  # left derivatives d_{lam_k} ... d_{lam_1}
                c = c.partial(i)
            s = -1 if px * (int(chart.parity(a)) + int(chart.parity(b))) % 2 else 1
            row.append(project(c, chart) * s)
        out.append(row)
    return out


__all__ = [
    "fiber_chart", "fiber_index", "fiber_coordinate", "quadratic_form", "components_from_quadratic",
    "contraction", "vertical_lift_pairing", "flow_chart", "flow_lie_derivative", "project",
]

