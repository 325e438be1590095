"""Bundled metrics, coordinate changes and random generators for test suites."""
from __future__ import annotations

import itertools
from typing import Iterable

import numpy as np

from .charts import Chart, CoordinateChange
from .dsl import parse
from .geometry import MetricTensor, VectorField
from .superalgebra import NotInvertible, Parity, SuperFunction

R12 = Chart("R12", ("t",), ("xi1", "xi2"), {"t": (0.5, 3.0)})
R22 = Chart("R22", ("x", "y"), ("xi1", "xi2"), {"x": (0.5, 3.0), "y": (0.5, 3.0)})

_METRICS_R12 = {
    "flat": "dt*dt + 2*dxi1*dxi2",
    "half_line": "(dt*dt + 2*dxi1*dxi2)/t^2",
    "warped": "(1 + t^2 + xi1*xi2)*dt*dt + 2*xi1*dt*dxi2 + 2*(1 + t)*dxi1*dxi2",
}
_METRICS_R22 = {
    "flat": "dx*dx + dy*dy + 2*dxi1*dxi2",
    "conformal": "(1 + x^2)*dx*dx + 2*y*dx*dy + (1 + y^2)*dy*dy + 2*x*dxi1*dxi2",
    "mixed": "dx*dx + (1 + xi1*xi2)*dy*dy + 2*xi1*dx*dxi2 + 2*xi2*dy*dxi1 + 2*(1 + x*y)*dxi1*dxi2",
}


def _chart_decl(ch: Chart) -> str:
    box = ", ".join(f"{k} in ({lo}, {hi})" for k, (lo, hi) in ch.box)
    out = f"chart {ch.name} {{ even: {', '.join(ch.even)}; odd: {', '.join(ch.odd)};"
    return out + (f" box: {box};" if box else "") + " }"


def _load_metrics(ch: Chart, table: dict[str, str]) -> dict[str, MetricTensor]:
    src = _chart_decl(ch) + "\n" + "\n".join(f"metric {k} on {ch.name} = {v};" for k, v in table.items())
    doc = parse(src)
    return {k: MetricTensor(ch, [[c.with_chart(ch) for c in row] for row in g.rows()])
            for k, g in doc.metrics.items()}


def bundled_metrics(chart: str = "R12") -> dict[str, MetricTensor]:
    """Three metrics each on R^{1|2} and R^{2|2}."""
    if chart == "R12":
        return _load_metrics(R12, _METRICS_R12)
    if chart == "R22":
        return _load_metrics(R22, _METRICS_R22)
    raise KeyError(chart)


def bundled_metric_sources() -> dict[str, dict[str, str]]:
    return {"R12": dict(_METRICS_R12), "R22": dict(_METRICS_R22)}


def bundled_fields(chart: Chart) -> list[VectorField]:
    """Coordinate fields plus a few curved ones of both parities."""
    xs = chart.coords()
    out = [VectorField.coordinate(chart, a) for a in range(chart.dim)]
    t, o1, o2 = xs[0], xs[chart.n], xs[chart.n + 1]
    zero = SuperFunction.zero(chart)
    comps = [zero] * chart.dim
    comps[0] = t * t + o1 * o2
    comps[chart.n] = t * o2
    comps[chart.n + 1] = o1
    out.append(VectorField(chart, Parity.EVEN, comps))
    comps = [zero] * chart.dim
    comps[0] = t * o1
    comps[chart.n + 1] = t + o1 * o2
    out.append(VectorField(chart, Parity.ODD, comps))
    return out


def bundled_changes() -> tuple[Chart, Chart, list[CoordinateChange]]:
    """Five changes R^{1|2} -> R^{1|2} (source chart M, target chart N)."""
    M = Chart("M", ("t",), ("xi1", "xi2"), {"t": (0.5, 3.0)})
    N = Chart("N", ("s",), ("e1", "e2"), {"s": (0.5, 3.0)})
    t, x1, x2 = M.coords()
    s, e1, e2 = N.coords()
    changes = [
        CoordinateChange(M, N, (t + 1, x1, x2), (s - 1, e1, e2), name="shift"),
        CoordinateChange(M, N, (t, 2 * x1, x2), (s, e1 / 2, e2), name="odd_scale"),
        CoordinateChange(M, N, (t, x1 + t * x2, x2), (s, e1 - s * e2, e2), name="odd_shear"),
        CoordinateChange(M, N, (t + x1 * x2, x1, x2), (s - e1 * e2, e1, e2), name="even_nilpotent"),
        CoordinateChange(M, N, (t, t * x1, x2), (s, e1 / s, e2), name="odd_rescale_by_t"),
    ]
    return M, N, changes


# -- random data -------------------------------------------------------------

def _odd_monomials(m: int, parity: int) -> list[tuple[int, ...]]:
    return [mono for k in range(m + 1) for mono in itertools.combinations(range(m), k) if k % 2 == parity]


def _even_monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    return [e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree]


def random_polynomial(rng: np.random.Generator, chart: Chart, parity: int, degree: int = 2,
                      density: float = 0.5, coeffs: Iterable[int] = range(-3, 4)) -> SuperFunction:
    """Random homogeneous function with polynomial coefficients of degree <= ``degree``."""
    coeffs = [c for c in coeffs if c]
    xs = chart.coords()
    ev = xs[: chart.n]
    acc = SuperFunction.zero(chart)
    for mono in _odd_monomials(chart.m, parity % 2):
        odd = SuperFunction.constant(chart, 1)
        for i in mono:
            odd = odd * xs[chart.n + i]
        for e in _even_monomials(chart.n, degree):
            if rng.random() >= density:
                continue
            term = SuperFunction.constant(chart, int(rng.choice(coeffs)))
            for x, k in zip(ev, e):
                term = term * x ** k
            acc = acc + term * odd
    return acc


def random_field(rng: np.random.Generator, chart: Chart, parity: int, degree: int = 2,
                 density: float = 0.4) -> VectorField:
    comps = [random_polynomial(rng, chart, (parity + int(chart.parity(a))) % 2, degree, density)
             for a in range(chart.dim)]
    return VectorField(chart, parity, comps)


def random_metric(rng: np.random.Generator, chart: Chart, degree: int = 1, density: float = 0.3,
                  tries: int = 50) -> MetricTensor:
    """Random even metric: a positive body plus sparse polynomial perturbations."""
    n, m = chart.n, chart.m
    for _ in range(tries):
        rows = [[SuperFunction.zero(chart) for _ in range(chart.dim)] for _ in range(chart.dim)]
        for a in range(n):
            rows[a][a] = SuperFunction.constant(chart, int(rng.integers(1, 4)))
        for b in range(chart.dim):
            for a in range(b, chart.dim):
                pb, pa = int(chart.parity(b)), int(chart.parity(a))
                if pa and pb and a == b:
                    continue
                f = random_polynomial(rng, chart, (pa + pb) % 2, degree, density, coeffs=(-1, 1))
                if pa and pb and a == b + 1 and (b - n) % 2 == 0:
                    f = f + SuperFunction.constant(chart, int(rng.choice([-2, -1, 1, 2])))
                rows[b][a] = rows[b][a] + f
                if a != b:
                    rows[a][b] = -rows[b][a] if pa and pb else rows[b][a]
        try:
            g = MetricTensor(chart, rows)
        except (ValueError, NotInvertible):
            continue
        if _body_bounded_away(g, rng):
            return g
    raise RuntimeError("could not draw a nondegenerate metric")


def _body_bounded_away(g: MetricTensor, rng, samples: int = 64, margin: float = 1e-2) -> bool:
    """Body of |g| keeps one sign and stays away from zero inside the box."""
    ch = g.chart
    body = g.determinant().body
    pts = {k: rng.uniform(*ch.box_dict.get(k, (0.5, 3.0)), size=samples) for k in ch.even}
    with np.errstate(all="ignore"):
        v = np.broadcast_to(np.asarray(body.evaluate(pts), dtype=float), (samples,))
    return bool(np.all(np.isfinite(v)) and (np.all(v > margin) or np.all(v < -margin)))


def random_even_function(rng, chart: Chart, degree: int = 2) -> SuperFunction:
    return random_polynomial(rng, chart, 0, degree)
