"""Charts, coordinate changes, Jacobians and pullbacks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .scalar import ScalarExpr
from .superalgebra import ChartMismatch, NotInvertible, Parity, SuperFunction, is_zero, scalar_zero_test
from .supermatrix import SuperMatrix, berezinian, det_commutative


@dataclass(frozen=True)
class Chart:
    name: str
    even: tuple[str, ...] = ()
    odd: tuple[str, ...] = ()
    box: tuple[tuple[str, tuple[float, float]], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "even", tuple(self.even))
        object.__setattr__(self, "odd", tuple(self.odd))
        box = self.box.items() if isinstance(self.box, Mapping) else self.box
        object.__setattr__(self, "box", tuple(sorted((k, (float(lo), float(hi))) for k, (lo, hi) in box)))
        names = self.even + self.odd
        if len(set(names)) != len(names):
            raise ValueError(f"chart {self.name}: coordinate names must be distinct")
        for s in names:
            if not s.isidentifier() or s.startswith("_"):
                raise ValueError(f"chart {self.name}: invalid coordinate name {s!r}")
        for k, (lo, hi) in self.box:
            if k not in self.even:
                raise ValueError(f"chart {self.name}: box given for non-even coordinate {k!r}")
            if not lo < hi:
                raise ValueError(f"chart {self.name}: empty interval for {k!r}")
        for s in self.even:
            ScalarExpr.coordinate(s)

    @property
    def n(self) -> int:
        return len(self.even)

    @property
    def m(self) -> int:
        return len(self.odd)

    @property
    def dim(self) -> int:
        return self.n + self.m

    @property
    def names(self) -> tuple[str, ...]:
        return self.even + self.odd

    @property
    def parities(self) -> tuple[int, ...]:
        return (0,) * self.n + (1,) * self.m

    @property
    def box_dict(self) -> dict[str, tuple[float, float]]:
        return dict(self.box)

    def parity(self, a: int) -> Parity:
        if a < 0 or a >= self.dim:
            raise IndexError(f"coordinate index {a} out of range for chart {self.name}")
        return Parity.EVEN if a < self.n else Parity.ODD

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"chart {self.name} has no coordinate {name!r}") from None

    def coord(self, name_or_index) -> SuperFunction:
        a = self.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        return SuperFunction.coordinate(self, a)

    def coords(self) -> list[SuperFunction]:
        return [SuperFunction.coordinate(self, a) for a in range(self.dim)]

    def extended(self, name: str, extra_even: Sequence[str] = (), extra_odd: Sequence[str] = ()) -> "Chart":
        """Chart with extra coordinates appended (used by the oracles)."""
        return Chart(name, self.even + tuple(extra_even), self.odd + tuple(extra_odd), self.box)

    def __str__(self):
        return f"{self.name}^({self.n}|{self.m})"


def embed(f: SuperFunction, chart: Chart) -> SuperFunction:
    """Reinterpret ``f`` on a chart whose odd coordinates extend those of ``f.chart``."""
    if chart.odd[: f.chart.m] != f.chart.odd or not set(f.chart.even) <= set(chart.even):
        raise ChartMismatch(f"{f.chart.name} does not embed in {chart.name}")
    return SuperFunction._trusted(chart, dict(f.terms))


def _taylor(c: ScalarExpr, names: Sequence[str], bodies: dict[str, ScalarExpr],
            nil_powers: list[list[SuperFunction]], order: int, chart: Chart) -> SuperFunction:
    """sum over multi-indices |alpha| <= order of d^alpha c (bodies) / alpha! * prod nil^alpha."""
    out = SuperFunction.scalar(chart, c.subs(bodies))
    active = [j for j, p in enumerate(nil_powers) if len(p) > 1]
    if not active or order == 0:
        return out
    # depth-first over multi-indices, reusing derivatives
    def rec(pos: int, deriv: ScalarExpr, total: int, prod: SuperFunction, fact: int):
        nonlocal out
        for idx in range(pos, len(active)):
            j = active[idx]
            d = deriv
            for k in range(1, len(nil_powers[j])):
                if total + k > order:
                    break
                d = d.diff(names[j])
                if d.is_zero_exact:
                    break
                p = prod * nil_powers[j][k]
                if p.is_structurally_zero:
                    break
                f2 = fact * math.factorial(k)
                out = out + p * (d.subs(bodies) / f2)
                rec(idx + 1, d, total + k, p, f2)
    rec(0, c, 0, SuperFunction.constant(chart, 1), 1)
    return out


@dataclass(frozen=True, eq=False)
class CoordinateChange:
    """A map between charts given by the images of the target coordinates.

    ``images[a']`` is the pullback of target coordinate ``a'`` as a function on
    the source chart.  ``inverse_images`` (optional) are the source coordinates
    as functions on the target.  When both are given, construction checks that
    both composites are the identity.  Positivity of the Jacobian is a declared
    assumption and is not verified.
    """

    source: Chart
    target: Chart
    images: tuple[SuperFunction, ...]
    inverse_images: tuple[SuperFunction, ...] | None = None
    name: str = "phi"
    require_invertible: bool = True
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if self.inverse_images is not None:
            object.__setattr__(self, "inverse_images", tuple(self.inverse_images))
        if len(self.images) != self.target.dim:
            raise ValueError(f"{self.name}: need one image per target coordinate")
        for a, img in enumerate(self.images):
            if img.chart != self.source:
                raise ChartMismatch(f"{self.name}: image {a} is not on the source chart")
            if img.terms and (not img.parity_homogeneous() or img.parity != self.target.parity(a)):
                raise ValueError(f"{self.name}: image of {self.target.names[a]} has the wrong parity")
        if self.inverse_images is not None:
            if len(self.inverse_images) != self.source.dim:
                raise ValueError(f"{self.name}: need one inverse image per source coordinate")
            for a, img in enumerate(self.inverse_images):
                if img.chart != self.target:
                    raise ChartMismatch(f"{self.name}: inverse image {a} is not on the target chart")
                if img.terms and (not img.parity_homogeneous() or img.parity != self.source.parity(a)):
                    raise ValueError(f"{self.name}: inverse image of {self.source.names[a]} has the wrong parity")
        if self.require_invertible:
            if self.source.n != self.target.n or self.source.m != self.target.m:
                raise NotInvertible(f"{self.name}: source and target dimensions differ")
            self._check_body_invertible()
            if self.inverse_images is not None:
                self._check_composites()

    # -- construction checks ------------------------------------------
    def _check_body_invertible(self):
        J = self.jacobian()
        src = self.source
        for block in (range(src.n), range(src.n, src.dim)):
            rows = [[SuperFunction.scalar(src, J[r, c].body) for c in block] for r in block]
            det = det_commutative(rows, src).body
            if scalar_zero_test(det, src.box_dict).status != "nonzero":
                raise NotInvertible(f"{self.name}: Jacobian body is singular")

    def _check_composites(self):
        inv = self.inverse()
        for a in range(self.source.dim):
            back = self.pullback(inv.images[a])
            if not is_zero(back - SuperFunction.coordinate(self.source, a)).zero:
                raise ValueError(f"{self.name}: inverse does not undo the change on {self.source.names[a]}")
        for a in range(self.target.dim):
            back = inv.pullback(self.images[a])
            if not is_zero(back - SuperFunction.coordinate(self.target, a)).zero:
                raise ValueError(f"{self.name}: change does not undo the inverse on {self.target.names[a]}")

    # -- basic structure ----------------------------------------------
    @classmethod
    def from_images(cls, source: Chart, target: Chart, images: Sequence, inverse_images=None, **kw):
        return cls(source, target, tuple(images),
                   tuple(inverse_images) if inverse_images is not None else None, **kw)

    @classmethod
    def identity(cls, chart: Chart) -> "CoordinateChange":
        cs = tuple(chart.coords())
        return cls(chart, chart, cs, cs, name="id")

    def has_inverse(self) -> bool:
        return self.inverse_images is not None

    def inverse(self) -> "CoordinateChange":
        if self.inverse_images is None:
            raise NotInvertible(f"{self.name}: no inverse declared")
        inv = self._cache.get("inverse")
        if inv is None:
            inv = CoordinateChange(self.target, self.source, self.inverse_images, self.images,
                                   name=self.name + "^-1", require_invertible=False)
            self._cache["inverse"] = inv
        return inv

    def compose(self, other: "CoordinateChange") -> "CoordinateChange":
        """``other`` after ``self``: source of self -> target of other."""
        if other.source != self.target:
            raise ChartMismatch("composition of incompatible changes")
        images = [self.pullback(f) for f in other.images]
        inv = None
        if self.inverse_images is not None and other.inverse_images is not None:
            inv = [other.inverse().pullback(f) for f in self.inverse_images]
        return CoordinateChange(self.source, other.target, tuple(images),
                                tuple(inv) if inv is not None else None,
                                name=f"{other.name}.{self.name}",
                                require_invertible=self.require_invertible and other.require_invertible)

    def jacobian(self) -> SuperMatrix:
        """Rows indexed by target coordinates, columns by source coordinates."""
        J = self._cache.get("jacobian")
        if J is None:
            rows = [[img.partial(a) for a in range(self.source.dim)] for img in self.images]
            J = SuperMatrix.build(self.source, self.target.parities, self.source.parities, rows)
            self._cache["jacobian"] = J
        return J

    def berezinian(self) -> SuperFunction:
        return berezinian(self.jacobian())

    # -- pullbacks ----------------------------------------------------
    def pullback(self, f: SuperFunction) -> SuperFunction:
        """Substitute the images into ``f`` (a ring homomorphism target -> source)."""
        if f.chart != self.target:
            raise ChartMismatch(f"{self.name}: function lives on {f.chart.name}, expected {self.target.name}")
        src, tgt = self.source, self.target
        state = self._cache.get("pullback_state")
        if state is None:
            even_imgs = self.images[: tgt.n]
            bodies = {tgt.even[j]: img.body for j, img in enumerate(even_imgs)}
            order = src.m // 2
            nil_powers = []
            for img in even_imgs:
                nil = img.nilpotent_part()
                pw = [SuperFunction.constant(src, 1)]
                if nil.terms:
                    for _ in range(order):
                        nxt = pw[-1] * nil
                        if nxt.is_structurally_zero:
                            break
                        pw.append(nxt)
                nil_powers.append(pw)
            state = (bodies, nil_powers, order)
            self._cache["pullback_state"] = state
        bodies, nil_powers, order = state
        odd_imgs = self.images[tgt.n:]
        out = SuperFunction.zero(src)
        for mono, c in f.terms.items():
            term = _taylor(c, tgt.even, bodies, nil_powers, order, src)
            for i in mono:
                term = term * odd_imgs[i]
                if term.is_structurally_zero:
                    break
            out = out + term
        return out

    def pullback_matrix(self, entries: Sequence[Sequence[SuperFunction]]) -> list[list[SuperFunction]]:
        return [[self.pullback(e) for e in row] for row in entries]


def pullback_metric_components(phi: CoordinateChange, comps: Sequence[Sequence[SuperFunction]]
                               ) -> list[list[SuperFunction]]:
    """Components g_{ba} on the source from components on the target.

    g_{ba} = (-1)^{p(b)(p(a)+p(a'))} J_a^{a'} J_b^{b'} g'_{b'a'}(phi(x)), J_a^{a'} = d_a phi^{a'}.
    """
    src, tgt = phi.source, phi.target
    J = phi.jacobian()
    gp = phi.pullback_matrix(comps)
    out = [[SuperFunction.zero(src) for _ in range(src.dim)] for _ in range(src.dim)]
    # inner[b][a'] = sum_b' J_b^{b'} g'_{b'a'}
    inner = [[SuperFunction.zero(src) for _ in range(tgt.dim)] for _ in range(src.dim)]
    for b in range(src.dim):
        for ap in range(tgt.dim):
            acc = SuperFunction.zero(src)
            for bp in range(tgt.dim):
                jb = J[bp, b]
                if jb.terms and gp[bp][ap].terms:
                    acc = acc + jb * gp[bp][ap]
            inner[b][ap] = acc
    for b in range(src.dim):
        pb = int(src.parity(b))
        for a in range(src.dim):
            pa = int(src.parity(a))
            acc = SuperFunction.zero(src)
            for ap in range(tgt.dim):
                ja = J[ap, a]
                if not ja.terms or not inner[b][ap].terms:
                    continue
                term = ja * inner[b][ap]
                if pb * (pa + int(tgt.parity(ap))) % 2:
                    term = -term
                acc = acc + term
            out[b][a] = acc
    return out


def transform_metric(c: CoordinateChange, g):
    """Express a metric given on ``c.target`` in the coordinates of ``c.source``."""
    from .geometry import MetricTensor
    if g.chart != c.target:
        raise ChartMismatch("metric does not live on the target chart")
    return MetricTensor(c.source, pullback_metric_components(c, g.rows()))


def pushforward_components(c: CoordinateChange, X) -> list[SuperFunction]:
    """X^{a'} = X^a d_a phi^{a'}, still as functions on the source."""
    J = c.jacobian()
    out = []
    for ap in range(c.target.dim):
        acc = SuperFunction.zero(c.source)
        for a in range(c.source.dim):
            if X.components[a].terms and J[ap, a].terms:
                acc = acc + X.components[a] * J[ap, a]
        out.append(acc)
    return out


def transform_vector(c: CoordinateChange, X):
    """Push a field on the source to the target, re-expressed through the inverse change."""
    from .geometry import VectorField
    if X.chart != c.source:
        raise ChartMismatch("vector field does not live on the source chart")
    inv = c.inverse()
    comps = [inv.pullback(f) for f in pushforward_components(c, X)]
    return VectorField(c.target, X.parity, comps)


def linear_change(chart: Chart, target: Chart, matrix, inverse=None, name="lin") -> CoordinateChange:
    """Change y^{a'} = sum_a M[a'][a] x^a with rational entries (used in tests and fixtures)."""
    xs = chart.coords()
    imgs = [sum((x * v for x, v in zip(xs, row) if v), SuperFunction.zero(chart)) for row in matrix]
    inv = None
    if inverse is not None:
        ys = target.coords()
        inv = [sum((y * v for y, v in zip(ys, row) if v), SuperFunction.zero(target)) for row in inverse]
    return CoordinateChange(chart, target, tuple(imgs), tuple(inv) if inv else None, name=name)


__all__ = [
    "Chart", "CoordinateChange", "embed", "pullback_metric_components", "transform_metric",
    "pushforward_components", "transform_vector", "linear_change",
]

