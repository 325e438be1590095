"""Berezin volumes, divergence, modular representatives and unimodularity certificates."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .charts import CoordinateChange, transform_metric
from .geometry import (MetricTensor, Verdict, VectorField, inverse_metric, is_homological, is_killing,
                       lie_derivative_metric, metric_trace, verdict_from)
from .superalgebra import (ChartMismatch, NotInvertible, Parity, SuperFunction, apply_function, invert,
                           is_zero, scalar_zero_test, sqrt_even)
from .supermatrix import SuperMatrix, berezinian, inverse, supertrace, supertranspose

__all__ = [
    "SuperMatrix", "berezinian", "inverse", "supertrace", "supertranspose",
    "BerezinVolume", "DivergenceReport", "UnimodularCertificate", "CertificateError",
    "canonical_volume", "divergence", "modular_representative", "certify_unimodular",
    "trace_divergence_residual", "pullback_volume", "determinant_transformation_residual",
    "local_representative",
]


@dataclass(frozen=True)
class BerezinVolume:
    chart: object
    density: SuperFunction

    def __post_init__(self):
        rho = self.density
        if rho.chart != self.chart:
            raise ChartMismatch("density lives on another chart")
        if not rho.parity_homogeneous() or rho.parity != Parity.EVEN:
            raise ValueError("a Berezin volume density must be even")
        if scalar_zero_test(rho.body, self.chart.box_dict).status != "nonzero":
            raise NotInvertible("density body vanishes identically")
        _check_nonvanishing(rho)

    @classmethod
    def coordinate(cls, chart) -> "BerezinVolume":
        return cls(chart, SuperFunction.constant(chart, 1))

    def scaled_exp(self, f: SuperFunction) -> "BerezinVolume":
        """exp(f) * rho for an even function f."""
        return BerezinVolume(self.chart, apply_function("exp", f) * self.density)


def _check_nonvanishing(rho: SuperFunction) -> None:
    import numpy as np
    from .superalgebra import current_sampling, sample_points
    body = rho.body
    if body.is_constant:
        return
    cfg = current_sampling()
    rng = np.random.default_rng(cfg.seed + 7)
    pts = sample_points(body.free_coordinates(), rho.chart.box_dict, cfg.samples, rng)
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(body.evaluate(pts), dtype=float), (cfg.samples,))
    finite = vals[np.isfinite(vals)]
    if finite.size and np.min(np.abs(finite)) < 1e-12:
        raise NotInvertible("density body vanishes inside the validity box")
    if finite.size and np.min(finite) < 0 < np.max(finite):
        raise NotInvertible("density body changes sign inside the validity box")


def canonical_volume(g: MetricTensor) -> BerezinVolume:
    """dV = D[x] sqrt|g| with |g| = Ber(g_{ba}); positive branch of the square root."""
    det = g.determinant()
    try:
        _check_nonvanishing(det)
    except NotInvertible as exc:
        raise NotInvertible(f"metric degenerates inside the validity box ({exc})") from None
    return BerezinVolume(g.chart, sqrt_even(det))


def divergence(rho: BerezinVolume, X: VectorField) -> SuperFunction:
    """Div_rho X = sum_a (-1)^{p(a)(p(X)+1)} rho^{-1} d_a(X^a rho)."""
    if rho.chart != X.chart:
        raise ChartMismatch("volume and field on different charts")
    r = rho.density
    flux = _flux(r, X)
    if r.terms.keys() == {()} and r.body.is_constant:
        return flux * (1 / r.body)
    return invert(r) * flux


def _flux(r: SuperFunction, X: VectorField) -> SuperFunction:
    """sum_a (-1)^{p(a)(p(X)+1)} d_a(X^a rho), i.e. rho Div_rho X."""
    ch = X.chart
    px = int(X.parity)
    acc = SuperFunction.zero(ch)
    for a, c in enumerate(X.components):
        if not c.terms:
            continue
        term = (c * r).partial(a)
        if int(ch.parity(a)) * (px + 1) % 2:
            term = -term
        acc = acc + term
    return acc


def local_representative(Q: VectorField) -> SuperFunction:
    """phi_Q = d Q^a / d x^a (the divergence for the coordinate volume)."""
    return divergence(BerezinVolume.coordinate(Q.chart), Q)


@dataclass
class DivergenceReport:
    value: SuperFunction
    volume_used: BerezinVolume
    q_closed: Verdict | None = None


def modular_representative(rho: BerezinVolume, Q: VectorField) -> DivergenceReport:
    h = is_homological(Q)
    if not h.holds:
        raise ValueError(f"field is not homological: {h.witnesses}")
    value = divergence(rho, Q)
    return DivergenceReport(value, rho, verdict_from("q_closed", [("Q(Div Q)", Q(value))]))


class CertificateError(ValueError):
    def __init__(self, message: str, witnesses):
        super().__init__(message)
        self.witnesses = list(witnesses)


@dataclass
class UnimodularCertificate:
    volume: BerezinVolume
    divergence: SuperFunction
    verdict: Verdict
    flux: SuperFunction = field(repr=False, default=None)


def certify_unimodular(g: MetricTensor, Q: VectorField) -> UnimodularCertificate:
    """Invariant volume for a homological Killing field: the canonical one."""
    if Q.parity != Parity.ODD:
        raise CertificateError("field is not odd, so it cannot be homological", [])
    h = is_homological(Q)
    if not h.holds:
        raise CertificateError("field is not homological", h.witnesses)
    k = is_killing(g, Q)
    if not k.holds:
        raise CertificateError("field is not Killing", k.witnesses)
    dV = canonical_volume(g)
    div = divergence(dV, Q)
    flux = _flux(dV.density, Q)
    v = verdict_from("unimodular", [("Div_dV Q", div), ("L_Q rho", flux)], density=dV.density)
    return UnimodularCertificate(dV, div, v, flux)


def trace_divergence_residual(g: MetricTensor, X: VectorField, ginv=None) -> SuperFunction:
    """1/2 Str_g(L_X g) - Div_dV X."""
    L = lie_derivative_metric(g, X)
    lhs = metric_trace(g, L, ginv or inverse_metric(g)) * Fraction(1, 2)
    return lhs - divergence(canonical_volume(g), X)


def pullback_volume(c: CoordinateChange, rho: BerezinVolume) -> BerezinVolume:
    """Density on the source: rho(phi(x)) Ber(d x'/d x), from D[x'] = D[x] Ber(J)."""
    if rho.chart != c.target:
        raise ChartMismatch("volume does not live on the target chart")
    return BerezinVolume(c.source, c.pullback(rho.density) * c.berezinian())


def determinant_transformation_residual(c: CoordinateChange, g: MetricTensor) -> SuperFunction:
    """|g_src| - |g|(phi) Ber(J)^2 for a metric ``g`` on the target."""
    g_src = transform_metric(c, g)
    B = c.berezinian()
    return g_src.determinant() - c.pullback(g.determinant()) * B * B
