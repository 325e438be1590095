"""Execute check directives and back every verdict with the numeric oracle."""
from __future__ import annotations

import contextvars
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import numeric as nm
from .berezin import (BerezinVolume, CertificateError, canonical_volume, certify_unimodular, divergence,
                      modular_representative)
from .dsl import CheckDecl, Document
from .geometry import Verdict, check_killing_shander, check_rq_morphism, is_homological, is_killing
from .liealg import (LieAlgebraData, build_homological, build_metric, check_algebraic_killing,
                     check_unimodular_trace)
from .superalgebra import NotInvertible, current_sampling, is_zero, sample_points

ZERO_TOL = 1e-9
NONZERO_TOL = 1e-6


@dataclass
class CheckResult:
    index: int
    directive: str
    args: tuple[str, ...]
    line: int
    col: int
    status: str  # pass | fail | numeric-pass | error
    method: str = "symbolic"
    witnesses: list[tuple[str, str]] = field(default_factory=list)
    payload: dict[str, str] = field(default_factory=dict)
    numeric_max: float | None = None
    numeric_agrees: bool = True
    message: str = ""
    seconds: float = 0.0

    @property
    def location(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass
class Report:
    results: list[CheckResult]
    seed: int
    samples: int
    tol: float
    seconds: float = 0.0
    source: str = ""

    @property
    def disagreements(self) -> list[CheckResult]:
        return [r for r in self.results if not r.numeric_agrees]

    @property
    def exit_code(self) -> int:
        if self.disagreements:
            return 3
        if any(r.status == "error" for r in self.results):
            return 2
        if any(r.status == "fail" for r in self.results):
            return 1
        return 0

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "seed": self.seed,
            "samples": self.samples,
            "tol": self.tol,
            "seconds": round(self.seconds, 6),
            "exit_code": self.exit_code,
            "results": [
                {**asdict(r), "args": list(r.args), "witnesses": [list(w) for w in r.witnesses],
                 "seconds": round(r.seconds, 6)}
                for r in self.results
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            head = f"[{r.status.upper()}] {r.directive}({', '.join(r.args)})  at {r.location}"
            lines.append(head + f"  ({r.seconds * 1e3:.1f} ms)")
            if r.message:
                lines.append(f"    {r.message}")
            for label, val in r.witnesses:
                lines.append(f"    witness {label} = {val}")
            for k, v in r.payload.items():
                lines.append(f"    {k}: {v}")
            if r.numeric_max is not None:
                tag = "agrees" if r.numeric_agrees else "DISAGREES"
                lines.append(f"    numeric oracle {tag} (max residual {r.numeric_max:.3g})")
        counts = {s: sum(r.status == s for r in self.results) for s in ("pass", "numeric-pass", "fail", "error")}
        summary = ", ".join(f"{v} {k}" for k, v in counts.items() if v)
        lines.append(f"{len(self.results)} checks: {summary or 'none'}; exit code {self.exit_code}")
        return "\n".join(lines)


# -- numeric side ------------------------------------------------------------

class _Numeric:
    """Numeric images of the document objects on one chart at fixed points."""

    def __init__(self, chart, rng: np.random.Generator, samples: int, order: int = 2):
        cfg = current_sampling()
        last = None
        for _ in range(cfg.retries):
            pts = sample_points(chart.even, chart.box_dict, samples, rng)
            self.nc = nm.NumericChart(chart, pts, order=order, count=samples)
            try:
                # probe the chart coordinates once; poles show up lazily anyway
                self.nc.zero()
                return
            except nm.PoleError as exc:  # pragma: no cover - defensive
                last = exc
        raise last

    def f(self, sf):
        return self.nc.function(sf)

    def field(self, X):
        return [self.f(c) for c in X.components]

    def metric(self, g):
        return [[self.f(c) for c in row] for row in g.rows()]


def _with_retries(fn: Callable[[np.random.Generator, int], list], rng, samples: int):
    """Evaluate residuals, redrawing points on poles."""
    cfg = current_sampling()
    last = None
    for _ in range(cfg.retries):
        try:
            return fn(rng, samples)
        except nm.PoleError as exc:
            last = exc
    raise last


def _compose(nc_src, f_target, images):
    """f_target(phi(x)) evaluated numerically from the numeric images."""
    tgt = f_target.chart
    env = {name: images[i] for i, name in enumerate(tgt.even)}
    out = nc_src.zero()
    for mono, c in f_target.terms.items():
        with np.errstate(all="ignore"):
            v = c.evaluate(env, lib=nm._JetLib)
        if not isinstance(v, nm.NumericSuperValue):
            v = nc_src.constant(float(v))
        if not np.all(np.isfinite(v.c)):
            raise nm.PoleError("non-finite value in composition")
        for i in mono:
            v = v * images[tgt.n + i]
        out = out + v
    return out


def _numeric_residuals(doc: Document, c: CheckDecl, rng, samples: int) -> list | None:
    """Residual values which vanish exactly when the directive's identity holds."""
    d, a = c.directive, c.args
    V, M = doc.vectors, doc.metrics

    def on(chart, body):
        def run(r, s):
            N = _Numeric(chart, r, s)
            return body(N)
        return _with_retries(run, rng, samples)

    if d == "homological":
        Q = V[a[0]]
        return on(Q.chart, lambda N: nm.homological_residuals(N.nc, N.field(Q)))
    if d in ("killing", "riemannian_q", "unimodular"):
        g, X = M[a[0]], V[a[1]]

        def body(N):
            gn, xn = N.metric(g), N.field(X)
            out = [v for row in nm.lie_derivative(N.nc, gn, xn, int(X.parity)) for v in row]
            if d != "killing":
                out += nm.homological_residuals(N.nc, xn)
            if d == "unimodular":
                out.append(nm.divergence(N.nc, nm.canonical_density(N.nc, gn), xn, int(X.parity)))
            return out
        return on(g.chart, body)
    if d == "divergence":
        X = V[a[-1]]
        g = M[a[0]] if len(a) == 2 else None

        def body(N):
            rho = nm.canonical_density(N.nc, N.metric(g)) if g else N.nc.constant(1.0)
            return [nm.divergence(N.nc, rho, N.field(X), int(X.parity))]
        return on(X.chart, body)
    if d == "modular":
        Q = V[a[0]]
        g = M[a[1]] if len(a) == 2 else None

        def body(N):
            qn = N.field(Q)
            rho = nm.canonical_density(N.nc, N.metric(g)) if g else N.nc.constant(1.0)
            div = nm.divergence(N.nc, rho, qn, 1)
            return nm.homological_residuals(N.nc, qn) + [nm.apply_field(N.nc, qn, div)]
        return on(Q.chart, body)
    if d == "shander":
        g = M[a[0]]
        t = g.chart.index(a[1])

        def body(N):
            gn = N.metric(g)
            return [N.nc.partial(v, t) for row in gn for v in row] + [gn[t][t]]
        return on(g.chart, body)
    if d == "morphism":
        g, Q, g2, Q2 = M[a[0]], V[a[1]], M[a[2]], V[a[3]]
        phi = doc.changes[a[4]]
        src, tgt = phi.source, phi.target

        def body(N):
            nc = N.nc
            im = [N.f(x) for x in phi.images]
            J = [[nc.partial(im[al], aa) for al in range(tgt.dim)] for aa in range(src.dim)]
            g2n = [[_compose(nc, c2, im) for c2 in row] for row in g2.rows()]
            gn = N.metric(g)
            out = []
            for b in range(src.dim):
                pb = src.parity(b)
                for aa in range(src.dim):
                    pa = src.parity(aa)
                    acc = nc.zero()
                    for al in range(tgt.dim):
                        s = nm._sgn(int(pb) * (int(pa) + int(tgt.parity(al))))
                        for be in range(tgt.dim):
                            acc = acc + J[aa][al] * J[b][be] * g2n[be][al] * s
                    out.append(acc - gn[b][aa])
            qn = N.field(Q)
            for al in range(tgt.dim):
                out.append(nm.apply_field(nc, qn, im[al]) - _compose(nc, Q2.components[al], im))
            return out
        return on(src, body)
    if d in ("liealg_killing", "liealg_trace"):
        L = doc.liealgs[a[0]]
        gl, ql = build_metric(L), build_homological(L)

        def body(N):
            qn = N.field(ql)
            if d == "liealg_killing":
                return [v for row in nm.lie_derivative(N.nc, N.metric(gl), qn, 1) for v in row]
            return [nm.divergence(N.nc, N.nc.constant(1.0), qn, 1)]
        return on(gl.chart, body)
    return None


# -- symbolic side -------------------------------------------------------------

def _fmt(v) -> str:
    return v.to_str() if hasattr(v, "to_str") else str(v)


def _symbolic(doc: Document, c: CheckDecl) -> Verdict:
    d, a = c.directive, c.args
    V, M = doc.vectors, doc.metrics
    if d == "homological":
        return is_homological(V[a[0]])
    if d == "killing":
        v = is_killing(M[a[0]], V[a[1]])
        v.payload.pop("lie_derivative", None)
        return v
    if d == "riemannian_q":
        h, k = is_homological(V[a[1]]), is_killing(M[a[0]], V[a[1]])
        status = "pass" if h.holds and k.holds else ("fail" if "fail" in (h.status, k.status) else "unknown")
        method = "numeric" if "numeric" in (h.method, k.method) else "symbolic"
        return Verdict("riemannian_q", status, method, h.witnesses + k.witnesses, h.residuals + k.residuals)
    if d == "divergence":
        X = V[a[-1]]
        rho = canonical_volume(M[a[0]]) if len(a) == 2 else BerezinVolume.coordinate(X.chart)
        val = divergence(rho, X)
        z = is_zero(val)
        v = Verdict("divergence", "pass" if z.zero else ("fail" if z.status == "nonzero" else "unknown"), z.method,
                    [] if z.status != "nonzero" else [("Div", val.to_str())], [("Div", val)])
        v.payload.update(density=rho.density.to_str(), divergence=val.to_str())
        return v
    if d == "modular":
        Q = V[a[0]]
        rho = canonical_volume(M[a[1]]) if len(a) == 2 else BerezinVolume.coordinate(Q.chart)
        h = is_homological(Q)
        if not h.holds:
            return h
        rep = modular_representative(rho, Q)
        v = rep.q_closed
        v.name = "modular"
        v.payload.update(density=rho.density.to_str(), representative=rep.value.to_str(),
                         vanishes=str(is_zero(rep.value).zero).lower())
        return v
    if d == "unimodular":
        try:
            cert = certify_unimodular(M[a[0]], V[a[1]])
        except CertificateError as exc:
            v = Verdict("unimodular", "fail", "symbolic", list(exc.witnesses) or [("certificate", str(exc))])
            v.payload["certificate"] = f"not found within the canonical volume family ({exc})"
            return v
        v = cert.verdict
        v.payload = {"certificate": "found", "density": cert.volume.density.to_str(),
                     "divergence": cert.divergence.to_str()}
        return v
    if d == "shander":
        v = check_killing_shander(M[a[0]], a[1])
        p = v.payload
        v.payload = {"tau": p["tau"], "g_tautau_zero": str(p["g_tautau_zero"]).lower(),
                     "reduced": "; ".join(f"g_{j}{i}={_fmt(f)}" for (j, i), f in p["reduced"].items()),
                     "mixed": "; ".join(f"g_{i}={_fmt(f)}" for i, f in p["mixed"].items())}
        return v
    if d == "morphism":
        return check_rq_morphism(M[a[0]], V[a[1]], M[a[2]], V[a[3]], doc.changes[a[4]])
    if d == "liealg_killing":
        return check_algebraic_killing(doc.liealgs[a[0]])
    if d == "liealg_trace":
        return check_unimodular_trace(doc.liealgs[a[0]])
    raise ValueError(f"unknown directive {d}")


def _payload_str(p: dict) -> dict[str, str]:
    return {k: _fmt(v) for k, v in p.items()}


def run_check(doc: Document, c: CheckDecl, index: int) -> CheckResult:
    t0 = time.perf_counter()
    cfg = current_sampling()
    res = CheckResult(index, c.directive, c.args, c.pos[0], c.pos[1], "error")
    try:
        v = _symbolic(doc, c)
    except (ValueError, ArithmeticError, NotInvertible) as exc:
        res.message = f"{c.directive} at {c.pos[0]}:{c.pos[1]}: {exc}"
        res.seconds = time.perf_counter() - t0
        return res
    res.method = v.method
    res.witnesses = list(v.witnesses)
    res.payload = _payload_str(v.payload)
    if v.status == "unknown":
        res.status = "error"
        res.message = "numeric zero test inconclusive (too many poles at sample points)"
    elif v.status == "fail":
        res.status = "fail"
    else:
        res.status = "numeric-pass" if v.method == "numeric" else "pass"
    # numeric re-verification
    rng = np.random.default_rng([cfg.seed, index, 17])
    try:
        worst = _worst(doc, c, rng, cfg.samples)
        res.numeric_max = worst
        if res.status in ("pass", "numeric-pass"):
            res.numeric_agrees = worst < ZERO_TOL
        elif res.status == "fail":
            if worst < NONZERO_TOL:
                # widen the sampling before declaring a disagreement
                wide = _worst(doc, c, np.random.default_rng([cfg.seed, index, 18]), 8 * cfg.samples)
                res.numeric_max = max(worst, wide)
                res.numeric_agrees = res.numeric_max >= NONZERO_TOL
        if not res.numeric_agrees:
            res.message = ("internal error: symbolic and numeric verdicts disagree "
                           f"(symbolic {res.status}, numeric max residual {res.numeric_max:.3g})")
    except (nm.PoleError, ValueError, ArithmeticError) as exc:
        res.numeric_agrees = False
        res.message = f"internal error: numeric oracle failed: {exc}"
    if res.status == "fail" and not res.witnesses:
        res.witnesses = [("residual", "nonzero")]
    res.seconds = time.perf_counter() - t0
    return res


def _worst(doc, c, rng, samples) -> float:
    vals = _numeric_residuals(doc, c, rng, samples) or []
    return max((v.max_abs() for v in vals), default=0.0)


def run_checks(doc: Document, parallel: bool = False, workers: int | None = None) -> Report:
    """Run every check directive in document order."""
    cfg = current_sampling()
    t0 = time.perf_counter()
    checks = doc.checks
    if parallel and len(checks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(contextvars.copy_context().run, run_check, doc, c, i) for i, c in enumerate(checks)]
            results = [f.result() for f in futs]
    else:
        results = [run_check(doc, c, i) for i, c in enumerate(checks)]
    return Report(results, cfg.seed, cfg.samples, cfg.tol, time.perf_counter() - t0)


__all__ = ["CheckResult", "Report", "run_check", "run_checks", "ZERO_TOL", "NONZERO_TOL"]
