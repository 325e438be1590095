"""Lie algebras with an almost-symplectic form, seen as Q-manifolds on Pi g.

Indices are 0-based internally; the DSL and JSON formats are 1-based.
``structure[(c, b, a)]`` is Q^c_{ba} with [e_b, e_a] = Q^c_{ba} e_c, and
``form[(b, a)]`` is g_{ba}.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .charts import Chart
from .geometry import MetricTensor, Verdict, VectorField, is_homological, is_killing
from .superalgebra import SuperFunction


class LieDataError(ValueError):
    pass


def _frac(v) -> Fraction:
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**9)
    return Fraction(v)


@dataclass(frozen=True)
class LieAlgebraData:
    dim: int
    structure: Mapping[tuple[int, int, int], Fraction]
    form: Mapping[tuple[int, int], Fraction]
    name: str = "L"

    def __post_init__(self):
        d = self.dim
        if d <= 0 or d % 2:
            raise LieDataError("dimension must be a positive even number")
        st = {tuple(k): _frac(v) for k, v in self.structure.items() if _frac(v) != 0}
        fm = {tuple(k): _frac(v) for k, v in self.form.items() if _frac(v) != 0}
        for (c, b, a), v in st.items():
            if not all(0 <= i < d for i in (c, b, a)):
                raise LieDataError(f"structure index out of range: {(c + 1, b + 1, a + 1)}")
            if st.get((c, a, b), 0) != -v:
                raise LieDataError(f"structure constants not antisymmetric at {(c + 1, b + 1, a + 1)}")
        for (b, a), v in fm.items():
            if not all(0 <= i < d for i in (b, a)):
                raise LieDataError(f"form index out of range: {(b + 1, a + 1)}")
            if fm.get((a, b), 0) != -v:
                raise LieDataError(f"form not antisymmetric at {(b + 1, a + 1)}")
        object.__setattr__(self, "structure", st)
        object.__setattr__(self, "form", fm)
        if _exact_det(self.form_matrix()) == 0:
            raise LieDataError("form is degenerate")

    # -- constructors ----------------------------------------------------
    @classmethod
    def from_entries(cls, dim: int, structure: Iterable = (), form: Iterable = (), name: str = "L",
                     one_based: bool = True) -> "LieAlgebraData":
        """Build from partial entry lists, completing by antisymmetry."""
        off = 1 if one_based else 0
        st: dict[tuple[int, int, int], Fraction] = {}
        fm: dict[tuple[int, int], Fraction] = {}

        def put(dct, key, val):
            if key in dct and dct[key] != val:
                raise LieDataError(f"conflicting entries at {tuple(i + off for i in key)}")
            dct[key] = val

        for c, b, a, v in structure:
            c, b, a, v = c - off, b - off, a - off, _frac(v)
            if b == a and v != 0:
                raise LieDataError("structure constants must vanish on equal lower indices")
            put(st, (c, b, a), v)
            put(st, (c, a, b), -v)
        for b, a, v in form:
            b, a, v = b - off, a - off, _frac(v)
            if b == a and v != 0:
                raise LieDataError("form must vanish on the diagonal")
            put(fm, (b, a), v)
            put(fm, (a, b), -v)
        return cls(dim, st, fm, name)

    @classmethod
    def from_json(cls, source, name: str = "L") -> "LieAlgebraData":
        data = json.loads(source) if isinstance(source, str) else source
        try:
            return cls.from_entries(int(data["dim"]), [tuple(e) for e in data.get("structure", [])],
                                    [tuple(e) for e in data.get("form", [])], name=name)
        except (KeyError, TypeError) as exc:
            raise LieDataError(f"malformed lie-algebra JSON: {exc}") from exc

    def to_json(self) -> str:
        st = [[c + 1, b + 1, a + 1, _jsonable(v)] for (c, b, a), v in sorted(self.structure.items()) if b < a]
        fm = [[b + 1, a + 1, _jsonable(v)] for (b, a), v in sorted(self.form.items()) if b < a]
        return json.dumps({"dim": self.dim, "structure": st, "form": fm})

    # -- arrays ----------------------------------------------------------
    def structure_array(self) -> np.ndarray:
        C = np.zeros((self.dim,) * 3, dtype=object)
        C[...] = Fraction(0)
        for k, v in self.structure.items():
            C[k] = v
        return C

    def form_array(self) -> np.ndarray:
        G = np.zeros((self.dim,) * 2, dtype=object)
        G[...] = Fraction(0)
        for k, v in self.form.items():
            G[k] = v
        return G

    def form_matrix(self) -> list[list[Fraction]]:
        return self.form_array().tolist()

    def bracket(self, x: Iterable, y: Iterable) -> list[Fraction]:
        C = self.structure_array()
        x, y = list(x), list(y)
        return [sum((C[c, b, a] * x[b] * y[a] for b in range(self.dim) for a in range(self.dim)), Fraction(0))
                for c in range(self.dim)]


def _jsonable(v: Fraction):
    return int(v) if v.denominator == 1 else str(v)


def _exact_det(M: list[list[Fraction]]) -> Fraction:
    A = [list(r) for r in M]
    n = len(A)
    det = Fraction(1)
    for k in range(n):
        p = next((r for r in range(k, n) if A[r][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            A[k], A[p] = A[p], A[k]
            det = -det
        det *= A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            A[i] = [x - f * y for x, y in zip(A[i], A[k])]
    return det


# -- geometric realisation ---------------------------------------------------

def lie_chart(L: LieAlgebraData) -> Chart:
    return Chart("Pi" + L.name, (), tuple(f"xi{i + 1}" for i in range(L.dim)))


def build_homological(L: LieAlgebraData, chart: Chart | None = None) -> VectorField:
    """Q = 1/2 xi^a xi^b Q^c_{ba} d/dxi^c on the purely odd chart."""
    ch = chart or lie_chart(L)
    xs = ch.coords()
    comps = [SuperFunction.zero(ch) for _ in range(L.dim)]
    for (c, b, a), v in L.structure.items():
        comps[c] = comps[c] + xs[a] * xs[b] * (v / 2)
    return VectorField(ch, 1, comps)


def build_metric(L: LieAlgebraData, chart: Chart | None = None) -> MetricTensor:
    ch = chart or lie_chart(L)
    rows = [[SuperFunction.constant(ch, L.form.get((b, a), 0)) for a in range(L.dim)] for b in range(L.dim)]
    return MetricTensor(ch, rows)


def _verdict(name: str, bad: list[tuple[str, Fraction]], **payload) -> Verdict:
    return Verdict(name, "fail" if bad else "pass", "symbolic", [(k, str(v)) for k, v in bad], [], payload)


def jacobi_residuals(L: LieAlgebraData) -> list[tuple[str, Fraction]]:
    """Nonzero entries of the cyclic sum [[e_i,e_j],e_k] + cyclic, in components."""
    C = L.structure_array()
    d = L.dim
    out = []
    for i, j, k in itertools.combinations(range(d), 3):
        for l in range(d):
            s = sum((C[m, i, j] * C[l, m, k] + C[m, j, k] * C[l, m, i] + C[m, k, i] * C[l, m, j]
                     for m in range(d)), Fraction(0))
            if s:
                out.append((f"J^{l + 1}_{i + 1}{j + 1}{k + 1}", s))
    return out


def check_jacobi(L: LieAlgebraData) -> Verdict:
    return _verdict("jacobi", jacobi_residuals(L))


def algebraic_killing_residuals(L: LieAlgebraData) -> list[tuple[str, Fraction]]:
    """Q^c_{da} g_{cb} - Q^c_{db} g_{ca} for all (d, a, b)."""
    C, G = L.structure_array(), L.form_array()
    n = L.dim
    out = []
    for dl, a, b in itertools.product(range(n), repeat=3):
        s = sum((C[c, dl, a] * G[c, b] - C[c, dl, b] * G[c, a] for c in range(n)), Fraction(0))
        if s:
            out.append((f"K_{dl + 1}{a + 1}{b + 1}", s))
    return out


def check_algebraic_killing(L: LieAlgebraData) -> Verdict:
    return _verdict("liealg_killing", algebraic_killing_residuals(L))


def check_unimodular_trace(L: LieAlgebraData) -> Verdict:
    """Q^a_{da} = 0 for every d."""
    C = L.structure_array()
    bad = []
    for dl in range(L.dim):
        s = sum((C[a, dl, a] for a in range(L.dim)), Fraction(0))
        if s:
            bad.append((f"tr_{dl + 1}", s))
    return _verdict("liealg_trace", bad)


def geometric_killing(L: LieAlgebraData) -> Verdict:
    return is_killing(build_metric(L), build_homological(L))


def geometric_homological(L: LieAlgebraData) -> Verdict:
    return is_homological(build_homological(L))


# -- brute-force search ------------------------------------------------------

@dataclass
class SearchResult:
    instances: int = 0
    jacobi_structures: int = 0
    killing: int = 0
    trace_free: int = 0
    counterexamples: list = field(default_factory=list)  # Killing but not trace-free
    unimodular_not_killing: int = 0
    fixtures: list = field(default_factory=list)  # LieAlgebraData passing both
    separating_examples: list = field(default_factory=list)
    searched: dict = field(default_factory=dict)


def _pairs(d):
    return [(b, a) for b in range(d) for a in range(b + 1, d)]


def _forms(d, coeffs):
    pairs = _pairs(d)
    out = []
    for vals in itertools.product(coeffs, repeat=len(pairs)):
        G = np.zeros((d, d))
        for (b, a), v in zip(pairs, vals):
            G[b, a], G[a, b] = v, -v
        if abs(np.linalg.det(G)) > 0.5:
            out.append(G)
    return np.array(out)


def _structures(d, coeffs, max_nonzero):
    slots = [(c, b, a) for c in range(d) for (b, a) in _pairs(d)]
    nz = [v for v in coeffs if v != 0]
    yield np.zeros((d, d, d))
    for k in range(1, min(max_nonzero, len(slots)) + 1):
        for chosen in itertools.combinations(range(len(slots)), k):
            for vals in itertools.product(nz, repeat=k):
                C = np.zeros((d, d, d))
                for s, v in zip(chosen, vals):
                    c, b, a = slots[s]
                    C[c, b, a], C[c, a, b] = v, -v
                yield C


def _jacobi_ok(C) -> bool:
    J = (np.einsum("mij,lmk->lijk", C, C) + np.einsum("mjk,lmi->lijk", C, C)
         + np.einsum("mki,lmj->lijk", C, C))
    return not np.any(np.abs(J) > 1e-9)


def _to_data(C, G, name) -> LieAlgebraData:
    d = C.shape[0]
    st = {(c, b, a): Fraction(int(C[c, b, a])) for c, b, a in itertools.product(range(d), repeat=3) if C[c, b, a]}
    fm = {(b, a): Fraction(int(G[b, a])) for b, a in itertools.product(range(d), repeat=2) if G[b, a]}
    return LieAlgebraData(d, st, fm, name)


def search(dims: Iterable[int] = (2, 4), coeffs=(-1, 0, 1), max_nonzero: Mapping[int, int] | None = None,
           keep: int = 8) -> SearchResult:
    """Enumerate (structure, form) pairs and tabulate both conditions.

    Structures are enumerated exhaustively up to ``max_nonzero[d]`` independent
    nonzero constants (default: all for d=2, three for d=4); forms exhaustively.
    """
    max_nonzero = {2: 2, 4: 3, **(max_nonzero or {})}
    res = SearchResult()
    for d in dims:
        forms = _forms(d, coeffs)
        # K[f, (dl,a,b)] is linear in the form: K = sum_c C[c,dl,a] G[c,b] - C[c,dl,b] G[c,a]
        flat_forms = forms.reshape(len(forms), d * d)
        res.searched[d] = {"forms": len(forms), "max_nonzero": max_nonzero[d]}
        n_struct = 0
        for C in _structures(d, coeffs, max_nonzero[d]):
            n_struct += 1
            if not _jacobi_ok(C):
                continue
            res.jacobi_structures += 1
            trace_free = not np.any(np.abs(np.einsum("ada->d", C)) > 1e-9)
            # linear map from vec(G) (index c*d+b) to K[dl,a,b]
            A = np.zeros((d, d, d, d, d))
            for c in range(d):
                for b in range(d):
                    A[:, :, b, c, b] += C[c]
                    A[:, b, :, c, b] -= C[c]
            M = A.reshape(d ** 3, d * d)
            K = np.abs(M @ flat_forms.T).max(axis=0) if d else np.zeros(len(forms))
            kill = K < 1e-9
            nk = int(kill.sum())
            res.instances += len(forms)
            res.killing += nk
            if trace_free:
                res.trace_free += len(forms)
                res.unimodular_not_killing += len(forms) - nk
                if nk < len(forms) and len(res.separating_examples) < keep:
                    G = forms[int(np.flatnonzero(~kill)[0])]
                    res.separating_examples.append(_to_data(C, G, f"sep{len(res.separating_examples) + 1}"))
            elif nk:
                for i in np.flatnonzero(kill)[:keep]:
                    res.counterexamples.append(_to_data(C, forms[i], "counter"))
            if nk and len(res.fixtures) < keep * 4:
                for i in np.flatnonzero(kill)[:2]:
                    res.fixtures.append(_to_data(C, forms[i], f"fix{len(res.fixtures) + 1}"))
        res.searched[d]["structures"] = n_struct
    return res


def random_instance(rng: np.random.Generator, dim: int = 4, coeffs=(-1, 0, 1), density: float = 0.3,
                    name: str = "R") -> LieAlgebraData:
    """Random antisymmetric constants and a random nondegenerate form (no Jacobi filter)."""
    while True:
        st, fm = [], []
        for c in range(dim):
            for b, a in _pairs(dim):
                if rng.random() < density:
                    st.append((c, b, a, int(rng.choice(coeffs))))
        for b, a in _pairs(dim):
            fm.append((b, a, int(rng.choice(coeffs))))
        try:
            return LieAlgebraData.from_entries(dim, st, fm, name=name, one_based=False)
        except LieDataError:
            continue
