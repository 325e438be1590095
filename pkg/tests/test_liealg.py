from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from superkilling.liealg import (LieAlgebraData, LieDataError, algebraic_killing_residuals, build_homological,
                                 build_metric, check_algebraic_killing, check_jacobi, check_unimodular_trace,
                                 geometric_homological, geometric_killing, random_instance, search)
from superkilling.geometry import lie_derivative_metric


def test_nonabelian_two_dim_example():
    L = LieAlgebraData.from_entries(2, [(1, 1, 2, 1)], [(1, 2, 1)])
    assert L.bracket([1, 0], [0, 1]) == [1, 0]
    assert check_jacobi(L).holds
    k = check_algebraic_killing(L)
    assert not k.holds
    assert dict(k.witnesses) == {"K_212": "-1", "K_221": "1"}
    tr = check_unimodular_trace(L)
    assert dict(tr.witnesses) == {"tr_2": "-1"}
    assert not geometric_killing(L).holds


def test_abelian_passes_everything():
    L = LieAlgebraData.from_entries(4, [], [(1, 2, 1), (3, 4, 1)])
    assert check_algebraic_killing(L).holds and check_unimodular_trace(L).holds
    assert geometric_killing(L).holds and geometric_homological(L).holds


def test_heisenberg_separates_the_conditions():
    L = LieAlgebraData.from_entries(4, [(3, 1, 2, 1)], [(1, 2, 1), (3, 4, 1)])
    assert check_jacobi(L).holds
    assert check_unimodular_trace(L).holds
    assert not check_algebraic_killing(L).holds


def test_data_validation():
    with pytest.raises(LieDataError):
        LieAlgebraData.from_entries(3, [], [(1, 2, 1)])
    with pytest.raises(LieDataError):
        LieAlgebraData.from_entries(2, [], [(1, 2, 0)])
    with pytest.raises(LieDataError):
        LieAlgebraData.from_entries(2, [(1, 1, 1, 1)], [(1, 2, 1)])
    with pytest.raises(LieDataError):
        LieAlgebraData.from_entries(2, [(1, 1, 2, 1), (1, 2, 1, 1)], [(1, 2, 1)])
    with pytest.raises(LieDataError):
        LieAlgebraData.from_json('{"structure": []}')


def test_json_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        L = random_instance(rng, 4)
        M = LieAlgebraData.from_json(L.to_json(), name=L.name)
        assert M == L
        assert json.loads(M.to_json()) == json.loads(L.to_json())
    L = LieAlgebraData.from_entries(2, [(1, 1, 2, Fraction(1, 2))], [(1, 2, 3)])
    assert LieAlgebraData.from_json(L.to_json()) == L


def test_algebraic_and_geometric_paths_agree():
    rng = np.random.default_rng(11)
    for _ in range(50):
        L = random_instance(rng, 4)
        assert check_algebraic_killing(L).holds == geometric_killing(L).holds
        assert check_jacobi(L).holds == geometric_homological(L).holds


def test_geometric_residual_matches_components():
    rng = np.random.default_rng(5)
    for _ in range(10):
        L = random_instance(rng, 4)
        res = dict(algebraic_killing_residuals(L))
        Lg = lie_derivative_metric(build_metric(L), build_homological(L))
        nonzero = any(Lg[b, a].terms for b in range(4) for a in range(4))
        assert nonzero == bool(res)


def test_search_implication_and_abelian_only():
    res = search(dims=(2, 4), max_nonzero={4: 2})
    assert res.counterexamples == []
    assert res.killing > 0
    assert all(not L.structure for L in res.fixtures)
    assert res.unimodular_not_killing > 0
    for L in res.separating_examples[:4]:
        assert check_unimodular_trace(L).holds and not check_algebraic_killing(L).holds
