from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from fibreflow.diagram import ClosedBraid, GaussCode, half_twist, simplify, trefoil

from oracles import knot_determinant


def test_trefoil_is_not_simplified():
    r = simplify(trefoil())
    assert not r.unknot
    assert r.start_crossings == 3
    assert knot_determinant(trefoil().gauss()) == 3


def test_figure_eight_is_not_simplified():
    b = ClosedBraid(3, (1, -2, 1, -2))
    assert not simplify(b).unknot
    assert knot_determinant(b.gauss()) == 5


@pytest.mark.parametrize("word", [(1,), (-1,), (1, 2), (1, -2), (1, 2, 3), (-1, 2, -3, 1, -1)])
def test_stabilised_unknots(word):
    n = max(abs(g) for g in word) + 1
    b = ClosedBraid(n, word)
    if len(b.gauss().components) != 1:
        pytest.skip("not a knot")
    assert simplify(b).unknot
    assert knot_determinant(b.gauss()) == 1


def test_empty_diagram_is_unknot():
    r = simplify(GaussCode(((),)))
    assert r.unknot and r.start_crossings == 0


def test_rejects_links():
    with pytest.raises(ValueError):
        simplify(ClosedBraid(2, (1, 1)))


def test_rejects_broken_codes():
    with pytest.raises(ValueError):
        simplify(GaussCode((((0, True), (0, True)),)))


def test_gauss_code_of_braid():
    g = ClosedBraid(3, (1, -2)).gauss()
    g.check()
    assert g.crossings == 2 and g.writhe == 0
    assert len(g.components) == 1


def test_half_twist_is_the_reversal():
    for n in range(2, 7):
        order = list(range(n))
        for slot, _ in half_twist(n):
            order[slot], order[slot + 1] = order[slot + 1], order[slot]
        assert order == list(reversed(range(n)))
        assert len(half_twist(n)) == n * (n - 1) // 2


def test_budget_exhaustion_is_not_a_proof():
    r = simplify(ClosedBraid(3, (1, 1, 2, -1, 2, 2)), max_states=3)
    assert not r.unknot


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2]), min_size=1, max_size=6))
def test_found_unknots_have_unit_determinant(word):
    b = ClosedBraid(3, tuple(word))
    if len(b.gauss().components) != 1:
        return
    r = simplify(b, max_states=5000)
    if r.unknot:
        assert knot_determinant(b.gauss()) == 1
