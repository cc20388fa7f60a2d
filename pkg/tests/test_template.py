from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibreflow.template import (
    BoundExceeded,
    ItinerariesCoincide,
    OrbitWord,
    SameOrbit,
    admissible,
    base_transits,
    branchline_order,
    compare_itineraries,
    enumerate_orbits,
    fixed_orbit_linking,
    layout_hash,
    layout_spec,
    least_rotation,
    linking,
    linking_table,
    orbit_points,
    periodic_point_count,
    suspend_normal_form,
    twist,
    use_layout,
)
from fibreflow.universality import triple_square

PQ = [(p, q) for p in range(1, 5) for q in range(1, 5)]


def brute_census(t, length: int) -> int:
    """Count admissible words of exactly this length by listing all of them."""
    total = 0
    for w in itertools.product(t.symbols, repeat=length):
        if admissible(t, w):
            total += 1
    return total


def test_square_successors():
    t = suspend_normal_form(2, 2)
    assert set(t.successors("y")) == {"z2", "z3", "y", "x0", "x1"}
    assert "x0" in t.successors("x2")


@pytest.mark.parametrize("p,q", PQ)
def test_y_is_a_fixed_letter(p, q):
    t = suspend_normal_form(p, q)
    assert "y" in t.successors("y")
    assert admissible(t, ["y"])


def test_simple_alphabet():
    t = suspend_normal_form(1, 1)
    assert set(t.symbols) == {"x", "y", "z"}
    assert set(t.successors("x")) == {"x", "y", "z"}
    assert set(t.successors("y")) == {"x", "y", "z"}
    assert set(t.successors("z")) == {"y", "z"}
    for m in range(1, 6):
        for w in (["y"], ["x"] * m, ["z"] * m, ["y"] + ["x"] * m):
            assert admissible(t, w)


def test_admissibility_examples():
    t = suspend_normal_form(2, 2)
    assert not admissible(t, ["x0", "z0"])
    assert admissible(t, ["y", "x1", "x2"])
    assert not admissible(t, ["q"])


def test_fixed_letters():
    t = suspend_normal_form(1, 1)
    fixed = {w.symbols for w in enumerate_orbits(t, 1)}
    assert fixed == {("x",), ("y",), ("z",)}


@pytest.mark.parametrize("p,q", PQ)
def test_fixed_count_is_trace(p, q):
    t = suspend_normal_form(p, q)
    assert len(enumerate_orbits(t, 1)) == int(np.trace(t.matrix()))


@pytest.mark.parametrize("p,q", [(1, 1), (2, 2), (1, 3)])
@pytest.mark.parametrize("length", [1, 2, 3, 4])
def test_census_against_enumeration(p, q, length):
    t = suspend_normal_form(p, q)
    assert periodic_point_count(t, length) == brute_census(t, length)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(PQ), st.integers(1, 7))
def test_necklace_identity(pq, length):
    t = suspend_normal_form(*pq)
    words = enumerate_orbits(t, length)
    total = sum(len(w) for w in words if length % len(w) == 0)
    assert total == periodic_point_count(t, length)


def test_enumeration_bound():
    with pytest.raises(BoundExceeded):
        enumerate_orbits(suspend_normal_form(1, 1), 20)


def test_orbit_word_canonical():
    assert OrbitWord.parse("x1.x2.y") == OrbitWord.parse("y.x1.x2")
    assert least_rotation(("b", "a", "c")) == ("a", "c", "b")
    assert OrbitWord.parse("x.x").period == 1
    with pytest.raises(ValueError):
        OrbitWord(())


@pytest.mark.parametrize("p,q", PQ)
def test_linking_table(p, q):
    t = suspend_normal_form(p, q)
    table = linking_table(t)
    for s, v in table.items():
        if s.startswith("x") and p > 1:
            assert v == 1
    assert table["y"] == 0
    assert fixed_orbit_linking(t) == {"k_l": 1, "k_c": 0, "k_r": -1}


def test_square_linking_table():
    table = linking_table(suspend_normal_form(2, 2))
    assert table == {"x0": 1, "x1": 1, "x2": 1, "x3": 1, "y": 0, "z3": 0, "z0": -1, "z1": -1, "z2": -1}


def test_y_only_words_have_zero_shift():
    table = linking_table(suspend_normal_form(3, 2))
    assert sum(table[s] for s in ["y"] * 4) == 0


def test_boxes():
    t = suspend_normal_form(2, 3)
    for s in t.strips:
        if s.family == "x":
            assert s.half_twists > 0
        elif s.family == "z":
            assert s.half_twists < 0
        else:
            assert s.half_twists == 0


@pytest.mark.parametrize("p,q", [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 4)])
def test_twist_signs_of_square_words(p, q):
    t = suspend_normal_form(p, q)
    _, kp, kpp = triple_square(p, q).words
    assert twist(t, OrbitWord.parse("y")) == 0
    assert twist(t, OrbitWord.parse(kp)) > 0
    assert twist(t, OrbitWord.parse(kpp)) < 0


def test_twist_rejects_multiples():
    with pytest.raises(ValueError):
        twist(suspend_normal_form(1, 1), OrbitWord.parse("x.x"))


def test_square_linkings():
    t = suspend_normal_form(2, 2)
    k, kp, kpp = (OrbitWord.parse(w) for w in triple_square(2, 2).words)
    assert linking(t, k, kp) == 0
    assert linking(t, k, kpp) == 0
    with pytest.raises(SameOrbit):
        linking(t, k, k)


def test_disjoint_strips_do_not_link():
    t = suspend_normal_form(2, 2)
    a, b = OrbitWord.parse("x0.x1.x2"), OrbitWord.parse("z0.z1.z3")
    ta, tb = base_transits(t, a.symbols), base_transits(t, b.symbols)
    assert not {s.symbol for s in ta} & {s.symbol for s in tb}
    assert not [1 for u in ta for v in tb if (u.start < v.start) != (u.end < v.end)]
    assert linking(t, a, b) == 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1, 1), (2, 2), (2, 3)]), st.data())
def test_linking_symmetric_and_integral(pq, data):
    t = suspend_normal_form(*pq)
    words = enumerate_orbits(t, 4)
    a = data.draw(st.sampled_from(words))
    b = data.draw(st.sampled_from(words))
    if a == b:
        return
    assert linking(t, a, b) == linking(t, b, a)


def test_branchline_order_of_square_triple():
    t = suspend_normal_form(2, 2)
    k, kp, kpp = (OrbitWord.parse(w) for w in triple_square(2, 2).words)
    punct = [(k, 0), (kp, kp.symbols.index("y")), (kpp, kpp.symbols.index("y"))]
    order = branchline_order(t, punct)
    assert order == [1, 0, 2]
    # the orbit point coordinates agree with the symbolic order
    xs = [orbit_points(t, w.symbols[ph:] + w.symbols[:ph])[0] for w, ph in punct]
    assert sorted(range(3), key=lambda i: xs[i]) == order


def test_itineraries_coincide():
    t = suspend_normal_form(2, 2)
    with pytest.raises(ItinerariesCoincide):
        compare_itineraries(t, ("y",), ("y",), 10)


def test_comparison_stable_under_horizon():
    t = suspend_normal_form(2, 3)
    a, b = ("y", "x1", "x2"), ("y", "z4", "z0", "z1", "z2")
    first = compare_itineraries(t, a, b, 5)
    assert all(compare_itineraries(t, a, b, h) == first for h in range(5, 40))


def test_layout_selection(tmp_path):
    spec = layout_spec()
    good = tmp_path / "good.json"
    good.write_text(json.dumps(spec))
    h = layout_hash()
    use_layout(good)
    try:
        assert layout_spec() == spec
    finally:
        use_layout(None)
    assert layout_hash() == h
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**spec, "version": "other"}))
    with pytest.raises(ValueError):
        use_layout(bad)
    assert layout_hash() == h


def test_layout_record():
    lay = suspend_normal_form(2, 2).layout()
    assert lay["pq"] == [2, 2]
    assert [b["strip"] for b in lay["boxes"] if b["half_twists"] > 0] == ["x3", "x2", "x1", "x0"]
    assert lay["layout_hash"] == layout_hash()
