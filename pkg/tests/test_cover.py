from __future__ import annotations

import math
import random

import pytest

from fibreflow.braid import FamilyParams
from fibreflow.cover import (
    CoverOrbit,
    EmbeddingFailed,
    _crossings,
    _letters,
    block_pair_embedding,
    build_cover,
    diagram,
    domains_visited,
    is_closed,
    lift,
    lift_at,
    linking,
    linking_lifted,
    subcover_embed,
    twist,
    twist_lifted,
)
from fibreflow.template import (
    OrbitWord,
    admissible,
    enumerate_orbits,
    linking as base_linking,
    linking_table,
    suspend_normal_form,
    twist as base_twist,
)
from fibreflow.universality import triple_power, triple_simple, triple_square

from oracles import class_crossings, geometric_crossings, knot_determinant


def random_word(t, rng: random.Random, max_len: int, primitive: bool = False) -> list[str]:
    """Random admissible cyclic word, by rejection from random walks."""
    while True:
        length = rng.randint(1, max_len)
        w = [rng.choice(t.symbols)]
        for _ in range(length - 1):
            w.append(rng.choice(t.successors(w[-1])))
        if admissible(t, w) and (not primitive or OrbitWord(tuple(w)).is_primitive):
            return w


def test_cover_sizes():
    assert len(build_cover(suspend_normal_form(1, 1), 2).strips) == 6
    # x0..x3, y and z0..z3 in each of three domains
    assert len(build_cover(suspend_normal_form(2, 2), 3).strips) == 27
    for p, q, m in [(1, 2, 4), (3, 3, 5)]:
        t = suspend_normal_form(p, q)
        assert len(build_cover(t, m).strips) == m * t.width
    with pytest.raises(ValueError):
        build_cover(suspend_normal_form(1, 1), 1)


@pytest.mark.parametrize("m", [2, 3, 6])
def test_lift_of_y(m):
    c = build_cover(suspend_normal_form(2, 2), m)
    o = lift(c, ["y"])
    assert o.repetitions == 1 and domains_visited(o) == 1 and is_closed(c, o)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_lift_of_x_visits_every_domain(m):
    c = build_cover(suspend_normal_form(1, 1), m)
    o = lift(c, ["x"])
    assert o.repetitions == m and domains_visited(o) == m


@pytest.mark.parametrize("p,q", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_power_words_visit_m_domains(p, q):
    n = max(p, q)
    for m in range(n * (n - 1), n * (n - 1) + 5):
        if m < 2:
            continue
        tr = triple_power(p, q, m)
        assert tr.kappa_p.repetitions == 1 and tr.kappa_pp.repetitions == 1
        assert domains_visited(tr.kappa_p) == m
        assert domains_visited(tr.kappa_pp) == m


def test_shift_sum_counts_domains():
    t = suspend_normal_form(2, 2)
    table = linking_table(t)
    w = OrbitWord.parse(triple_power(2, 2, 5).words[1])
    assert sum(abs(table[s]) for s in w.symbols) == domains_visited(lift(build_cover(t, 5), w))


@pytest.mark.parametrize("p,q", [(2, 2), (2, 3)])
def test_lift_closure_law(p, q):
    t = suspend_normal_form(p, q)
    rng = random.Random(7)
    for _ in range(100):
        w = random_word(t, rng, 9)
        total = sum(t.strip(s).shift for s in w)
        for m in range(2, 9):
            o = lift(build_cover(t, m), w)
            assert o.repetitions == m // math.gcd(m, total)
            assert len(o) == len(w) * o.repetitions


def test_parse_and_closure():
    c = build_cover(suspend_normal_form(1, 1), 2)
    o = CoverOrbit.parse("x@0.x@1", 2)
    assert is_closed(c, o)
    assert not is_closed(c, CoverOrbit.parse("x@0.x@0", 2))
    assert str(lift_at(c, ["y", "x", "x"], 0, 1)).count("@") == 3
    with pytest.raises(ValueError):
        lift(c, ["z", "x"])


# --- the lasso diagram ------------------------------------------------------


@pytest.mark.parametrize("tr", [
    triple_simple(2), triple_simple(4), triple_square(2, 2), triple_square(3, 2),
    triple_square(2, 4), triple_power(2, 3, 7), triple_power(3, 3, 6),
], ids=lambda tr: f"{tr.p}{tr.q}m{tr.m}")
def test_crossings_match_segment_geometry(tr):
    t = suspend_normal_form(tr.p, tr.q)
    d = diagram(build_cover(t, tr.m), tr.orbits)
    rows = [list(r) for r in d.letters]
    assert geometric_crossings(t.width, tr.m, rows) == class_crossings(d.crossings)


@pytest.mark.parametrize("pq", [(1, 1), (2, 2), (3, 2)])
def test_base_picture_matches_segment_geometry(pq):
    t = suspend_normal_form(*pq)
    words = [w.symbols for w in enumerate_orbits(t, 4)][:12]
    rows = _letters(t, 1, [(w, [0] * len(w)) for w in words])
    assert geometric_crossings(t.width, 1, rows) == class_crossings(_crossings(t, 1, rows, base=True))


@pytest.mark.parametrize("pq", [(1, 1), (2, 2), (2, 3)])
def test_base_picture_reproduces_template_invariants(pq):
    # the lasso picture at m = 1 must agree with the flat cartoon
    from fibreflow.cover import CoverDiagram

    t = suspend_normal_form(*pq)
    words = enumerate_orbits(t, 5)
    for w in words:
        rows = _letters(t, 1, [(w.symbols, [0] * len(w))])
        d = CoverDiagram(1, tuple(tuple(r) for r in rows), tuple(_crossings(t, 1, rows)))
        assert d.boxes(0) + 2 * d.self_writhe(0) == base_twist(t, w)
    for a, b in zip(words, words[1:8]):
        rows = _letters(t, 1, [(a.symbols, [0] * len(a)), (b.symbols, [0] * len(b))])
        d = CoverDiagram(1, tuple(tuple(r) for r in rows), tuple(_crossings(t, 1, rows)))
        assert d.cross_sum(0, 1) == 2 * base_linking(t, a, b)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_one_strand_lifts_have_framing_m(m):
    # a one-strand lift of a letter with twist +-1 wraps m times around the axis
    c = build_cover(suspend_normal_form(1, 1), m)
    assert twist(c, lift(c, ["x"])) == m
    assert twist(c, lift(c, ["z"])) == -m


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_twist_increases_by_two(m):
    c = build_cover(suspend_normal_form(1, 1), m)
    assert twist(c, lift(c, ["y"] + ["x"] * m)) - twist(c, lift(c, ["x"])) == 2


@pytest.mark.parametrize("pq,m", [((1, 1), 3), ((2, 2), 2), ((2, 3), 3), ((3, 2), 4)])
def test_two_computations_agree(pq, m):
    t = suspend_normal_form(*pq)
    c = build_cover(t, m)
    rng = random.Random(11)
    orbits = []
    while len(orbits) < 6:
        o = lift(c, random_word(t, rng, 5, primitive=True), rng.randrange(m))
        if o not in orbits:
            orbits.append(o)
    for o in orbits:
        assert twist(c, o) == twist_lifted(c, o)
    for a, b in zip(orbits, orbits[1:]):
        try:
            direct = linking(c, a, b)
        except ValueError:
            continue   # the two lifts share a point
        assert direct == linking_lifted(c, a, b)


@pytest.mark.parametrize("pq,m", [((1, 1), 4), ((2, 2), 3), ((2, 3), 2)])
def test_full_preimage_transfers_linking(pq, m):
    # the union of all lifts of a word links the union of all lifts of another
    # word m times as often as the base orbits link
    t = suspend_normal_form(*pq)
    c = build_cover(t, m)
    words = [w for w in enumerate_orbits(t, 4)][:8]
    for a, b in zip(words, words[1:]):
        la = {lift(c, a, d) for d in range(m)}
        lb = {lift(c, b, d) for d in range(m)}
        total = sum(linking(c, x, y) for x in la for y in lb)
        assert total == m * base_linking(t, a, b)


@pytest.mark.parametrize("tr", [triple_simple(3), triple_square(2, 3), triple_power(2, 2, 4)],
                         ids=lambda tr: f"{tr.p}{tr.q}m{tr.m}")
def test_deck_rotation_invariance(tr):
    c = build_cover(suspend_normal_form(tr.p, tr.q), tr.m)
    base = [twist(c, o) for o in tr.orbits]
    for r in range(1, tr.m):
        assert [twist(c, o) for o in tr.rotated(r).orbits] == base


def test_shared_point_is_rejected():
    c = build_cover(suspend_normal_form(1, 1), 2)
    o = lift(c, ["y"])
    with pytest.raises(ValueError):
        linking(c, o, o)


@pytest.mark.parametrize("tr", [triple_simple(5), triple_square(4, 4), triple_power(3, 2, 8)],
                         ids=lambda tr: f"{tr.p}{tr.q}m{tr.m}")
def test_triple_knots_have_unit_determinant(tr):
    c = build_cover(suspend_normal_form(tr.p, tr.q), tr.m)
    for o in tr.orbits:
        assert knot_determinant(diagram(c, [o]).gauss()) == 1


# --- sub-cover embedding ----------------------------------------------------


def test_two_block_embedding_is_identity():
    emb = block_pair_embedding(FamilyParams((2, 2)), 1, 3)
    assert not emb.mirror
    for s in emb.small.strips:
        assert emb.strips[s.symbol].shift == s.shift


@pytest.mark.parametrize("blocks,i", [((1, 1, 1), 1), ((1, 1, 1, 1), 2), ((2, 2, 1), 1), ((3, 2, 2), 2)])
def test_embedding_preserves_shift(blocks, i):
    emb = block_pair_embedding(FamilyParams(blocks), i, 2)
    sign = -1 if emb.mirror else 1
    for w in enumerate_orbits(emb.small, 3):
        lifted, image = subcover_embed(FamilyParams(blocks), i, 2, w)
        assert sum(b.shift for b in image) == sign * sum(emb.small.strip(s).shift for s in w.symbols)
        assert OrbitWord(lifted.symbols[:lifted.projection.period]) == w


def test_embedding_of_simple_loop():
    lifted, image = subcover_embed(FamilyParams((1, 1, 2)), 1, 3, OrbitWord.parse("y"))
    assert lifted.repetitions == 1 and len(image) == 1


def test_embedding_rejects_inadmissible():
    with pytest.raises(ValueError):
        subcover_embed(FamilyParams((2, 2, 1)), 1, 2, OrbitWord.parse("x0.z0"))


def test_embedding_failure_is_reported():
    emb = block_pair_embedding(FamilyParams((2, 2, 1)), 1, 2)
    broken = dict(emb.strips)
    a, b = sorted(broken)[:2]
    broken[a], broken[b] = broken[b], broken[a]
    object.__setattr__(emb, "strips", broken)
    words = enumerate_orbits(emb.small, 3)
    failures = 0
    for w in words:
        image = emb.image(w.symbols)
        n = len(image)
        if any((image[(k + 1) % n].edge[0], image[(k + 1) % n].edge[1]) not in image[k].keys for k in range(n)):
            failures += 1
    assert failures
    assert issubclass(EmbeddingFailed, AssertionError)
