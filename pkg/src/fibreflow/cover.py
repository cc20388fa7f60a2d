"""Cyclic branched covers of a normal-form template.

``U^m`` is the preimage of the base cartoon under the m-fold cover of the
plane branched at the point where the braid axis pierces it.  Copy ``j`` of
the cartoon occupies ``[j*W, (j+1)*W)`` of an annulus around that point, a
strip with shift ``s`` runs from copy ``j`` into copy ``j + s mod m``, and
rotating the annulus by one copy is the deck transformation, so every
invariant computed here is unchanged by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .braid import FamilyParams
from .diagram import GaussCode, half_twist
from .template import (
    OrbitWord,
    Template,
    admissible,
    least_rotation,
    orbit_points,
    primitive_period,
    suspend_normal_form,
)
from .traintrack import SubdivisionWitness, subtrack_witness


class EmbeddingFailed(AssertionError):
    pass


CoverLetter = tuple[str, int]


@dataclass(frozen=True)
class CoverTemplate:
    base: Template
    m: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError("a cover needs m >= 2")

    @property
    def strips(self) -> list[CoverLetter]:
        return [(s, j) for j in range(self.m) for s in self.base.symbols]

    @property
    def width(self) -> int:
        return self.base.width

    def shift(self, symbol: str) -> int:
        return self.base.strip(symbol).shift

    def target_domain(self, letter: CoverLetter) -> int:
        s, j = letter
        return (j + self.shift(s)) % self.m


def build_cover(t: Template, m: int) -> CoverTemplate:
    return CoverTemplate(t, m)


@dataclass(frozen=True)
class CoverOrbit:
    """A closed orbit on ``U^m`` as a cyclic word of (symbol, domain) letters."""

    letters: tuple[CoverLetter, ...]
    m: int
    repetitions: int = 1

    def __post_init__(self) -> None:
        if not self.letters:
            raise ValueError("cover orbits are nonempty")
        object.__setattr__(self, "letters", least_rotation(self.letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return ".".join(f"{s}@{d}" for s, d in self.letters)

    @classmethod
    def parse(cls, text: str, m: int) -> "CoverOrbit":
        out = []
        for tok in text.strip().split("."):
            s, _, d = tok.partition("@")
            out.append((s, int(d)))
        return cls(tuple(out), m)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.letters)

    @property
    def projection(self) -> OrbitWord:
        return OrbitWord(self.symbols)

    @property
    def domains(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.letters)

    def total_shift(self, c: CoverTemplate) -> int:
        return sum(c.shift(s) for s in self.symbols)


def is_closed(c: CoverTemplate, o: CoverOrbit) -> bool:
    n = len(o.letters)
    return all(
        c.target_domain(o.letters[k]) == o.letters[(k + 1) % n][1] and 0 <= o.letters[k][1] < c.m
        for k in range(n)
    ) and admissible(c.base, o.symbols)


def lift(c: CoverTemplate, w: OrbitWord | Sequence[str], start_domain: int = 0) -> CoverOrbit:
    """Closed lift of ``w`` from ``start_domain``; repeats ``w`` until it closes."""
    symbols = w.symbols if isinstance(w, OrbitWord) else tuple(w)
    if not admissible(c.base, symbols):
        raise ValueError(f"{'.'.join(symbols)} is not admissible")
    total = sum(c.shift(s) for s in symbols)
    reps = c.m // math.gcd(c.m, total)
    d = start_domain % c.m
    letters = []
    for _ in range(reps):
        for s in symbols:
            letters.append((s, d))
            d = (d + c.shift(s)) % c.m
    assert d == start_domain % c.m
    return CoverOrbit(tuple(letters), c.m, reps)


def lift_at(c: CoverTemplate, w: OrbitWord | Sequence[str], index: int, domain: int) -> CoverOrbit:
    """Lift of ``w`` whose ``index``-th letter lies in ``domain``."""
    symbols = w.symbols if isinstance(w, OrbitWord) else tuple(w)
    return lift(c, symbols[index:] + symbols[:index], domain)


def domains_visited(o: CoverOrbit) -> int:
    return len(set(o.domains))


# --- the lasso diagram --------------------------------------------------------
#
# Coordinates are (X, t): X runs along the branch lines of the copies placed
# side by side (copy j covers [j*W, (j+1)*W), periodic mod m*W) and t runs
# down the flow, t = 0 on the branch line and t = 1 where strips land.  The
# branch axis sits at t = -infinity, so the picture is an annulus around it
# and rotating by W is the deck transformation.
#
# A letter with nonzero shift leaves its start point u up an arm to level -L,
# sweeps one copy width around the axis (a slight spiral, ending at -L - 1/2),
# and comes back down an arm at u -+ eps in the neighbouring copy.  Its box and
# body then run in that copy.  Returns leave the landing point downward, go
# right to a corridor at the end of the copy, up, and back left above the
# branch line at height -delta(e) to the next start point.  Lassos pass over
# everything else; among lassos the shallower one is over, and a lasso is
# shallower the nearer its start lies to the y strip, all negative-shift
# lassos above the positive ones.
#
# A lasso turning the negative way lands right of its start and so closes
# with a curl against the return coming in from the corridor.  That curl adds
# a full twist to the band, so such letters carry one compensating negative
# full twist and every lasso is framing neutral in the base.

CURL_CORRECTION = -2


_ARM_OUT, _SWEEP, _ARM_IN, _BOX, _BODY, _TOP = range(6)


@dataclass(frozen=True)
class Letter:
    """One transit of one orbit, in absolute coordinates."""

    orbit: int
    index: int
    symbol: str
    domain: int          # copy holding the start point
    copy: int            # copy holding the box and the body
    shift: int
    u: Fraction          # start point, absolute
    land: Fraction       # body start after the lasso (absolute, before the box)
    end: Fraction        # landing point, absolute, in ``copy``
    level: int           # lasso depth L (0 without lasso)
    depth: int
    half_twists: int
    eps: Fraction


@dataclass(frozen=True)
class Crossing:
    over: tuple          # (orbit, index, piece, param)
    under: tuple
    sign: int
    sheets: tuple[int, int] = (0, 0)   # sheet offsets of (over, under)


def _delta(W: int, e: Fraction) -> Fraction:
    return (W - e) / (100 * W)


def _corridor(W: int, e: Fraction) -> Fraction:
    return W - Fraction(1, 16) + _delta(W, e) / 10


def _levels(t: Template, keys: Iterable[tuple[str, Fraction]]) -> dict[tuple[str, Fraction], int]:
    """Lasso depth per base point: negative shifts first, then nearer ``y`` is shallower."""
    centre = t.strip("y").position + Fraction(1, 2)

    def order(k: tuple[str, Fraction]) -> tuple:
        strip = t.strip(k[0])
        return (strip.shift > 0, abs(strip.position - t.strip("y").position), abs(k[1] - centre))

    ranked = sorted({k for k in keys if t.strip(k[0]).shift}, key=order)
    return {k: 2 + i for i, k in enumerate(ranked)}


def _eps(points: Iterable[Fraction]) -> Fraction:
    pts = sorted(set(points))
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    return min(gaps + [Fraction(1, 8)]) / 8


def _letters(t: Template, m: int, orbits: Sequence[tuple[Sequence[str], Sequence[int]]]) -> list[list[Letter]]:
    W = t.width
    per = []
    for symbols, domains in orbits:
        root = tuple(symbols[: primitive_period(tuple(symbols))])
        pts = orbit_points(t, root)
        per.append([pts[k % len(root)] for k in range(len(symbols))])
    keys = [(s, per[i][k]) for i, (syms, _) in enumerate(orbits) for k, s in enumerate(syms)]
    levels = _levels(t, keys)
    eps = _eps(p for pts in per for p in pts)
    out = []
    for i, (symbols, domains) in enumerate(orbits):
        n = len(symbols)
        row = []
        for k, s in enumerate(symbols):
            strip = t.strip(s)
            sh = strip.shift
            d = domains[k] % m
            cp = (d + sh) % m
            u = per[i][k]
            v = per[i][(k + 1) % n]
            row.append(Letter(
                i, k, s, d, cp, sh,
                d * W + u,
                cp * W + u - sh * eps,
                cp * W + v,
                levels.get((s, u), 0),
                strip.depth,
                strip.half_twists,
                eps,
            ))
        out.append(row)
    return out


def _arms(W: int, x: Letter) -> list[tuple[int, Fraction, Fraction, Fraction]]:
    """(piece, X, t_from, t_to) for the two arms of a lasso."""
    top = -_delta(W, x.u - x.domain * W)
    return [
        (_ARM_OUT, x.u, top, Fraction(-x.level)),
        (_ARM_IN, x.land, Fraction(-x.level) - Fraction(1, 2), Fraction(0)),
    ]


def _along(t0: Fraction, t1: Fraction, t: Fraction) -> Fraction:
    return (t - t0) / (t1 - t0)


def _crossings(t: Template, m: int, rows: list[list[Letter]], base: bool = False) -> list[Crossing]:
    """Every crossing of the diagram, enumerated by kind.

    With ``base`` set the diagram is the base cartoon (``m == 1``) and each
    crossing records on which sheet offset each strand passes it, relative to
    the domain of its letter: 0 before the lasso has crossed the cut at the
    copy boundary and ``shift`` after.
    """
    W = t.width
    span = m * W
    flat = [x for row in rows for x in row]
    out: list[Crossing] = []

    def key(x: Letter, piece: int, param) -> tuple:
        return (x.orbit, x.index, piece, param)

    def wrap(a: Fraction) -> Fraction:
        return a % span

    # bodies and boxes, copy by copy
    by_copy: dict[int, list[Letter]] = {}
    for x in flat:
        by_copy.setdefault(x.copy, []).append(x)
    for cp, group in by_copy.items():
        group.sort(key=lambda x: x.land)
        boxes: dict[str, list[Letter]] = {}
        for x in group:
            boxes.setdefault(x.symbol, []).append(x)
        slot: dict[tuple, Fraction] = {}
        for sym, members in boxes.items():
            h = members[0].half_twists
            starts = [x.land for x in members]
            order = list(members)
            if h and len(members) > 1:
                swaps = []
                for _ in range(abs(h)):
                    swaps.extend(half_twist(len(members), 1 if h > 0 else -1))
                for n_sw, (g, sg) in enumerate(swaps):
                    left, right = order[g], order[g + 1]
                    over, under = (left, right) if sg > 0 else (right, left)
                    par = Fraction(n_sw + 1, len(swaps) + 1)
                    sh = over.shift
                    out.append(Crossing(key(over, _BOX, par), key(under, _BOX, par), sg, (sh, sh)))
                    order[g], order[g + 1] = right, left
            for x, st in zip(order, starts):
                slot[(x.orbit, x.index)] = st
        for a_i in range(len(group)):
            for b_i in range(a_i + 1, len(group)):
                a, b = group[a_i], group[b_i]
                if a.symbol == b.symbol:
                    continue
                sa, sb = slot[(a.orbit, a.index)], slot[(b.orbit, b.index)]
                if (sa < sb) == (a.end < b.end):
                    continue
                left, right = (a, b) if sa < sb else (b, a)
                over, under = (left, right) if left.depth > right.depth else (right, left)
                sign = 1 if over is left else -1
                # where the straight bodies meet, as a fraction of the way down
                ls, rs = min(sa, sb), max(sa, sb)
                le = left.end
                re_ = right.end
                par = (rs - ls) / ((rs - ls) + (le - re_))
                out.append(Crossing(key(over, _BODY, par), key(under, _BODY, par), sign,
                                    (over.shift, under.shift)))

    # arms against the top parts of returns in the same copy
    tops = []
    for row in rows:
        for x in row:
            e_abs = x.end
            cp_lo = x.copy * W
            e = e_abs - cp_lo
            tops.append((x, e_abs, cp_lo + _corridor(W, e), -_delta(W, e)))
    for x in flat:
        if not x.shift:
            continue
        for piece, a, t0, t1 in _arms(W, x):
            lo_t, hi_t = min(t0, t1), max(t0, t1)
            for y, e_abs, xc, level in tops:
                if not (e_abs < a < xc and lo_t < level < hi_t):
                    continue
                sign = -1 if piece == _ARM_OUT else 1
                par_arm = _along(t0, t1, level)
                par_top = (xc - a) / (xc - e_abs)
                off = 0 if piece == _ARM_OUT else x.shift
                out.append(Crossing(key(x, piece, par_arm), key(y, _TOP, par_top), sign, (off, y.shift)))

    # sweeps over the arms of deeper lassos
    for x in flat:
        if not x.shift:
            continue
        reach = W - x.eps
        cut = W * (x.domain + 1) - x.u if x.shift > 0 else x.u - W * x.domain
        for y in flat:
            if not y.shift or y.level <= x.level:
                continue
            for piece, a, t0, t1 in _arms(W, y):
                off = ((a - x.u) * x.shift) % span
                if not 0 < off < reach:
                    continue
                frac = off / reach
                level = -x.level - frac / 2
                sign = -x.shift if piece == _ARM_OUT else x.shift
                sheet = x.shift if base and off > cut else 0
                y_off = 0 if piece == _ARM_OUT else y.shift
                out.append(Crossing(key(x, _SWEEP, frac), key(y, piece, _along(t0, t1, level)), sign,
                                    (sheet, y_off)))
    return out


@dataclass(frozen=True)
class CoverDiagram:
    """Planar diagram of a set of cover orbits."""

    m: int
    letters: tuple[tuple[Letter, ...], ...]
    crossings: tuple[Crossing, ...]

    def gauss(self) -> GaussCode:
        entries: list[list[tuple[tuple, int, bool]]] = [[] for _ in self.letters]
        signs = []
        for cid, c in enumerate(self.crossings):
            entries[c.over[0]].append((c.over[1:], cid, True))
            entries[c.under[0]].append((c.under[1:], cid, False))
            signs.append((cid, c.sign))
        comps = tuple(tuple((cid, ov) for _, cid, ov in sorted(e, key=lambda z: z[0])) for e in entries)
        return GaussCode(comps, tuple(signs))

    def boxes(self, orbit: int) -> int:
        """Half twists carried by the bands, including curl corrections."""
        return sum(x.half_twists + (CURL_CORRECTION if x.shift < 0 else 0) for x in self.letters[orbit])

    def self_writhe(self, orbit: int) -> int:
        return sum(c.sign for c in self.crossings if c.over[0] == orbit == c.under[0])

    def cross_sum(self, a: int, b: int) -> int:
        return sum(c.sign for c in self.crossings if {c.over[0], c.under[0]} == {a, b} and a != b)


def _check(c: CoverTemplate, orbits: Sequence[CoverOrbit]) -> None:
    for o in orbits:
        if not is_closed(c, o):
            raise ValueError(f"{o} is not a closed orbit of U^{c.m}")


def diagram(c: CoverTemplate, orbits: Sequence[CoverOrbit]) -> CoverDiagram:
    _check(c, orbits)
    rows = _letters(c.base, c.m, [(o.symbols, o.domains) for o in orbits])
    seen = set()
    for row in rows:
        for x in row:
            if x.u in seen:
                raise ValueError("orbits share a point")
            seen.add(x.u)
    return CoverDiagram(c.m, tuple(tuple(r) for r in rows), tuple(_crossings(c.base, c.m, rows)))


def twist(c: CoverTemplate, o: CoverOrbit) -> int:
    """Twist of a cover orbit in half twists: boxes plus twice the writhe."""
    d = diagram(c, [o])
    return d.boxes(0) + 2 * d.self_writhe(0)


def linking(c: CoverTemplate, o1: CoverOrbit, o2: CoverOrbit) -> int:
    if o1 == o2:
        raise ValueError("linking of an orbit with itself")
    total = diagram(c, [o1, o2]).cross_sum(0, 1)
    if total % 2:
        raise AssertionError("odd crossing count between closed curves")
    return total // 2


def _lifted_sum(c: CoverTemplate, orbits: Sequence[CoverOrbit], pair: tuple[int, int] | None) -> int:
    """Signed crossings of cover orbits, read off the base diagram sheet by sheet.

    Each crossing of the base cartoon lifts to one crossing on every sheet;
    a lifted letter takes part when its domain plus the sheet offset of its
    strand at that crossing agrees with the other strand's.
    """
    _check(c, orbits)
    t, m = c.base, c.m
    base_rows, index = [], []
    seen: dict[tuple[str, Fraction], tuple[int, int]] = {}
    for oi, o in enumerate(orbits):
        root = o.symbols[: primitive_period(o.symbols)]
        pts = orbit_points(t, root)
        for k, s in enumerate(o.symbols):
            bk = (s, pts[k % len(root)])
            if bk not in seen:
                seen[bk] = (len(base_rows), 0)
                base_rows.append(bk)
            index.append((oi, k, seen[bk][0], o.domains[k]))
    # the base cartoon carries each distinct base letter once, as one orbit per
    # projection root so that returns follow the base forward map
    roots: list[tuple[str, ...]] = []
    for o in orbits:
        r = least_rotation(o.symbols[: primitive_period(o.symbols)])
        if r not in roots:
            roots.append(r)
    rows = _letters(t, 1, [(r, [0] * len(r)) for r in roots])
    where = {}
    for row in rows:
        for x in row:
            where[(x.symbol, x.u)] = (x.orbit, x.index)
    lifts: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for oi, k, b, d in index:
        lifts.setdefault(where[base_rows[b]], []).append((oi, k, d))
    total = 0
    for cr in _crossings(t, 1, rows, base=True):
        fo, fu = cr.sheets
        for oa, ka, da in lifts.get(cr.over[:2], []):
            for ob, kb, db in lifts.get(cr.under[:2], []):
                if (da + fo - db - fu) % m:
                    continue
                if pair is None and oa == ob == 0:
                    total += cr.sign
                elif pair is not None and {oa, ob} == set(pair) and oa != ob:
                    total += cr.sign
    return total


def twist_lifted(c: CoverTemplate, o: CoverOrbit) -> int:
    boxes = sum(c.base.strip(s).half_twists + (CURL_CORRECTION if c.shift(s) < 0 else 0) for s in o.symbols)
    return boxes + 2 * _lifted_sum(c, [o], None)


def linking_lifted(c: CoverTemplate, o1: CoverOrbit, o2: CoverOrbit) -> int:
    total = _lifted_sum(c, [o1, o2], (0, 1))
    if total % 2:
        raise AssertionError("odd crossing count between closed curves")
    return total // 2


def knot_code(c: CoverTemplate, o: CoverOrbit) -> GaussCode:
    return diagram(c, [o]).gauss()


# --- sub-cover embedding ---------------------------------------------------


@dataclass(frozen=True)
class BigStrip:
    """A strip of the block-pair part of a larger template: an edge image stretch."""

    edge: tuple[int, int]
    lo: int
    hi: int
    shift: int
    keys: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Embedding:
    params: FamilyParams
    i: int
    m: int
    mirror: bool
    strips: dict
    small: Template

    def image(self, w: Sequence[str]) -> tuple[BigStrip, ...]:
        return tuple(self.strips[s] for s in w)


def block_pair_embedding(big: FamilyParams, i: int, m: int) -> Embedding:
    """Transport the strips of ``T_(n_i, n_i+1)`` into the big track.

    Each small strip is a stretch of a local edge image; through the
    subdivision witness it becomes a stretch of the full image of the
    corresponding big edge.  The stretch containing the excision absorbs the
    removed piece.  The stretches of each edge must tile its full image.
    """
    witness: SubdivisionWitness = subtrack_witness(big, i)
    small = suspend_normal_form(big.blocks[i - 1], big.blocks[i])
    sign = -1 if witness.mirror else 1
    by_edge: dict = {}
    for s in small.strips:
        by_edge.setdefault(s.edge, []).append(s)
    strips = {}
    for edge, chunks in by_edge.items():
        chunks.sort(key=lambda s: s.chunk)
        big_edge = (edge[0] + i - 1, edge[1])
        piece = witness.piece(big_edge)
        cut = len(piece.removed)
        pos = 0
        for s in chunks:
            a, b = pos, pos + len(s.image)
            # the removed stretch joins the chunk on its left (or the first chunk)
            lo = a if a < piece.prefix or a == 0 else a + cut
            hi = b if b < piece.prefix else b + cut
            keys = tuple(
                (k[0] - i + 1, k[1]) for k, _ in piece.full_image[lo:hi]
                if i <= k[0] <= i + 1
            )
            strips[s.symbol] = BigStrip(big_edge, lo, hi, sign * s.shift, keys)
            pos = b
        tiles = sorted((strips[s.symbol].lo, strips[s.symbol].hi) for s in chunks)
        if tiles[0][0] != 0 or tiles[-1][1] != len(piece.full_image) or any(
            x[1] != y[0] for x, y in zip(tiles, tiles[1:])
        ):
            raise EmbeddingFailed(f"stretches of e{big_edge} do not tile its image: {tiles}")
    return Embedding(big, i, m, witness.mirror, strips, small)


def subcover_embed(big: FamilyParams, i: int, m: int, w: OrbitWord) -> tuple[CoverOrbit, tuple[BigStrip, ...]]:
    """Image of a small cover orbit word in ``U^m`` of the big family.

    Returns the lift (in small-template coordinates) together with the big
    strip word; raises ``EmbeddingFailed`` if the image is not admissible in
    the big track or loses shift.
    """
    emb = block_pair_embedding(big, i, m)
    if not admissible(emb.small, w):
        raise ValueError(f"{w} is not admissible in T_{emb.small.p, emb.small.q}")
    image = emb.image(w.symbols)
    n = len(image)
    for k in range(n):
        nxt = image[(k + 1) % n]
        if (nxt.edge[0] - i + 1, nxt.edge[1]) not in image[k].keys:
            raise EmbeddingFailed(f"{w}: strip {k} does not cover its successor in the big track")
    small_total = sum(emb.small.strip(s).shift for s in w.symbols) * (-1 if emb.mirror else 1)
    if sum(b.shift for b in image) != small_total:
        raise EmbeddingFailed("shift total changed under embedding")
    c = build_cover(emb.small, m)
    return lift(c, w), image
