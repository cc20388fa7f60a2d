"""The normal-form template over the two-star track and its cartoon.

Strips are the pieces of the edges of ``G_(p,q)`` obtained by cutting each
edge image where it passes the second star's centre or the loop of a free
puncture of the second star.  For ``p, q > 1`` this yields the alphabet
``x_0 .. x_{p+1}, y, z_0 .. z_{q+1}``; smaller blocks give reduced alphabets.

The cartoon is a single branch line.  Strips leave it in the order
``x_{p+1} .. x_0, y, z_{q+1}, z_q .. z_0`` and return onto the contiguous
range of strips they cover.  Geometry is exact (``Fraction``): each strip is
an affine expanding map from its start interval onto its image interval,
orientation reversing when it carries an odd number of half twists.  Two
strands in the same strip cross once per half twist; strands in different
strips cross when their left/right order changes, the strip with the larger
depth passing over.  A left-starting strand passing over is a positive
crossing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .braid import FamilyParams
from .traintrack import Letter, build_map, is_loop

MARGIN = Fraction(1, 4)
OVERSHOOT = Fraction(1, 8)
DEFAULT_MAX_LEN = 16


class BoundExceeded(ValueError):
    pass


class SameOrbit(ValueError):
    pass


class ItinerariesCoincide(ValueError):
    pass


class NoCommonBranchline(ValueError):
    pass


_LAYOUT_OVERRIDE: Path | None = None


def _layout_bytes() -> bytes:
    if _LAYOUT_OVERRIDE is not None:
        return _LAYOUT_OVERRIDE.read_bytes()
    return resources.files("fibreflow").joinpath("data/layout_v1.json").read_bytes()


def layout_spec() -> dict:
    return json.loads(_layout_bytes())


def layout_hash() -> str:
    return hashlib.sha256(_layout_bytes()).hexdigest()[:16]


def use_layout(path: str | Path | None) -> None:
    """Select a layout file; it must state the conventions implemented here."""
    global _LAYOUT_OVERRIDE
    if path is None:
        _LAYOUT_OVERRIDE = None
        return
    shipped = json.loads(resources.files("fibreflow").joinpath("data/layout_v1.json").read_bytes())
    given = json.loads(Path(path).read_bytes())
    if given != shipped:
        raise ValueError(f"{path}: layout differs from the implemented conventions (version {shipped['version']})")
    _LAYOUT_OVERRIDE = Path(path)


# --- orbit words -----------------------------------------------------------


def least_rotation(symbols: Sequence[str]) -> tuple[str, ...]:
    s = tuple(symbols)
    return min(s[i:] + s[:i] for i in range(len(s)))


def primitive_period(symbols: Sequence[str]) -> int:
    n = len(symbols)
    for d in range(1, n + 1):
        if n % d == 0 and tuple(symbols[d:]) + tuple(symbols[:d]) == tuple(symbols):
            return d
    return n


@dataclass(frozen=True, order=True)
class OrbitWord:
    """A periodic word up to rotation, stored as its least rotation."""

    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("orbit words are nonempty")
        object.__setattr__(self, "symbols", least_rotation(self.symbols))

    @classmethod
    def parse(cls, text: str) -> "OrbitWord":
        return cls(tuple(t for t in text.strip().split(".") if t))

    @classmethod
    def of(cls, *symbols: str) -> "OrbitWord":
        return cls(tuple(symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return ".".join(self.symbols)

    @property
    def period(self) -> int:
        return primitive_period(self.symbols)

    @property
    def is_primitive(self) -> bool:
        return self.period == len(self.symbols)


# --- strips and the template ----------------------------------------------


@dataclass(frozen=True)
class Strip:
    symbol: str
    edge: tuple[int, int]
    chunk: int
    image: tuple[Letter, ...]
    position: int
    half_twists: int
    shift: int
    depth: int
    successors: tuple[str, ...] = ()
    start: tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))
    target: tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))

    @property
    def reverses(self) -> bool:
        return self.half_twists % 2 == 1

    @property
    def family(self) -> str:
        return self.symbol[0]

    def forward(self, u: Fraction) -> Fraction:
        a, b = self.start
        c, d = self.target
        t = (u - a) / (b - a)
        return d - t * (d - c) if self.reverses else c + t * (d - c)

    def affine(self) -> tuple[Fraction, Fraction]:
        a, b = self.start
        c, d = self.target
        slope = (d - c) / (b - a)
        if self.reverses:
            return -slope, d + slope * a
        return slope, c - slope * a


class Transit(NamedTuple):
    symbol: str
    source: int          # domain the strip leaves
    target: int          # domain it arrives in
    start: Fraction      # branch-line coordinate (domain offset included)
    end: Fraction
    depth: tuple


def _chunks(gmap, edge) -> list[list[Letter]]:
    track = gmap.track
    shared = track.offsets[1]
    star2 = set(track.star_punctures(2))
    word = gmap.images[edge]
    chunks: list[list[Letter]] = [[]]
    prev = None
    cut_pending = False
    for a in word:
        if is_loop(a):
            p = a[0][1]
            if p in star2 and p != shared:
                cut_pending = True
            continue
        if prev is not None:
            key_prev, s_prev = prev
            start_prev, end_prev = track.endpoints(key_prev)
            end = end_prev if s_prev > 0 else start_prev
            if cut_pending or end == ("v", 2):
                chunks.append([])
        chunks[-1].append(a)
        prev = a
        cut_pending = False
    return chunks


def _name(p: int, q: int, edge, chunk: int, nchunks: int) -> str:
    star, j = edge
    if star == 1:
        if nchunks == 1:
            return "x" if (p, q) == (1, 1) else f"x{j}"
        return f"x{j + chunk}" if p > 1 else f"x{chunk}"
    if nchunks == 1:
        return f"z{j}"
    if q == 1:
        return ("y", "z")[chunk]
    return (f"z{q}", f"z{q + 1}", "y")[chunk]


def _order_key(symbol: str, q: int) -> tuple:
    if symbol[0] == "x":
        return (0, -int(symbol[1:] or 0))
    if symbol == "y":
        return (1, 0)
    idx = int(symbol[1:] or 0)
    if q > 1 and idx == q + 1:
        return (2, 0)
    return (3, -idx)


@dataclass(frozen=True)
class Template:
    p: int
    q: int
    strips: tuple[Strip, ...]
    identifications: tuple[tuple[tuple[str, str], ...], ...]
    distinguished: dict = field(hash=False, compare=False)
    mirror: bool = False

    @cached_property
    def by_symbol(self) -> dict[str, Strip]:
        return {s.symbol: s for s in self.strips}

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s.symbol for s in self.strips)

    @property
    def width(self) -> int:
        return len(self.strips)

    def strip(self, symbol: str) -> Strip:
        try:
            return self.by_symbol[symbol]
        except KeyError:
            raise KeyError(f"no strip {symbol!r} in T_({self.p},{self.q})") from None

    def successors(self, symbol: str) -> tuple[str, ...]:
        return self.strip(symbol).successors

    def matrix(self) -> np.ndarray:
        idx = {s: r for r, s in enumerate(self.symbols)}
        a = np.zeros((self.width, self.width), dtype=np.int64)
        for s in self.strips:
            for t in s.successors:
                a[idx[s.symbol], idx[t]] = 1
        return a

    def layout(self) -> dict:
        """Instantiated cartoon: branch line, strips, boxes and crossing pairs."""
        strips = [
            {
                "symbol": s.symbol,
                "edge": f"e{s.edge[0]}^{s.edge[1]}",
                "chunk": s.chunk,
                "position": s.position,
                "start": [str(x) for x in s.start],
                "target": [str(x) for x in s.target],
                "successors": list(s.successors),
                "shift": s.shift,
                "depth": s.depth,
            }
            for s in self.strips
        ]
        boxes = [{"strip": s.symbol, "half_twists": s.half_twists} for s in self.strips if s.half_twists]
        crossings = []
        for a in self.strips:
            for b in self.strips:
                if a.position < b.position and a.target[1] > b.target[0]:
                    over = a if a.depth > b.depth else b
                    crossings.append({"left": a.symbol, "right": b.symbol, "over": over.symbol,
                                      "sign": 1 if over is a else -1})
        return {
            "version": layout_spec()["version"],
            "layout_hash": layout_hash(),
            "pq": [self.p, self.q],
            "mirror": self.mirror,
            "branchlines": [{"id": 0, "order": list(self.symbols)}],
            "strips": strips,
            "boxes": boxes,
            "crossings": crossings,
            "identifications": [[list(x) for x in ident] for ident in self.identifications],
        }


def suspend_normal_form(p: int, q: int) -> Template:
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    gmap = build_map(FamilyParams((p, q)))
    raw = []
    for edge in gmap.track.edges:
        chunks = _chunks(gmap, edge)
        for c, chunk in enumerate(chunks):
            raw.append((_name(p, q, edge, c, len(chunks)), edge, c, tuple(chunk)))
    raw.sort(key=lambda r: _order_key(r[0], q))
    symbols = [r[0] for r in raw]
    if len(set(symbols)) != len(symbols):
        raise AssertionError(f"duplicate strip symbols {symbols}")
    pos = {s: i for i, s in enumerate(symbols)}
    strips_of_edge: dict = {}
    for name, edge, _, _ in raw:
        strips_of_edge.setdefault(edge, []).append(name)

    strips = []
    for name, edge, c, chunk in raw:
        succ = sorted({t for key, _ in chunk for t in strips_of_edge[key]}, key=pos.__getitem__)
        lo, hi = pos[succ[0]], pos[succ[-1]]
        if hi - lo + 1 != len(succ):
            raise AssertionError(f"image of {name} is not contiguous on the branch line: {succ}")
        fam = name[0]
        half = {"x": 1, "y": 0, "z": -1}[fam]
        if fam == "x":
            shift, depth = 1, 200 - pos[name]
        elif fam == "y":
            shift, depth = 0, 0
        else:
            shift = 0 if (q > 1 and name == f"z{q + 1}") else -1
            depth = 100 + pos[name]
        i = pos[name]
        strips.append(Strip(
            symbol=name, edge=edge, chunk=c, image=chunk, position=i,
            half_twists=half, shift=shift, depth=depth, successors=tuple(succ),
            start=(i + MARGIN, i + 1 - MARGIN),
            target=(lo + OVERSHOOT, hi + 1 - OVERSHOOT),
        ))

    idents: tuple = ()
    if p > 1 and q > 1:
        idents = (
            tuple(("r", f"x{i}") for i in range(1, p + 1)) + (("l", "x0"),),
            (("r", "x0"), ("l", "y")),
            (("r", "y"), ("l", f"z{q + 1}")),
            (("r", f"z{q + 1}"), ("l", f"z{q}")),
            tuple(("l", f"z{j}") for j in range(q)) + (("r", f"z{q}"),),
            (("l", f"x{p}"), ("r", f"x{p + 1}")),
        )
    x_carrier = "x" if (p, q) == (1, 1) else "x0"
    z_carrier = "z" if q == 1 else f"z{q}"
    distinguished = {
        "beta": {"orbit": "loop edges of S_1 u S_2", "strands": p + q + 1},
        "k_l": {"carrier": x_carrier, "vertex": "centre of S_1" if p > 1 else "puncture 0"},
        "k_c": {"word": "y"},
        "k_r": {"carrier": z_carrier, "vertex": "centre of S_2" if q > 1 else f"puncture {p + 1}"},
    }
    return Template(p, q, tuple(strips), idents, distinguished)


# --- symbolic dynamics -----------------------------------------------------


def admissible(t: Template, w: OrbitWord | Sequence[str]) -> bool:
    symbols = w.symbols if isinstance(w, OrbitWord) else tuple(w)
    if not symbols or any(s not in t.by_symbol for s in symbols):
        return False
    n = len(symbols)
    return all(symbols[(k + 1) % n] in t.by_symbol[symbols[k]].successors for k in range(n))


def enumerate_orbits(t: Template, max_len: int, bound: int = DEFAULT_MAX_LEN) -> list[OrbitWord]:
    """Primitive admissible cyclic words of length <= max_len, one per rotation class."""
    if max_len > bound:
        raise BoundExceeded(f"max_len {max_len} exceeds bound {bound}")
    out: list[OrbitWord] = []
    symbols = sorted(t.symbols)
    for length in range(1, max_len + 1):
        for first in symbols:
            stack = [(first,)]
            while stack:
                path = stack.pop()
                if len(path) == length:
                    if first in t.by_symbol[path[-1]].successors and least_rotation(path) == path \
                            and primitive_period(path) == length:
                        out.append(OrbitWord(path))
                    continue
                for nxt in t.by_symbol[path[-1]].successors:
                    if nxt >= first:
                        stack.append(path + (nxt,))
    out.sort(key=lambda w: (len(w), w.symbols))
    return out


def periodic_point_count(t: Template, length: int) -> int:
    return int(np.trace(np.linalg.matrix_power(t.matrix(), length)))


def linking_table(t: Template) -> dict[str, int]:
    return {s.symbol: s.shift for s in t.strips}


def fixed_orbit_linking(t: Template) -> dict[str, int]:
    """Linking of ``k_l``, ``k_c``, ``k_r`` with the braid orbit, from strip data."""
    table = linking_table(t)
    return {
        "k_l": table[t.distinguished["k_l"]["carrier"]],
        "k_c": sum(table[s] for s in OrbitWord.parse(t.distinguished["k_c"]["word"]).symbols),
        "k_r": table[t.distinguished["k_r"]["carrier"]],
    }


# --- geometry --------------------------------------------------------------


def orbit_points(t: Template, symbols: Sequence[str]) -> list[Fraction]:
    """Exact branch-line coordinate of the orbit at the start of each letter."""
    slope, offset = Fraction(1), Fraction(0)
    for s in symbols:
        a, b = t.strip(s).affine()
        slope, offset = a * slope, a * offset + b
    if slope == 1:
        raise ValueError("composite return map is not expanding")
    x = offset / (1 - slope)
    points = []
    for s in symbols:
        strip = t.strip(s)
        lo, hi = strip.start
        if not lo < x < hi:
            raise ValueError(f"word {'.'.join(symbols)} is not admissible at {s}")
        points.append(x)
        x = strip.forward(x)
    return points


def base_transits(t: Template, symbols: Sequence[str]) -> list[Transit]:
    pts = orbit_points(t, symbols)
    n = len(symbols)
    return [
        Transit(s, 0, 0, pts[k], pts[(k + 1) % n], (t.strip(s).depth,))
        for k, s in enumerate(symbols)
    ]


def crossing_sign(t: Template, a: Transit, b: Transit) -> int:
    """Signed crossings between two transits (same strip copy: its twist box)."""
    if a.symbol == b.symbol and a.source == b.source:
        if a.start == b.start:
            raise ValueError("coincident strands")
        return t.strip(a.symbol).half_twists
    if (a.start < b.start) == (a.end < b.end):
        return 0
    left, right = (a, b) if a.start < b.start else (b, a)
    return 1 if left.depth > right.depth else -1


def writhe(t: Template, transits: Sequence[Transit]) -> int:
    total = 0
    for i in range(len(transits)):
        for j in range(i + 1, len(transits)):
            total += crossing_sign(t, transits[i], transits[j])
    return total


def cross_sum(t: Template, first: Sequence[Transit], second: Sequence[Transit]) -> int:
    return sum(crossing_sign(t, a, b) for a in first for b in second)


def twist(t: Template, w: OrbitWord) -> int:
    """Twist of the orbit's band in half twists: boxes plus twice the writhe."""
    if not admissible(t, w):
        raise ValueError(f"{w} is not admissible")
    if not w.is_primitive:
        raise ValueError(f"{w} is a multiple traversal; use the cover for lifted words")
    transits = base_transits(t, w.symbols)
    return sum(t.strip(s).half_twists for s in w.symbols) + 2 * writhe(t, transits)


def linking(t: Template, w1: OrbitWord, w2: OrbitWord) -> int:
    if w1 == w2:
        raise SameOrbit(f"{w1} and {w2} are the same orbit")
    for w in (w1, w2):
        if not admissible(t, w):
            raise ValueError(f"{w} is not admissible")
    total = cross_sum(t, base_transits(t, w1.symbols), base_transits(t, w2.symbols))
    if total % 2:
        raise AssertionError("odd crossing count between closed curves")
    return total // 2


# --- branch-line order -----------------------------------------------------


def compare_itineraries(t: Template, a: Sequence[str], b: Sequence[str], horizon: int) -> int:
    """-1 if the point with itinerary ``a`` lies left of ``b``, +1 if right."""
    flip = False
    for k in range(horizon):
        sa, sb = a[k % len(a)], b[k % len(b)]
        if sa != sb:
            left = t.strip(sa).position < t.strip(sb).position
            return -1 if left != flip else 1
        if t.strip(sa).reverses:
            flip = not flip
    raise ItinerariesCoincide("identical itineraries")


def itinerary(w: OrbitWord | Sequence[str], phase: int) -> tuple[str, ...]:
    s = w.symbols if isinstance(w, OrbitWord) else tuple(w)
    phase %= len(s)
    return s[phase:] + s[:phase]


def branchline_order(t: Template, punctures: Sequence[tuple[OrbitWord, int]]) -> list[int]:
    """Indices of ``punctures`` sorted left to right along the branch line."""
    its = [itinerary(w, ph) for w, ph in punctures]
    horizon = 2 * max((len(x) for x in its), default=1) + 2
    import functools

    def cmp(i: int, j: int) -> int:
        h = len(its[i]) + len(its[j]) + horizon
        return compare_itineraries(t, its[i], its[j], h)

    return sorted(range(len(its)), key=functools.cmp_to_key(cmp))
