"""Star-chain train tracks and their rotation graph maps.

The track for blocks ``(n_1, ..., n_k)`` has ``1 + sum(n_i)`` punctures, each
carrying a small loop edge.  Star ``i`` covers punctures ``o_i .. o_i + n_i``
(``o_i = n_1 + ... + n_{i-1}``) and consecutive stars share one puncture.  A
star with ``n_i > 1`` has a central vertex and radial edges ``e_i^0 .. e_i^{n_i}``;
``e_i^j`` runs from the centre to puncture ``o_i + n_i - j``, so ``e_i^0``
reaches the puncture shared with star ``i + 1`` and ``e_i^{n_i}`` the one
shared with star ``i - 1``.  A star with ``n_i = 1`` is a single edge
``e_i^0`` from ``o_i`` to ``o_i + 1``.

Each factor ``g_i`` turns star ``i`` one notch (``e_i^j -> e_i^{j+1}``, or a
half turn for a single edge) and drags the neighbouring edges attached to
the moved punctures.  Loop edges are kept in the images as placeholder
letters so that passages around a puncture stay visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .braid import FamilyParams

Edge = tuple[int, int]           # (star i, index j), both as printed: star 1-based
Letter = tuple[object, int]      # (Edge or ("loop", puncture), +1 / -1)

DEFAULT_MAX_DEPTH = 6


class DepthExceeded(ValueError):
    pass


class WitnessFailed(AssertionError):
    pass


def is_loop(letter: Letter) -> bool:
    key = letter[0]
    return isinstance(key, tuple) and key[0] == "loop"


def loop(p: int) -> Letter:
    return (("loop", p), 1)


def inverse(word: Sequence[Letter]) -> list[Letter]:
    return [(key, -s) if not is_loop((key, s)) else (key, s) for key, s in reversed(word)]


def strip_loops(word: Iterable[Letter]) -> list[Letter]:
    return [a for a in word if not is_loop(a)]


def edge_name(edge: Edge) -> str:
    return f"e{edge[0]}^{edge[1]}"


def format_word(word: Sequence[Letter], loops: bool = False) -> str:
    out = []
    for key, s in word:
        if is_loop((key, s)):
            if loops:
                out.append(f"L{key[1]}")
            continue
        out.append(edge_name(key) + ("" if s > 0 else "~"))
    return " ".join(out)


@dataclass(frozen=True)
class TrainTrack:
    params: FamilyParams
    offsets: tuple[int, ...]
    edges: tuple[Edge, ...]
    parity: tuple[str, ...]

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def punctures(self) -> int:
        return 1 + sum(self.params.blocks)

    def n(self, i: int) -> int:
        return self.params.blocks[i - 1]

    def star_edges(self, i: int) -> list[Edge]:
        return [e for e in self.edges if e[0] == i]

    def star_punctures(self, i: int) -> range:
        o = self.offsets[i - 1]
        return range(o, o + self.n(i) + 1)

    def endpoints(self, edge: Edge) -> tuple[object, object]:
        i, j = edge
        o, n = self.offsets[i - 1], self.n(i)
        if n == 1:
            return ("p", o), ("p", o + 1)
        return ("v", i), ("p", o + n - j)

    def path(self, i: int, a: int, b: int) -> list[Letter]:
        """Path inside star ``i`` from puncture ``a`` to puncture ``b``."""
        if a == b:
            return []
        o, n = self.offsets[i - 1], self.n(i)
        if n == 1:
            return [((i, 0), 1 if a == o else -1)]
        return [((i, o + n - a), -1), ((i, o + n - b), 1)]

    def rotate_puncture(self, i: int, p: int) -> int:
        o, n = self.offsets[i - 1], self.n(i)
        if not o <= p <= o + n:
            return p
        return o + n if p == o else p - 1


def build_track(params: FamilyParams) -> TrainTrack:
    offsets = []
    acc = 0
    edges: list[Edge] = []
    for i, n in enumerate(params.blocks, start=1):
        offsets.append(acc)
        acc += n
        edges.extend((i, j) for j in range(1 if n == 1 else n + 1))
    parity = tuple("up" if i % 2 == 1 else "down" for i in range(1, params.k + 1))
    return TrainTrack(params, tuple(offsets), tuple(edges), parity)


def _vertex_of(track: TrainTrack, letter: Letter, end: bool) -> object:
    key, s = letter
    a, b = track.endpoints(key)
    if s < 0:
        a, b = b, a
    return b if end else a


def factor_image(track: TrainTrack, i: int, letter: Letter) -> list[Letter]:
    """Image of one letter under the rotation factor ``g_i``."""
    key, s = letter
    if is_loop(letter):
        return [loop(track.rotate_puncture(i, key[1]))]
    if s < 0:
        return inverse(factor_image(track, i, (key, 1)))
    if key[0] == i:
        n = track.n(i)
        if n == 1:
            return [(key, -1)]
        return [((i, (key[1] + 1) % (n + 1)), 1)]
    start, end = track.endpoints(key)
    out: list[Letter] = []
    if start[0] == "p" and track.rotate_puncture(i, start[1]) != start[1]:
        out += track.path(i, track.rotate_puncture(i, start[1]), start[1]) + [loop(start[1])]
    out.append((key, 1))
    if end[0] == "p" and track.rotate_puncture(i, end[1]) != end[1]:
        out += [loop(end[1])] + track.path(i, end[1], track.rotate_puncture(i, end[1]))
    return out


def apply_factor(track: TrainTrack, i: int, word: Sequence[Letter]) -> list[Letter]:
    out: list[Letter] = []
    for a in word:
        out.extend(factor_image(track, i, a))
    return out


@dataclass(frozen=True)
class GraphMap:
    track: TrainTrack
    images: dict = field(hash=False)
    factors: tuple[int, ...] = ()

    def image(self, edge: Edge) -> list[Letter]:
        return list(self.images[edge])

    def apply(self, word: Sequence[Letter]) -> list[Letter]:
        out: list[Letter] = []
        for key, s in word:
            if is_loop((key, s)):
                out.append(self.loop_image(key[1]))
            elif s > 0:
                out.extend(self.images[key])
            else:
                out.extend(inverse(self.images[key]))
        return out

    def loop_image(self, p: int) -> Letter:
        for i in self.factors:
            p = self.track.rotate_puncture(i, p)
        return loop(p)

    def iterate(self, edge: Edge, n: int) -> list[Letter]:
        word: list[Letter] = [(edge, 1)]
        for _ in range(n):
            word = self.apply(word)
        return word


def compose_factors(track: TrainTrack, word: Sequence[Letter], factors: Sequence[int]) -> list[Letter]:
    out = list(word)
    for i in factors:
        out = apply_factor(track, i, out)
    return out


def build_map(params: FamilyParams) -> GraphMap:
    track = build_track(params)
    factors = tuple(range(1, params.k + 1))
    images = {e: compose_factors(track, [(e, 1)], factors) for e in track.edges}
    return GraphMap(track, images, factors)


def identity_map(params: FamilyParams) -> GraphMap:
    track = build_track(params)
    return GraphMap(track, {e: [(e, 1)] for e in track.edges}, ())


def check_word(track: TrainTrack, word: Sequence[Letter]) -> bool:
    """Consecutive edge letters meet; a puncture junction carries its loop letter."""
    prev_end = None
    pending_loop = None
    for a in word:
        if is_loop(a):
            pending_loop = a[0][1]
            continue
        start = _vertex_of(track, a, end=False)
        if prev_end is not None:
            if start != prev_end:
                return False
            if start[0] == "p" and pending_loop != start[1]:
                return False
            if start[0] == "v" and pending_loop is not None:
                return False
        prev_end = _vertex_of(track, a, end=True)
        pending_loop = None
    return True


# --- transition matrices -------------------------------------------------


@dataclass(frozen=True)
class TransitionMatrix:
    basis: tuple[Edge, ...]
    matrix: tuple[tuple[int, ...], ...]

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64)

    @property
    def dim(self) -> int:
        return len(self.basis)


def transition_matrix(gmap: GraphMap) -> TransitionMatrix:
    basis = gmap.track.edges
    index = {e: r for r, e in enumerate(basis)}
    rows = []
    for e in basis:
        row = [0] * len(basis)
        for key, _ in strip_loops(gmap.images[e]):
            row[index[key]] += 1
        rows.append(tuple(row))
    return TransitionMatrix(basis, tuple(rows))


# Polynomials are coefficient lists, constant term first.


def _poly_trim(p: list) -> list:
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _poly_mul(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _poly_trim(out)


def _poly_sub(a: Sequence, b: Sequence) -> list:
    n = max(len(a), len(b))
    return _poly_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def _poly_divexact(a: Sequence[int], b: Sequence[int]) -> list[int]:
    a = list(a)
    b = _poly_trim(list(b))
    if len(b) == 1 and b[0] == 0:
        raise ZeroDivisionError("polynomial division by zero")
    q = [0] * max(1, len(a) - len(b) + 1)
    for k in range(len(a) - len(b), -1, -1):
        coef, rem = divmod(a[k + len(b) - 1], b[-1])
        if rem:
            raise ArithmeticError("inexact polynomial division")
        q[k] = coef
        for j, c in enumerate(b):
            a[k + j] -= coef * c
    if any(a):
        raise ArithmeticError("inexact polynomial division")
    return _poly_trim(q)


def charpoly(matrix: Sequence[Sequence[int]]) -> list[int]:
    """det(xI - M) by fraction-free (Bareiss) elimination over Z[x]."""
    n = len(matrix)
    if n == 0:
        return [1]
    a = [[([-int(matrix[r][c]), 1] if r == c else [-int(matrix[r][c])]) for c in range(n)] for r in range(n)]
    a = [[_poly_trim(list(p)) for p in row] for row in a]
    sign = 1
    prev = [1]
    for k in range(n - 1):
        if a[k][k] == [0]:
            swap = next((r for r in range(k + 1, n) if a[r][k] != [0]), None)
            if swap is None:
                return [0]
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for r in range(k + 1, n):
            for c in range(k + 1, n):
                num = _poly_sub(_poly_mul(a[r][c], a[k][k]), _poly_mul(a[r][k], a[k][c]))
                a[r][c] = _poly_divexact(num, prev)
            a[r][k] = [0]
        prev = a[k][k]
    det = a[n - 1][n - 1]
    return [sign * c for c in det]


def _poly_eval(p: Sequence, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _poly_rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a = list(a)
    while len(a) >= len(b) and any(a):
        coef = a[-1] / b[-1]
        shift = len(a) - len(b)
        for j, c in enumerate(b):
            a[shift + j] -= coef * c
        a.pop()
    return _poly_trim(a) if a else [Fraction(0)]


def sturm_chain(p: Sequence[int]) -> list[list[Fraction]]:
    p0 = [Fraction(c) for c in p]
    p1 = _poly_trim([Fraction(i * c) for i, c in enumerate(p)][1:] or [Fraction(0)])
    chain = [p0, p1]
    while len(chain[-1]) > 1 or chain[-1][0] != 0:
        r = _poly_rem(chain[-2], chain[-1])
        if r == [0]:
            break
        chain.append([-c for c in r])
    return chain


def _sign_changes(chain: list[list[Fraction]], x: Fraction) -> int:
    signs = [v for v in (_poly_eval(q, x) for q in chain) if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))


def largest_real_root(p: Sequence[int], upper: Fraction, tol: float = 1e-12) -> float:
    """Largest real root of ``p`` in ``[0, upper]`` by Sturm-guided bisection."""
    chain = sturm_chain(p)
    hi = Fraction(upper) + 1
    lo = Fraction(0)
    at_hi = _sign_changes(chain, hi)
    if _sign_changes(chain, lo) - at_hi == 0:
        # every real root is negative or at zero
        return 0.0
    while hi - lo > Fraction(tol):
        mid = (lo + hi) / 2
        if _sign_changes(chain, mid) - at_hi > 0:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def is_primitive(matrix: Sequence[Sequence[int]]) -> bool:
    a = np.array(matrix, dtype=np.int64) > 0
    n = a.shape[0]
    if n == 0:
        return False
    power = a.copy()
    for _ in range(n * n):
        if power.all():
            return True
        power = (power.astype(np.int64) @ a.astype(np.int64)) > 0
    return bool(power.all())


@dataclass(frozen=True)
class Dilatation:
    charpoly: tuple[int, ...]
    spectral_radius: float
    primitive: bool

    @property
    def pseudo_anosov_evidence(self) -> bool:
        return self.primitive and self.spectral_radius > 1 + 1e-9


def dilatation(m: TransitionMatrix | Sequence[Sequence[int]]) -> Dilatation:
    rows = m.matrix if isinstance(m, TransitionMatrix) else tuple(tuple(r) for r in m)
    if any(v < 0 for row in rows for v in row):
        raise ValueError("transition matrix must be nonnegative")
    poly = charpoly(rows)
    bound = max((sum(r) for r in rows), default=0)
    rho = largest_real_root(poly, Fraction(bound))
    return Dilatation(tuple(poly), rho, is_primitive(rows))


# --- efficiency evidence ---------------------------------------------------


@dataclass
class BacktrackReport:
    depth: int
    violations: list[tuple[Edge, int, int]] = field(default_factory=list)
    shielded: list[tuple[Edge, int, int]] = field(default_factory=list)
    incompatible: list[tuple[Edge, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.incompatible


def check_no_backtracking(gmap: GraphMap, depth: int, max_depth: int = DEFAULT_MAX_DEPTH) -> BacktrackReport:
    """Scan ``g^n(e)`` for ``X Xbar`` pairs, ``n <= depth``.

    Pairs separated only by a loop letter are listed as shielded rather than
    as violations.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if depth > max_depth:
        raise DepthExceeded(f"depth {depth} exceeds configured maximum {max_depth}")
    report = BacktrackReport(depth)
    for e in gmap.track.edges:
        word: list[Letter] = [(e, 1)]
        for n in range(1, depth + 1):
            word = gmap.apply(word)
            if not check_word(gmap.track, word):
                report.incompatible.append((e, n))
            for pos in range(len(word) - 1):
                a, b = word[pos], word[pos + 1]
                if is_loop(a):
                    continue
                if not is_loop(b):
                    if a[0] == b[0] and a[1] == -b[1]:
                        report.violations.append((e, n, pos))
                elif pos + 2 < len(word):
                    c = word[pos + 2]
                    if not is_loop(c) and a[0] == c[0] and a[1] == -c[1]:
                        report.shielded.append((e, n, pos))
    return report


def growth_ratios(gmap: GraphMap, edge: Edge, iterations: Iterable[int], rho: float) -> dict[int, float]:
    out = {}
    word: list[Letter] = [(edge, 1)]
    done = 0
    for n in sorted(iterations):
        while done < n:
            word = gmap.apply(word)
            done += 1
        out[n] = len(strip_loops(word)) / rho**n
    return out


# --- subtrack witness ------------------------------------------------------


@dataclass(frozen=True)
class EdgePiece:
    edge: Edge
    full_image: tuple[Letter, ...]
    local_image: tuple[Letter, ...]
    prefix: int                     # letters of local_image matched at the start
    removed: tuple[Letter, ...]     # image of the discarded middle piece

    @property
    def subdivided(self) -> bool:
        return bool(self.removed)


@dataclass(frozen=True)
class SubdivisionWitness:
    params: FamilyParams
    i: int
    mirror: bool
    pieces: tuple[EdgePiece, ...]
    identities: tuple[tuple[str, str, str], ...]   # (label, expected, computed)
    degenerate: bool

    def piece(self, edge: Edge) -> EdgePiece:
        return next(p for p in self.pieces if p.edge == edge)

    def local_counts(self) -> np.ndarray:
        edges = [p.edge for p in self.pieces]
        index = {e: r for r, e in enumerate(edges)}
        out = np.zeros((len(edges), len(edges)), dtype=np.int64)
        for p in self.pieces:
            for key, _ in p.local_image:
                out[index[p.edge], index[key]] += 1
        return out


def c_word(track: TrainTrack, r: int) -> list[Letter]:
    if track.n(r) == 1:
        return [((r, 0), 1)]
    return [((r, track.n(r)), -1), ((r, 0), 1)]


def _split(full: list[Letter], local: list[Letter]) -> tuple[int, list[Letter]] | None:
    if len(full) < len(local):
        return None
    for a in range(len(local), -1, -1):
        tail = len(local) - a
        if full[:a] == local[:a] and (tail == 0 or full[len(full) - tail:] == local[a:]):
            return a, full[a:len(full) - tail]
    return None


def subtrack_witness(params: FamilyParams, i: int) -> SubdivisionWitness:
    """Subdivide the boundary edges of ``S_i u S_{i+1}`` and check the images.

    For every edge of the two stars the full image ``g(e)`` must equal the
    two-factor image ``g_{i+1}(g_i(e))`` after deleting one middle stretch
    (the image of the removed piece ``I_2`` or ``J_2``).  Raises
    ``WitnessFailed`` otherwise.
    """
    if not 1 <= i <= params.k - 1:
        raise ValueError(f"star index i must satisfy 1 <= i <= k-1, got {i}")
    gmap = build_map(params)
    track = gmap.track
    local_params = FamilyParams((params.blocks[i - 1], params.blocks[i]))
    local_map = build_map(local_params)
    edges = track.star_edges(i) + track.star_edges(i + 1)
    pieces = []
    for e in edges:
        full = strip_loops(gmap.images[e])
        local = strip_loops(compose_factors(track, [(e, 1)], (i, i + 1)))
        relabel = [((key[0] - i + 1, key[1]), s) for key, s in local]
        if relabel != strip_loops(local_map.images[(e[0] - i + 1, e[1])]):
            raise WitnessFailed(f"two-factor image of {edge_name(e)} differs from the (n_i, n_i+1) map")
        split = _split(full, local)
        if split is None:
            raise WitnessFailed(
                f"g({edge_name(e)}) = {format_word(full)} does not contain {format_word(local)} up to one excision"
            )
        a, removed = split
        pieces.append(EdgePiece(e, tuple(full), tuple(local), a, tuple(removed)))

    ids: list[tuple[str, str, str]] = []
    ni, nj = params.blocks[i - 1], params.blocks[i]
    if i == 1 and ni > 1 and nj > 1 and params.k > 2:
        tail = [x for r in range(2, params.k + 1) for x in c_word(track, r)]
        expected = [((1, 0), 1)] + tail
        ids.append(("g(e_1^{n_1}) = e_1^0 c_2 ... c_k", format_word(expected),
                    format_word(pieces[[p.edge for p in pieces].index((1, ni))].full_image)))
        mid = [x for r in range(3, params.k + 1) for x in c_word(track, r)]
        back = inverse([x for r in range(2, params.k + 1) for x in c_word(track, r)])
        expected2 = [((2, 0), 1)] + mid + back + [((1, 0), -1), ((1, 1), 1)]
        ids.append(("g(e_2^{n_2}) = e_2^0 c_3..c_k cbar_k..cbar_2 ebar_1^0 e_1^1", format_word(expected2),
                    format_word(pieces[[p.edge for p in pieces].index((2, nj))].full_image)))
        i1 = pieces[[p.edge for p in pieces].index((1, ni))]
        ids.append(("g(I_1) = e_1^0 c_2", format_word([((1, 0), 1)] + c_word(track, 2)),
                    format_word(i1.local_image)))
        j = pieces[[p.edge for p in pieces].index((2, nj))]
        ids.append(("g(J_3) = e_2^0", format_word([((2, 0), 1)]), format_word(j.local_image[:j.prefix])))
        ids.append(("g(J_1) = cbar_2 ebar_1^0 e_1^1",
                    format_word(inverse(c_word(track, 2)) + [((1, 0), -1), ((1, 1), 1)]),
                    format_word(j.local_image[j.prefix:])))
    for label, want, got in ids:
        if want != got:
            raise WitnessFailed(f"{label}: expected {want}, got {got}")
    return SubdivisionWitness(params, i, i % 2 == 0, tuple(pieces), tuple(ids), params.k == 2)
