"""Knot diagrams as Gauss codes, closed braids, and a bounded unknot search.

A Gauss code lists, for each component, the crossings met in order together
with whether the component passes over.  ``simplify`` applies only moves that
do not add crossings (Reidemeister I and II removals and Reidemeister III
triangle flips), each of which is valid for any planar diagram with that
code.  Reaching the empty diagram proves the knot is trivial; failing to
reach it proves nothing.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator

DEFAULT_EXTRA = 4
DEFAULT_STATES = 100_000

Entry = tuple[int, bool]   # (crossing id, passes over)


@dataclass(frozen=True)
class GaussCode:
    components: tuple[tuple[Entry, ...], ...]
    signs: tuple[tuple[int, int], ...] = ()   # (crossing id, +-1)

    @property
    def crossings(self) -> int:
        return sum(len(c) for c in self.components) // 2

    def sign_map(self) -> dict[int, int]:
        return dict(self.signs)

    @property
    def writhe(self) -> int:
        return sum(s for _, s in self.signs)

    def check(self) -> None:
        seen: dict[int, list[bool]] = {}
        for comp in self.components:
            for cid, over in comp:
                seen.setdefault(cid, []).append(over)
        for cid, overs in seen.items():
            if sorted(overs) != [False, True]:
                raise ValueError(f"crossing {cid} is not met once over and once under")


@dataclass(frozen=True)
class ClosedBraid:
    strands: int
    word: tuple[int, ...]   # +i for sigma_i, -i for its inverse

    def __post_init__(self) -> None:
        if self.strands < 1:
            raise ValueError("a braid needs at least one strand")
        if any(not 1 <= abs(g) < self.strands for g in self.word):
            raise ValueError(f"generator out of range for {self.strands} strands: {self.word}")

    @property
    def crossings(self) -> int:
        return len(self.word)

    @property
    def writhe(self) -> int:
        return sum(1 if g > 0 else -1 for g in self.word)

    def permutation(self) -> list[int]:
        """``perm[s]`` is the final position of the strand starting at ``s``."""
        pos = list(range(self.strands))          # pos -> strand
        for g in self.word:
            i = abs(g) - 1
            pos[i], pos[i + 1] = pos[i + 1], pos[i]
        perm = [0] * self.strands
        for p, s in enumerate(pos):
            perm[s] = p
        return perm

    def gauss(self) -> GaussCode:
        pos = list(range(self.strands))
        passes: list[list[Entry]] = [[] for _ in range(self.strands)]
        signs = []
        for k, g in enumerate(self.word):
            i = abs(g) - 1
            left, right = pos[i], pos[i + 1]
            passes[left].append((k, g > 0))
            passes[right].append((k, g < 0))
            signs.append((k, 1 if g > 0 else -1))
            pos[i], pos[i + 1] = right, left
        perm = self.permutation()
        seen, comps = set(), []
        for s in range(self.strands):
            if s in seen:
                continue
            comp: list[Entry] = []
            while s not in seen:
                seen.add(s)
                comp.extend(passes[s])
                s = perm[s]
            comps.append(tuple(comp))
        return GaussCode(tuple(comps), tuple(signs))


def trefoil() -> ClosedBraid:
    return ClosedBraid(2, (1, 1, 1))


def half_twist(n: int, sign: int = 1) -> list[tuple[int, int]]:
    """Garside half twist on ``n`` adjacent strands as (left slot, sign) swaps."""
    out = []
    for top in range(n - 1, 0, -1):
        out.extend((g, sign) for g in range(top))
    return out


# --- search on knots ---------------------------------------------------------


Signed = tuple[int, bool, int]   # (crossing id, passes over, sign)


def _canon(code: tuple[Signed, ...]) -> tuple[Signed, ...]:
    """Least rotation, with crossings relabelled in order of first appearance.

    Rotations are compared through the relabel-free sequence of (forward
    distance to the partner entry, over, sign), which determines the code.
    """
    n = len(code)
    if not n:
        return code
    at: dict[int, list[int]] = {}
    for k, (cid, _, _) in enumerate(code):
        at.setdefault(cid, []).append(k)
    gaps = []
    for k, (cid, over, sign) in enumerate(code):
        a, b = at[cid]
        gaps.append(((b if k == a else a) - k) % n * 4 + over * 2 + (sign > 0))
    best = min(range(n), key=lambda r: gaps[r:] + gaps[:r])
    relabel: dict[int, int] = {}
    out = []
    for k in range(n):
        cid, over, sign = code[(best + k) % n]
        if cid not in relabel:
            relabel[cid] = len(relabel)
        out.append((relabel[cid], over, sign))
    return tuple(out)


def _adjacent(i: int, j: int, n: int) -> bool:
    return (i + 1) % n == j or (j + 1) % n == i


def _moves(code: tuple[Signed, ...]) -> Iterator[tuple[Signed, ...]]:
    n = len(code)
    where: dict[int, dict[bool, int]] = {}
    for idx, (cid, over, _) in enumerate(code):
        where.setdefault(cid, {})[over] = idx
    # Reidemeister I
    for idx in range(n):
        if n >= 2 and code[idx][0] == code[(idx + 1) % n][0]:
            drop = {idx, (idx + 1) % n}
            yield tuple(e for k, e in enumerate(code) if k not in drop)
    # Reidemeister II: a bigon has crossings of opposite sign
    ids = sorted(where)
    for x in range(len(ids)):
        for y in range(x + 1, len(ids)):
            a, b = where[ids[x]], where[ids[y]]
            if code[a[True]][2] == code[b[True]][2]:
                continue
            if _adjacent(a[True], b[True], n) and _adjacent(a[False], b[False], n):
                drop = {a[True], a[False], b[True], b[False]}
                yield tuple(e for k, e in enumerate(code) if k not in drop)
    # Reidemeister III: three adjacent pairs on labels {a,b}, {b,c}, {c,a},
    # one of them passing over both crossings
    if n < 6:
        return
    by_label: dict[frozenset, list[tuple[int, int]]] = {}
    with_id: dict[int, list[tuple[int, int]]] = {}
    for k in range(n):
        j = (k + 1) % n
        if code[k][0] != code[j][0]:
            by_label.setdefault(frozenset((code[k][0], code[j][0])), []).append((k, j))
            with_id.setdefault(code[k][0], []).append((k, j))
            with_id.setdefault(code[j][0], []).append((k, j))
    seen = set()
    for label, firsts in sorted(by_label.items(), key=lambda kv: sorted(kv[0])):
        a, b = sorted(label)
        for p1 in firsts:
            for p2 in with_id[b]:
                c = code[p2[0]][0] if code[p2[0]][0] != b else code[p2[1]][0]
                if c == a:
                    continue
                for p3 in by_label.get(frozenset((a, c)), ()):
                    trio = tuple(sorted((p1, p2, p3)))
                    if trio in seen or len({i for pr in trio for i in pr}) != 6:
                        continue
                    seen.add(trio)
                    if not any(code[i][1] and code[j][1] for i, j in trio):
                        continue
                    w = list(code)
                    for i, j in trio:
                        w[i], w[j] = w[j], w[i]
                    yield tuple(w)


@dataclass(frozen=True)
class SearchResult:
    unknot: bool
    states: int
    start_crossings: int
    final_crossings: int
    exhausted: bool


def simplify(diagram: GaussCode | ClosedBraid, extra: int = DEFAULT_EXTRA,
             max_states: int = DEFAULT_STATES) -> SearchResult:
    """Best-first search for the crossingless diagram of a knot.

    Visits at most ``max_states`` distinct codes in a fixed order.  The moves
    are R1 and R2 removals and R3, none of which adds crossings, so ``extra``
    only caps code growth should crossing-adding moves be introduced.  R3 is
    applied to any triangle of adjacent pairs with one strand over both
    crossings, without a planarity check, so a found unknot is evidence
    rather than a proof.
    """
    code = diagram.gauss() if isinstance(diagram, ClosedBraid) else diagram
    if len(code.components) != 1:
        raise ValueError("unknot search needs a one-component diagram")
    code.check()
    signs = code.sign_map()
    start = _canon(tuple((cid, over, signs.get(cid, 0)) for cid, over in code.components[0]))
    limit = len(start) + 2 * extra
    seen = {start}
    heap = [(len(start), start)]
    best = len(start)
    while heap:
        _, cur = heapq.heappop(heap)
        best = min(best, len(cur))
        if not cur:
            return SearchResult(True, len(seen), len(start) // 2, 0, False)
        for nxt in _moves(cur):
            c = _canon(nxt)
            if len(c) > limit or c in seen:
                continue
            if len(seen) >= max_states:
                return SearchResult(False, len(seen), len(start) // 2, best // 2, False)
            seen.add(c)
            heapq.heappush(heap, (len(c), c))
    return SearchResult(False, len(seen), len(start) // 2, best // 2, True)
