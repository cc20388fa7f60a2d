"""Braid words and the alternating-block family.

A braid word is a sequence of signed Artin generators on a fixed number of
strands.  ``sigma_i`` is a positive crossing of strand ``i`` over strand
``i + 1`` (the dynamicists' convention); every sign used downstream (twists,
linking numbers) inherits this choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence


class NotInFamily(ValueError):
    """The word is not a literal ``sigma_1^e1 ... sigma_N^eN`` with mixed signs."""


@dataclass(frozen=True)
class BraidWord:
    strands: int
    letters: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.strands < 1:
            raise ValueError(f"strand count must be positive, got {self.strands}")
        letters = tuple((int(i), int(s)) for i, s in self.letters)
        for i, s in letters:
            if not 1 <= i <= self.strands - 1:
                raise ValueError(f"generator sigma_{i} out of range on {self.strands} strands")
            if s not in (1, -1):
                raise ValueError(f"sign must be +1 or -1, got {s}")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def to_dict(self) -> dict:
        return {"strands": self.strands, "letters": [[i, s] for i, s in self.letters]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "BraidWord":
        return cls(int(data["strands"]), tuple((i, s) for i, s in data["letters"]))

    def sigma_notation(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(f"s{i}" if s > 0 else f"s{i}^-1" for i, s in self.letters)

    def permutation(self) -> tuple[int, ...]:
        """Image of each start position (0-based) at the bottom of the braid."""
        pos = list(range(self.strands))  # pos[k] = strand currently at position k
        for i, _ in self.letters:
            pos[i - 1], pos[i] = pos[i], pos[i - 1]
        perm = [0] * self.strands
        for k, strand in enumerate(pos):
            perm[strand] = k
        return tuple(perm)


@dataclass(frozen=True)
class FamilyParams:
    blocks: tuple[int, ...]

    def __post_init__(self) -> None:
        blocks = tuple(int(n) for n in self.blocks)
        if len(blocks) < 2:
            raise ValueError("a family braid needs at least two blocks")
        if any(n < 1 for n in blocks):
            raise ValueError(f"block lengths must be positive: {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @classmethod
    def parse(cls, text: str) -> "FamilyParams":
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))

    def __str__(self) -> str:
        return ",".join(str(n) for n in self.blocks)


def family_braid(params: FamilyParams) -> BraidWord:
    letters = []
    gen = 1
    for r, n in enumerate(params.blocks):
        sign = 1 if r % 2 == 0 else -1
        for _ in range(n):
            letters.append((gen, sign))
            gen += 1
    return BraidWord(gen, tuple(letters))


def power(b: BraidWord, m: int) -> BraidWord:
    if m < 1:
        raise ValueError(f"power must be >= 1, got {m}")
    return BraidWord(b.strands, b.letters * m)


def mirror(b: BraidWord) -> BraidWord:
    return BraidWord(b.strands, tuple((i, -s) for i, s in b.letters))


def cycle_count(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


def closure_components(b: BraidWord) -> int:
    return cycle_count(b.permutation())


def detect_family(b: BraidWord) -> FamilyParams:
    """Recover block lengths from a literal ``sigma_1^e1 ... sigma_N^eN`` word.

    No conjugation or braid relations are applied; the word must have exactly
    the ascending shape, at least one sign change and ``N + 1`` strands.
    """
    if not b.letters:
        raise NotInFamily("identity braid")
    indices = [i for i, _ in b.letters]
    if indices != list(range(1, len(indices) + 1)):
        raise NotInFamily("generator indices are not 1, 2, ..., N")
    if b.strands != len(indices) + 1:
        raise NotInFamily("strand count is not N + 1")
    signs = [s for _, s in b.letters]
    if signs[0] != 1:
        raise NotInFamily("first block must be positive; use mirror() for the mirror family")
    blocks: list[int] = []
    prev = None
    for s in signs:
        if s == prev:
            blocks[-1] += 1
        else:
            blocks.append(1)
            prev = s
    if len(blocks) < 2:
        raise NotInFamily("all signs are equal")
    return FamilyParams(tuple(blocks))


def has_simple_subword(b: BraidWord) -> bool:
    """True iff two adjacent blocks both have length one."""
    blocks = detect_family(b).blocks
    return any(a == 1 and c == 1 for a, c in zip(blocks, blocks[1:]))


def simple_pairs(params: FamilyParams) -> list[int]:
    """1-based indices ``j`` with ``n_j = n_{j+1} = 1``."""
    return [j + 1 for j, (a, c) in enumerate(zip(params.blocks, params.blocks[1:])) if a == c == 1]


def parse_letters(items: Iterable[Sequence[int]], strands: int) -> BraidWord:
    return BraidWord(strands, tuple((int(i), int(s)) for i, s in items))
