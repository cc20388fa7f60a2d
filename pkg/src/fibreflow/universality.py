"""Triples of unknotted orbits on branched-cover templates and their certificates.

A triple ``(kappa, kappa', kappa'')`` witnesses universality of a template
when the three orbits are separable unlinked unknots with twists zero,
positive and negative, meeting a common branch line in the order
``kappa', kappa, kappa''``.  ``certify`` checks every computable part of that
criterion and reports ``UNIVERSAL_EVIDENCE`` only if all of them hold.
Separability itself is an isotopy statement and is recorded as evidence, not
proved.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .braid import FamilyParams
from .cover import (
    CoverOrbit,
    CoverTemplate,
    EmbeddingFailed,
    build_cover,
    diagram,
    domains_visited,
    is_closed,
    lift_at,
    linking,
    subcover_embed,
    twist,
)
from .diagram import DEFAULT_EXTRA, DEFAULT_STATES, simplify
from .template import OrbitWord, Template, admissible, compare_itineraries, layout_hash, suspend_normal_form
from .traintrack import build_map, dilatation, transition_matrix

SCHEMA_VERSION = 1


class TooFewSheets(ValueError):
    """An exponent of the power-word construction would be negative."""


class BelowThreshold(ValueError):
    """m is below N(N-1); pass ``force=True`` to build the words anyway."""


class InadmissibleTriple(ValueError):
    pass


class Evidence(str, enum.Enum):
    STRUCTURAL = "STRUCTURAL"
    SEARCH_VERIFIED = "SEARCH_VERIFIED"
    UNKNOWN = "UNKNOWN"


class Verdict(str, enum.Enum):
    UNIVERSAL_EVIDENCE = "UNIVERSAL_EVIDENCE"
    INCOMPLETE = "INCOMPLETE"


def euclid_factor(m: int, p: int) -> tuple[int, int]:
    if m < 1 or p < 1:
        raise ValueError("m and p must be positive")
    return divmod(m, p)


# --- triples ----------------------------------------------------------------


@dataclass(frozen=True)
class Triple:
    p: int
    q: int
    m: int
    kappa: CoverOrbit
    kappa_p: CoverOrbit
    kappa_pp: CoverOrbit
    words: tuple[str, str, str]
    provenance: str

    @property
    def orbits(self) -> tuple[CoverOrbit, CoverOrbit, CoverOrbit]:
        return self.kappa, self.kappa_p, self.kappa_pp

    def rotated(self, r: int) -> "Triple":
        def rot(o: CoverOrbit) -> CoverOrbit:
            return CoverOrbit(tuple((s, (d + r) % self.m) for s, d in o.letters), o.m, o.repetitions)

        return Triple(self.p, self.q, self.m, rot(self.kappa), rot(self.kappa_p), rot(self.kappa_pp),
                      self.words, self.provenance)


def _x_loop(t: Template) -> str:
    """The x strip carrying a fixed loop when p = 1."""
    return next(s.symbol for s in t.strips if s.family == "x" and s.symbol in s.successors)


def _place(c: CoverTemplate, w: Sequence[str], domain: int) -> CoverOrbit:
    """Lift with the first ``y`` (or the first letter) in ``domain``."""
    index = list(w).index("y") if "y" in w else 0
    return lift_at(c, tuple(w), index, domain)


def _assemble(t: Template, m: int, kp: list[str], kpp: list[str], provenance: str, domain: int = 0) -> Triple:
    c = build_cover(t, m)
    for w in (kp, kpp):
        if not admissible(t, w):
            raise InadmissibleTriple(f"{'.'.join(w)} is not admissible in T_({t.p},{t.q})")
    k = _place(c, ["y"], domain)
    return Triple(
        t.p, t.q, m, k, _place(c, kp, domain), _place(c, kpp, domain),
        ("y", ".".join(kp), ".".join(kpp)), provenance,
    )


def triple_simple(m: int, domain: int = 0) -> Triple:
    if m < 2:
        raise ValueError("m must be at least 2")
    t = suspend_normal_form(1, 1)
    return _assemble(t, m, ["y"] + ["x"] * m, ["z"] * m, "simple: [y], [y x^m], [z^m]", domain)


def _x_word(t: Template, with_zero: bool) -> list[str]:
    if t.p == 1:
        return [_x_loop(t)]
    return [f"x{i}" for i in range(0 if with_zero else 1, t.p + 1)]


def _z_word(t: Template, top: bool) -> list[str]:
    q = t.q
    if q == 1:
        return ["z"]
    return [f"z{q + 1}" if top else f"z{q}"] + [f"z{j}" for j in range(q)]


def triple_square(p: int, q: int, domain: int = 0) -> Triple:
    if (p, q) == (1, 1):
        return triple_simple(2, domain)
    t = suspend_normal_form(p, q)
    if p == 1:
        kp = ["y"] + _x_word(t, False) * 2
    else:
        kp = ["y"] + _x_word(t, p % 2 == 1)
    if q == 1:
        kpp = ["y", "z", "z"]
    else:
        kpp = ["y"] + _z_word(t, q % 2 == 0)
    return _assemble(t, 2, kp, kpp, "square: parity-dependent words on U^2", domain)


def power_exponents(p: int, q: int, m: int) -> tuple[int, int, int, int]:
    t1, s1 = euclid_factor(m, p)
    t2, s2 = euclid_factor(m, q)
    return t1, s1, t2, s2


def triple_power(p: int, q: int, m: int, force: bool = False, domain: int = 0) -> Triple:
    """Power words on ``U^m`` with exponents from the Euclidean factorisations of m."""
    if m < 2:
        raise ValueError("m must be at least 2")
    t1, s1, t2, s2 = power_exponents(p, q, m)
    if t1 < s1 or t2 < s2:
        raise TooFewSheets(f"m={m}: exponents t'-s'={t1 - s1}, t''-s''={t2 - s2}")
    n = max(p, q)
    if m < n * (n - 1) and not force:
        raise BelowThreshold(f"m={m} < N(N-1)={n * (n - 1)}")
    if (p, q) == (1, 1):
        return triple_simple(m, domain)
    t = suspend_normal_form(p, q)
    kp = (["y"] + _x_word(t, False)) * (t1 - s1) + (_x_word(t, True) if p > 1 else []) * s1
    if q == 1:
        kpp = ["z"] * m
    else:
        kpp = _z_word(t, True) * (t2 - s2) + _z_word(t, False) * s2
    return _assemble(t, m, kp, kpp, f"power: t'={t1} s'={s1} t''={t2} s''={s2}", domain)


# --- evidence ---------------------------------------------------------------


@dataclass(frozen=True)
class UnknotReport:
    evidence: Evidence
    strands: int
    crossings: int
    states: int

    def to_dict(self) -> dict:
        return {"evidence": self.evidence.value, "strands": self.strands,
                "crossings": self.crossings, "states": self.states}


def is_one_strand(c: CoverTemplate, o: CoverOrbit) -> bool:
    shifts = [c.shift(s) for s in o.symbols]
    if len(o) == 1 and shifts == [0]:
        return True
    nonzero = [s for s in shifts if s]
    if not nonzero or len({s > 0 for s in nonzero}) != 1:
        return False
    return abs(sum(shifts)) == c.m and domains_visited(o) == c.m


def unknot_evidence(c: CoverTemplate, o: CoverOrbit, extra: int = DEFAULT_EXTRA,
                    max_states: int = DEFAULT_STATES) -> UnknotReport:
    code = diagram(c, [o]).gauss()
    if is_one_strand(c, o):
        return UnknotReport(Evidence.STRUCTURAL, len(o), code.crossings, 0)
    r = simplify(code, extra, max_states)
    return UnknotReport(Evidence.SEARCH_VERIFIED if r.unknot else Evidence.UNKNOWN,
                        len(o), code.crossings, r.states)


@dataclass(frozen=True)
class AdjacencyReport:
    domain: int
    points: tuple[str, str, str]
    order_ok: bool
    symbolic_ok: bool
    pattern_ok: bool
    confidence: str = "low"

    @property
    def ok(self) -> bool:
        # the strip pattern is reported with its confidence but does not gate
        return self.order_ok and self.symbolic_ok

    def to_dict(self) -> dict:
        return {"domain": self.domain, "points": list(self.points), "order": self.order_ok,
                "symbolic_order": self.symbolic_ok, "strip_pattern": self.pattern_ok,
                "pattern_confidence": self.confidence, "ok": self.ok}


def adjacency(c: CoverTemplate, tr: Triple) -> AdjacencyReport:
    """Check that kappa', kappa, kappa'' meet kappa's branch line as neighbours.

    In the domain of ``kappa`` take its point, the nearest ``kappa'`` point on
    its left and the nearest ``kappa''`` point on its right; no other point of
    the three orbits may lie between them.  The strip pattern sub-check asks
    that each of the three points arrives through a strip whose image spans
    all three.
    """
    t = c.base
    W = c.width
    per = [list(row) for row in diagram(c, tr.orbits).letters]
    domain = tr.kappa.letters[0][1]
    lo_x, hi_x = domain * W, (domain + 1) * W
    centre = [x for x in per[0] if lo_x <= x.u < hi_x]
    if len(centre) != 1:
        return AdjacencyReport(domain, ("", "", ""), False, False, False)
    cx = centre[0]
    left = [x for x in per[1] if lo_x <= x.u < cx.u]
    right = [x for x in per[2] if cx.u < x.u < hi_x]
    if not left or not right:
        return AdjacencyReport(domain, ("", "", ""), False, False, False)
    a = max(left, key=lambda x: x.u)
    b = min(right, key=lambda x: x.u)
    order_ok = not [x for g in per for x in g if a.u < x.u < b.u and x is not cx]

    # the same order read from forward itineraries in the base
    pts = [o.symbols[x.index:] + o.symbols[:x.index]
           for o, x in ((tr.kappa_p, a), (tr.kappa, cx), (tr.kappa_pp, b))]

    def cmp(u, v):
        return compare_itineraries(t, u, v, len(u) + len(v) + 8)

    symbolic_ok = cmp(pts[0], pts[1]) < 0 and cmp(pts[1], pts[2]) < 0

    # each point arrives through a strip whose image spans all three
    span = (a.u - lo_x, b.u - lo_x)
    pattern_ok = True
    for g, x in ((per[1], a), (per[0], cx), (per[2], b)):
        prev = g[(x.index - 1) % len(g)]
        lo, hi = t.strip(prev.symbol).target
        if not (lo <= span[0] and span[1] <= hi):
            pattern_ok = False
    labels = (f"{a.symbol}@{domain}", f"{cx.symbol}@{domain}", f"{b.symbol}@{domain}")
    return AdjacencyReport(domain, labels, order_ok, symbolic_ok, pattern_ok)


# --- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    params: dict
    triple: dict
    twists: tuple[int, int, int]
    linking: dict
    unknot: dict
    adjacency: dict
    separability: dict
    rotation_invariant: bool | None
    verdict: Verdict
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "layout_hash": layout_hash(),
            "params": self.params,
            "triple": self.triple,
            "twists": {"kappa": self.twists[0], "kappa_p": self.twists[1], "kappa_pp": self.twists[2]},
            "linking": self.linking,
            "unknot": self.unknot,
            "adjacency": self.adjacency,
            "separability": self.separability,
            "rotation_invariant": self.rotation_invariant,
            "verdict": self.verdict.value,
            **self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _invariants(c: CoverTemplate, tr: Triple) -> tuple[tuple[int, ...], dict[str, int]]:
    for o in tr.orbits:
        if not is_closed(c, o):
            raise InadmissibleTriple(f"{o} is not a closed orbit of U^{c.m}")
    tw = tuple(twist(c, o) for o in tr.orbits)
    k, kp, kpp = tr.orbits
    lk = {"kappa_kappa_p": linking(c, k, kp), "kappa_kappa_pp": linking(c, k, kpp),
          "kappa_p_kappa_pp": linking(c, kp, kpp)}
    return tw, lk


def _evaluate(c: CoverTemplate, tr: Triple, extra: int, max_states: int):
    tw, lk = _invariants(c, tr)
    reports = [unknot_evidence(c, o, extra, max_states) for o in tr.orbits]
    adj = adjacency(c, tr)
    ok = (
        tw[0] == 0 and tw[1] > 0 and tw[2] < 0
        and all(v == 0 for v in lk.values())
        and all(r.evidence is not Evidence.UNKNOWN for r in reports)
        and reports[0].evidence is Evidence.STRUCTURAL
        and adj.ok
    )
    return tw, lk, reports, adj, ok


def certify(c: CoverTemplate, tr: Triple, extra: int = DEFAULT_EXTRA, max_states: int = DEFAULT_STATES,
            check_rotations: bool = True, params: dict | None = None) -> Certificate:
    if c.m != tr.m or (c.base.p, c.base.q) != (tr.p, tr.q):
        raise InadmissibleTriple("triple and cover disagree on (p, q, m)")
    tw, lk, reports, adj, ok = _evaluate(c, tr, extra, max_states)
    rotation_ok = None
    if check_rotations:
        # a deck transformation must not change any invariant
        rotation_ok = all(
            _invariants(c, tr.rotated(r)) == (tw, lk) for r in range(1, c.m)
        )
    names = ("kappa", "kappa_p", "kappa_pp")
    unknot = {n: r.to_dict() for n, r in zip(names, reports)}
    separability = {
        "kind": "necessary conditions only",
        "unknots": all(r.evidence is not Evidence.UNKNOWN for r in reports),
        "unlinked": all(v == 0 for v in lk.values()),
        "kappa_structural": reports[0].evidence is Evidence.STRUCTURAL,
    }
    separability["holds"] = separability["unknots"] and separability["unlinked"] and separability["kappa_structural"]
    triple = {
        "kappa": str(tr.kappa), "kappa_p": str(tr.kappa_p), "kappa_pp": str(tr.kappa_pp),
        "words": list(tr.words), "provenance": tr.provenance,
        "domains_visited": [domains_visited(o) for o in tr.orbits],
        "repetitions": [o.repetitions for o in tr.orbits],
    }
    base = {"pq": [tr.p, tr.q], "m": tr.m}
    if params:
        base.update(params)
    verdict = Verdict.UNIVERSAL_EVIDENCE if ok and rotation_ok is not False else Verdict.INCOMPLETE
    return Certificate(base, triple, tw, lk, unknot, adj.to_dict(), separability, rotation_ok, verdict)


# --- whole families ---------------------------------------------------------


def choose_pair(params: FamilyParams, theorem: str) -> int:
    """Block pair used for ``theorem``; 1-based index i of (n_i, n_i+1)."""
    pairs = list(range(1, params.k))
    if theorem == "c":
        ones = [i for i in pairs if params.blocks[i - 1] == params.blocks[i] == 1]
        if not ones:
            raise ValueError("theorem (c) needs two adjacent blocks equal to 1")
        return ones[0]
    if theorem == "b":
        if params.k != 2:
            raise ValueError("theorem (b) applies to two-block braids")
        return 1
    return min(pairs, key=lambda i: (max(params.blocks[i - 1], params.blocks[i]), i))


def default_theorem(params: FamilyParams, m: int) -> str:
    if any(params.blocks[i - 1] == params.blocks[i] == 1 for i in range(1, params.k)):
        return "c"
    if params.k == 2 and m == 2:
        return "b"
    return "a"


def certify_family(params: FamilyParams, m: int, theorem: str | None = None, force: bool = False,
                   extra: int = DEFAULT_EXTRA, max_states: int = DEFAULT_STATES,
                   check_rotations: bool = True) -> Certificate:
    """Certify ``U^m`` of the whole family through one block-pair sub-cover."""
    theorem = theorem or default_theorem(params, m)
    i = choose_pair(params, theorem)
    p, q = params.blocks[i - 1], params.blocks[i]
    if theorem == "c":
        tr = triple_simple(m)
    elif theorem == "b":
        if m != 2:
            raise ValueError("theorem (b) is about the double cover")
        tr = triple_square(p, q)
    elif theorem == "a":
        tr = triple_power(p, q, m, force=force)
    else:
        raise ValueError(f"unknown theorem {theorem!r}")
    t = suspend_normal_form(p, q)
    c = build_cover(t, m)
    info = {"blocks": list(params.blocks), "i": i, "theorem": theorem, "mirror": i % 2 == 0}
    embedding = None
    if params.k > 2:
        try:
            for w in tr.words:
                subcover_embed(params, i, m, OrbitWord.parse(w))
            embedding = {"checked": True, "ok": True}
        except EmbeddingFailed as exc:
            embedding = {"checked": True, "ok": False, "error": str(exc)}
    cert = certify(c, tr, extra, max_states, check_rotations, info)
    rho = dilatation(transition_matrix(build_map(params))).spectral_radius
    extras = {"dilatation": f"{rho:.12f}"}
    if embedding is not None:
        extras["embedding"] = embedding
        if not embedding["ok"]:
            cert = Certificate(cert.params, cert.triple, cert.twists, cert.linking, cert.unknot, cert.adjacency,
                               cert.separability, cert.rotation_invariant, Verdict.INCOMPLETE, extras)
            return cert
    return Certificate(cert.params, cert.triple, cert.twists, cert.linking, cert.unknot, cert.adjacency,
                       cert.separability, cert.rotation_invariant, cert.verdict, extras)
