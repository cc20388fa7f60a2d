"""Acceptance checks: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import random
import sys
import time
import timeit
from pathlib import Path

import pytest
import sympy

from fibreflow.braid import FamilyParams, family_braid
from fibreflow.cli import main as cli_main
from fibreflow.cover import build_cover, diagram, domains_visited, lift, twist
from fibreflow.diagram import simplify, trefoil
from fibreflow.template import admissible, enumerate_orbits, linking_table, fixed_orbit_linking, suspend_normal_form
from fibreflow.traintrack import build_map, check_no_backtracking, dilatation, subtrack_witness, transition_matrix
from fibreflow.universality import (
    Evidence,
    TooFewSheets,
    Triple,
    Verdict,
    certify,
    euclid_factor,
    triple_power,
    triple_simple,
    triple_square,
    unknot_evidence,
)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE  # noqa: E402
from oracles import knot_determinant  # noqa: E402


def record(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    print(ACCEPTANCE[-1])
    assert ok, detail


def test_family_fidelity():
    params = FamilyParams((2, 2, 1, 1))
    b = family_braid(params)
    want = ((1, 1), (2, 1), (3, -1), (4, -1), (5, 1), (6, -1))
    best = min(timeit.repeat(lambda: family_braid(params), number=100, repeat=5)) / 100
    ok = b.strands == 7 and b.letters == want and best < 1e-3
    record("family fidelity", ok, f"(2,2,1,1) -> {b.sigma_notation()} on {b.strands} strands, {best * 1e6:.1f} us < 1 ms")


def test_dilatation():
    def run():
        tm = transition_matrix(build_map(FamilyParams((1, 1))))
        return tm, dilatation(tm)

    best = min(timeit.repeat(run, number=20, repeat=3)) / 20
    tm, d = run()
    exact = (3 + math.sqrt(5)) / 2
    err = abs(d.spectral_radius - exact)
    ok = ([list(r) for r in tm.matrix] == [[1, 1], [1, 2]] and d.charpoly == (1, -3, 1)
          and err <= 1e-9 and d.primitive and best < 1e-2)
    record("dilatation", ok, f"charpoly {list(d.charpoly)}, |lambda - (3+sqrt5)/2| = {err:.1e} <= 1e-9, "
                             f"{best * 1e3:.2f} ms < 10 ms")


def test_pseudo_anosov_grid():
    t0 = time.perf_counter()
    cases, bad = 0, []
    for k in (2, 3, 4):
        for blocks in itertools.product(range(1, 5), repeat=k):
            g = build_map(FamilyParams(blocks))
            d = dilatation(transition_matrix(g))
            cases += 1
            if not (d.primitive and d.spectral_radius > 1 and check_no_backtracking(g, 4).ok):
                bad.append(blocks)
    dt = time.perf_counter() - t0
    record("pseudo-Anosov evidence grid", not bad and dt < 60,
           f"{cases} block lists, {len(bad)} failures, {dt:.1f} s < 60 s")


def test_subtrack_identities():
    t0 = time.perf_counter()
    cases, bad = 0, []
    for k in (2, 3, 4, 5):
        for blocks in itertools.product(range(1, 4), repeat=k):
            for i in range(1, k):
                try:
                    subtrack_witness(FamilyParams(blocks), i)
                except AssertionError as exc:
                    bad.append((blocks, i, str(exc)))
                cases += 1
    dt = time.perf_counter() - t0
    record("subtrack identities", not bad and dt < 30, f"{cases} (blocks, i) pairs, {len(bad)} failures, {dt:.1f} s < 30 s")


def test_linking_table():
    bad = []
    for p, q in itertools.product((2, 3, 4), repeat=2):
        t = suspend_normal_form(p, q)
        want = {f"x{i}": 1 for i in range(p + 2)} | {"y": 0, f"z{q + 1}": 0} | {f"z{j}": -1 for j in range(q + 1)}
        if linking_table(t) != want or fixed_orbit_linking(t) != {"k_l": 1, "k_c": 0, "k_r": -1}:
            bad.append((p, q))
    record("linking table", not bad, f"9 templates, lk(k_l,k_c,k_r) = (+1, 0, -1) and strip signs exact, {len(bad)} failures")


def test_orbit_census():
    bad, checked = [], 0
    for p, q in itertools.product(range(1, 5), repeat=2):
        t = suspend_normal_form(p, q)
        a = sympy.Matrix(t.matrix().tolist())
        words = enumerate_orbits(t, 8)
        for L in range(1, 9):
            lhs = sum(len(w) for w in words if L % len(w) == 0)
            checked += 1
            if lhs != (a ** L).trace():
                bad.append((p, q, L))
    record("orbit census", not bad, f"{checked} (p, q, L) cases, sum_d d*N_d = trace(A^L) exactly, {len(bad)} failures")


def _certified(c, tr):
    cert = certify(c, tr)
    return cert, cert.verdict is Verdict.UNIVERSAL_EVIDENCE


def test_simple_covers():
    t0 = time.perf_counter()
    rows, bad = [], []
    t = suspend_normal_form(1, 1)
    for m in range(2, 7):
        c = build_cover(t, m)
        tr = triple_simple(m)
        cert, ok = _certified(c, tr)
        tw = cert.twists
        ev = {v["evidence"] for v in cert.unknot.values()}
        adj = cert.adjacency
        gain = twist(c, tr.kappa_p) - twist(c, lift(c, ["x"]))
        ok = (ok and tw[0] == 0 and tw[1] > 0 and tw[2] < 0 and set(cert.linking.values()) == {0}
              and ev == {"STRUCTURAL"} and adj["order"] and gain == 2)
        rows.append(f"m={m} tau={tw} gain={gain}")
        if not ok:
            bad.append(m)
    dt = time.perf_counter() - t0
    record("simple covers U^m(1,1)", not bad and dt < 10, f"{'; '.join(rows)}; {dt:.1f} s < 10 s")


def test_double_covers():
    t0 = time.perf_counter()
    bad = []
    for p, q in itertools.product((2, 3, 4), repeat=2):
        c = build_cover(suspend_normal_form(p, q), 2)
        _, ok = _certified(c, triple_square(p, q))
        if not ok:
            bad.append((p, q))
    dt = time.perf_counter() - t0
    record("double covers U^2(p,q)", not bad and dt < 60, f"9 (p, q) pairs, all parities, {len(bad)} failures, {dt:.1f} s < 60 s")


def test_power_word_covers():
    bad, count = [], 0
    for p, q in itertools.product((2, 3), repeat=2):
        n = max(p, q)
        for m in range(n * (n - 1), n * (n - 1) + 5):
            tr = triple_power(p, q, m)
            c = build_cover(suspend_normal_form(p, q), m)
            _, ok = _certified(c, tr)
            (t1, s1), (t2, s2) = euclid_factor(m, p), euclid_factor(m, q)
            count += 1
            if not (ok and domains_visited(tr.kappa_p) == m and domains_visited(tr.kappa_pp) == m
                    and min(t1 - s1, t2 - s2) >= 0):
                bad.append((p, q, m))
        for m in range(2, n * (n - 1)):
            t1, s1 = divmod(m, p)
            t2, s2 = divmod(m, q)
            negative = t1 < s1 or t2 < s2
            try:
                triple_power(p, q, m, force=True)
                fired = False
            except TooFewSheets:
                fired = True
            if fired != negative:
                bad.append((p, q, m, "threshold"))
    record("power-word covers U^m(p,q)", not bad, f"{count} (p, q, m) certified, TooFewSheets exact below threshold, {len(bad)} failures")


def _closing_repetitions(t, word, m) -> int:
    # walk the domains until the start letter comes back to domain 0
    d, reps = 0, 0
    while True:
        for s in word:
            d = (d + t.strip(s).shift) % m
        reps += 1
        if d == 0:
            return reps


def test_lift_closure_law():
    rng = random.Random(20240601)
    bad, count = [], 0
    for p, q in itertools.product((2, 3), repeat=2):
        t = suspend_normal_form(p, q)
        words = 0
        while words < 1000:
            length = rng.randint(1, 12)
            w = [rng.choice(t.symbols)]
            for _ in range(length - 1):
                w.append(rng.choice(t.successors(w[-1])))
            if not admissible(t, w):
                continue
            words += 1
            total = sum(t.strip(s).shift for s in w)
            for m in range(2, 9):
                o = lift(build_cover(t, m), w)
                count += 1
                if not o.repetitions == _closing_repetitions(t, w, m) == m // math.gcd(m, total):
                    bad.append((p, q, m, ".".join(w)))
    record("lift closure law", not bad, f"4000 words x m=2..8 = {count} lifts, {len(bad)} failures")


def test_negative_control():
    plain = simplify(trefoil())
    c = build_cover(suspend_normal_form(2, 2), 2)
    kp = lift(c, ["x0", "x1", "x2"])
    det = knot_determinant(diagram(c, [kp]).gauss())
    rep = unknot_evidence(c, kp)
    good = triple_square(2, 2)
    tr = Triple(2, 2, 2, good.kappa, kp, good.kappa_pp, ("y", "x0.x1.x2", good.words[2]), "planted trefoil")
    cert = certify(c, tr, check_rotations=False)
    ok = (not plain.unknot and det == 3 and rep.evidence is Evidence.UNKNOWN
          and cert.verdict is Verdict.INCOMPLETE)
    record("negative control", ok, f"trefoil diagram unknot={plain.unknot}; planted lift det={det}, "
                                   f"{rep.evidence.value} after {rep.states} states; verdict {cert.verdict.value}")


GRID = [
    ["--blocks", "1,1", "--m", "2..6"],
    *[["--blocks", f"{p},{q}", "--m", "2", "--theorem", "b"] for p, q in itertools.product((2, 3, 4), repeat=2)],
    *[["--blocks", f"{p},{q}", "--m", f"{max(p, q) * (max(p, q) - 1)}..{max(p, q) * (max(p, q) - 1) + 4}",
       "--theorem", "a"] for p, q in itertools.product((2, 3), repeat=2)],
]


def _run_grid(out: Path) -> dict[str, bytes]:
    for i, argv in enumerate(GRID):
        code = cli_main(["certify", *argv, "--out", str(out / f"g{i}"), "--quiet"])
        assert code == 0
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def test_determinism(tmp_path):
    a = _run_grid(tmp_path / "a")
    b = _run_grid(tmp_path / "b")
    certs = [k for k in a if k.endswith(".json")]
    indexes = [k for k in a if k.endswith("index.tsv")]
    record("determinism", a == b and len(certs) == 34, f"{len(certs)} certificates and {len(indexes)} index files "
                                                       f"byte-identical across two runs: {a == b}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
