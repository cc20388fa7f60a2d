"""Command-line front end: ``fibreflow braid|track|template|cover|certify|render``.

Tables go to stdout tab-separated (or as JSON with ``--json``).  The certify
command runs a grid of tasks, writes one certificate per task atomically into
``--out``, skips tasks whose certificate already carries the same content hash
and rewrites ``index.tsv`` in grid order, so an interrupted run resumes to the
same bytes.  Exit status: 0 verified, 2 incomplete evidence, 1 error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from . import __version__
from .braid import FamilyParams, family_braid, mirror, power
from .cover import CoverOrbit, build_cover, domains_visited, lift, subcover_embed
from .cover import twist as cover_twist
from .diagram import DEFAULT_EXTRA, DEFAULT_STATES
from .render import render, render_png
from .template import (
    OrbitWord,
    enumerate_orbits,
    fixed_orbit_linking,
    layout_hash,
    linking,
    periodic_point_count,
    suspend_normal_form,
    twist,
    use_layout,
)
from .traintrack import (
    build_map,
    check_no_backtracking,
    dilatation,
    edge_name,
    format_word,
    subtrack_witness,
    transition_matrix,
)
from .universality import (
    Verdict,
    certify_family,
    triple_power,
    triple_simple,
    triple_square,
)

OK, ERROR, INCOMPLETE = 0, 1, 2
MAX_TASKS = 10_000
INDEX = "index.tsv"


class UsageError(ValueError):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _range(text: str) -> list[int]:
    """``5``, ``2..6`` or ``2,3,7``."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return list(_ints(text))


def _emit(args, rows: list[dict], columns: Sequence[str], single: bool = False) -> None:
    if args.quiet:
        return
    if args.json:
        print(json.dumps(rows[0] if single else rows, indent=2, sort_keys=True))
        return
    print("\t".join(columns))
    for r in rows:
        print("\t".join(str(r.get(c, "")) for c in columns))


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- braid / track / template / cover ----------------------------------------


def cmd_braid(args) -> int:
    b = family_braid(FamilyParams(_ints(args.blocks)))
    if args.power:
        b = power(b, args.power)
    if args.mirror:
        b = mirror(b)
    if args.quiet:
        return OK
    if args.json:
        print(json.dumps({**b.to_dict(), "sigma": b.sigma_notation()}, sort_keys=True))
    else:
        print(b.to_json())
        print(b.sigma_notation())
    return OK


def cmd_track(args) -> int:
    params = FamilyParams(_ints(args.blocks))
    gmap = build_map(params)
    tm = transition_matrix(gmap)
    d = dilatation(tm)
    out: dict = {"blocks": list(params.blocks), "edges": [edge_name(e) for e in tm.basis]}
    if args.matrix:
        out["matrix"] = [list(r) for r in tm.matrix]
        out["images"] = {edge_name(e): format_word(gmap.image(e), loops=True) for e in tm.basis}
    if args.dilatation or not (args.matrix or args.check_efficiency or args.subtrack):
        out.update(charpoly=list(d.charpoly), dilatation=round(d.spectral_radius, 12), primitive=d.primitive)
    status = OK
    if args.check_efficiency:
        rep = check_no_backtracking(gmap, args.check_efficiency)
        out["efficiency"] = {"depth": rep.depth, "ok": rep.ok, "violations": len(rep.violations),
                             "shielded": len(rep.shielded)}
        status = OK if rep.ok else INCOMPLETE
    if args.subtrack:
        w = subtrack_witness(params, args.subtrack)
        out["subtrack"] = {"i": w.i, "mirror": w.mirror, "degenerate": w.degenerate,
                           "identities": [list(x) for x in w.identities]}
    if not args.quiet:
        if args.json:
            print(json.dumps(out, indent=2, sort_keys=True))
        else:
            for k, v in out.items():
                print(f"{k}\t{json.dumps(v, sort_keys=True)}")
    return status


def cmd_template(args) -> int:
    p, q = _ints(args.pq)
    t = suspend_normal_form(p, q)
    if args.render and args.render != "none":
        if not args.quiet:
            sys.stdout.write(render(t, (), args.render))
        return OK
    rows = []
    if args.orbits:
        for w in enumerate_orbits(t, args.orbits):
            row = {"word": str(w), "length": len(w), "linking_beta": sum(t.strip(s).shift for s in w.symbols)}
            row["twist"] = twist(t, w)
            rows.append(row)
        _emit(args, rows, ("word", "length", "twist", "linking_beta"))
        return OK
    if args.twist:
        w = OrbitWord.parse(args.twist)
        _emit(args, [{"word": str(w), "twist": twist(t, w)}], ("word", "twist"), single=True)
        return OK
    if args.lk:
        a, b = (OrbitWord.parse(x) for x in args.lk)
        _emit(args, [{"a": str(a), "b": str(b), "linking": linking(t, a, b)}], ("a", "b", "linking"), single=True)
        return OK
    rows = [{"symbol": s.symbol, "half_twists": s.half_twists, "shift": s.shift,
             "successors": ",".join(t.successors(s.symbol))} for s in t.strips]
    _emit(args, rows, ("symbol", "half_twists", "shift", "successors"))
    if not args.quiet and not args.json:
        lk = fixed_orbit_linking(t)
        print(f"# lk with beta: k_l {lk['k_l']:+d}  k_c {lk['k_c']:+d}  k_r {lk['k_r']:+d}")
        print(f"# periodic points L=1..6: {[periodic_point_count(t, L) for L in range(1, 7)]}")
    return OK


def _parse_lift(c, text: str) -> CoverOrbit:
    word, _, dom = text.partition("@")
    return lift(c, OrbitWord.parse(word).symbols, int(dom or 0))


def cmd_cover(args) -> int:
    p, q = _ints(args.pq)
    c = build_cover(suspend_normal_form(p, q), args.m)
    if args.embed:
        if not args.blocks:
            raise UsageError("--embed needs --blocks")
        if not args.lift:
            raise UsageError("--embed needs --lift WORD@DOMAIN")
        params = FamilyParams(_ints(args.blocks))
        word = args.lift.partition("@")[0]
        o, big = subcover_embed(params, args.embed, args.m, OrbitWord.parse(word))
        rows = [{"orbit": str(o), "strips": " ".join(f"{b.edge}[{b.lo},{b.hi}]{b.shift:+d}" for b in big)}]
        _emit(args, rows, ("orbit", "strips"), single=True)
        return OK
    if args.lift:
        o = _parse_lift(c, args.lift)
        rows = [{"orbit": str(o), "repetitions": o.repetitions, "domains": domains_visited(o),
                 "twist": cover_twist(c, o)}]
        _emit(args, rows, ("orbit", "repetitions", "domains", "twist"), single=True)
        return OK
    rows = [{"strip": f"{s}@{d}", "target_domain": c.target_domain((s, d)), "shift": c.shift(s)}
            for s, d in c.strips]
    _emit(args, rows, ("strip", "target_domain", "shift"))
    return OK


# --- certify ------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    blocks: tuple[int, ...]
    m: int
    theorem: str | None
    force: bool
    budget: int
    states: int

    @property
    def name(self) -> str:
        th = self.theorem or "auto"
        return f"b{'-'.join(map(str, self.blocks))}_m{self.m}_{th}"

    def digest(self) -> str:
        payload = {**asdict(self), "version": __version__, "layout": layout_hash()}
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _run_task(task: Task, layout: str | None) -> dict:
    use_layout(layout)
    try:
        cert = certify_family(FamilyParams(task.blocks), task.m, task.theorem, task.force,
                              extra=task.budget, max_states=task.states)
    except (ValueError, AssertionError) as exc:
        return {"task": task.name, "task_hash": task.digest(), "verdict": "ERROR",
                "error": f"{type(exc).__name__}: {exc}"}
    data = cert.to_dict()
    data["task"] = task.name
    data["task_hash"] = task.digest()
    return data


def _index_row(data: dict) -> str:
    tw = data.get("twists")
    tau = "" if not tw else f"{tw['kappa']},{tw['kappa_p']},{tw['kappa_pp']}"
    return "\t".join([data["task"], data["verdict"], tau, data.get("dilatation", ""), data["task_hash"]])


def cmd_certify(args) -> int:
    grids = [_ints(b) for b in args.blocks]
    ms = _range(args.m)
    tasks = [Task(b, m, args.theorem, args.force, args.budget, args.states) for b in grids for m in ms]
    if len(tasks) > MAX_TASKS:
        raise UsageError(f"{len(tasks)} tasks exceed the limit of {MAX_TASKS}")
    out = Path(args.out) if args.out else None
    results: dict[str, dict] = {}
    todo = []
    for task in tasks:
        path = out / f"{task.name}.json" if out else None
        if path and path.exists():
            try:
                old = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError):
                old = {}
            if old.get("task_hash") == task.digest():
                results[task.name] = old
                continue
        todo.append(task)
    if args.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            done = list(pool.map(_run_task, todo, [args.layout] * len(todo)))
    else:
        done = [_run_task(t, args.layout) for t in todo]
    for task, data in zip(todo, done):
        results[task.name] = data
        if out:
            try:
                _write_atomic(out / f"{task.name}.json", json.dumps(data, indent=2, sort_keys=True) + "\n")
            except OSError as exc:
                raise OSError(f"task {task.name}: {exc}") from exc
        if args.figures and out and data["verdict"] != "ERROR":
            _figure(task, out / f"{task.name}.png")
    ordered = [results[t.name] for t in tasks]
    if out:
        header = "task\tverdict\ttau\tdilatation\ttask_hash\n"
        _write_atomic(out / INDEX, header + "".join(_index_row(d) + "\n" for d in ordered))
    if not args.quiet:
        if args.json:
            print(json.dumps(ordered, indent=2, sort_keys=True))
        else:
            print("task\tverdict\ttau\tdilatation")
            for d in ordered:
                print("\t".join(_index_row(d).split("\t")[:4]))
                if d["verdict"] == "ERROR":
                    print(f"# {d['task']}: {d['error']}", file=sys.stderr)
    verdicts = {d["verdict"] for d in ordered}
    if "ERROR" in verdicts:
        return ERROR
    return INCOMPLETE if Verdict.INCOMPLETE.value in verdicts else OK


def _triple_for(p: int, q: int, m: int, kind: str, force: bool = False):
    if kind == "c":
        return triple_simple(m)
    if kind == "b":
        return triple_square(p, q)
    return triple_power(p, q, m, force=force)


def _figure(task: Task, path: Path) -> None:
    from .universality import choose_pair, default_theorem

    params = FamilyParams(task.blocks)
    theorem = task.theorem or default_theorem(params, task.m)
    i = choose_pair(params, theorem)
    p, q = params.blocks[i - 1], params.blocks[i]
    c = build_cover(suspend_normal_form(p, q), task.m)
    tr = _triple_for(p, q, task.m, theorem, task.force)
    tmp = path.with_suffix(".tmp.png")
    render_png(c, tr.orbits, str(tmp))
    os.replace(tmp, path)


# --- render ---------------------------------------------------------------------


def cmd_render(args) -> int:
    p, q = _ints(args.pq)
    t = suspend_normal_form(p, q)
    if args.m:
        obj = build_cover(t, args.m)
        orbits = list(_triple_for(p, q, args.m, args.triple, args.force).orbits) if args.triple else []
        orbits += [_parse_lift(obj, w) for w in args.orbit or []]
    else:
        obj = t
        orbits = [OrbitWord.parse(w) for w in args.orbit or []]
    if args.format == "png":
        if not args.out:
            raise UsageError("png output needs --out")
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        render_png(obj, orbits, str(path))
        return OK
    text = render(obj, orbits, args.format)
    if args.out:
        _write_atomic(Path(args.out), text)
    elif not args.quiet:
        sys.stdout.write(text)
    return OK


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (certify) or file (render)")
    common.add_argument("--layout", help="layout file; must match the shipped conventions")
    common.add_argument("--json", action="store_true", help="print JSON instead of tab-separated rows")
    common.add_argument("--quiet", action="store_true")

    ap = argparse.ArgumentParser(prog="fibreflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("braid", parents=[common], help="family braid word")
    b.add_argument("--blocks", required=True)
    b.add_argument("--power", type=int)
    b.add_argument("--mirror", action="store_true")
    b.set_defaults(func=cmd_braid)

    tr = sub.add_parser("track", parents=[common], help="train track map and dilatation")
    tr.add_argument("--blocks", required=True)
    tr.add_argument("--matrix", action="store_true")
    tr.add_argument("--dilatation", action="store_true")
    tr.add_argument("--check-efficiency", type=int, metavar="DEPTH")
    tr.add_argument("--subtrack", type=int, metavar="I")
    tr.set_defaults(func=cmd_track)

    te = sub.add_parser("template", parents=[common], help="normal-form template T_(p,q)")
    te.add_argument("--pq", required=True)
    te.add_argument("--orbits", type=int, metavar="L")
    te.add_argument("--twist", metavar="WORD")
    te.add_argument("--lk", nargs=2, metavar="WORD")
    te.add_argument("--render", choices=("ascii", "svg", "none"))
    te.set_defaults(func=cmd_template)

    co = sub.add_parser("cover", parents=[common], help="m-fold cyclic cover U^m")
    co.add_argument("--pq", required=True)
    co.add_argument("--m", type=int, required=True)
    co.add_argument("--lift", metavar="WORD@DOMAIN")
    co.add_argument("--embed", type=int, metavar="I")
    co.add_argument("--blocks")
    co.set_defaults(func=cmd_cover)

    ce = sub.add_parser("certify", parents=[common], help="universality certificates over a grid")
    ce.add_argument("--blocks", required=True, action="append", help="n1,...,nk; repeat for a grid")
    ce.add_argument("--m", required=True, help="M, A..B or a comma list")
    ce.add_argument("--theorem", choices=("a", "b", "c"))
    ce.add_argument("--budget", type=int, default=DEFAULT_EXTRA, help="extra crossings allowed in the search")
    ce.add_argument("--states", type=int, default=DEFAULT_STATES, help="search state limit")
    ce.add_argument("--force", action="store_true", help="evaluate power words below the threshold")
    ce.add_argument("--jobs", type=int, default=1)
    ce.add_argument("--figures", action="store_true", help="also write a PNG of each certified triple")
    ce.set_defaults(func=cmd_certify)

    re_ = sub.add_parser("render", parents=[common], help="ASCII, SVG or PNG cartoon")
    re_.add_argument("--pq", required=True)
    re_.add_argument("--m", type=int)
    re_.add_argument("--triple", choices=("a", "b", "c"))
    re_.add_argument("--orbit", action="append", metavar="WORD")
    re_.add_argument("--format", choices=("ascii", "svg", "png"), default="ascii")
    re_.add_argument("--force", action="store_true")
    re_.set_defaults(func=cmd_render)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        use_layout(args.layout)
        return args.func(args)
    except (ValueError, OSError, AssertionError) as exc:
        print(f"fibreflow {args.command}: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
