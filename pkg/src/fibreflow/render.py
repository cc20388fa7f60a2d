"""ASCII, SVG and PNG pictures of templates, covers and their orbits.

All three formats draw the same geometry in (X, t) coordinates: X along the
branch line, t down the flow from the branch line (t = 0) to the landing
line (t = 1), which is identified with it.  Lassos of cover orbits are drawn
above the branch line.  ASCII and SVG output is byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .cover import CoverOrbit, CoverTemplate, diagram
from .template import OrbitWord, Template, orbit_points

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
BOX = {1: "+", 0: " ", -1: "-"}


@dataclass(frozen=True)
class Shape:
    kind: str                                  # "strip", "curve", "line", "label"
    points: tuple[tuple[float, float], ...]
    group: int = -1                            # orbit index for curves
    text: str = ""


def _strip_shapes(t: Template, copies: int) -> list[Shape]:
    W = t.width
    out = []
    for j in range(copies):
        for s in t.strips:
            (a, b), (c, d) = s.start, s.target
            x0 = j * W
            pts = ((x0 + a, 0.0), (x0 + b, 0.0), (x0 + d, 1.0), (x0 + c, 1.0))
            out.append(Shape("strip", tuple((float(x), float(y)) for x, y in pts)))
            label = s.symbol if copies == 1 else f"{s.symbol}@{j}"
            box = BOX[max(-1, min(1, s.half_twists))] * min(abs(s.half_twists), 1)
            out.append(Shape("label", ((float(x0 + (a + b) / 2), 0.08),), text=f"{box}{label}".strip()))
    total = float(copies * W)
    out.append(Shape("line", ((0.0, 0.0), (total, 0.0)), text="branch line"))
    out.append(Shape("line", ((0.0, 1.0), (total, 1.0)), text="identified with branch line"))
    return out


def _base_curves(t: Template, orbits: Sequence[OrbitWord]) -> list[Shape]:
    out = []
    for g, w in enumerate(orbits):
        pts = orbit_points(t, w.symbols)
        n = len(pts)
        for k in range(n):
            u, v = pts[k], t.strip(w.symbols[k]).forward(pts[k])
            out.append(Shape("curve", ((float(u), 0.0), (float(v), 1.0)), g))
    return out


def _cover_curves(c: CoverTemplate, orbits: Sequence[CoverOrbit]) -> list[Shape]:
    W = c.width
    span = c.m * W
    out = []
    for row in diagram(c, orbits).letters:
        for x in row:
            g = x.orbit
            out.append(Shape("curve", ((float(x.land), 0.0), (float(x.end), 1.0)), g))
            if not x.shift:
                continue
            top = -0.15 * x.level
            end = x.u + x.shift * (W - x.eps)
            out.append(Shape("curve", ((float(x.u), 0.0), (float(x.u), top)), g))
            # the sweep, split where it leaves the annulus picture
            a, b = x.u, end
            if 0 <= b < span:
                out.append(Shape("curve", ((float(a), top), (float(b), top - 0.05)), g))
            else:
                edge = span if b >= span else 0
                out.append(Shape("curve", ((float(a), top), (float(edge), top - 0.025)), g))
                out.append(Shape("curve", ((float(span - edge), top - 0.025), (float(b % span), top - 0.05)), g))
            out.append(Shape("curve", ((float(x.land), top - 0.05), (float(x.land), 0.0)), g))
    return out


def shapes(obj: Template | CoverTemplate, orbits: Sequence = ()) -> list[Shape]:
    if isinstance(obj, CoverTemplate):
        return _strip_shapes(obj.base, obj.m) + _cover_curves(obj, list(orbits))
    return _strip_shapes(obj, 1) + _base_curves(obj, list(orbits))


# --- ASCII -------------------------------------------------------------------


def render_ascii(obj: Template | CoverTemplate, orbits: Sequence = ()) -> str:
    """Strip table in branch-line order with box signs, then orbit points."""
    base = obj.base if isinstance(obj, CoverTemplate) else obj
    copies = obj.m if isinstance(obj, CoverTemplate) else 1
    title = f"T_({base.p},{base.q})" if copies == 1 else f"U^{copies} of T_({base.p},{base.q})"
    lines = [title, "=" * 8 + " top: branch line (identified with the bottom) " + "=" * 8]
    cells = []
    for j in range(copies):
        for s in base.strips:
            tag = s.symbol if copies == 1 else f"{s.symbol}@{j}"
            cells.append(f"[{BOX[max(-1, min(1, s.half_twists))]}]{tag}")
    lines.append(" ".join(cells))
    lines.append(" ".join("|" + " " * (len(cell) - 1) for cell in cells).rstrip())
    for s in base.strips:
        (a, b), (c, d) = s.start, s.target
        succ = ",".join(base.successors(s.symbol))
        lines.append(
            f"  {s.symbol:>6}  box {s.half_twists:+d}  shift {s.shift:+d}  "
            f"[{a},{b}] -> [{c},{d}]  next {succ}"
        )
    lines.append("=" * 8 + " bottom: landing line (identified with the top) " + "=" * 8)
    for g, o in enumerate(orbits):
        mark = "abcdefghijklmnopqrstuvwxyz"[g % 26]
        lines.append(f"orbit {mark}: {o}")
    if orbits:
        width = 8 * base.width * copies
        axis = [" "] * (width + 1)
        for sh in shapes(obj, orbits):
            if sh.kind == "curve" and sh.points[0][1] == 0.0 and sh.points[1][1] == 1.0:
                col = int(round(sh.points[0][0] / (base.width * copies) * width))
                axis[col] = "abcdefghijklmnopqrstuvwxyz"[sh.group % 26]
        lines.append("points: " + "".join(axis).rstrip())
    return "\n".join(lines) + "\n"


# --- SVG ---------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def render_svg(obj: Template | CoverTemplate, orbits: Sequence = (), scale: float = 80.0) -> str:
    shp = shapes(obj, orbits)
    xs = [p[0] for s in shp for p in s.points]
    ys = [p[1] for s in shp for p in s.points]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    pad = 0.3

    def X(v: float) -> str:
        return _fmt((v - x0 + pad) * scale)

    def Y(v: float) -> str:
        return _fmt((v - y0 + pad) * scale * 2)

    w = _fmt((x1 - x0 + 2 * pad) * scale)
    h = _fmt((y1 - y0 + 2 * pad) * scale * 2)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    for s in shp:
        if s.kind == "strip":
            pts = " ".join(f"{X(x)},{Y(y)}" for x, y in s.points)
            out.append(f'<polygon points="{pts}" fill="#eeeeee" stroke="#999999" stroke-width="1"/>')
    for s in shp:
        if s.kind == "line":
            (a, b), (c, d) = s.points
            out.append(f'<line x1="{X(a)}" y1="{Y(b)}" x2="{X(c)}" y2="{Y(d)}" stroke="#000000" '
                       f'stroke-width="2"><title>{s.text}</title></line>')
        elif s.kind == "label":
            (a, b), = s.points
            out.append(f'<text x="{X(a)}" y="{Y(b)}" font-size="12" text-anchor="middle">{s.text}</text>')
    for s in shp:
        if s.kind == "curve":
            pts = " ".join(f"{X(x)},{Y(y)}" for x, y in s.points)
            colour = PALETTE[s.group % len(PALETTE)]
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --- PNG ---------------------------------------------------------------------


def render_png(obj: Template | CoverTemplate, orbits: Sequence, path: str) -> None:
    """Matplotlib figure of the same geometry; not byte-deterministic."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    shp = shapes(obj, orbits)
    width = max(p[0] for s in shp for p in s.points)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * width), 4.0))
    for s in shp:
        if s.kind == "strip":
            ax.fill([p[0] for p in s.points], [p[1] for p in s.points], color="#eeeeee", ec="#999999", lw=0.8)
        elif s.kind == "line":
            ax.plot([p[0] for p in s.points], [p[1] for p in s.points], color="black", lw=1.5)
        elif s.kind == "label":
            ax.text(s.points[0][0], s.points[0][1], s.text, ha="center", va="center", fontsize=8)
    for s in shp:
        if s.kind == "curve":
            ax.plot([p[0] for p in s.points], [p[1] for p in s.points],
                    color=PALETTE[s.group % len(PALETTE)], lw=1.4)
    ax.invert_yaxis()
    ax.set_xlabel("branch line")
    ax.set_yticks([0, 1], ["branch line", "landing (identified)"])
    ax.set_title(render_ascii(obj).splitlines()[0])
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def render(obj: Template | CoverTemplate, orbits: Sequence = (), fmt: str = "ascii") -> str:
    if fmt == "ascii":
        return render_ascii(obj, orbits)
    if fmt == "svg":
        return render_svg(obj, orbits)
    if fmt == "none":
        return ""
    raise ValueError(f"unknown render format {fmt!r}")
