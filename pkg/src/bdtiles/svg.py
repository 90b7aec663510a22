"""SVG rendering of planar patches."""
from __future__ import annotations

from fractions import Fraction
from xml.sax.saxutils import quoteattr

from .geometry import Patch, Point

PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f")


def _num(x) -> str:
    return f"{float(x):.6f}"


def render_svg(
    p: Patch,
    *,
    labels=None,
    origin: bool = False,
    mark: Point | None = None,
    outlines=(),
    unit: float = 10.0,
) -> str:
    """One ``rect`` per tile in canonical order, coloured by prototile.

    ``outlines`` are extra boxes drawn unfilled (e.g. the supports of a
    nested chain). The y axis points up, as in the plane.
    """
    if p.dim not in (None, 2) or any(b.dim != 2 for b in outlines):
        raise ValueError("SVG rendering is only defined for planar patches")
    xs, ys = [], []
    for b in [t.box for t in p.tiles] + list(outlines):
        xs += [b.lo[0], b.hi[0]]
        ys += [b.lo[1], b.hi[1]]
    for pt in ([mark] if mark is not None else []) + ([(Fraction(0), Fraction(0))] if origin else []):
        xs.append(Fraction(pt[0]))
        ys.append(Fraction(pt[1]))
    if not xs:
        xs, ys = [Fraction(0), Fraction(1)], [Fraction(0), Fraction(1)]
    pad = Fraction(1, 2)
    x0 = min(xs) - pad
    w, h = max(xs) - min(xs) + 2 * pad, max(ys) - min(ys) + 2 * pad
    top = max(ys) + pad

    def flip(y):
        return top - y

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(w * unit)}" '
        f'height="{_num(h * unit)}" viewBox="{_num(x0)} 0.000000 {_num(w)} {_num(h)}">',
        '<g id="tiles" stroke="#000000" stroke-width="0.05">',
    ]
    for t in p.tiles:
        x, y = t.offset
        ew, eh = t.extents
        name = labels[t.prototile_id] if labels else f"T{t.prototile_id + 1}"
        out.append(
            f'<rect x="{_num(x)}" y="{_num(flip(y + eh))}" width="{_num(ew)}" height="{_num(eh)}" '
            f'fill="{PALETTE[t.prototile_id % len(PALETTE)]}" class={quoteattr(name)}/>'
        )
    out.append("</g>")
    if outlines:
        out.append('<g id="outlines" fill="none" stroke="#d62728" stroke-width="0.15">')
        for b in outlines:
            out.append(
                f'<rect x="{_num(b.lo[0])}" y="{_num(flip(b.hi[1]))}" '
                f'width="{_num(b.extents[0])}" height="{_num(b.extents[1])}"/>'
            )
        out.append("</g>")
    if origin:
        out.append(f'<circle id="origin" cx="{_num(0)}" cy="{_num(flip(0))}" r="0.200000" fill="#000000"/>')
    if mark is not None:
        out.append(
            f'<circle id="mark" cx="{_num(mark[0])}" cy="{_num(flip(mark[1]))}" r="0.150000" fill="#ffffff" '
            'stroke="#000000" stroke-width="0.05"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
