"""Deterministic SVG rendering of graphs, configurations, duals, and boxes."""

from __future__ import annotations

import numpy as np

from .dualgraph import DualGraph
from .percolation import BondConfiguration


def _header(rect, scale=12, pad=1.0):
    w = (rect.width + 2 * pad) * scale
    h = (rect.height + 2 * pad) * scale
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" '
            f'height="{h:.0f}" viewBox="{rect.x0 - pad} {-(rect.y1 + pad)} '
            f'{rect.width + 2 * pad} {rect.height + 2 * pad}">\n'
            '<g stroke-linecap="round">\n')


def _line(p, q, color, width):
    return (f'<line x1="{p[0]}" y1="{-p[1]}" x2="{q[0]}" y2="{-q[1]}" '
            f'stroke="{color}" stroke-width="{width}"/>\n')


def _rect(r, color, width, fill="none"):
    return (f'<rect x="{r.x0}" y="{-r.y1}" width="{r.width}" '
            f'height="{r.height}" stroke="{color}" stroke-width="{width}" '
            f'fill="{fill}"/>\n')


def render_graph(g, faces: DualGraph | None = None) -> str:
    out = [_header(g.rect)]
    if faces is not None:
        out.append('<g class="faces">\n')
        r = g.rect
        for fid in range(faces.n_faces):
            ys, xs = np.nonzero(faces.face_grid == fid)
            kind = faces.face_kind(fid)
            color = "#dddddd" if kind == "cell" else "#f4c7c3"
            out.append(f'<g class="face" data-kind="{kind}">\n')
            for y, x in sorted(zip(ys.tolist(), xs.tolist())):
                out.append(
                    f'<rect x="{x + r.x0}" y="{-(y + r.y0 + 1)}" width="1" '
                    f'height="1" fill="{color}" stroke="none"/>\n')
            out.append('</g>\n')
        out.append('</g>\n')
    v = g.vertices
    for a, b in g.edges.tolist():
        out.append(_line(v[a], v[b], "#222222", 0.08))
    out.append("</g>\n</svg>\n")
    return "".join(out)


def render_config(config: BondConfiguration, dual_overlay: bool = False,
                  dual: DualGraph | None = None) -> str:
    g = config.graph
    out = [_header(g.rect)]
    v = g.vertices
    for i, (a, b) in enumerate(g.edges.tolist()):
        if config.bits[i]:
            out.append(_line(v[a], v[b], "#1a53a1", 0.12))
    if dual_overlay and dual is not None:
        centers = _face_centers(dual)
        for i in range(dual.n_dual_edges):
            pe = dual.gate[i]
            if pe >= 0 and config.bits[pe]:
                continue
            p = centers[int(dual.dual_u[i])]
            q = centers[int(dual.dual_v[i])]
            out.append(_line(p, q, "#c23b22", 0.06))
    out.append("</g>\n</svg>\n")
    return "".join(out)


def _face_centers(d: DualGraph):
    r = d.graph.rect
    centers = {}
    for fid in range(d.n_faces):
        ys, xs = np.nonzero(d.face_grid == fid)
        centers[fid] = (xs.mean() + r.x0 + 0.5, ys.mean() + r.y0 + 0.5)
    centers[d.LEFT] = (r.x0 - 0.75, (r.y0 + r.y1) / 2)
    centers[d.RIGHT] = (r.x1 + 0.75, (r.y0 + r.y1) / 2)
    centers[d.BOTTOM] = ((r.x0 + r.x1) / 2, r.y0 - 0.75)
    centers[d.TOP] = ((r.x0 + r.x1) / 2, r.y1 + 0.75)
    return centers


def render_dual(d: DualGraph) -> str:
    g = d.graph
    out = [_header(g.rect)]
    v = g.vertices
    for a, b in g.edges.tolist():
        out.append(_line(v[a], v[b], "#cccccc", 0.06))
    centers = _face_centers(d)
    for i in range(d.n_dual_edges):
        p = centers[int(d.dual_u[i])]
        q = centers[int(d.dual_v[i])]
        color = "#c23b22" if d.gate[i] >= 0 else "#7a3db8"
        out.append(_line(p, q, color, 0.07))
    out.append("</g>\n</svg>\n")
    return "".join(out)


def render_boxes(boxes, ambient_rect) -> str:
    """One rectangle element per named rectangle of every box."""
    out = [_header(ambient_rect, scale=1.2)]
    colors = {"V": "#1a53a1", "J": "#1a53a1", "Jl": "#5a83d1", "Jr": "#5a83d1",
              "L": "#b2182b", "I": "#b2182b", "It": "#d26a6a", "Ib": "#d26a6a"}
    for box in boxes:
        for name, r, _ in box.rects:
            out.append(_rect(r, colors.get(name, "#333333"),
                             max(1, ambient_rect.width // 400)))
    out.append("</g>\n</svg>\n")
    return "".join(out)
