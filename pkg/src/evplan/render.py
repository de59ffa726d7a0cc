"""Schematic SVG maps: network, zones, stations, candidates and mobile units."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

from .candgen import EndpointCatalog
from .netcore import Network, NetworkPoint
from .planner import FcsPlan, McsSchedule, Mode, StageSets

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class Canvas:
    width: float = 800.0
    height: float = 600.0
    margin: float = 40.0


def _f(x: float) -> str:
    return f"{x:.6f}"


class _Projector:
    def __init__(self, network: Network, canvas: Canvas) -> None:
        if not network.has_coordinates:
            raise RenderError("every vertex needs x/y coordinates to render")
        xs = [v.x for v in network.vertices]
        ys = [v.y for v in network.vertices]
        self.x0, self.y0 = min(xs), min(ys)
        span = max(max(xs) - self.x0, max(ys) - self.y0) or 1.0
        self.scale = min(canvas.width, canvas.height) - 2 * canvas.margin
        self.scale /= span
        self.canvas = canvas
        self.network = network

    def __call__(self, pt: NetworkPoint) -> tuple[float, float]:
        x, y = pt.coordinates(self.network)
        c = self.canvas
        # flip y so north is up
        return c.margin + (x - self.x0) * self.scale, c.height - c.margin - (y - self.y0) * self.scale


def render_svg(
    network: Network,
    catalog: EndpointCatalog | None = None,
    plan: FcsPlan | None = None,
    sets: StageSets | None = None,
    schedule: McsSchedule | None = None,
    period: int | None = None,
    title: str = "",
    canvas: Canvas = Canvas(),
) -> str:
    """One SVG document; ``period`` (0-based) selects which mobile positions to draw."""
    proj = _Projector(network, canvas)
    zone_color = {z: PALETTE[k % len(PALETTE)] for k, z in enumerate(network.zones)}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(canvas.width)}" height="{_f(canvas.height)}" '
        f'viewBox="0 0 {_f(canvas.width)} {_f(canvas.height)}">',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    out.append('<g id="edges">')
    for e in network.edges:
        x1, y1 = proj(NetworkPoint.at_vertex(e.a))
        x2, y2 = proj(NetworkPoint.at_vertex(e.b))
        out.append(f'<line class="edge" x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="#999999" stroke-width="1.5"/>')
    out.append("</g>")
    out.append('<g id="vertices">')
    for v in network.vertices:
        x, y = proj(NetworkPoint.at_vertex(v.id))
        out.append(
            f'<circle class="vertex" data-id="{escape(v.id)}" data-zone="{escape(v.zone)}" cx="{_f(x)}" cy="{_f(y)}" '
            f'r="5.000000" fill="{zone_color[v.zone]}"/>'
        )
    out.append("</g>")
    if catalog is not None:
        out.append('<g id="existing">')
        for u in catalog.existing:
            x, y = proj(u.location)
            out.append(f'<rect class="existing" data-id="{escape(u.id)}" x="{_f(x - 5)}" y="{_f(y - 5)}" width="10.000000" height="10.000000" fill="#000000"/>')
        out.append("</g>")
        out.append('<g id="endpoints">')
        for ep in catalog.endpoints:
            x, y = proj(ep.location)
            out.append(f'<circle class="endpoint" data-id="{escape(ep.id)}" cx="{_f(x)}" cy="{_f(y)}" r="2.000000" fill="#444444"/>')
        out.append("</g>")
    if plan is not None and catalog is not None:
        out.append('<g id="fcs">')
        for wid in plan.selected:
            x, y = proj(catalog.endpoint(wid).location)
            pts = " ".join(f"{_f(px)},{_f(py)}" for px, py in ((x, y - 8), (x - 7, y + 5), (x + 7, y + 5)))
            out.append(f'<polygon class="fcs" data-id="{escape(wid)}" points="{pts}" fill="#d62728" stroke="#000000"/>')
        out.append("</g>")
    if schedule is not None and sets is not None and period is not None:
        out.append(f'<g id="mcs" data-period="{period + 1}">')
        for m, w in enumerate(schedule.assignment[period]):
            if w is None:
                continue
            x, y = proj(sets.points[w])
            mode = schedule.modes[period][m]
            fill = "#2ca02c" if mode is Mode.SERVE else "#1f77b4"
            out.append(
                f'<circle class="mcs" data-unit="m{m + 1}" data-mode="{mode.value}" data-point="{escape(w)}" '
                f'cx="{_f(x)}" cy="{_f(y)}" r="7.000000" fill="none" stroke="{fill}" stroke-width="2.500000"/>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_periods(
    network: Network,
    catalog: EndpointCatalog | None,
    plan: FcsPlan | None,
    sets: StageSets | None,
    schedule: McsSchedule | None,
    periods: int,
    title: str = "",
) -> list[str]:
    """One SVG per period (the network-only map repeated when no schedule is given)."""
    return [
        render_svg(network, catalog, plan, sets, schedule, t if schedule is not None else None, f"{title} period {t + 1}".strip())
        for t in range(periods)
    ]


def count_elements(svg: str, cls: str) -> int:
    return svg.count(f'class="{cls}"')


__all__: Sequence[str] = ("Canvas", "RenderError", "count_elements", "render_periods", "render_svg")
