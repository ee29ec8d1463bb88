"""CSV tables and standalone SVG drawings of layouts and Gantt charts."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import geometry
from .io import csv_text
from .kpi import KPI_NAMES
from .model import AgentKind, Chromosome, WorkcellSpec, resource_coords
from .scheduler import gantt

GANTT_HEADER = ("agent", "operation", "start_s", "end_s")
TRACE_HEADER = ("time", "actor", "x", "y", "q1", "q2")
HISTORY_HEADER = ("iteration", "best_f", "mean_f", "mu", "sigma")
EVAL_HEADER = ("evaluation", "iteration") + KPI_NAMES + ("safety", "fitness", "makespan_method")

_PALETTE = ("#4C72B0", "#DD8452", "#55A868", "#C44E52", "#8172B3", "#937860", "#DA8BC3", "#8C8C8C", "#CCB974", "#64B5CD")


def gantt_csv(spec: WorkcellSpec, schedule, allocation) -> str:
    rows = []
    for row in gantt(schedule, allocation):
        for bar in row:
            rows.append((spec.agents[bar.agent].label, spec.operations[bar.op].label, bar.start, bar.end))
    return csv_text(GANTT_HEADER, rows)


def trace_csv(spec: WorkcellSpec, traces, schedule) -> str:
    rows = []
    for tr in traces:
        s0 = float(schedule.start[tr.op])
        for t, actor, x, y, q1, q2 in tr.samples:
            rows.append((s0 + t, spec.agents[int(actor)].label, x, y, "" if np.isnan(q1) else q1, "" if np.isnan(q2) else q2))
    rows.sort(key=lambda r: (r[0], r[1]))
    return csv_text(TRACE_HEADER, rows)


def history_csv(history: Sequence[dict]) -> str:
    return csv_text(HISTORY_HEADER, ([h[k] for k in HISTORY_HEADER] for h in history))


def evaluations_csv(log) -> str:
    rows = []
    for n, (it, ev) in enumerate(log):
        rows.append((n, it, *ev.kpi.raw, ev.kpi.safety, ev.fitness, ev.schedule.method))
    return csv_text(EVAL_HEADER, rows)


def kpi_rows_csv(kpis) -> str:
    return csv_text(("sample",) + KPI_NAMES + ("safety",), ((i, *k.raw, k.safety) for i, k in enumerate(kpis)))


def _svg(width: float, height: float, body: list[str]) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n"
    )


def layout_svg(spec: WorkcellSpec, x: Chromosome, px_per_m: float = 500.0) -> str:
    """Top view: resource footprints, agent bases and workspace annuli."""
    polys = [geometry.place(r, resource_coords(spec, x.layout, r.index)) for r in spec.resources]
    pts = [p.vertices for p in polys] + [np.array([a.base]) for a in spec.agents]
    allpts = np.vstack(pts)
    lo = allpts.min(axis=0) - 0.15
    hi = allpts.max(axis=0) + 0.15
    w, h = (hi - lo) * px_per_m

    def tx(p):
        return (p[0] - lo[0]) * px_per_m, (hi[1] - p[1]) * px_per_m

    body = [f'<rect width="{w:.1f}" height="{h:.1f}" fill="white"/>']
    for a in spec.agents:
        cx, cy = tx(a.base)
        color = "#55A868" if a.kind is AgentKind.HUMAN else "#4C72B0"
        for rad in (a.d_min, a.d_max):
            body.append(
                f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{rad * px_per_m:.1f}" fill="none" stroke="{color}" '
                f'stroke-dasharray="4 3" stroke-width="1"/>'
            )
        body.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="8" fill="{color}"/>')
        body.append(f'<text x="{cx + 10:.1f}" y="{cy + 4:.1f}" font-size="12">{escape(a.label)}</text>')
    for r, poly in zip(spec.resources, polys):
        path = " ".join(f"{px:.1f},{py:.1f}" for px, py in (tx(v) for v in poly.vertices))
        fill = "#DD8452" if r.movable else "#8C8C8C"
        body.append(f'<polygon points="{path}" fill="{fill}" fill-opacity="0.6" stroke="black" stroke-width="1"/>')
        cx, cy = tx(poly.centroid)
        body.append(f'<text x="{cx:.1f}" y="{cy + 4:.1f}" font-size="11" text-anchor="middle">{escape(r.label)}</text>')
    return _svg(w, h, body)


def gantt_svg(spec: WorkcellSpec, schedule, allocation, px_per_s: float = 12.0) -> str:
    rows = gantt(schedule, allocation)
    left, top, lane = 90.0, 20.0, 36.0
    span = max(schedule.makespan, 1e-9)
    w = left + span * px_per_s + 30
    h = top + lane * len(rows) + 40
    body = [f'<rect width="{w:.1f}" height="{h:.1f}" fill="white"/>']
    for k, row in enumerate(rows):
        y = top + k * lane
        body.append(f'<text x="8" y="{y + lane / 2 + 4:.1f}" font-size="12">{escape(spec.agents[k].label)}</text>')
        for bar in row:
            x0 = left + bar.start * px_per_s
            bw = max((bar.end - bar.start) * px_per_s, 0.5)
            color = _PALETTE[bar.op % len(_PALETTE)]
            body.append(
                f'<rect x="{x0:.1f}" y="{y + 4:.1f}" width="{bw:.1f}" height="{lane - 8:.1f}" '
                f'fill="{color}" stroke="black" stroke-width="0.5"/>'
            )
            body.append(
                f'<text x="{x0 + bw / 2:.1f}" y="{y + lane / 2 + 4:.1f}" font-size="10" '
                f'text-anchor="middle">{escape(spec.operations[bar.op].label)}</text>'
            )
    axis_y = top + lane * len(rows) + 12
    body.append(f'<line x1="{left}" y1="{axis_y}" x2="{left + span * px_per_s:.1f}" y2="{axis_y}" stroke="black"/>')
    step = 5 if span > 20 else 1
    for t in np.arange(0, span + 1e-9, step):
        xt = left + t * px_per_s
        body.append(f'<line x1="{xt:.1f}" y1="{axis_y}" x2="{xt:.1f}" y2="{axis_y + 4}" stroke="black"/>')
        body.append(f'<text x="{xt:.1f}" y="{axis_y + 16}" font-size="10" text-anchor="middle">{t:g}</text>')
    body.append(f'<text x="{left + span * px_per_s:.1f}" y="{axis_y + 28}" font-size="10" text-anchor="end">makespan {schedule.makespan:.2f} s</text>')
    return _svg(w, h, body)
