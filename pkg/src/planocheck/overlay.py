"""SVG overlays and text rendering of compliance reports."""
from __future__ import annotations

from xml.sax.saxutils import quoteattr

PALETTE = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4",
    "#f032e6", "#bfef45", "#469990", "#9a6324", "#800000", "#808000",
    "#000075", "#a9a9a9", "#ffe119", "#dcbeff",
]


def type_colours(types) -> dict:
    return {t: PALETTE[i % len(PALETTE)] for i, t in enumerate(sorted(set(types)))}


def render_svg(report: dict) -> str:
    """One filled circle per detected product, coloured by the type of the
    pattern it belongs to."""
    scene = report.get("scene", {})
    w, h = float(scene.get("width", 1.0)), float(scene.get("height", 1.0))
    dets = report.get("detections", [])
    colours = type_colours(d["type"] for d in dets)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:g}" height="{h:g}" '
        f'viewBox="0 0 {w:g} {h:g}">',
        f'<rect x="0" y="0" width="{w:g}" height="{h:g}" fill="white" stroke="black"/>',
    ]
    for d in dets:
        fill = colours[d["type"]]
        out.append(f'<g class="pattern" data-pattern="{int(d["pattern"])}" data-type={quoteattr(d["type"])}>')
        for x, y, r in d["circles"]:
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{fill}" '
                       f'fill-opacity="0.5" stroke="{fill}"/>')
        out.append("</g>")
    for e in report.get("exemplars", []):
        x0, y0, x1, y1 = e["bbox"]
        out.append(f'<rect class="exemplar" x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
                   f'height="{y1 - y0:.2f}" fill="none" stroke="black" stroke-dasharray="4 2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_text(report: dict) -> str:
    lines = [f"overall accuracy: {report['overall_accuracy']:.4f}"]
    for t in report["types"]:
        lines.append(f"{t['type']}: expected {t['expected']}, matched {t['matched']}, "
                     f"accuracy {t['accuracy']:.4f}")
        if t["missing_slots"]:
            slots = ", ".join(f"({r},{c})" for r, c in t["missing_slots"])
            lines.append(f"  missing: {slots}")
        if t["unexpected"]:
            pts = ", ".join(f"({u['x']:.1f},{u['y']:.1f})" for u in t["unexpected"])
            lines.append(f"  unexpected: {pts}")
    return "\n".join(lines) + "\n"
