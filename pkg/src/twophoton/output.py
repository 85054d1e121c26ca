"""CSV, SVG and run-manifest writers.

CSV positions are in metres; plots label their axis in millimetres.
"""
from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ANALYTIC_COLUMNS = ("x_m", "g2_normalized", "g2_raw")
MONTECARLO_COLUMNS = ("x_m", "g2_normalized", "stderr", "n_realizations")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    # repr is locale independent and round-trips exactly
    return repr(float(value))


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path) -> dict:
    """Columns of a CSV written by ``write_csv`` as float arrays."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def analytic_rows(curve):
    return [(x, g, r) for x, g, r in zip(curve.x, curve.g2, curve.raw)]


def montecarlo_rows(curve):
    return [(x, g, e, int(curve.n_realizations)) for x, g, e in zip(curve.x, curve.g2, curve.stderr)]


@dataclass
class Series:
    label: str
    x: np.ndarray  # metres
    y: np.ndarray
    err: np.ndarray | None = None
    kind: str = "line"  # "line" or "points"
    color: str = "#1f4e9c"
    peaks: list = field(default_factory=list)  # x positions to annotate, metres


def write_svg(path, series, title: str = "", ylabel: str = "g2 (normalized)", width=640, height=420) -> Path:
    """Plot series on a shared axis: one polyline per line series, one marker
    group (with error bars) per point series."""
    left, right, top, bottom = 64, 20, 36, 52
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([s.x for s in series]) * 1e3
    lows = [s.y - (s.err if s.err is not None else 0) for s in series]
    highs = [s.y + (s.err if s.err is not None else 0) for s in series]
    xmin, xmax = float(xs.min()), float(xs.max())
    ymin = min(float(np.min(v)) for v in lows)
    ymax = max(float(np.max(v)) for v in highs)
    if xmax == xmin:
        xmax = xmin + 1.0
    pad = 0.05 * (ymax - ymin or 1.0)
    ymin, ymax = ymin - pad, ymax + pad

    def px(v):
        return left + (v - xmin) / (xmax - xmin) * pw

    def py(v):
        return top + (ymax - v) / (ymax - ymin) * ph

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width), height=str(height),
                     viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    if title:
        t = ET.SubElement(svg, "text", {"text-anchor": "middle", "font-size": "14"}, x=str(width / 2), y="22")
        t.text = title
    axes = ET.SubElement(svg, "g", {"id": "axes", "stroke": "black", "fill": "none"})
    ET.SubElement(axes, "rect", x=str(left), y=str(top), width=str(pw), height=str(ph))
    labels = ET.SubElement(svg, "g", {"id": "ticks", "font-size": "11", "fill": "black"})
    for v in np.linspace(xmin, xmax, 7):
        ET.SubElement(axes, "line", x1=f"{px(v):.2f}", x2=f"{px(v):.2f}", y1=str(top + ph), y2=str(top + ph + 5))
        t = ET.SubElement(labels, "text", x=f"{px(v):.2f}", y=str(top + ph + 18), **{"text-anchor": "middle"})
        t.text = f"{v:.2f}"
    for v in np.linspace(ymin, ymax, 6):
        ET.SubElement(axes, "line", x1=str(left - 5), x2=str(left), y1=f"{py(v):.2f}", y2=f"{py(v):.2f}")
        t = ET.SubElement(labels, "text", x=str(left - 8), y=f"{py(v) + 4:.2f}", **{"text-anchor": "end"})
        t.text = f"{v:.3f}"
    t = ET.SubElement(labels, "text", x=str(left + pw / 2), y=str(height - 12), **{"text-anchor": "middle"})
    t.text = "x (mm)"
    t = ET.SubElement(labels, "text", x="16", y=str(top + ph / 2),
                      **{"text-anchor": "middle", "transform": f"rotate(-90 16 {top + ph / 2})"})
    t.text = ylabel

    for i, s in enumerate(series):
        xmm = np.asarray(s.x) * 1e3
        if s.kind == "line":
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xmm, s.y))
            ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=s.color,
                          **{"stroke-width": "1.5", "class": "curve", "data-label": s.label})
        else:
            group = ET.SubElement(svg, "g", {"class": "markers", "data-label": s.label, "stroke": s.color,
                                             "fill": s.color})
            for j, (a, b) in enumerate(zip(xmm, s.y)):
                if s.err is not None:
                    e = s.err[j]
                    ET.SubElement(group, "line", x1=f"{px(a):.2f}", x2=f"{px(a):.2f}",
                                  y1=f"{py(b - e):.2f}", y2=f"{py(b + e):.2f}")
                ET.SubElement(group, "circle", cx=f"{px(a):.2f}", cy=f"{py(b):.2f}", r="2.5")
        if s.peaks:
            marks = ET.SubElement(svg, "g", {"class": "peaks", "font-size": "10", "fill": s.color})
            for p in s.peaks:
                yv = float(np.interp(p, s.x, s.y))
                ET.SubElement(marks, "path", d=f"M {px(p * 1e3):.2f} {py(yv) - 4:.2f} l -4 -7 l 8 0 z")
                t = ET.SubElement(marks, "text", x=f"{px(p * 1e3):.2f}", y=f"{py(yv) - 13:.2f}",
                                  **{"text-anchor": "middle"})
                t.text = f"{p * 1e3:.2f}"
        ly = top + 14 + 14 * i
        t = ET.SubElement(svg, "text", x=str(left + pw - 8), y=str(ly),
                          **{"text-anchor": "end", "font-size": "11", "fill": s.color})
        t.text = s.label

    path = Path(path)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    return path


def write_manifest(path, *, config_echo, command, artifact_paths, wall_time, tool_version, master_seed) -> Path:
    """Written last; refuses to list outputs that do not exist."""
    missing = [str(p) for p in artifact_paths if not Path(p).exists()]
    if missing:
        raise FileNotFoundError(f"manifest lists missing outputs: {missing}")
    body = {
        "command": command,
        "tool_version": tool_version,
        "master_seed": int(master_seed),
        "wall_time": float(wall_time),
        "artifact_paths": [str(p) for p in artifact_paths],
        "config_echo": config_echo,
    }
    path = Path(path)
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    return path
