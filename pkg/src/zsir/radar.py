"""Radar charts as standalone SVG.

Axis i sits at angle 90 - 20*i degrees (first axis at the top, clockwise).
The baseline model is drawn at half radius on every axis; other models are
placed by their per-axis ratio to the baseline (``mode="ratio"``) or by
absolute score difference (``mode="additive"``), clamped to [0, R].
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence
from xml.sax.saxutils import escape

from zsir.errors import DataError
from zsir.registry import lookup, registry

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
BASELINE_COLOR = "#000000"
BASELINE_DASH = "2,3"

Mode = Literal["ratio", "additive"]


def _unclamped(score: float, baseline_score: float, R: float, mode: Mode, gain: float | None) -> float:
    if R <= 0:
        raise ValueError("R must be positive")
    if score < 0:
        raise ValueError(f"negative score {score}")
    if baseline_score < 0:
        raise ValueError(f"negative baseline score {baseline_score}")
    if mode == "ratio":
        if baseline_score == 0:
            return R / 2 if score == 0 else R
        return (R / 2) * (score / baseline_score)
    if mode == "additive":
        return R / 2 + (R if gain is None else gain) * (score - baseline_score)
    raise ValueError(f"unknown radar mode {mode!r}")


def radar_radius(score: float, baseline_score: float, R: float, mode: Mode = "ratio",
                 gain: float | None = None) -> float:
    """Radial distance of ``score`` on an axis whose baseline sits at R/2.

    ratio: (R/2) * score / baseline. additive: R/2 + gain * (score - baseline)
    with ``gain`` defaulting to R (a difference of 0.5 reaches the rim).
    """
    return min(max(_unclamped(score, baseline_score, R, mode, gain), 0.0), R)


def axis_angle(i: int, n: int = 18) -> float:
    """Angle in radians, counter-clockwise from the positive x axis."""
    return math.radians(90 - i * 360 / n)


@dataclass
class ModelSeries:
    name: str
    scores: Mapping[str, float]
    color: str | None = None
    dash: str | None = None


@dataclass
class RadarSpec:
    baseline: ModelSeries
    models: list[ModelSeries]
    axes: list[str] = field(default_factory=lambda: [d.name for d in registry()])
    radius: float = 200.0
    size: tuple[int, int] = (640, 640)
    title: str = ""
    mode: Mode = "ratio"

    def validate(self) -> None:
        for m in [self.baseline, *self.models]:
            missing = [a for a in self.axes if a not in m.scores]
            if missing:
                raise DataError(f"model {m.name!r} lacks scores for: {', '.join(missing)}")
            neg = [a for a in self.axes if m.scores[a] < 0]
            if neg:
                raise DataError(f"model {m.name!r} has negative scores for: {', '.join(neg)}")


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def vertices(spec: RadarSpec, model: ModelSeries) -> list[tuple[float, float, bool]]:
    """(x, y, clamped) per axis in SVG coordinates (y grows downward)."""
    cx, cy = spec.size[0] / 2, spec.size[1] / 2
    n = len(spec.axes)
    out = []
    for i, axis in enumerate(spec.axes):
        s, b = model.scores[axis], spec.baseline.scores[axis]
        raw = _unclamped(s, b, spec.radius, spec.mode, None)
        r = min(max(raw, 0.0), spec.radius)
        t = axis_angle(i, n)
        out.append((cx + r * math.cos(t), cy - r * math.sin(t), raw > spec.radius))
    return out


def render_radar(spec: RadarSpec) -> str:
    spec.validate()
    w, h = spec.size
    cx, cy, R = w / 2, h / 2, spec.radius
    n = len(spec.axes)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
    ]
    if spec.title:
        out.append(f'<text x="{_fmt(cx)}" y="18" text-anchor="middle" font-size="14">{escape(spec.title)}</text>')
    out.append('<g class="grid" stroke="#cccccc" fill="none">')
    for frac in (0.25, 0.5, 0.75, 1.0):
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(R * frac)}"/>')
    for i in range(n):
        t = axis_angle(i, n)
        out.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(cx + R * math.cos(t))}" '
                   f'y2="{_fmt(cy - R * math.sin(t))}"/>')
    out.append("</g>")
    out.append('<g class="labels" fill="#333333">')
    for i, axis in enumerate(spec.axes):
        t = axis_angle(i, n)
        lx, ly = cx + (R + 14) * math.cos(t), cy - (R + 14) * math.sin(t)
        c = math.cos(t)
        anchor = "middle" if abs(c) < 0.2 else ("start" if c > 0 else "end")
        out.append(f'<text x="{_fmt(lx)}" y="{_fmt(ly + 4)}" text-anchor="{anchor}">{escape(axis)}</text>')
    out.append("</g>")

    series = [(spec.baseline, BASELINE_COLOR, BASELINE_DASH, "baseline")]
    for j, m in enumerate(spec.models):
        series.append((m, m.color or PALETTE[j % len(PALETTE)], m.dash, "model"))
    for m, color, dash, cls in series:
        pts = vertices(spec, m)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        points = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y, _ in pts)
        out.append(f'<polygon class="{cls}" data-name="{escape(m.name, {chr(34): "&quot;"})}" '
                   f'points="{points}" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        for x, y, clamped in pts:
            if clamped:
                out.append(f'<circle class="overflow" cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}"/>')

    out.append('<g class="legend">')
    for j, (m, color, dash, _) in enumerate(series):
        y = h - 16 * (len(series) - j) - 4
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="10" y1="{y}" x2="34" y2="{y}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="40" y="{y + 4}">{escape(m.name)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def load_metrics(path: str | os.PathLike, metric: str | None = None) -> dict[str, dict[str, float]]:
    """Read ``model -> dataset -> score``.

    ``.jsonl``: one ``{"model", "dataset", "score"[, "metric"]}`` object per
    line. Anything else: tab-separated ``model, dataset, score`` or
    ``model, dataset, metric, score`` rows with an optional header line
    starting with ``model``. When rows carry a metric column, ``metric``
    selects which one to keep (required if more than one is present).
    Dataset keys may be slugs or display names; they come back as display
    names.
    """
    rows = []
    with open(path, encoding="utf-8") as f:
        if str(path).endswith(".jsonl"):
            for lineno, line in enumerate(f, 1):
                if line.strip():
                    try:
                        r = json.loads(line)
                        rows.append((lineno, r["model"], r["dataset"], r.get("metric"), r["score"]))
                    except (json.JSONDecodeError, KeyError, TypeError):
                        raise DataError(f"{path}:{lineno}: bad metrics record") from None
        else:
            for lineno, r in enumerate(csv.reader(f, delimiter="\t"), 1):
                if not r or (lineno == 1 and r[0].lower() == "model"):
                    continue
                if len(r) == 3:
                    rows.append((lineno, r[0], r[1], None, r[2]))
                elif len(r) == 4:
                    rows.append((lineno, *r))
                else:
                    raise DataError(f"{path}:{lineno}: expected 3 or 4 tab-separated columns")
    present = {m for *_, m, _ in rows if m is not None}
    if metric is None and len(present) > 1:
        raise DataError(f"{path}: several metrics present ({', '.join(sorted(present))}); pick one")
    out: dict[str, dict[str, float]] = {}
    for lineno, model, ds, m, score in rows:
        if metric is not None and m is not None and m != metric:
            continue
        try:
            name = lookup(ds).name
        except KeyError:
            raise DataError(f"{path}:{lineno}: unknown dataset {ds!r}") from None
        try:
            out.setdefault(model, {})[name] = float(score)
        except (TypeError, ValueError):
            raise DataError(f"{path}:{lineno}: bad score {score!r}") from None
    return out


def spec_from_metrics(metrics: Mapping[str, Mapping[str, float]], baseline: str,
                      models: Sequence[str] | None = None, **kw) -> RadarSpec:
    if baseline not in metrics:
        raise DataError(f"baseline model {baseline!r} not in metrics")
    names = list(models) if models else [m for m in metrics if m != baseline]
    for m in names:
        if m not in metrics:
            raise DataError(f"model {m!r} not in metrics")
    return RadarSpec(ModelSeries(baseline, metrics[baseline]),
                     [ModelSeries(m, metrics[m]) for m in names], **kw)
