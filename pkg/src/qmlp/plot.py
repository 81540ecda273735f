"""Dependency-free SVG line charts for history and noise-sweep CSVs."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
PANEL_W, PANEL_H, PAD = 420, 260, 48


class PlotError(ValueError):
    pass


def read_series(path: str | Path) -> tuple[str, dict[str, dict[str, list[tuple[float, float]]]]]:
    """Return (x-axis name, {metric: {series label: [(x, y), ...]}}) for one CSV."""
    path = Path(path)
    if not path.is_file():
        raise PlotError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotError(f"{path}: no data rows")
    cols = set(rows[0])
    try:
        if {"epoch", "loss", "accuracy"} <= cols:
            pts = [(float(r["epoch"]), float(r["loss"]), float(r["accuracy"])) for r in rows]
            label = path.stem
            return "epoch", {
                "loss": {label: [(x, l) for x, l, _ in pts]},
                "accuracy": {label: [(x, a) for x, _, a in pts]},
            }
        if {"model_id", "scale", "loss", "accuracy"} <= cols:
            # one series per architecture: mean over the models at each scale
            acc = defaultdict(lambda: defaultdict(list))
            for r in rows:
                arch = r["model_id"].split("_", 1)[0]
                s = float(r["scale"])
                acc[arch][s].append((float(r["loss"]), float(r["accuracy"])))
            out: dict = {"loss": {}, "accuracy": {}}
            for arch in sorted(acc):
                scales = sorted(acc[arch])
                means = [[sum(v) / len(v) for v in zip(*acc[arch][s])] for s in scales]
                out["loss"][arch] = [(s, m[0]) for s, m in zip(scales, means)]
                out["accuracy"][arch] = [(s, m[1]) for s, m in zip(scales, means)]
            return "scale", out
    except (KeyError, TypeError, ValueError) as exc:
        raise PlotError(f"{path}: malformed row ({exc})") from None
    raise PlotError(f"{path}: expected epoch,loss,accuracy or model_id,scale,loss,accuracy columns")


def _panel(x0: float, title: str, xname: str, series: dict[str, list[tuple[float, float]]]) -> list[str]:
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymax = ymin + 1.0
    w, h = PANEL_W - 2 * PAD, PANEL_H - 2 * PAD

    def sx(x):
        return x0 + PAD + (x - xmin) / (xmax - xmin) * w

    def sy(y):
        return PAD + (1 - (y - ymin) / (ymax - ymin)) * h

    out = [
        f'<rect x="{x0 + PAD}" y="{PAD}" width="{w}" height="{h}" fill="none" stroke="#444"/>',
        f'<text x="{x0 + PANEL_W / 2}" y="{PAD - 14}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{x0 + PANEL_W / 2}" y="{PANEL_H - 10}" text-anchor="middle" font-size="12">{escape(xname)}</text>',
        f'<text x="{x0 + PAD - 4}" y="{PAD + 4}" text-anchor="end" font-size="10">{ymax:.3g}</text>',
        f'<text x="{x0 + PAD - 4}" y="{PAD + h}" text-anchor="end" font-size="10">{ymin:.3g}</text>',
        f'<text x="{x0 + PAD}" y="{PAD + h + 14}" text-anchor="middle" font-size="10">{xmin:.3g}</text>',
        f'<text x="{x0 + PAD + w}" y="{PAD + h + 14}" text-anchor="middle" font-size="10">{xmax:.3g}</text>',
    ]
    for i, (label, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline data-series="{escape(label)}" fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'
        )
        out.append(
            f'<text x="{x0 + PAD + w - 4}" y="{PAD + 14 + 13 * i}" text-anchor="end" font-size="11" fill="{color}">{escape(label)}</text>'
        )
    return out


def render_svg(paths: list[str | Path], out: str | Path) -> None:
    if not paths:
        raise PlotError("nothing to plot")
    xname = None
    merged: dict[str, dict[str, list]] = {"loss": {}, "accuracy": {}}
    for p in paths:
        name, series = read_series(p)
        if xname is not None and name != xname:
            raise PlotError("cannot mix history and sweep CSVs in one plot")
        xname = name
        for metric in merged:
            for label, pts in series[metric].items():
                key = label if label not in merged[metric] else f"{label} ({Path(p).stem})"
                merged[metric][key] = pts
    body = _panel(0, "loss", xname, merged["loss"]) + _panel(PANEL_W, "accuracy", xname, merged["accuracy"])
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * PANEL_W}" height="{PANEL_H}" '
        f'viewBox="0 0 {2 * PANEL_W} {PANEL_H}" font-family="sans-serif">\n'
        '<rect width="100%" height="100%" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n"
    )
    Path(out).write_text(svg)
