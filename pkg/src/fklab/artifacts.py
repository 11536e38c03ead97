"""CSV and SVG artifacts for sweep results."""
from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import FKLabError

CSV_HEADER = ("method", "delta", "integrator", "dt", "target", "value", "reference", "error",
              "stderr", "order_fit", "r2")


class ArtifactError(FKLabError, OSError):
    """Writing an output file failed."""


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _rows_for_csv(result):
    for row in result.rows:
        fit = result.fit_for(row)
        slope, r2 = fit if fit is not None else (None, None)
        if row.ok:
            value, ref, err = row.value, row.reference, row.error
        else:
            # keep failed cells visible with a marker instead of dropping them
            value, ref, err = None, None, f"failed: {row.failure}"
        yield (row.method, fmt(float(row.delta)), row.integrator, fmt(float(row.dt)), row.target,
               fmt(value), fmt(ref), fmt(err), fmt(row.stderr), fmt(slope), fmt(r2))


def emit_csv(result, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            if result is not None:
                writer.writerows(_rows_for_csv(result))
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def write_table(path, header, rows) -> Path:
    """Generic CSV writer with the same float formatting as :func:`emit_csv`."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([fmt(v) for v in r] for r in rows)
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=200, top=30, bottom=50)


def _series_name(row) -> str:
    return f"{row.method} d={row.delta:g} {row.target}"


def _series(result):
    groups = {}
    for r in result.rows:
        if r.ok and r.error > 0 and math.isfinite(r.error):
            groups.setdefault(_series_name(r), []).append((r.dt, r.error))
    return {k: sorted(v) for k, v in groups.items()}


def emit_svg_loglog(result, path, title: str = "error vs timestep"):
    """Log-log plot of error against dt, one polyline per series, with dashed
    slope-1 and slope-2 reference lines anchored at the largest dt.

    Returns the path, or ``None`` (with a warning) when nothing is plottable.
    """
    series = _series(result)
    if not series:
        warnings.warn("no positive-error rows to plot; SVG not written", stacklevel=2)
        return None
    pts = [p for s in series.values() for p in s]
    dts = [p[0] for p in pts]
    errs = [p[1] for p in pts]
    x0, x1 = math.log10(min(dts)), math.log10(max(dts))
    dt_max = max(dts)
    anchor = max(e for d, e in pts if d == dt_max)
    # reference lines must fit in the frame too
    ref_lo = [anchor * (min(dts) / dt_max) ** k for k in (1, 2)]
    y0 = math.log10(min(errs + ref_lo))
    y1 = math.log10(max(errs + [anchor]))
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad_x, pad_y = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    x0, x1, y0, y1 = x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def X(dt):
        return MARGIN["left"] + (math.log10(dt) - x0) / (x1 - x0) * pw

    def Y(err):
        return MARGIN["top"] + (y1 - math.log10(err)) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{MARGIN["left"]}" y="18" font-size="13">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for k in range(math.ceil(x0), math.floor(x1) + 1):
        x = X(10.0**k)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"] + ph}" x2="{x:.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">1e{k}</text>')
    for k in range(math.ceil(y0), math.floor(y1) + 1):
        y = Y(10.0**k)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{y:.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" '
                   f'text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 10}" '
               'text-anchor="middle">dt</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">error</text>')

    legend = []
    dt_min = min(dts)
    for order, dash in ((1, "6,4"), (2, "2,3")):
        e_min = anchor * (dt_min / dt_max) ** order
        out.append(f'<line class="reference" data-order="{order}" x1="{X(dt_max):.2f}" '
                   f'y1="{Y(anchor):.2f}" x2="{X(dt_min):.2f}" y2="{Y(e_min):.2f}" '
                   f'stroke="gray" stroke-dasharray="{dash}"/>')
        legend.append((f"order {order}", "gray", dash))

    for i, (name, s) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{X(d):.2f},{Y(e):.2f}" for d, e in s)
        if len(s) > 1:
            out.append(f'<polyline class="series" points="{coords}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        for d, e in s:
            out.append(f'<circle cx="{X(d):.2f}" cy="{Y(e):.2f}" r="3" fill="{color}"/>')
        label = name
        fit = None
        for r in result.rows:
            if _series_name(r) == name:
                fit = result.fit_for(r)
                break
        if fit is not None and len(s) > 1:
            label += f" (slope {fit[0]:.2f})"
        legend.append((label, color, None))

    lx, ly = WIDTH - MARGIN["right"] + 10, MARGIN["top"] + 10
    for j, (label, color, dash) in enumerate(legend):
        y = ly + 16 * j
        style = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" stroke="{color}" '
                   f'stroke-width="1.5"{style}/>')
        out.append(f'<text class="legend" x="{lx + 25}" y="{y + 4}">{escape(label)}</text>')
    out.append("</svg>")

    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path
