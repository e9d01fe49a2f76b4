"""Tiny deterministic SVG line plots.

No plotting dependency: output files are part of reproducibility
checks, so rendering must be byte-stable across runs and machines.
Everything is emitted with %.6g coordinates and a fixed palette.
"""

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 34, 44


def _nice_ticks(lo, hi, target=6):
    if not (hi > lo):
        hi = lo + 1.0
    raw = (hi - lo) / max(target, 2)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _log_ticks(lo, hi):
    ticks = []
    for k in range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1):
        v = 10.0 ** k
        if lo / 1.0001 <= v <= hi * 1.0001:
            ticks.append(v)
    return ticks or [lo, hi]


def _fmt(v):
    return "%.6g" % v


def line_plot(path, series, title="", xlabel="", ylabel="",
              logy=False, width=720, height=480):
    """Write a line plot to `path`.

    series: iterable of (label, xs, ys).  With logy=True, points with
    y <= 0 are dropped from the drawn polyline (they have no image on
    a log axis); a series with no positive values is skipped.
    """
    data = []
    for label, xs, ys in series:
        pts = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if math.isfinite(float(x)) and math.isfinite(float(y))
            and (not logy or float(y) > 0.0)
        ]
        if pts:
            data.append((str(label), pts))
    if not data:
        raise ValueError("nothing to plot")

    xlo = min(p[0] for _, pts in data for p in pts)
    xhi = max(p[0] for _, pts in data for p in pts)
    ylo = min(p[1] for _, pts in data for p in pts)
    yhi = max(p[1] for _, pts in data for p in pts)
    if xhi <= xlo:
        xhi = xlo + 1.0
    if logy:
        yticks = _log_ticks(ylo, yhi)
        ylo_t, yhi_t = math.log10(ylo), math.log10(yhi)
        if yhi_t <= ylo_t:
            yhi_t = ylo_t + 1.0
        ymap = lambda y: math.log10(y)
    else:
        if yhi <= ylo:
            yhi = ylo + 1.0
        yticks = _nice_ticks(ylo, yhi)
        ylo_t, yhi_t = ylo, yhi
        ymap = lambda y: y
    xticks = _nice_ticks(xlo, xhi)

    iw = width - MARGIN_L - MARGIN_R
    ih = height - MARGIN_T - MARGIN_B

    def X(x):
        return MARGIN_L + iw * (x - xlo) / (xhi - xlo)

    def Y(y):
        return MARGIN_T + ih * (1.0 - (ymap(y) - ylo_t) / (yhi_t - ylo_t))

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{width / 2:g}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_esc(title)}</text>'
        )
    for tv in xticks:
        x = X(tv)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{MARGIN_T}" x2="{_fmt(x)}" '
            f'y2="{MARGIN_T + ih}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{MARGIN_T + ih + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tv)}</text>'
        )
    for tv in yticks:
        y = Y(tv)
        out.append(
            f'<line x1="{MARGIN_L}" y1="{_fmt(y)}" x2="{MARGIN_L + iw}" '
            f'y2="{_fmt(y)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{MARGIN_L - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(tv)}</text>'
        )
    out.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{iw}" height="{ih}" '
        f'fill="none" stroke="#444444" stroke-width="1"/>'
    )
    if xlabel:
        out.append(
            f'<text x="{MARGIN_L + iw / 2:g}" y="{height - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{_esc(xlabel)}</text>"
        )
    if ylabel:
        yc = MARGIN_T + ih / 2
        out.append(
            f'<text x="14" y="{yc:g}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {yc:g})">{_esc(ylabel)}</text>'
        )
    for k, (label, pts) in enumerate(data):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{_fmt(X(x))},{_fmt(Y(y))}" for x, y in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{MARGIN_L + iw - 8}" y="{MARGIN_T + 16 + 15 * k}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="{color}">{_esc(label)}</text>'
        )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _esc(s):
    return (
        str(s)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
    )
