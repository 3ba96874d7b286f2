"""Best-so-far curves, best-solution phase histograms and a plain SVG plot."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

N_PHASES = 10


def _records(run):
    return run.records if hasattr(run, "records") else run


def _trace(run):
    """(episodes, running max of per-generation performance) for one run."""
    recs = _records(run)
    if not recs:
        raise ValueError("run has no generation records")
    episodes = np.array([r.episodes_used for r in recs], dtype=float)
    perf = np.maximum.accumulate(np.array([r.best_performance for r in recs], dtype=float))
    return episodes, perf


def best_so_far_curve(runs):
    """Mean best-so-far performance on a common episode grid.

    Each run is a step function of the episode ledger; the grid is the union
    of all runs' ledger points inside the span every run covers.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run")
    traces = [_trace(r) for r in runs]
    lo = max(e[0] for e, _ in traces)
    hi = min(e[-1] for e, _ in traces)
    grid = np.unique(np.concatenate([e for e, _ in traces]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    values = np.empty((len(traces), len(grid)))
    for k, (e, p) in enumerate(traces):
        values[k] = p[np.searchsorted(e, grid, side="right") - 1]
    return grid, values.mean(axis=0)


def phase_of(evaluation_at_best, total_budget) -> int:
    return min(N_PHASES - 1, int(math.floor(N_PHASES * evaluation_at_best / total_budget)))


def phase_histogram(runs):
    """Fraction of runs whose best solution appeared in each tenth of the budget."""
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run")
    counts = np.zeros(N_PHASES)
    for r in runs:
        counts[phase_of(r.evaluation_at_best, r.total_budget)] += 1
    return counts / len(runs)


def describe(values) -> dict:
    """Mean, median and quartiles of a sample."""
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"n": int(v.size), "mean": float(v.mean()), "median": float(med),
            "q1": float(q1), "q3": float(q3)}


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def curves_svg(series, title="best-so-far performance", xlabel="episodes",
               ylabel="performance", width=640, height=400) -> str:
    """Render ``{label: (x, y)}`` line series as a standalone SVG document."""
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="13">'
           f'{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        yv = y0 + (y1 - y0) * i / 5
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 15}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
        out.append(f'<line x1="{left}" x2="{left + pw}" y1="{py(yv):.1f}" y2="{py(yv):.1f}" '
                   f'stroke="#ddd"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" x2="{left + pw + 30}" y1="{ly - 4}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
