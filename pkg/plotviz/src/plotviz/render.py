"""Render coopstc CSV result tables as publication-style figures.

Pure view layer: no statistics are recomputed. FER and outage figures are
log-linear in SNR with Wilson-interval error bars; the DMT figure reduces
the sampled tradeoff curve to its piecewise-linear vertices and draws the
polyline. Output is deterministic for a given spec and inputs (fixed style,
fixed SVG hash salt, no embedded timestamps).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["PlotSpec", "SchemaError", "read_table", "breakpoints", "render"]

SCHEMAS = {
    "fer": ["snr_db", "protocol", "decoder", "frames", "errors", "fer", "ci_lo", "ci_hi"],
    "outage": ["snr_db", "R", "trials", "outage", "ci_lo", "ci_hi"],
    "dmt": ["r", "d"],
}

_STYLE = {
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.linestyle": ":",
    "svg.hashsalt": "plotviz",
    "font.family": "DejaVu Sans",
}

_MARKERS = ["o", "s", "^", "v", "D", "x", "+", "*"]


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    """One figure: input tables of a single kind, labels, output path."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    labels: tuple[str, ...] = ()
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValueError(f"unknown figure kind: {self.kind!r}")
        if not self.inputs:
            raise ValueError("no input CSVs")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("labels must match inputs one to one")

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else Path(self.inputs[i]).stem


def read_table(path: str, kind: str) -> list[dict]:
    """Parse one CSV against the declared kind's schema."""
    expected = SCHEMAS[kind]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        for want, got in zip(expected, header + [""] * len(expected)):
            if want != got:
                raise SchemaError(
                    f"{path}: schema mismatch for kind {kind!r}: expected "
                    f"column {want!r}, found {got!r}"
                )
        if len(header) != len(expected):
            raise SchemaError(
                f"{path}: schema mismatch for kind {kind!r}: unexpected "
                f"column {header[len(expected)]!r}"
            )
        rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: empty CSV")
    return rows


def breakpoints(xs, ys, tol: float = 1e-9) -> list[tuple[float, float]]:
    """Vertices of the piecewise-linear curve through (xs, ys): endpoints
    plus every point where the slope changes."""
    pts = sorted(zip(map(float, xs), map(float, ys)))
    if len(pts) <= 2:
        return pts
    out = [pts[0]]
    for prev, cur, nxt in zip(pts, pts[1:], pts[2:]):
        cross = (cur[0] - prev[0]) * (nxt[1] - prev[1]) - (
            cur[1] - prev[1]
        ) * (nxt[0] - prev[0])
        if abs(cross) > tol:
            out.append(cur)
    out.append(pts[-1])
    return out


def _plot_rate_curves(ax, spec: PlotSpec, ycol: str):
    for i, path in enumerate(spec.inputs):
        rows = read_table(path, spec.kind)
        x = [float(r["snr_db"]) for r in rows]
        y = [float(r[ycol]) for r in rows]
        lo = [float(r["ci_lo"]) for r in rows]
        hi = [float(r["ci_hi"]) for r in rows]
        err = [
            [max(yv - l, 0.0) for yv, l in zip(y, lo)],
            [max(h - yv, 0.0) for yv, h in zip(y, hi)],
        ]
        ax.errorbar(
            x, y, yerr=err, marker=_MARKERS[i % len(_MARKERS)],
            capsize=3, label=spec.label(i),
        )
    ax.set_yscale("log")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("frame error rate" if spec.kind == "fer" else "outage probability")


def _plot_dmt(ax, spec: PlotSpec):
    for i, path in enumerate(spec.inputs):
        rows = read_table(path, spec.kind)
        verts = breakpoints([r["r"] for r in rows], [r["d"] for r in rows])
        ax.plot(
            [v[0] for v in verts], [v[1] for v in verts],
            marker=_MARKERS[i % len(_MARKERS)], label=spec.label(i),
        )
    ax.set_xlabel("multiplexing gain r")
    ax.set_ylabel("diversity gain d(r)")


def build_figure(spec: PlotSpec):
    """Construct the figure; exposed so callers can inspect line data."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if spec.kind == "dmt":
            _plot_dmt(ax, spec)
        else:
            _plot_rate_curves(ax, spec, "fer" if spec.kind == "fer" else "outage")
        if spec.xlim:
            ax.set_xlim(*spec.xlim)
        if spec.ylim:
            ax.set_ylim(*spec.ylim)
        ax.legend()
        fig.tight_layout()
    return fig, ax


def render(spec: PlotSpec) -> str:
    """Write the figure to spec.output (format from the extension)."""
    with plt.rc_context(_STYLE):     # hash salt must be active while saving
        fig, _ = build_figure(spec)
        try:
            fig.savefig(spec.output, metadata=_no_date_metadata(spec.output))
        finally:
            plt.close(fig)
    return spec.output


def _no_date_metadata(path: str):
    suffix = Path(path).suffix.lower()
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".png":
        return {"Software": "plotviz"}
    if suffix == ".pdf":
        return {"CreationDate": None}
    return None
