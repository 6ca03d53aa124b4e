"""Static SVG plots of sweep tables with byte-stable output."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass

from .experiments import read_csv

__all__ = ["PlotSpec", "emit_plot", "render_svg"]


@dataclass(frozen=True)
class PlotSpec:
    x: str = "k"
    y: str = "rel_err_h1k"
    logx: bool = True
    logy: bool = True
    title: str = ""
    group: str = "rule"


def render_svg(rows: list[dict], spec: PlotSpec) -> bytes:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not rows:
        raise ValueError("CSV has no data rows")
    for col in (spec.x, spec.y):
        if col not in rows[0]:
            raise ValueError(f"CSV has no column {col!r}")
    groups: dict = {}
    for r in rows:
        x, y = r[spec.x], r[spec.y]
        if r.get("status", "ok") != "ok" or not (math.isfinite(x) and math.isfinite(y)):
            continue
        groups.setdefault(str(r.get(spec.group, "")), []).append((x, y))
    if not groups:
        raise ValueError("CSV has no finite successful rows to plot")
    with matplotlib.rc_context({"svg.hashsalt": "hplab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for name, pts in sorted(groups.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name or None)
        if spec.logx:
            ax.set_xscale("log")
        if spec.logy:
            ax.set_yscale("log")
        ax.set_xlabel(spec.x)
        ax.set_ylabel(spec.y)
        if spec.title:
            ax.set_title(spec.title)
        if len(groups) > 1 or next(iter(groups)):
            ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def emit_plot(csv_path, out_path, spec: PlotSpec | None = None) -> str:
    """Render ``csv_path`` to an SVG at ``out_path``; nothing is written on error."""
    spec = PlotSpec() if spec is None else spec
    with open(csv_path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise ValueError(f"{csv_path} is empty")
    svg = render_svg(read_csv(text), spec)
    tmp = f"{out_path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(svg)
    os.replace(tmp, out_path)
    return os.fspath(out_path)
