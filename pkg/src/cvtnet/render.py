"""Layered network drawings (DOT and SVG) shaded by edge importance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cvtnet.pathrank import node_name


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderSpec:
    threshold: float = 0.5
    color_low: str = "#1f4e9c"
    color_high: str = "#c0182a"
    min_penwidth: float = 0.5
    max_penwidth: float = 6.0
    transparent_alpha: int = 0x10
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise RenderError(f"threshold quantile must lie in [0, 1], got {self.threshold}")
        for c in (self.color_low, self.color_high):
            if len(c) != 7 or not c.startswith("#"):
                raise RenderError(f"colors must be #rrggbb, got {c!r}")


@dataclass(frozen=True)
class EdgeStyle:
    penwidth: float
    color: str  # #rrggbbaa


def _rgb(hex_color: str) -> np.ndarray:
    return np.array([int(hex_color[k:k + 2], 16) for k in (1, 3, 5)], dtype=np.float64)


def all_edges(layer_widths) -> list:
    w = tuple(layer_widths)
    return [((l, i), (l + 1, j))
            for l in range(len(w) - 1) for i in range(w[l]) for j in range(w[l + 1])]


def edge_styles(layer_widths, importances: dict, spec: RenderSpec = RenderSpec()) -> dict:
    """Map every edge to a pen width and RGBA color, both monotone in importance."""
    edges = all_edges(layer_widths)
    if set(importances) != set(edges):
        missing = sorted(set(edges) - set(importances))[:3]
        extra = sorted(set(importances) - set(edges))[:3]
        raise RenderError(f"importances do not match network edges "
                          f"(missing {missing}, unexpected {extra})")
    imp = np.array([importances[e] for e in edges], dtype=np.float64)
    if np.any(imp < 0) or not np.all(np.isfinite(imp)):
        raise RenderError("edge importances must be finite and nonnegative")
    top = imp.max()
    scaled = imp / top if top > 0 else np.ones_like(imp)
    cut = np.quantile(imp, spec.threshold)
    lo, hi = _rgb(spec.color_low), _rgb(spec.color_high)
    styles = {}
    for e, s, v in zip(edges, scaled.tolist(), imp.tolist()):
        width = round(spec.min_penwidth + (spec.max_penwidth - spec.min_penwidth) * s, 3)
        rgb = np.rint(lo + (hi - lo) * s).astype(int)
        alpha = spec.transparent_alpha if v < cut else int(round(0x40 + (0xff - 0x40) * s))
        styles[e] = EdgeStyle(width, "#" + "".join(f"{c:02x}" for c in (*rgb, alpha)))
    return styles


def _labels(layer_widths, spec: RenderSpec) -> dict:
    n_layers = len(layer_widths)
    names = [node_name(l, i, n_layers) for l, w in enumerate(layer_widths) for i in range(w)]
    if spec.node_labels is not None:
        if len(spec.node_labels) != len(names):
            raise RenderError(f"{len(spec.node_labels)} node labels for {len(names)} nodes")
        return dict(zip(names, spec.node_labels))
    return {n: n for n in names}


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(layer_widths, importances: dict, spec: RenderSpec = RenderSpec(),
           comment: str = "") -> str:
    """Graphviz DOT text, one rank per layer, deterministic byte for byte."""
    widths = tuple(layer_widths)
    n_layers = len(widths)
    styles = edge_styles(widths, importances, spec)
    labels = _labels(widths, spec)
    out = []
    if comment:
        out.extend(f"// {line}" for line in comment.splitlines())
    out.append("digraph cvt {")
    out.append("  rankdir=LR;")
    out.append("  splines=line;")
    out.append("  node [shape=circle, fontsize=10];")
    for l, w in enumerate(widths):
        out.append(f"  subgraph layer_{l} {{")
        out.append("    rank=same;")
        for i in range(w):
            name = node_name(l, i, n_layers)
            out.append(f"    {name} [label={_quote(labels[name])}];")
        out.append("  }")
    for (a, b), st in styles.items():
        out.append(f"  {node_name(*a, n_layers)} -> {node_name(*b, n_layers)} "
                   f"[penwidth={st.penwidth:.3f}, color=\"{st.color}\"];")
    out.append("}")
    return "\n".join(out) + "\n"


def to_svg(layer_widths, importances: dict, spec: RenderSpec = RenderSpec(),
           comment: str = "") -> str:
    """Fixed-coordinate layered SVG with the same edge styling as :func:`to_dot`."""
    widths = tuple(layer_widths)
    n_layers = len(widths)
    styles = edge_styles(widths, importances, spec)
    labels = _labels(widths, spec)
    dx, dy, r, margin = 160, 60, 16, 40
    height = 2 * margin + dy * (max(widths) - 1)
    width = 2 * margin + dx * (n_layers - 1)

    def pos(l, i):
        offset = (max(widths) - widths[l]) * dy / 2
        return margin + l * dx, margin + offset + i * dy

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if comment:
        out.append(f"<!-- {comment.replace('--', '- -')} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'viewBox="0 0 {width} {height}">')
    for (a, b), st in styles.items():
        (x1, y1), (x2, y2) = pos(*a), pos(*b)
        out.append(f'  <line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                   f'stroke="{st.color[:7]}" stroke-opacity="{int(st.color[7:], 16) / 255:.3f}" '
                   f'stroke-width="{st.penwidth:.3f}"/>')
    for l, w in enumerate(widths):
        for i in range(w):
            x, y = pos(l, i)
            name = node_name(l, i, n_layers)
            out.append(f'  <circle cx="{x:.1f}" cy="{y:.1f}" r="{r}" fill="white" stroke="black"/>')
            out.append(f'  <text x="{x:.1f}" y="{y + 4:.1f}" font-size="9" '
                       f'text-anchor="middle">{labels[name]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def importance_bars(feature_names, cvt, rf) -> list[tuple[str, float, float]]:
    """Per-feature ``(name, cvt, rf)`` rows, each column renormalized to sum 1."""
    cvt = np.asarray(cvt, dtype=np.float64)
    rf = np.asarray(rf, dtype=np.float64)
    if not (len(feature_names) == cvt.shape[0] == rf.shape[0]):
        raise RenderError(f"feature mismatch: {len(feature_names)} names, "
                          f"{cvt.shape[0]} CVT values, {rf.shape[0]} RF values")
    for col, label in ((cvt, "cvt"), (rf, "rf")):
        if np.any(col < 0) or not np.all(np.isfinite(col)) or col.sum() <= 0:
            raise RenderError(f"{label} importances must be finite, nonnegative, not all zero")
    cvt, rf = cvt / cvt.sum(), rf / rf.sum()
    return [(str(n), float(a), float(b)) for n, a, b in zip(feature_names, cvt, rf)]


def bars_to_csv(rows, path, preamble: str = "") -> None:
    lines = [preamble] if preamble else []
    lines.append("feature,cvt_importance,rf_importance")
    lines.extend(f"{n},{a!r},{b!r}" for n, a, b in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
