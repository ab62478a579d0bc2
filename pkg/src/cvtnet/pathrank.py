"""Path scoring: product of edge coefficients per output, variance across outputs.

A base path picks one node in every non-output layer. Extending it with each
output node gives one composed coefficient per class; the spread (sample
variance) of those values scores how strongly the path discriminates between
classes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cvtnet.depstats import LayerCorrelation


class PathError(ValueError):
    pass


class UndefinedImportance(PathError):
    """No path carries a usable variance."""


BasePath = tuple  # one node index per non-output layer


def layer_prefix(layer: int, n_layers: int) -> str:
    if layer == 0:
        return "x"
    if layer == n_layers - 1:
        return "pred"
    return f"h{layer - 1}"


def node_name(layer: int, node: int, n_layers: int) -> str:
    return f"{layer_prefix(layer, n_layers)}_{node}"


def path_name(path: BasePath, n_layers: int) -> str:
    """``x_2>h0_5>h1_1`` style label."""
    return ">".join(node_name(l, i, n_layers) for l, i in enumerate(path))


def enumerate_paths(layer_widths) -> list[BasePath]:
    """All base paths in lexicographic order."""
    widths = tuple(layer_widths)
    if len(widths) < 3:
        raise PathError("need an input layer, at least one hidden layer and an output layer")
    return list(itertools.product(*(range(w) for w in widths[:-1])))


def _check_matrices(matrices, n_edges):
    if len(matrices) != n_edges:
        raise PathError(f"expected {n_edges} layer matrices, got {len(matrices)}")
    for l, m in enumerate(matrices):
        if (m.source_layer, m.target_layer) != (l, l + 1):
            raise PathError(f"matrix {l} links layers {m.source_layer}->{m.target_layer}")


def compose(coefficients) -> float:
    """Serial composition of edge coefficients (their product)."""
    return float(math.prod(coefficients))


def ccc(path: BasePath, output: int, matrices) -> float:
    """Composed coefficient of ``path`` extended to ``output``; NaN if any edge is undefined."""
    _check_matrices(matrices, len(path))
    nodes = tuple(path) + (output,)
    try:
        edges = [matrices[l].values[nodes[l], nodes[l + 1]] for l in range(len(path))]
    except IndexError:
        raise PathError(f"no matrix entry for path {nodes}") from None
    return compose(edges)


def var_ccc(values) -> float:
    """Unbiased sample variance (divisor n - 1); NaN if any value is NaN."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        raise PathError("variance needs at least two outputs")
    if np.any(np.isnan(values)):
        return math.nan
    return float(np.var(values, ddof=1))


@dataclass(frozen=True)
class PathRecord:
    base_path: BasePath
    ccc_per_output: tuple[float, ...]
    var_ccc: float
    defined: bool


def score_paths(matrices, layer_widths) -> list[PathRecord]:
    """A :class:`PathRecord` for every base path, in enumeration order."""
    widths = tuple(layer_widths)
    _check_matrices(matrices, len(widths) - 1)
    for l, m in enumerate(matrices):
        if m.values.shape != (widths[l], widths[l + 1]):
            raise PathError(f"matrix {l} has shape {m.values.shape}, "
                            f"expected {(widths[l], widths[l + 1])}")
    records = []
    for path in enumerate_paths(widths):
        cccs = tuple(ccc(path, k, matrices) for k in range(widths[-1]))
        v = var_ccc(cccs)
        records.append(PathRecord(path, cccs, v, not math.isnan(v)))
    return records


def rank_paths(records) -> list[PathRecord]:
    """Descending variance, ties by path, undefined records last."""
    return sorted(records, key=lambda r: (not r.defined, -r.var_ccc if r.defined else 0.0,
                                          r.base_path))


def edge_importance(records, layer_widths) -> dict:
    """Sum of path variances over every edge ``((l, i), (l + 1, j))``.

    Each base path reaches all output edges from its last hidden node, so
    those edges accumulate the same variance.
    """
    widths = tuple(layer_widths)
    n_outputs = widths[-1]
    imp = {((l, i), (l + 1, j)): 0.0
           for l in range(len(widths) - 1) for i in range(widths[l]) for j in range(widths[l + 1])}
    for r in records:
        if not r.defined:
            continue
        p = r.base_path
        for l in range(len(p) - 1):
            imp[(l, p[l]), (l + 1, p[l + 1])] += r.var_ccc
        last = len(p) - 1
        for k in range(n_outputs):
            imp[(last, p[last]), (last + 1, k)] += r.var_ccc
    return imp


@dataclass(frozen=True)
class FeatureImportance:
    values: np.ndarray
    excluded: int
    per_feature_excluded: tuple[int, ...]


def feature_importance(records, n_features: int) -> FeatureImportance:
    """Mean path variance per starting input feature, normalized to sum 1.

    Undefined records are left out of the means and counted.
    """
    sums = np.zeros(n_features)
    counts = np.zeros(n_features, dtype=int)
    excluded = np.zeros(n_features, dtype=int)
    for r in records:
        f = r.base_path[0]
        if r.defined:
            sums[f] += r.var_ccc
            counts[f] += 1
        else:
            excluded[f] += 1
    if np.any(counts + excluded == 0):
        raise PathError("every input feature must start at least one path")
    means = np.divide(sums, counts, out=np.zeros(n_features), where=counts > 0)
    total = means.sum()
    if not total > 0:
        raise UndefinedImportance("all path variances are zero or undefined")
    return FeatureImportance(means / total, int(excluded.sum()), tuple(excluded.tolist()))


@dataclass
class ImportanceReport:
    ranked: list[PathRecord]
    edges: dict
    features: FeatureImportance
    layer_widths: tuple[int, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def n_undefined(self) -> int:
        return sum(not r.defined for r in self.ranked)


def analyze_paths(matrices, layer_widths, metadata=None) -> ImportanceReport:
    widths = tuple(layer_widths)
    ranked = rank_paths(score_paths(matrices, widths))
    return ImportanceReport(ranked, edge_importance(ranked, widths),
                            feature_importance(ranked, widths[0]), widths,
                            dict(metadata or {}))


def ranking_to_csv(report: ImportanceReport, class_names, path, preamble: str = "") -> None:
    n_layers = len(report.layer_widths)
    lines = [preamble] if preamble else []
    lines.append(",".join(["rank", "path", *(f"ccc_{c}" for c in class_names),
                           "var_ccc", "defined"]))
    for rank, r in enumerate(report.ranked, start=1):
        cells = ["" if math.isnan(c) else repr(c) for c in r.ccc_per_output]
        var = repr(r.var_ccc) if r.defined else ""
        lines.append(",".join([str(rank), path_name(r.base_path, n_layers), *cells, var,
                               str(int(r.defined))]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def edges_to_csv(edges: dict, layer_widths, path, preamble: str = "") -> None:
    n_layers = len(layer_widths)
    lines = [preamble] if preamble else []
    lines.append("source,target,importance")
    for ((l, i), (m, j)), v in sorted(edges.items()):
        lines.append(f"{node_name(l, i, n_layers)},{node_name(m, j, n_layers)},{v!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def edges_from_csv(path, layer_widths) -> dict:
    n_layers = len(layer_widths)
    lookup = {node_name(l, i, n_layers): (l, i)
              for l, w in enumerate(layer_widths) for i in range(w)}
    edges = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("source,") or not line.strip():
                continue
            src, dst, value = line.rstrip("\n").split(",")
            try:
                edges[lookup[src], lookup[dst]] = float(value)
            except KeyError as exc:
                raise PathError(f"{path}: unknown node {exc.args[0]!r}") from None
    return edges
