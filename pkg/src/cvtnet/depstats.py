"""Per-node marginal CDFs and rank dependence between adjacent layers.

Activations are mapped through their empirical marginal CDFs (copula scale)
and a dependence coefficient is measured for every node pair of each pair of
adjacent layers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from cvtnet import _kernels
from cvtnet.neuralnet import ActivationTrace

CDF_MODES = ("histogram", "exact_ecdf")
CORRELATION_KINDS = ("kendall_tau_b", "spearman", "pearson")


class DependenceError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalCdf:
    """Step CDF of one node's activations.

    In histogram mode ``edges`` are uniform bin edges over the observed range
    and ``mass`` the cumulative bin mass; a value maps to the cumulative mass
    of the bin containing it. In exact mode ``support`` is the sorted sample.
    """

    mode: str
    edges: np.ndarray | None = None
    mass: np.ndarray | None = None
    support: np.ndarray | None = None
    degenerate: bool = False

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.mode == "exact_ecdf":
            n = self.support.shape[0]
            return np.searchsorted(self.support, t, side="right") / n
        lo, hi = self.edges[0], self.edges[-1]
        n_bins = self.mass.shape[0]
        # same bin assignment as np.histogram: half-open bins, last bin closed
        idx = np.searchsorted(self.edges, t, side="right") - 1
        idx = np.clip(idx, 0, n_bins - 1)
        out = self.mass[idx]
        out = np.where(t < lo, 0.0, out)
        return np.where(t >= hi, 1.0, out)


def fit_cdf(values, mode: str = "histogram", bins: int = 20) -> EmpiricalCdf:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 2:
        raise DependenceError("need a 1-D sample of at least 2 values")
    if not np.all(np.isfinite(values)):
        raise DependenceError("sample contains non-finite values")
    if mode == "exact_ecdf":
        return EmpiricalCdf(mode, support=np.sort(values),
                            degenerate=bool(values.min() == values.max()))
    if mode != "histogram":
        raise DependenceError(f"unknown CDF mode {mode!r}; expected one of {CDF_MODES}")
    if bins < 1:
        raise DependenceError("bins must be a positive integer")
    lo, hi = values.min(), values.max()
    if lo == hi:
        return EmpiricalCdf(mode, edges=np.array([lo, hi]), mass=np.array([1.0]),
                            degenerate=True)
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    mass = np.cumsum(counts) / values.shape[0]
    mass[-1] = 1.0
    return EmpiricalCdf(mode, edges=edges, mass=mass)


def fit_cdfs(trace: ActivationTrace, mode: str = "histogram", bins: int = 20) -> list[EmpiricalCdf]:
    return [fit_cdf(trace.values[:, k], mode, bins) for k in range(trace.values.shape[1])]


def pseudo_observations(trace: ActivationTrace, cdfs) -> np.ndarray:
    """``u[s, k] = F_k(value[s, k])`` for every sample and node."""
    if len(cdfs) != trace.values.shape[1]:
        raise DependenceError(f"{len(cdfs)} CDFs for {trace.values.shape[1]} nodes")
    return np.column_stack([cdf(trace.values[:, k]) for k, cdf in enumerate(cdfs)])


def _check_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise DependenceError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise DependenceError("need at least 2 observations")
    return np.ascontiguousarray(x), np.ascontiguousarray(y)


def tau_b_from_counts(n_pairs: int, s: int, tied_x: int, tied_y: int) -> float:
    denom = (n_pairs - tied_x) * (n_pairs - tied_y)
    if denom == 0:
        return math.nan
    return s / math.sqrt(denom)


def kendall_tau(x, y) -> float:
    """Tie-corrected Kendall tau-b; NaN when either margin is constant."""
    x, y = _check_pair(x, y)
    return tau_b_from_counts(*_kernels.kendall_counts(x, y))


def pearson(x, y) -> float:
    x, y = _check_pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        return math.nan
    return float(np.clip(np.dot(dx, dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def spearman(x, y) -> float:
    x, y = _check_pair(x, y)
    return pearson(rankdata(x), rankdata(y))


_ESTIMATORS = {"kendall_tau_b": kendall_tau, "spearman": spearman, "pearson": pearson}


def coefficient(x, y, kind: str = "kendall_tau_b") -> float:
    try:
        return _ESTIMATORS[kind](x, y)
    except KeyError:
        raise DependenceError(f"unknown correlation kind {kind!r}") from None


@dataclass(frozen=True)
class LayerCorrelation:
    """Coefficients between all (source node, target node) pairs.

    Undefined entries are NaN and listed in ``undefined`` with a reason.
    """

    source_layer: int
    target_layer: int
    values: np.ndarray
    kind: str
    undefined: dict = field(default_factory=dict)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_csv(self, path, preamble: str = "") -> None:
        lines = [preamble] if preamble else []
        lines.append("source_layer,source_node,target_layer,target_node,kind,value,defined")
        for i in range(self.values.shape[0]):
            for j in range(self.values.shape[1]):
                v = self.values[i, j]
                ok = not math.isnan(v)
                lines.append(f"{self.source_layer},{i},{self.target_layer},{j},{self.kind},"
                             f"{repr(float(v)) if ok else ''},{int(ok)}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> "LayerCorrelation":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#") or line.startswith("source_layer") or not line.strip():
                    continue
                sl, si, tl, tj, kind, value, ok = line.rstrip("\n").split(",")
                entries.append((int(sl), int(si), int(tl), int(tj), kind,
                                float(value) if ok == "1" else math.nan))
        if not entries:
            raise DependenceError(f"{path}: no correlation entries")
        shape = (1 + max(e[1] for e in entries), 1 + max(e[3] for e in entries))
        values = np.full(shape, math.nan)
        undefined = {}
        for _, i, _, j, _, v in entries:
            values[i, j] = v
            if math.isnan(v):
                undefined[(i, j)] = "undefined in source file"
        return cls(entries[0][0], entries[0][2], values, entries[0][4], undefined)


def constant_reason(column: np.ndarray, label: str) -> str | None:
    if column.min() == column.max():
        return f"{label} is constant ({float(column[0])!r})"
    return None


def correlation_matrix(pseudo: np.ndarray, trace: ActivationTrace, source_layer: int,
                       target_layer: int, kind: str = "kendall_tau_b") -> LayerCorrelation:
    """Dependence between every node of ``source_layer`` and ``target_layer``."""
    if target_layer != source_layer + 1 or not 0 <= source_layer < len(trace.layer_widths) - 1:
        raise DependenceError(f"layers {source_layer} and {target_layer} are not adjacent")
    if kind not in _ESTIMATORS:
        raise DependenceError(f"unknown correlation kind {kind!r}")
    src = pseudo[:, trace.layer_slice(source_layer)]
    tgt = pseudo[:, trace.layer_slice(target_layer)]
    values = np.empty((src.shape[1], tgt.shape[1]))
    undefined = {}
    for i in range(src.shape[1]):
        src_reason = constant_reason(src[:, i], f"node ({source_layer},{i})")
        for j in range(tgt.shape[1]):
            reason = src_reason or constant_reason(tgt[:, j], f"node ({target_layer},{j})")
            if reason:
                values[i, j] = math.nan
                undefined[(i, j)] = reason
            else:
                values[i, j] = coefficient(src[:, i], tgt[:, j], kind)
    return LayerCorrelation(source_layer, target_layer, values, kind, undefined)


def layer_correlations(trace: ActivationTrace, mode: str = "histogram", bins: int = 20,
                       kind: str = "kendall_tau_b") -> list[LayerCorrelation]:
    """CDFs, pseudo-observations and every adjacent-layer matrix in one call."""
    pseudo = pseudo_observations(trace, fit_cdfs(trace, mode, bins))
    return [correlation_matrix(pseudo, trace, l, l + 1, kind)
            for l in range(len(trace.layer_widths) - 1)]


def cdfs_to_csv(cdfs, trace: ActivationTrace, path, preamble: str = "") -> None:
    """One row per step: ``layer,node,mode,lower,upper,cumulative``."""
    lines = [preamble] if preamble else []
    lines.append("layer,node,mode,lower,upper,cumulative")
    for (l, i), cdf in zip(trace.node_ids, cdfs):
        if cdf.mode == "histogram":
            edges, mass = cdf.edges.tolist(), cdf.mass.tolist()
            for b in range(len(mass)):
                lines.append(f"{l},{i},histogram,{edges[b]!r},{edges[b + 1]!r},{mass[b]!r}")
        else:
            xs, first = np.unique(cdf.support, return_index=True)
            n = cdf.support.shape[0]
            counts = np.append(first[1:], n)
            for x, c in zip(xs.tolist(), counts.tolist()):
                lines.append(f"{l},{i},exact_ecdf,{x!r},{x!r},{c / n!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
