"""Pipeline stages writing plain CSV/JSON/DOT/SVG artifacts into one directory.

Stages read what earlier stages wrote, so they can be run one at a time:
``train`` -> ``analyze`` -> ``rank`` -> ``compare-rf`` -> ``render``.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from cvtnet import __version__, dataset, depstats, forest, neuralnet, pathrank, render
from cvtnet.config import RunConfig

log = logging.getLogger(__name__)

MODEL = "model.json"
TRAIN_SUMMARY = "train_summary.json"
TRACES = "traces.csv"
CDFS = "cdfs.csv"
ANALYSIS = "analysis_summary.json"
RANKING = "path_ranking.csv"
EDGES = "edge_importance.csv"
REPORT = "importance_report.json"
FEATURES = "feature_importance.csv"
FOREST_SUMMARY = "forest_summary.json"
DOT = "network.dot"
SVG = "network.svg"
BARS = "importance_bars.csv"
CONFIG_ECHO = "config.txt"


class MissingArtifact(FileNotFoundError):
    """A stage needs a file an earlier stage has not produced."""


def corr_name(source_layer: int) -> str:
    return f"correlation_{source_layer}_{source_layer + 1}.csv"


class Artifacts:
    """Output directory that remembers which files this run wrote."""

    def __init__(self, root, cfg: RunConfig):
        self.root = Path(root)
        self.cfg = cfg
        self.written: list[Path] = []

    @property
    def meta(self) -> dict:
        return {"tool": f"cvtnet {__version__}", "config_hash": self.cfg.digest(),
                "seed": self.cfg.seed}

    def preamble(self, marker: str = "#") -> str:
        m = self.meta
        return f"{marker} {m['tool']} config_hash={m['config_hash']} seed={m['seed']}"

    def target(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        self.written.append(path)
        return path

    def require(self, name: str) -> Path:
        path = self.root / name
        if not path.is_file():
            raise MissingArtifact(f"missing artifact {path}; run the stage that produces it first")
        return path

    def write_json(self, name: str, doc: dict) -> None:
        doc = {"meta": self.meta, **doc}
        self.target(name).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")

    def read_json(self, name: str) -> dict:
        return json.loads(self.require(name).read_text(encoding="utf-8"))

    def discard(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()


def load_split(cfg: RunConfig):
    """Train and test tables exactly as every stage sees them."""
    path = cfg.data or dataset.iris_path()
    table = dataset.load_csv(path, cfg.label_column)
    train, test = dataset.split(table, dataset.SplitSpec(cfg.train_fraction, cfg.seed))
    if cfg.normalize == "minmax":
        train, test = dataset.minmax_scale(train, test)
    return train, test


def _widths(cfg: RunConfig, train: dataset.LabeledTable) -> tuple[int, ...]:
    return (train.n_features, *cfg.hidden, train.n_classes)


def run_train(cfg: RunConfig, out: Artifacts) -> dict:
    train, test = load_split(cfg)
    spec = neuralnet.MlpSpec(_widths(cfg, train), seed=cfg.seed)
    tcfg = neuralnet.TrainConfig(cfg.learning_rate, cfg.momentum, cfg.epochs,
                                 cfg.batch_size, cfg.seed)
    model = neuralnet.train(neuralnet.init(spec), train, tcfg)
    neuralnet.save_model(model, out.target(MODEL), out.meta)
    summary = {
        "train_accuracy": neuralnet.accuracy(model, train),
        "test_accuracy": neuralnet.accuracy(model, test),
        "final_loss": model.history[-1] if model.history else None,
        "n_train": train.n_samples,
        "n_test": test.n_samples,
        "layer_widths": list(spec.layer_widths),
        "feature_names": list(train.feature_names),
        "class_names": list(train.class_names),
    }
    out.write_json(TRAIN_SUMMARY, summary)
    return summary


def run_analyze(cfg: RunConfig, out: Artifacts) -> dict:
    model = neuralnet.load_model(out.require(MODEL))
    train, _ = load_split(cfg)
    trace = neuralnet.capture_traces(model, train)
    trace.to_csv(out.target(TRACES), out.preamble())
    cdfs = depstats.fit_cdfs(trace, cfg.cdf_mode, cfg.bins)
    depstats.cdfs_to_csv(cdfs, trace, out.target(CDFS), out.preamble())
    pseudo = depstats.pseudo_observations(trace, cdfs)
    warnings = []
    n_layers = len(model.layer_widths)
    for (l, i), cdf in zip(trace.node_ids, cdfs):
        if cdf.degenerate:
            warnings.append({"kind": "constant_node",
                             "node": pathrank.node_name(l, i, n_layers),
                             "value": float(trace.values[0, trace.layer_slice(l)][i])})
    n_undefined = 0
    for l in range(n_layers - 1):
        m = depstats.correlation_matrix(pseudo, trace, l, l + 1, cfg.correlation)
        m.to_csv(out.target(corr_name(l)), out.preamble())
        n_undefined += len(m.undefined)
    if warnings:
        for w in warnings:
            log.warning("constant activation at %s; its correlations are undefined", w["node"])
    summary = {"n_samples": trace.n_samples, "cdf_mode": cfg.cdf_mode, "bins": cfg.bins,
               "correlation": cfg.correlation, "undefined_entries": n_undefined,
               "warnings": warnings}
    out.write_json(ANALYSIS, summary)
    return summary


def run_rank(cfg: RunConfig, out: Artifacts) -> dict:
    model = neuralnet.load_model(out.require(MODEL))
    widths = model.layer_widths
    matrices = [depstats.LayerCorrelation.from_csv(out.require(corr_name(l)))
                for l in range(len(widths) - 1)]
    train, _ = load_split(cfg)
    report = pathrank.analyze_paths(matrices, widths,
                                    {"seed": cfg.seed, "bins": cfg.bins,
                                     "cdf_mode": cfg.cdf_mode, "correlation": matrices[0].kind})
    pathrank.ranking_to_csv(report, train.class_names, out.target(RANKING), out.preamble())
    pathrank.edges_to_csv(report.edges, widths, out.target(EDGES), out.preamble())
    n_layers = len(widths)
    warnings = []
    if report.n_undefined:
        warnings.append({"kind": "undefined_paths", "excluded": report.n_undefined,
                         "per_feature": dict(zip(train.feature_names,
                                                 report.features.per_feature_excluded))})
        log.warning("%d of %d paths pass through undefined correlations and were excluded",
                    report.n_undefined, len(report.ranked))
    doc = {
        "n_paths": len(report.ranked),
        "n_ccc": len(report.ranked) * widths[-1],
        "excluded_paths": report.n_undefined,
        "feature_importance": dict(zip(train.feature_names,
                                       report.features.values.tolist())),
        "top_paths": [{"path": pathrank.path_name(r.base_path, n_layers),
                       "var_ccc": r.var_ccc} for r in report.ranked[:10] if r.defined],
        "parameters": report.metadata,
        "warnings": warnings,
    }
    out.write_json(REPORT, doc)
    return doc


def run_compare_rf(cfg: RunConfig, out: Artifacts) -> dict:
    report = out.read_json(REPORT)
    train, test = load_split(cfg)
    fcfg = forest.ForestConfig(cfg.n_trees, cfg.max_features, cfg.bootstrap, cfg.seed,
                               cfg.min_samples_split)
    rf = forest.fit_forest(train, fcfg)
    rf_imp = forest.feature_importances(rf)
    if np.any(np.isnan(rf_imp)):
        raise forest.ForestError("forest made no splits; feature importance undefined")
    cvt_imp = [report["feature_importance"][name] for name in train.feature_names]
    rows = render.importance_bars(train.feature_names, cvt_imp, rf_imp)
    render.bars_to_csv(rows, out.target(FEATURES), out.preamble())
    summary = {"train_accuracy": rf.accuracy(train), "test_accuracy": rf.accuracy(test),
               "n_trees": cfg.n_trees, "max_features": cfg.max_features,
               "bootstrap": cfg.bootstrap, "min_samples_split": cfg.min_samples_split,
               "rf_importance": dict(zip(train.feature_names, rf_imp.tolist()))}
    out.write_json(FOREST_SUMMARY, summary)
    return summary


def run_render(cfg: RunConfig, out: Artifacts) -> dict:
    model = neuralnet.load_model(out.require(MODEL))
    widths = model.layer_widths
    edges = pathrank.edges_from_csv(out.require(EDGES), widths)
    spec = render.RenderSpec(cfg.render_threshold, cfg.color_low, cfg.color_high)
    comment = out.preamble("").strip()
    out.target(DOT).write_text(render.to_dot(widths, edges, spec, comment), encoding="utf-8")
    out.target(SVG).write_text(render.to_svg(widths, edges, spec, comment), encoding="utf-8")
    produced = [DOT, SVG]
    features = out.root / FEATURES
    if features.is_file():
        names, cvt, rf = [], [], []
        for line in features.read_text(encoding="utf-8").splitlines():
            if line.startswith("#") or line.startswith("feature,"):
                continue
            n, a, b = line.split(",")
            names.append(n)
            cvt.append(float(a))
            rf.append(float(b))
        render.bars_to_csv(render.importance_bars(names, cvt, rf), out.target(BARS),
                           out.preamble())
        produced.append(BARS)
    return {"files": produced}


STAGES = {
    "train": run_train,
    "analyze": run_analyze,
    "rank": run_rank,
    "compare-rf": run_compare_rf,
    "render": run_render,
}


def run_all(cfg: RunConfig, out: Artifacts) -> dict:
    return {name: stage(cfg, out) for name, stage in STAGES.items()}
