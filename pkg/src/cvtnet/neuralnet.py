"""ReLU/softmax multilayer perceptron trained by mini-batch SGD with momentum."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cvtnet.dataset import LabeledTable

log = logging.getLogger(__name__)


class NetworkError(ValueError):
    """Invalid network specification or input arity."""


class TrainingDiverged(ArithmeticError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple[int, ...] = (4, 6, 6, 3)
    hidden_activation: str = "relu"
    output_activation: str = "softmax"
    seed: int = 1

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise NetworkError(f"invalid layer widths {widths}")
        if self.hidden_activation != "relu":
            raise NetworkError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation != "softmax":
            raise NetworkError(f"unsupported output activation {self.output_activation!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.02
    momentum: float = 0.9
    epochs: int = 1000
    batch_size: int = 16
    seed: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise NetworkError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise NetworkError("momentum must lie in [0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise NetworkError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class MlpModel:
    """Weights are stored row = destination node, i.e. ``W[l]`` is (out, in)."""

    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    train_seed: int | None = None
    history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        widths = self.spec.layer_widths
        if len(self.weights) != len(widths) - 1 or len(self.biases) != len(widths) - 1:
            raise NetworkError("parameter count does not match layer widths")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (widths[l + 1], widths[l]) or b.shape != (widths[l + 1],):
                raise NetworkError(f"layer {l}: parameter shapes {W.shape}, {b.shape} "
                                   f"inconsistent with widths {widths}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise NetworkError(f"layer {l}: non-finite parameters")

    @property
    def layer_widths(self) -> tuple[int, ...]:
        return self.spec.layer_widths

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "MlpModel":
        return MlpModel(self.spec, [W.copy() for W in self.weights],
                        [b.copy() for b in self.biases], self.train_seed, list(self.history))


def init(spec: MlpSpec) -> MlpModel:
    """He-normal weights, zero biases, seeded by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    widths = spec.layer_widths
    weights = [rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
               for fan_in, fan_out in zip(widths[:-1], widths[1:])]
    biases = [np.zeros(w) for w in widths[1:]]
    return MlpModel(spec, weights, biases)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_all(model: MlpModel, X: np.ndarray):
    """Return (pre-activations, activations) per layer; activations[0] is X."""
    acts, pres = [X], []
    n_layers = len(model.weights)
    for l, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ W.T + b
        pres.append(z)
        acts.append(softmax(z) if l == n_layers - 1 else np.maximum(z, 0.0))
    return pres, acts


def _check_inputs(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != model.layer_widths[0]:
        raise NetworkError(f"input arity {X.shape[-1]} != input width {model.layer_widths[0]}")
    if not np.all(np.isfinite(X)):
        raise NetworkError("non-finite input")
    return X


def forward(model: MlpModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Class probabilities and the full post-activation trace row for one sample."""
    x = _check_inputs(model, x)
    if x.ndim != 1:
        raise NetworkError("forward takes a single feature vector")
    _, acts = _forward_all(model, x[None, :])
    return acts[-1][0], np.concatenate([a[0] for a in acts])


def predict_proba(model: MlpModel, X) -> np.ndarray:
    X = _check_inputs(model, np.atleast_2d(X))
    return _forward_all(model, X)[1][-1]


def predict(model: MlpModel, X) -> np.ndarray:
    return np.argmax(predict_proba(model, X), axis=1)


def accuracy(model: MlpModel, data: LabeledTable) -> float:
    return float(np.mean(predict(model, data.features) == data.labels))


def cross_entropy(model: MlpModel, X, Y) -> float:
    """Mean cross-entropy of one-hot targets ``Y``."""
    pres, _ = _forward_all(model, np.asarray(X, dtype=np.float64))
    z = pres[-1] - pres[-1].max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-np.mean(np.sum(Y * log_p, axis=1)))


def gradients(model: MlpModel, X, Y) -> list[np.ndarray]:
    """Backprop gradients of the mean cross-entropy.

    Returned in the order of :meth:`MlpModel.parameters`:
    ``[dW0, db0, dW1, db1, ...]``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise NetworkError("empty batch")
    pres, acts = _forward_all(model, X)
    delta = (acts[-1] - Y) / X.shape[0]
    grads = []
    for l in range(len(model.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append(delta.T @ acts[l])
        if l > 0:
            delta = (delta @ model.weights[l]) * (pres[l - 1] > 0)
    grads.reverse()
    return grads


def train(model: MlpModel, data: LabeledTable, cfg: TrainConfig) -> MlpModel:
    """Return a trained copy of ``model``; the input model is left untouched."""
    if data.n_features != model.layer_widths[0] or data.n_classes != model.layer_widths[-1]:
        raise NetworkError(
            f"data has {data.n_features} features / {data.n_classes} classes, "
            f"network expects {model.layer_widths[0]} / {model.layer_widths[-1]}")
    model = model.copy()
    model.train_seed = cfg.seed
    model.history = []
    X, Y = data.features, data.one_hot()
    params = model.parameters()
    velocity = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        # overflow is detected below, not warned about
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                for p, v, g in zip(params, velocity, gradients(model, X[idx], Y[idx])):
                    v *= cfg.momentum
                    v -= cfg.learning_rate * g
                    p += v
            loss = cross_entropy(model, X, Y)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(p)) for p in params):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}; "
                                   f"try a smaller learning_rate than {cfg.learning_rate}")
        model.history.append(loss)
    if cfg.epochs:
        log.info("trained %d epochs: loss %.4g, train accuracy %.4f",
                 cfg.epochs, model.history[-1], accuracy(model, data))
    return model


@dataclass(frozen=True)
class ActivationTrace:
    """Post-activation value of every node for every sample.

    Columns run input layer first, output layer last; ``node_ids[k]`` is the
    ``(layer, node)`` pair of column ``k``.
    """

    layer_widths: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != sum(self.layer_widths):
            raise NetworkError("trace width does not match the layer widths")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layer_widths", tuple(self.layer_widths))

    @property
    def node_ids(self) -> list[tuple[int, int]]:
        return [(l, i) for l, w in enumerate(self.layer_widths) for i in range(w)]

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def layer_slice(self, layer: int) -> slice:
        start = sum(self.layer_widths[:layer])
        return slice(start, start + self.layer_widths[layer])

    def layer(self, layer: int) -> np.ndarray:
        return self.values[:, self.layer_slice(layer)]

    def to_csv(self, path, preamble: str = "") -> None:
        """Long format: ``sample_id,layer,node,value``."""
        lines = [preamble] if preamble else []
        lines.append("sample_id,layer,node,value")
        ids = self.node_ids
        for s, row in enumerate(self.values):
            lines.extend(f"{s},{l},{i},{v!r}" for (l, i), v in zip(ids, row.tolist()))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path, layer_widths) -> "ActivationTrace":
        rows = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#") or line.startswith("sample_id") or not line.strip():
                    continue
                s, l, i, v = line.rstrip("\n").split(",")
                rows[(int(s), int(l), int(i))] = float(v)
        layer_widths = tuple(layer_widths)
        n = 1 + max(k[0] for k in rows)
        offsets = np.cumsum((0,) + layer_widths)
        values = np.empty((n, offsets[-1]))
        for (s, l, i), v in rows.items():
            values[s, offsets[l] + i] = v
        return cls(layer_widths, values)


def capture_traces(model: MlpModel, data: LabeledTable) -> ActivationTrace:
    X = _check_inputs(model, data.features)
    _, acts = _forward_all(model, X)
    values = np.concatenate(acts, axis=1)
    # inputs pass through untouched
    values[:, :X.shape[1]] = data.features
    return ActivationTrace(model.layer_widths, values)


def save_model(model: MlpModel, path, meta: dict | None = None) -> None:
    doc = {
        "layer_widths": list(model.layer_widths),
        "hidden_activation": model.spec.hidden_activation,
        "output_activation": model.spec.output_activation,
        "init_seed": model.spec.seed,
        "train_seed": model.train_seed,
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    if meta:
        doc["meta"] = meta
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> MlpModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        spec = MlpSpec(tuple(doc["layer_widths"]), doc["hidden_activation"],
                       doc["output_activation"], doc["init_seed"])
        return MlpModel(spec,
                        [np.array(W, dtype=np.float64).reshape(o, i) for W, i, o in
                         zip(doc["weights"], spec.layer_widths[:-1], spec.layer_widths[1:])],
                        [np.array(b, dtype=np.float64) for b in doc["biases"]],
                        doc.get("train_seed"))
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkError(f"{path}: malformed model document ({exc})") from exc
