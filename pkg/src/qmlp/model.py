"""QMLP / DeepQMLP hybrid networks: forward pass, backprop, Adagrad training, noisy evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .circuit import HiddenLayerSpec, build_hidden_layer, eval_hidden_layer_batch
from .data import Dataset, Scaling
from .gradients import shift_rule_batch
from .simulator import NoiseConfig

INTERLAYER_SCALING = math.pi
ADAGRAD_EPS = 1e-10
PROB_FLOOR = 1e-12


class ModelError(ValueError):
    pass


@dataclass
class DenseLayer:
    weights: np.ndarray  # (n_classes, n_features_in), no bias

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]


@dataclass
class HybridModel:
    """Stack of quantum hidden layers feeding a bias-free softmax dense layer.

    One hidden layer is a QMLP; two or more make a DeepQMLP, where each
    layer's expectation vector times ``interlayer_scaling`` is angle-encoded
    into the next layer.
    """

    hidden_layers: list[HiddenLayerSpec]
    quantum_params: np.ndarray
    dense: DenseLayer
    input_scaling: Optional[Scaling] = None
    interlayer_scaling: float = INTERLAYER_SCALING
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.hidden_layers:
            raise ModelError("model needs at least one hidden layer")
        n = self.hidden_layers[0].n_qubits
        if any(h.n_qubits != n for h in self.hidden_layers):
            raise ModelError("all hidden layers must have the same number of qubits")
        self.quantum_params = np.asarray(self.quantum_params, dtype=float)
        if self.quantum_params.shape != (self.n_quantum,):
            raise ModelError(f"expected {self.n_quantum} quantum params, got {self.quantum_params.shape}")
        self.dense.weights = np.asarray(self.dense.weights, dtype=float)
        if self.dense.n_in != n:
            raise ModelError(f"dense layer takes {self.dense.n_in} inputs, hidden layers give {n}")
        self.circuits = [build_hidden_layer(h) for h in self.hidden_layers]

    @property
    def kind(self) -> str:
        return "qmlp" if len(self.hidden_layers) == 1 else "deepqmlp"

    @property
    def n_qubits(self) -> int:
        return self.hidden_layers[0].n_qubits

    @property
    def n_classes(self) -> int:
        return self.dense.n_classes

    @property
    def n_quantum(self) -> int:
        return sum(h.param_count for h in self.hidden_layers)

    @property
    def n_classical(self) -> int:
        return self.dense.weights.size

    @property
    def n_trainable(self) -> int:
        return self.n_quantum + self.n_classical

    @property
    def total_layers(self) -> int:
        return sum(h.n_parametric_layers for h in self.hidden_layers)

    def layer_params(self) -> list[np.ndarray]:
        out, start = [], 0
        for h in self.hidden_layers:
            out.append(self.quantum_params[start : start + h.param_count])
            start += h.param_count
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.quantum_params, self.dense.weights.ravel()])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_trainable,):
            raise ModelError(f"expected {self.n_trainable} values, got {flat.shape}")
        self.quantum_params = flat[: self.n_quantum].copy()
        self.dense.weights = flat[self.n_quantum :].reshape(self.dense.weights.shape).copy()

    def copy(self) -> "HybridModel":
        return HybridModel(
            list(self.hidden_layers),
            self.quantum_params.copy(),
            DenseLayer(self.dense.weights.copy()),
            self.input_scaling,
            self.interlayer_scaling,
            self.seed,
            dict(self.metadata),
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "architecture": {
                "kind": self.kind,
                "n": self.n_qubits,
                "layers": [h.n_parametric_layers for h in self.hidden_layers],
                "m": self.n_classes,
            },
            "quantum_params": self.quantum_params.tolist(),
            "dense_weights": self.dense.weights.tolist(),
            "input_scaling": None if self.input_scaling is None else self.input_scaling.to_dict(),
            "interlayer_scaling": self.interlayer_scaling,
            "seed": self.seed,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HybridModel":
        arch = d["architecture"]
        scaling = d.get("input_scaling")
        return cls(
            [HiddenLayerSpec(arch["n"], L) for L in arch["layers"]],
            np.array(d["quantum_params"], dtype=float),
            DenseLayer(np.array(d["dense_weights"], dtype=float).reshape(arch["m"], arch["n"])),
            None if scaling is None else Scaling.from_dict(scaling),
            d.get("interlayer_scaling", INTERLAYER_SCALING),
            d.get("seed"),
            d.get("metadata", {}),
        )

    def save(self, path: str | Path) -> None:
        # json writes floats with repr(), which round-trips doubles exactly
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "HybridModel":
        path = Path(path)
        if not path.is_file():
            raise ModelError(f"model file not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text()))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ModelError(f"{path}: malformed model file ({exc})") from None


def init_model(
    n_qubits: int,
    layers: Sequence[int],
    n_classes: int,
    seed: int,
    input_scaling: Optional[Scaling] = None,
    interlayer_scaling: float = INTERLAYER_SCALING,
) -> HybridModel:
    """Quantum params ~ U[-pi, pi], dense weights ~ U[-1/sqrt(n), 1/sqrt(n)], from ``seed``."""
    hidden = [HiddenLayerSpec(n_qubits, L) for L in layers]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    n_q = sum(h.param_count for h in hidden)
    qp = rng.uniform(-np.pi, np.pi, n_q)
    bound = math.sqrt(1.0 / n_qubits)
    w = rng.uniform(-bound, bound, (n_classes, n_qubits))
    return HybridModel(hidden, qp, DenseLayer(w), input_scaling, interlayer_scaling, seed)


def qmlp(n_qubits: int, n_layers: int, n_classes: int, seed: int = 0, **kw) -> HybridModel:
    return init_model(n_qubits, [n_layers], n_classes, seed, **kw)


def deep_qmlp(n_qubits: int, layers: Sequence[int], n_classes: int, seed: int = 0, **kw) -> HybridModel:
    if len(layers) < 2:
        raise ModelError("a DeepQMLP needs at least two hidden layers")
    return init_model(n_qubits, layers, n_classes, seed, **kw)


# -- forward / loss ----------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def hidden_features(model: HybridModel, X, noise: Optional[NoiseConfig] = None, rng=None) -> np.ndarray:
    """Final hidden-layer expectations for a batch of scaled inputs (B, n) -> (B, n)."""
    x = np.atleast_2d(np.asarray(X, dtype=float))
    if x.shape[1] != model.n_qubits:
        raise ModelError(f"expected {model.n_qubits} features, got {x.shape[1]}")
    e = None
    for k, (circ, params) in enumerate(zip(model.circuits, model.layer_params())):
        angles = x if k == 0 else model.interlayer_scaling * e
        e = eval_hidden_layer_batch(circ, angles, params, noise, rng)
    return e


def predict_proba(model: HybridModel, X, noise: Optional[NoiseConfig] = None, rng=None) -> np.ndarray:
    e = hidden_features(model, X, noise, rng)
    return softmax(e @ model.dense.weights.T)


def forward(model: HybridModel, features) -> np.ndarray:
    """Class probabilities for one scaled feature vector."""
    features = np.asarray(features, dtype=float)
    if features.shape != (model.n_qubits,):
        raise ModelError(f"expected {model.n_qubits} features, got {features.shape}")
    return predict_proba(model, features)[0]


def cross_entropy_loss(probs, label: int) -> float:
    probs = np.asarray(probs, dtype=float)
    if not 0 <= label < probs.shape[-1]:
        raise ModelError(f"label {label} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def _batch_losses(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    picked = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def predict(probs: np.ndarray) -> np.ndarray:
    """Argmax with ties going to the lowest class index."""
    return np.argmax(probs, axis=-1)


# -- backward ----------------------------------------------------------------


def loss_and_grad(model: HybridModel, X, y) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient over ``model.get_flat()``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int).reshape(-1)
    if len(y) == 0:
        raise ModelError("empty batch")
    if X.shape != (len(y), model.n_qubits):
        raise ModelError(f"batch features must be ({len(y)}, {model.n_qubits}), got {X.shape}")
    B = len(y)

    jacs = []
    e = None
    for k, (circ, params) in enumerate(zip(model.circuits, model.layer_params())):
        angles = X if k == 0 else model.interlayer_scaling * e
        e, jp, ji = shift_rule_batch(circ, angles, params)
        jacs.append((jp, ji))

    W = model.dense.weights
    probs = softmax(e @ W.T)
    loss = float(np.mean(_batch_losses(probs, y)))

    g_logits = probs.copy()
    g_logits[np.arange(B), y] -= 1.0
    g_logits /= B
    grad_w = g_logits.T @ e  # (m, n)
    g_e = g_logits @ W  # (B, n)

    grad_q = []
    for k in range(len(jacs) - 1, -1, -1):
        jp, ji = jacs[k]
        grad_q.append(np.einsum("bn,bnp->p", g_e, jp))
        if k > 0:
            g_e = model.interlayer_scaling * np.einsum("bn,bni->bi", g_e, ji)
    grad_q.reverse()
    return loss, np.concatenate(grad_q + [grad_w.ravel()])


def backward(model: HybridModel, batch) -> np.ndarray:
    """Mean loss gradient over a batch of ``(features, label)`` pairs."""
    batch = list(batch)
    if not batch:
        raise ModelError("empty batch")
    X = np.array([f for f, _ in batch], dtype=float)
    y = np.array([lab for _, lab in batch], dtype=int)
    return loss_and_grad(model, X, y)[1]


# -- optimizer ---------------------------------------------------------------


@dataclass
class AdagradState:
    accumulated_sq_grads: np.ndarray
    learning_rate: float = 0.5
    epsilon: float = ADAGRAD_EPS

    @classmethod
    def zeros(cls, size: int, learning_rate: float = 0.5, epsilon: float = ADAGRAD_EPS) -> "AdagradState":
        return cls(np.zeros(size), learning_rate, epsilon)


def adagrad_step(params, grads, state: AdagradState) -> tuple[np.ndarray, AdagradState]:
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.accumulated_sq_grads.shape:
        raise ModelError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"accumulator {state.accumulated_sq_grads.shape}"
        )
    acc = state.accumulated_sq_grads + grads**2
    new = params - state.learning_rate * grads / (np.sqrt(acc) + state.epsilon)
    return new, AdagradState(acc, state.learning_rate, state.epsilon)


# -- training / evaluation ---------------------------------------------------


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float


def evaluate(
    model: HybridModel,
    dataset: Dataset,
    noise: Optional[NoiseConfig] = None,
    seed: Optional[int] = None,
) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over ``dataset`` (features already scaled)."""
    if dataset.n_features != model.n_qubits or dataset.n_classes != model.n_classes:
        raise ModelError("model and dataset dimensions differ")
    rng = None
    if noise is not None and noise.shots is not None:
        if seed is None:
            raise ModelError("shot sampling needs a seed")
        rng = np.random.default_rng(seed)
    probs = predict_proba(model, dataset.features, noise, rng)
    loss = float(np.mean(_batch_losses(probs, dataset.labels)))
    acc = float(np.mean(predict(probs) == dataset.labels))
    return loss, acc


def train(
    model: HybridModel,
    dataset: Dataset,
    epochs: int = 50,
    batch_size: int = 30,
    seed: int = 0,
    learning_rate: float = 0.5,
) -> list[EpochRecord]:
    """Mini-batch Adagrad on the mean cross-entropy; updates ``model`` in place.

    Batches are reshuffled every epoch from ``seed`` and the last short batch
    is kept. Each history entry is the noiseless loss/accuracy on the full
    training set after that epoch.
    """
    if not 1 <= batch_size <= len(dataset):
        raise ModelError(f"batch_size must be in [1, {len(dataset)}], got {batch_size}")
    if epochs < 0:
        raise ModelError("epochs must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    state = AdagradState.zeros(model.n_trainable, learning_rate)
    flat = model.get_flat()
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            _, grad = loss_and_grad(model, dataset.features[idx], dataset.labels[idx])
            flat, state = adagrad_step(flat, grad, state)
            model.set_flat(flat)
        loss, acc = evaluate(model, dataset)
        history.append(EpochRecord(epoch, loss, acc))
    return history
