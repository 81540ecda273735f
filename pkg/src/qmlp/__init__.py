"""Hybrid quantum-classical perceptrons (QMLP / DeepQMLP) on a small exact simulator."""

from .circuit import (
    CircuitSpec,
    HiddenLayerSpec,
    build_encoding,
    build_hidden_layer,
    build_parametric_layer,
    eval_hidden_layer,
)
from .data import Dataset, SyntheticSpec, generate_synthetic, load_iris, scale_features, train_test_split
from .gradients import LayerJacobians, finite_difference_gradient, parameter_shift_gradient
from .model import (
    AdagradState,
    DenseLayer,
    HybridModel,
    adagrad_step,
    backward,
    cross_entropy_loss,
    deep_qmlp,
    evaluate,
    forward,
    qmlp,
    train,
)
from .simulator import DensityMatrix, Gate, NoiseConfig, QuantumState

__version__ = "0.1.0"

__all__ = [
    "AdagradState",
    "CircuitSpec",
    "Dataset",
    "DenseLayer",
    "DensityMatrix",
    "Gate",
    "HiddenLayerSpec",
    "HybridModel",
    "LayerJacobians",
    "NoiseConfig",
    "QuantumState",
    "SyntheticSpec",
    "adagrad_step",
    "backward",
    "build_encoding",
    "build_hidden_layer",
    "build_parametric_layer",
    "cross_entropy_loss",
    "deep_qmlp",
    "eval_hidden_layer",
    "evaluate",
    "finite_difference_gradient",
    "forward",
    "generate_synthetic",
    "load_iris",
    "parameter_shift_gradient",
    "qmlp",
    "scale_features",
    "train",
    "train_test_split",
]
