"""Hidden-layer circuits: H+RZ angle encoding followed by CRZ-ring / RY parametric layers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import simulator as sim
from .simulator import Gate, NoiseConfig, SimulationError


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class HiddenLayerSpec:
    n_qubits: int
    n_parametric_layers: int

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_parametric_layers < 1:
            raise CircuitError(f"invalid hidden layer {self.n_qubits} qubits x {self.n_parametric_layers} layers")

    @property
    def param_count(self) -> int:
        return 2 * self.n_qubits * self.n_parametric_layers


def build_encoding(n_qubits: int) -> list[Gate]:
    if n_qubits < 1:
        raise CircuitError("encoding needs at least one qubit")
    gates = []
    for q in range(n_qubits):
        gates.append(Gate("H", (q,)))
        gates.append(Gate("RZ", (q,), input_slot=q))
    return gates


def build_parametric_layer(n_qubits: int, param_offset: int = 0) -> list[Gate]:
    """Ring of CRZ(q -> q+1 mod n) then RY on every qubit; uses 2n slots from ``param_offset``."""
    if n_qubits < 2:
        raise CircuitError("a parametric layer needs at least 2 qubits")
    gates = [
        Gate("CRZ", (q, (q + 1) % n_qubits), parameter_slot=param_offset + q)
        for q in range(n_qubits)
    ]
    gates += [
        Gate("RY", (q,), parameter_slot=param_offset + n_qubits + q)
        for q in range(n_qubits)
    ]
    return gates


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """Ordered gate list plus slot counts.

    Evaluation goes through a lowered form: every rotation angle in the
    circuit becomes one column of an angle matrix, computed from
    ``[inputs, params]`` by a fixed linear map. RZ/RY contribute one column;
    CRZ(t) contributes two, the angles t/2 and -t/2 of its RZ/CNOT/RZ/CNOT
    decomposition. Every column then enters the circuit as a plain Pauli
    rotation, which is what the two-term shift rule needs.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int
    n_inputs: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        sim.zero_state(self.n_qubits)  # size check
        params, inputs = [], []
        for g in self.gates:
            for q in g.targets:
                if q >= self.n_qubits:
                    raise CircuitError(f"gate {g} addresses qubit {q} of {self.n_qubits}")
            if g.parameter_slot is not None:
                params.append(g.parameter_slot)
            if g.input_slot is not None:
                inputs.append(g.input_slot)
        if sorted(params) != list(range(self.n_params)):
            raise CircuitError(f"parameter slots {sorted(params)} are not 0..{self.n_params - 1}, each once")
        if sorted(inputs) != list(range(self.n_inputs)):
            raise CircuitError(f"input slots {sorted(inputs)} are not 0..{self.n_inputs - 1}, each once")

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_params": self.n_params,
            "n_inputs": self.n_inputs,
            "gates": [g.to_dict() for g in self.gates],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        return cls(d["n_qubits"], tuple(Gate.from_dict(g) for g in d["gates"]), d["n_params"], d["n_inputs"])

    @classmethod
    def from_json(cls, text: str) -> "CircuitSpec":
        return cls.from_dict(json.loads(text))

    @property
    def n_vars(self) -> int:
        return self.n_inputs + self.n_params

    @cached_property
    def program(self) -> "_Program":
        return _Program.lower(self)

    def count(self, kind: str) -> int:
        return sum(g.kind == kind for g in self.gates)


def build_hidden_layer(spec: HiddenLayerSpec) -> CircuitSpec:
    n, L = spec.n_qubits, spec.n_parametric_layers
    gates = build_encoding(n)
    for layer in range(L):
        gates += build_parametric_layer(n, layer * 2 * n)
    return CircuitSpec(n, tuple(gates), spec.param_count, n)


def crz_decomposition(control: int, target: int, theta: float) -> list[Gate]:
    """CRZ(theta) as RZ(theta/2)_t . CNOT . RZ(-theta/2)_t . CNOT, in application order."""
    return [
        Gate("CNOT", (control, target)),
        Gate("RZ", (target,), fixed_angle=-theta / 2.0),
        Gate("CNOT", (control, target)),
        Gate("RZ", (target,), fixed_angle=theta / 2.0),
    ]


@dataclass(frozen=True, eq=False)
class _Program:
    ops: tuple  # (kind, qubits, first column or -1)
    n_columns: int
    var_map: np.ndarray  # (n_columns, n_vars): columns = vars @ var_map.T + offset
    offset: np.ndarray
    n_qubits: int

    @classmethod
    def lower(cls, circuit: CircuitSpec) -> "_Program":
        ops, rows, offs = [], [], []
        n_in = circuit.n_inputs

        def column(gate: Gate, coef: float) -> None:
            row = np.zeros(circuit.n_vars)
            off = 0.0
            if gate.input_slot is not None:
                row[gate.input_slot] = coef
            elif gate.parameter_slot is not None:
                row[n_in + gate.parameter_slot] = coef
            else:
                off = coef * gate.fixed_angle
            rows.append(row)
            offs.append(off)

        for g in circuit.gates:
            if g.kind in ("RZ", "RY"):
                ops.append((g.kind, g.targets, len(rows)))
                column(g, 1.0)
            elif g.kind == "CRZ":
                ops.append(("ZPHASE", g.targets, len(rows)))
                column(g, 0.5)
                column(g, -0.5)
            else:
                ops.append((g.kind, g.targets, -1))
        var_map = np.array(rows).reshape(len(rows), circuit.n_vars)
        return cls(tuple(ops), len(rows), var_map, np.array(offs), circuit.n_qubits)

    def columns(self, inputs: np.ndarray, params: np.ndarray) -> np.ndarray:
        """(B, n_inputs), (B, n_params) -> (B, n_columns)."""
        vars_ = np.concatenate([inputs, params], axis=1)
        return vars_ @ self.var_map.T + self.offset

    def _op_angles(self, kind: str, col: int, cols: np.ndarray):
        if col < 0:
            return None
        if kind == "ZPHASE":
            return cols[:, col : col + 2]
        return cols[:, col]

    def run_pure(self, cols: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        psi = np.zeros((cols.shape[0], 2**n), dtype=complex)
        psi[:, 0] = 1.0
        for kind, qubits, col in self.ops:
            psi = sim.apply_op(psi, n, kind, qubits, self._op_angles(kind, col, cols))
        return sim.z_expectations(psi, n)

    def run_density(self, cols: np.ndarray, p1: float, p2: float) -> np.ndarray:
        n = self.n_qubits
        rho = np.zeros((cols.shape[0], 4**n), dtype=complex)
        rho[:, 0] = 1.0
        for kind, qubits, col in self.ops:
            rho = sim.apply_op_density(rho, n, kind, qubits, self._op_angles(kind, col, cols))
            rho = sim.depolarize_batch(rho, n, qubits, p1 if len(qubits) == 1 else p2)
        return sim.z_expectations_density(rho, n)


def _as_batch(x, width: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise CircuitError(f"{what} must have length {width}, got shape {np.shape(x)}")
    return arr


def eval_hidden_layer_batch(
    circuit: CircuitSpec,
    inputs,
    params,
    noise: Optional[NoiseConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Expectation vectors for a batch: inputs (B, n_inputs), params (n_params,) or (B, n_params)."""
    inputs = _as_batch(inputs, circuit.n_inputs, "inputs")
    params = _as_batch(params, circuit.n_params, "params")
    if params.shape[0] == 1 and inputs.shape[0] > 1:
        params = np.broadcast_to(params, (inputs.shape[0], circuit.n_params))
    elif params.shape[0] != inputs.shape[0]:
        raise CircuitError("inputs and params batch sizes differ")
    prog = circuit.program
    cols = prog.columns(inputs, params)
    if noise is None or noise.is_noiseless:
        return prog.run_pure(cols)
    if noise.effective_p1 == 0.0 and noise.effective_p2 == 0.0:
        out = prog.run_pure(cols)
    else:
        out = prog.run_density(cols, noise.effective_p1, noise.effective_p2)
    if noise.shots is not None:
        if rng is None:
            raise SimulationError("shot sampling needs a seed")
        out = sim.sample_z(out, noise.shots, rng)
    return out


def eval_hidden_layer(
    circuit: CircuitSpec,
    inputs,
    params,
    noise: Optional[NoiseConfig] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """Pauli-Z expectation of every qubit after encoding ``inputs`` and running with ``params``."""
    inputs = np.asarray(inputs, dtype=float)
    params = np.asarray(params, dtype=float)
    if inputs.shape != (circuit.n_inputs,):
        raise CircuitError(f"expected {circuit.n_inputs} inputs, got {inputs.shape}")
    if params.shape != (circuit.n_params,):
        raise CircuitError(f"expected {circuit.n_params} params, got {params.shape}")
    rng = np.random.default_rng(seed) if seed is not None else None
    return eval_hidden_layer_batch(circuit, inputs, params, noise, rng)[0]
