"""Jacobians of hidden-layer expectations w.r.t. parameters and encoded inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CircuitSpec, CircuitError, _as_batch

SHIFT = np.pi / 2


@dataclass
class LayerJacobians:
    d_out_d_params: np.ndarray  # (n_qubits, n_params)
    d_out_d_inputs: np.ndarray  # (n_qubits, n_inputs)


def shift_rule_batch(circuit: CircuitSpec, inputs, params):
    """Expectations and Jacobians for a batch using the two-term shift rule.

    Each lowered angle column is evaluated at +-pi/2, so one call runs
    ``B * (1 + 2 * n_columns)`` circuits in a single vectorized pass.

    Returns ``(E, J_params, J_inputs)`` with shapes (B, n), (B, n, n_params)
    and (B, n, n_inputs).
    """
    inputs = _as_batch(inputs, circuit.n_inputs, "inputs")
    params = _as_batch(params, circuit.n_params, "params")
    if params.shape[0] == 1 and inputs.shape[0] > 1:
        params = np.broadcast_to(params, (inputs.shape[0], circuit.n_params))
    prog = circuit.program
    B, C, n = inputs.shape[0], prog.n_columns, circuit.n_qubits

    cols = prog.columns(inputs, params)  # (B, C)
    shifts = np.concatenate([np.eye(C), -np.eye(C)]) * SHIFT  # (2C, C)
    shifted = cols[:, None, :] + shifts[None, :, :]
    batch = np.concatenate([cols, shifted.reshape(B * 2 * C, C)])
    out = prog.run_pure(batch)

    E = out[:B]
    pm = out[B:].reshape(B, 2, C, n)
    d_cols = 0.5 * (pm[:, 0] - pm[:, 1])  # (B, C, n)
    d_vars = np.einsum("bcn,cv->bnv", d_cols, prog.var_map)
    return E, d_vars[:, :, circuit.n_inputs :], d_vars[:, :, : circuit.n_inputs]


def shift_rule_evaluations(circuit: CircuitSpec) -> int:
    """Circuit runs per Jacobian: two per RZ/RY angle, four per CRZ (two decomposition angles)."""
    return 2 * circuit.program.n_columns


def parameter_shift_gradient(circuit: CircuitSpec, inputs, params) -> LayerJacobians:
    inputs = np.asarray(inputs, dtype=float)
    params = np.asarray(params, dtype=float)
    if inputs.shape != (circuit.n_inputs,) or params.shape != (circuit.n_params,):
        raise CircuitError(
            f"expected {circuit.n_inputs} inputs and {circuit.n_params} params, "
            f"got {inputs.shape} and {params.shape}"
        )
    _, jp, ji = shift_rule_batch(circuit, inputs, params)
    return LayerJacobians(jp[0], ji[0])


def finite_difference_gradient(circuit: CircuitSpec, inputs, params, h: float = 1e-5) -> LayerJacobians:
    """Central differences [E(v+h) - E(v-h)] / 2h, one slot at a time."""
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    inputs = np.asarray(inputs, dtype=float)
    params = np.asarray(params, dtype=float)
    if inputs.shape != (circuit.n_inputs,) or params.shape != (circuit.n_params,):
        raise CircuitError("length mismatch")
    base = np.concatenate([inputs, params])
    V = base.size
    steps = np.eye(V) * h
    points = np.concatenate([base + steps, base - steps])
    prog = circuit.program
    out = prog.run_pure(prog.columns(points[:, : circuit.n_inputs], points[:, circuit.n_inputs :]))
    jac = ((out[:V] - out[V:]) / (2 * h)).T  # (n, V)
    return LayerJacobians(jac[:, circuit.n_inputs :], jac[:, : circuit.n_inputs])
