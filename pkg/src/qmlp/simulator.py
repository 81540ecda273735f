"""Small exact quantum simulator: statevectors, density matrices, depolarizing noise.

Conventions used throughout the package:

* qubit 0 is the least-significant bit of a basis-state index;
* RZ(t) = diag(exp(-i t/2), exp(i t/2)), RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]];
* CRZ(t) on (control, target) = diag(1, 1, exp(-i t/2), exp(i t/2)) in control (x) target order.

The kernels work on batches: a batch of states is a complex array of shape
``(B, 2**N)`` and every rotation angle is a length-``B`` vector, so a whole
mini-batch of circuits (including all parameter-shifted copies) advances
through one numpy call per gate. A density matrix on ``n`` qubits is pushed
through the same kernels as a vector on ``2n`` "virtual" qubits: column bits
are virtual qubits ``0..n-1`` and row bits are ``n..2n-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

MAX_QUBITS = 12

SINGLE_QUBIT_KINDS = ("H", "X", "RZ", "RY")
TWO_QUBIT_KINDS = ("CRZ", "CNOT")
PARAMETRIC_KINDS = ("RZ", "RY", "CRZ")
GATE_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS

_SQRT_HALF = 1.0 / np.sqrt(2.0)


class SimulationError(ValueError):
    """Raised for invalid qubit indices, sizes, angles or probabilities."""


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit.

    ``targets`` is ``(qubit,)`` for single-qubit gates and ``(control, target)``
    for CRZ/CNOT. A rotation takes its angle from exactly one of
    ``parameter_slot`` (trainable), ``input_slot`` (encoded feature) or
    ``fixed_angle``.
    """

    kind: str
    targets: tuple[int, ...]
    parameter_slot: Optional[int] = None
    fixed_angle: Optional[float] = None
    input_slot: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in GATE_KINDS:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        arity = 1 if self.kind in SINGLE_QUBIT_KINDS else 2
        if len(self.targets) != arity:
            raise SimulationError(f"{self.kind} takes {arity} qubit(s), got {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise SimulationError(f"{self.kind} control and target must differ")
        if any(t < 0 for t in self.targets):
            raise SimulationError(f"negative qubit index in {self.targets}")
        sources = [s for s in (self.parameter_slot, self.fixed_angle, self.input_slot) if s is not None]
        if self.kind in PARAMETRIC_KINDS:
            if len(sources) != 1:
                raise SimulationError(
                    f"{self.kind} needs exactly one of parameter_slot, input_slot, fixed_angle"
                )
        elif sources:
            raise SimulationError(f"{self.kind} takes no angle")

    @property
    def is_parametric(self) -> bool:
        return self.kind in PARAMETRIC_KINDS

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "targets": list(self.targets)}
        if self.parameter_slot is not None:
            out["param"] = self.parameter_slot
        if self.input_slot is not None:
            out["input"] = self.input_slot
        if self.fixed_angle is not None:
            out["angle"] = self.fixed_angle
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        return cls(
            d["kind"],
            tuple(d["targets"]),
            parameter_slot=d.get("param"),
            fixed_angle=d.get("angle"),
            input_slot=d.get("input"),
        )


@dataclass
class QuantumState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise SimulationError(
                f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class DensityMatrix:
    n_qubits: int
    elements: np.ndarray

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        dim = 2**self.n_qubits
        if self.elements.shape != (dim, dim):
            raise SimulationError(f"expected a {dim}x{dim} matrix, got {self.elements.shape}")

    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements)))


@dataclass(frozen=True)
class NoiseConfig:
    """Per-gate depolarizing noise: ``scale * p1`` after 1-qubit gates, ``scale * p2`` after 2-qubit gates."""

    p1: float = 0.001
    p2: float = 0.01
    scale: float = 1.0
    shots: Optional[int] = None

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SimulationError(f"{name}={v} is not a probability")
        if self.scale < 0:
            raise SimulationError(f"noise scale must be nonnegative, got {self.scale}")
        for name, v in (("scale*p1", self.scale * self.p1), ("scale*p2", self.scale * self.p2)):
            if v > 1.0 + 1e-12:
                raise SimulationError(f"effective probability {name}={v} exceeds 1")
        if self.shots is not None and self.shots < 1:
            raise SimulationError(f"shots must be positive, got {self.shots}")

    @property
    def effective_p1(self) -> float:
        return min(self.scale * self.p1, 1.0)

    @property
    def effective_p2(self) -> float:
        return min(self.scale * self.p2, 1.0)

    @property
    def is_noiseless(self) -> bool:
        return self.effective_p1 == 0.0 and self.effective_p2 == 0.0 and self.shots is None


# ---------------------------------------------------------------------------
# batched kernels on (B, 2**N) arrays


def _one(psi: np.ndarray, n_total: int, q: int) -> np.ndarray:
    return psi.reshape(psi.shape[0], 2 ** (n_total - q - 1), 2, 2**q)


def _two(psi: np.ndarray, n_total: int, q1: int, q2: int) -> np.ndarray:
    hi, lo = max(q1, q2), min(q1, q2)
    return psi.reshape(psi.shape[0], 2 ** (n_total - hi - 1), 2, 2 ** (hi - lo - 1), 2, 2**lo)


def _bits(v: np.ndarray, hi_bit: int, lo_bit: int) -> tuple:
    """Index into a `_two` view selecting (bit of higher qubit, bit of lower qubit)."""
    return (slice(None), slice(None), hi_bit, slice(None), lo_bit, slice(None))


def k_h(psi, n_total, q):
    v = _one(psi, n_total, q)
    a0, a1 = v[:, :, 0, :], v[:, :, 1, :]
    out = np.empty_like(v)
    out[:, :, 0, :] = (a0 + a1) * _SQRT_HALF
    out[:, :, 1, :] = (a0 - a1) * _SQRT_HALF
    return out.reshape(psi.shape)


def k_x(psi, n_total, q):
    return _one(psi, n_total, q)[:, :, ::-1, :].reshape(psi.shape).copy()


def k_rz(psi, n_total, q, theta):
    v = _one(psi, n_total, q)
    half = np.asarray(theta, dtype=float).reshape(-1, 1, 1) / 2.0
    out = np.empty_like(v)
    out[:, :, 0, :] = v[:, :, 0, :] * np.exp(-1j * half)
    out[:, :, 1, :] = v[:, :, 1, :] * np.exp(1j * half)
    return out.reshape(psi.shape)


def k_ry(psi, n_total, q, theta):
    v = _one(psi, n_total, q)
    half = np.asarray(theta, dtype=float).reshape(-1, 1, 1) / 2.0
    c, s = np.cos(half), np.sin(half)
    a0, a1 = v[:, :, 0, :], v[:, :, 1, :]
    out = np.empty_like(v)
    out[:, :, 0, :] = c * a0 - s * a1
    out[:, :, 1, :] = s * a0 + c * a1
    return out.reshape(psi.shape)


def k_cnot(psi, n_total, control, target):
    v = _two(psi, n_total, control, target).copy()
    if control > target:
        v[:, :, 1, :, :, :] = v[:, :, 1, :, ::-1, :]
    else:
        v[:, :, :, :, 1, :] = v[:, :, ::-1, :, 1, :]
    return v.reshape(psi.shape)


def k_zphase(psi, n_total, control, target, local, zz):
    """Diagonal exp(-i local/2 Z_t) exp(-i zz/2 Z_c Z_t).

    With ``local = t/2`` and ``zz = -t/2`` this is exactly CRZ(t); it is the
    fused form of RZ(t/2)_t . CNOT . RZ(-t/2)_t . CNOT, whose two internal
    angles are exposed separately for the parameter-shift rule.
    """
    v = _two(psi, n_total, control, target)
    local = np.asarray(local, dtype=float).reshape(-1, 1, 1)
    zz = np.asarray(zz, dtype=float).reshape(-1, 1, 1)
    out = np.empty_like(v)
    for c in (0, 1):
        zc = 1 - 2 * c
        for t in (0, 1):
            zt = 1 - 2 * t
            phase = np.exp(-0.5j * (local * zt + zz * zc * zt))
            idx = _bits(v, c, t) if control > target else _bits(v, t, c)
            out[idx] = v[idx] * phase[..., None]
    return out.reshape(psi.shape)


def k_crz(psi, n_total, control, target, theta):
    theta = np.asarray(theta, dtype=float)
    return k_zphase(psi, n_total, control, target, theta / 2.0, -theta / 2.0)


def apply_op(psi: np.ndarray, n_total: int, kind: str, qubits: Sequence[int], angles=None) -> np.ndarray:
    """Apply one gate to a batch of vectors. ``angles`` is (B,) for RZ/RY/CRZ, (B, 2) for ZPHASE."""
    if kind == "H":
        return k_h(psi, n_total, qubits[0])
    if kind == "X":
        return k_x(psi, n_total, qubits[0])
    if kind == "RZ":
        return k_rz(psi, n_total, qubits[0], angles)
    if kind == "RY":
        return k_ry(psi, n_total, qubits[0], angles)
    if kind == "CNOT":
        return k_cnot(psi, n_total, qubits[0], qubits[1])
    if kind == "CRZ":
        return k_crz(psi, n_total, qubits[0], qubits[1], angles)
    if kind == "ZPHASE":
        return k_zphase(psi, n_total, qubits[0], qubits[1], angles[:, 0], angles[:, 1])
    raise SimulationError(f"unknown gate kind {kind!r}")


def apply_op_density(rho: np.ndarray, n: int, kind: str, qubits: Sequence[int], angles=None) -> np.ndarray:
    """U rho U^dagger on a batch of flattened (B, 4**n) density matrices."""
    rows = [q + n for q in qubits]
    out = apply_op(rho, 2 * n, kind, rows, angles)
    # conj(U): H, X, CNOT, RY are real; the diagonal phase gates flip sign
    if kind in ("RZ", "CRZ", "ZPHASE"):
        angles = -np.asarray(angles, dtype=float)
    return apply_op(out, 2 * n, kind, list(qubits), angles)


def depolarize_batch(rho: np.ndarray, n: int, qubits: Sequence[int], p: float) -> np.ndarray:
    """(1-p) rho + p (I/2^k (x) Tr_qubits rho), on flattened (B, 4**n) matrices."""
    if p == 0.0:
        return rho
    B = rho.shape[0]
    mixed = rho.reshape((B,) + (2,) * (2 * n))
    for q in qubits:
        r_ax = 1 + (n - 1 - q)
        c_ax = 1 + n + (n - 1 - q)
        reduced = np.trace(mixed, axis1=r_ax, axis2=c_ax) / 2.0
        # put back identity on the traced qubit (delta between row bit and column bit)
        reduced = np.expand_dims(np.expand_dims(reduced, r_ax), c_ax)
        eye = np.zeros((2, 2))
        eye[0, 0] = eye[1, 1] = 1.0
        shape = [1] * mixed.ndim
        shape[r_ax] = shape[c_ax] = 2
        mixed = reduced * eye.reshape(shape)
    return (1.0 - p) * rho + p * mixed.reshape(B, -1)


def z_expectations(psi: np.ndarray, n: int) -> np.ndarray:
    """Pauli-Z expectation of every qubit, (B, 2**n) states -> (B, n)."""
    probs = np.abs(psi) ** 2
    return _z_from_probs(probs, n)


def z_expectations_density(rho: np.ndarray, n: int) -> np.ndarray:
    dim = 2**n
    diag = np.real(rho.reshape(-1, dim, dim).diagonal(axis1=1, axis2=2))
    return _z_from_probs(diag, n)


def _z_from_probs(probs: np.ndarray, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    signs = np.stack([1.0 - 2.0 * ((idx >> q) & 1) for q in range(n)], axis=1)
    return np.clip(probs @ signs, -1.0, 1.0)


def sample_z(expectations: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Shot-noise estimate of each expectation: (n_plus - n_minus) / shots."""
    p_plus = np.clip((1.0 + np.asarray(expectations, dtype=float)) / 2.0, 0.0, 1.0)
    n_plus = rng.binomial(shots, p_plus)
    return (2.0 * n_plus - shots) / shots


# ---------------------------------------------------------------------------
# single-state API


def _check_qubit(q: int, n_qubits: int) -> None:
    if not 0 <= q < n_qubits:
        raise SimulationError(f"qubit index {q} out of range for {n_qubits} qubit(s)")


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise SimulationError(f"probability {p} outside [0, 1]")


def _resolve_angle(gate: Gate, angle: Optional[float]) -> Optional[np.ndarray]:
    if not gate.is_parametric:
        return None
    if angle is None:
        angle = gate.fixed_angle
    if angle is None:
        raise SimulationError(f"{gate.kind} gate needs an angle")
    return np.array([float(angle)])


def zero_state(n_qubits: int) -> QuantumState:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SimulationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def apply_gate(state: QuantumState, gate: Gate, angle: Optional[float] = None) -> QuantumState:
    for q in gate.targets:
        _check_qubit(q, state.n_qubits)
    angles = _resolve_angle(gate, angle)
    out = apply_op(state.amplitudes[None, :], state.n_qubits, gate.kind, gate.targets, angles)
    return QuantumState(state.n_qubits, out[0])


def pauli_z_expectation(state: QuantumState, qubit: int) -> float:
    _check_qubit(qubit, state.n_qubits)
    return float(z_expectations(state.amplitudes[None, :], state.n_qubits)[0, qubit])


def to_density(state: QuantumState) -> DensityMatrix:
    a = state.amplitudes
    return DensityMatrix(state.n_qubits, np.outer(a, a.conj()))


def apply_gate_density(rho: DensityMatrix, gate: Gate, angle: Optional[float] = None) -> DensityMatrix:
    for q in gate.targets:
        _check_qubit(q, rho.n_qubits)
    angles = _resolve_angle(gate, angle)
    flat = rho.elements.reshape(1, -1)
    out = apply_op_density(flat, rho.n_qubits, gate.kind, gate.targets, angles)
    dim = 2**rho.n_qubits
    return DensityMatrix(rho.n_qubits, out.reshape(dim, dim))


def apply_depolarizing(rho: DensityMatrix, qubits: Sequence[int], p: float) -> DensityMatrix:
    _check_prob(p)
    qubits = list(qubits)
    if len(qubits) not in (1, 2) or len(set(qubits)) != len(qubits):
        raise SimulationError(f"depolarizing channel acts on 1 or 2 distinct qubits, got {qubits}")
    for q in qubits:
        _check_qubit(q, rho.n_qubits)
    dim = 2**rho.n_qubits
    out = depolarize_batch(rho.elements.reshape(1, -1), rho.n_qubits, qubits, p)
    return DensityMatrix(rho.n_qubits, out.reshape(dim, dim))


def pauli_z_expectation_density(
    rho: DensityMatrix,
    qubit: int,
    shots: Optional[int] = None,
    rng_seed: Optional[int] = None,
) -> float:
    _check_qubit(qubit, rho.n_qubits)
    exact = float(z_expectations_density(rho.elements.reshape(1, -1), rho.n_qubits)[0, qubit])
    if shots is None:
        return exact
    if rng_seed is None:
        raise SimulationError("shot sampling needs rng_seed")
    if shots < 1:
        raise SimulationError(f"shots must be positive, got {shots}")
    return float(sample_z(exact, shots, np.random.default_rng(rng_seed)))


def gate_matrix(gate: Gate, angle: Optional[float] = None) -> np.ndarray:
    """Dense 2x2 or 4x4 unitary of ``gate`` (two-qubit: control (x) target order)."""
    if gate.is_parametric and angle is None:
        angle = gate.fixed_angle
    if gate.kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF
    if gate.kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if gate.kind == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if gate.kind == "RY":
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind == "CNOT":
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    if gate.kind == "CRZ":
        return np.diag([1, 1, np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    raise SimulationError(f"unknown gate kind {gate.kind!r}")


__all__ = [
    "Gate",
    "QuantumState",
    "DensityMatrix",
    "NoiseConfig",
    "SimulationError",
    "zero_state",
    "apply_gate",
    "pauli_z_expectation",
    "to_density",
    "apply_gate_density",
    "apply_depolarizing",
    "pauli_z_expectation_density",
    "gate_matrix",
]
