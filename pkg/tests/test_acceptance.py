"""End-to-end acceptance checks.

Each test records a one-line PASS/FAIL verdict (printed in the terminal
summary) and then asserts it. The trainability study (72 runs) is trained once
per session and shared by the trainability, generalization, noise-resilience
and monotonicity checks.
"""

import json
import time
from dataclasses import dataclass

import numpy as np
import pytest

import oracles
from qmlp.circuit import HiddenLayerSpec, build_hidden_layer
from qmlp.cli import main
from qmlp.data import FAMILIES, TWO_PI, SyntheticSpec, load_iris, scale_features, train_test_split
from qmlp.gradients import finite_difference_gradient, parameter_shift_gradient
from qmlp.model import HybridModel, deep_qmlp, evaluate, init_model, loss_and_grad, qmlp, train
from qmlp.simulator import (
    Gate,
    NoiseConfig,
    QuantumState,
    apply_depolarizing,
    apply_gate,
    apply_gate_density,
    pauli_z_expectation_density,
    to_density,
    zero_state,
)

SCALES = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)
TOTAL_LAYERS = (4, 6, 8)
SEEDS = (0, 1, 2)


@dataclass
class Run:
    family: str
    kind: str
    total_layers: int
    seed: int
    model: HybridModel
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float
    noisy: list  # (loss, accuracy) on the training set per entry of SCALES

    @property
    def trained_ok(self) -> bool:
        return self.train_loss < 0.25 and self.train_acc >= 0.90


@pytest.fixture(scope="module")
def study():
    """4 families x {QMLP, DeepQMLP} x total layers {4, 6, 8} x 3 seeds, 50 epochs each."""
    start = time.perf_counter()
    runs = []
    for family in sorted(FAMILIES):
        train_set, test_set = train_test_split(SyntheticSpec(family), seed=0)
        for total in TOTAL_LAYERS:
            for kind, layers in (("qmlp", [total]), ("deepqmlp", [total // 2, total // 2])):
                for seed in SEEDS:
                    model = init_model(2, layers, train_set.n_classes, seed, train_set.scaling)
                    hist = train(model, train_set, epochs=50, batch_size=30, seed=seed)
                    test_loss, test_acc = evaluate(model, test_set)
                    noisy = [evaluate(model, train_set, NoiseConfig(scale=s)) for s in SCALES]
                    runs.append(
                        Run(family, kind, total, seed, model, hist[-1].loss, hist[-1].accuracy, test_loss, test_acc, noisy)
                    )
    return runs, time.perf_counter() - start


def random_gate_sequence(n, rng, length):
    gates = []
    for _ in range(length):
        kind = rng.choice(["H", "X", "RZ", "RY", "CNOT", "CRZ"] if n > 1 else ["H", "X", "RZ", "RY"])
        if kind in ("CNOT", "CRZ"):
            c, t = rng.choice(n, 2, replace=False)
            targets = (int(c), int(t))
        else:
            targets = (int(rng.integers(n)),)
        angle = float(rng.uniform(-2 * np.pi, 2 * np.pi)) if kind in ("RZ", "RY", "CRZ") else None
        gates.append(Gate(kind, targets, fixed_angle=angle))
    return gates


def test_gradient_oracle_suite(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_circuit = 0.0
    for _ in range(50):
        n, L = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        circ = build_hidden_layer(HiddenLayerSpec(n, L))
        x = rng.uniform(-np.pi, np.pi, n)
        p = rng.uniform(-np.pi, np.pi, circ.n_params)
        ps, fd = parameter_shift_gradient(circ, x, p), finite_difference_gradient(circ, x, p)
        worst_circuit = max(
            worst_circuit,
            np.abs(ps.d_out_d_params - fd.d_out_d_params).max(),
            np.abs(ps.d_out_d_inputs - fd.d_out_d_inputs).max(),
        )

    worst_model = 0.0
    h = 1e-6
    for _ in range(20):
        n = int(rng.integers(2, 4))
        layers = [int(v) for v in rng.integers(1, 3, size=int(rng.integers(1, 3)))]
        m_cls = int(rng.integers(2, 4))
        model = init_model(n, layers, m_cls, seed=int(rng.integers(1 << 30)))
        X = rng.uniform(-np.pi, np.pi, (3, n))
        y = rng.integers(0, m_cls, 3)
        _, g = loss_and_grad(model, X, y)
        flat = model.get_flat()
        fd = np.zeros_like(flat)
        probe = model.copy()
        for i in range(len(flat)):
            for sign in (1, -1):
                f = flat.copy()
                f[i] += sign * h
                probe.set_flat(f)
                fd[i] += sign * loss_and_grad(probe, X, y)[0] / (2 * h)
        worst_model = max(worst_model, np.abs(g - fd).max() / np.abs(fd).max())
    elapsed = time.perf_counter() - start

    ok = worst_circuit <= 1e-5 and worst_model <= 1e-5 and elapsed < 120
    assert verdict(
        1,
        "gradient oracles",
        ok,
        f"circuit max-norm {worst_circuit:.2e}, model relative {worst_model:.2e}, {elapsed:.1f}s",
    )


def test_simulator_oracle_suite(verdict):
    rng = np.random.default_rng(7)
    worst_pure = worst_density = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        gates = random_gate_sequence(n, rng, int(rng.integers(1, 16)))
        state = zero_state(n)
        rho = to_density(zero_state(n))
        for g in gates:
            state = apply_gate(state, g)
            rho = apply_gate_density(rho, g)
        ref = oracles.circuit_unitary(gates, n)[:, 0]
        worst_pure = max(worst_pure, np.abs(state.amplitudes - ref).max())
        worst_density = max(worst_density, np.abs(rho.elements - np.outer(state.amplitudes, state.amplitudes.conj())).max())

    worst_channel = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        state = QuantumState(n, oracles.random_state(n, rng))
        rho = to_density(state)
        q = int(rng.integers(n))
        worst_channel = max(worst_channel, np.abs(apply_depolarizing(rho, [q], 0.0).elements - rho.elements).max())
        for p in (0.0, 0.3, 0.7, 1.0):
            out = apply_depolarizing(rho, [q], p)
            z0 = pauli_z_expectation_density(rho, q)
            worst_channel = max(worst_channel, abs(pauli_z_expectation_density(out, q) - (1 - p) * z0))
    one = to_density(QuantumState(1, oracles.random_state(1, rng)))
    worst_channel = max(worst_channel, np.abs(apply_depolarizing(one, [0], 1.0).elements - np.eye(2) / 2).max())
    two = to_density(QuantumState(2, oracles.random_state(2, rng)))
    worst_channel = max(worst_channel, np.abs(apply_depolarizing(two, [0, 1], 1.0).elements - np.eye(4) / 4).max())

    ok = worst_pure <= 1e-10 and worst_density <= 1e-9 and worst_channel <= 1e-10
    assert verdict(
        2,
        "simulator oracles",
        ok,
        f"gates {worst_pure:.1e}, density-vs-pure {worst_density:.1e}, depolarizing {worst_channel:.1e}",
    )


def test_parameter_counts(verdict):
    q, d = qmlp(4, 2, 3), deep_qmlp(4, [1, 1], 3)
    counts = [(m.n_trainable, m.n_quantum, m.n_classical) for m in (q, d)]
    ok = counts == [(28, 16, 12), (28, 16, 12)]
    assert verdict(3, "parameter counts", ok, f"QMLP {counts[0]}, DeepQMLP {counts[1]} (total, quantum, classical)")


@pytest.mark.slow
def test_trainability(study, verdict):
    runs, elapsed = study
    passing = [r for r in runs if r.trained_ok]
    frac = len(passing) / len(runs)
    misses = ", ".join(f"{r.kind}/{r.family}/L{r.total_layers}/s{r.seed}" for r in runs if not r.trained_ok)
    ok = len(runs) == 72 and frac >= 0.90 and elapsed < 1800
    assert verdict(
        4,
        "trainability",
        ok,
        f"{len(passing)}/{len(runs)} runs ({frac:.1%}) reach loss<0.25, acc>=0.90 in {elapsed:.0f}s; misses: {misses}",
    )


@pytest.mark.slow
def test_generalization(study, verdict):
    runs, _ = study
    passing = [r for r in runs if r.trained_ok]
    good = [r for r in passing if r.test_acc >= 0.85 and r.test_loss < 0.35]
    frac = len(good) / len(passing) if passing else 0.0
    assert verdict(5, "generalization", frac >= 0.85, f"{len(good)}/{len(passing)} trained runs ({frac:.1%}) meet test bounds")


def test_iris_depth_benefit(verdict):
    data = scale_features(load_iris(), TWO_PI)
    losses = {}
    for L in (1, 4):
        at20 = []
        for seed in SEEDS:
            model = qmlp(4, L, 3, seed=seed, input_scaling=data.scaling)
            at20.append(train(model, data, epochs=20, batch_size=30, seed=seed)[19].loss)
        losses[L] = float(np.mean(at20))
    reduction = 1 - losses[4] / losses[1]
    assert verdict(
        6,
        "Iris depth benefit",
        reduction >= 0.30,
        f"epoch-20 loss L1 {losses[1]:.4f}, L4 {losses[4]:.4f}, {reduction:.1%} lower",
    )


@pytest.mark.slow
def test_noise_resilience(study, verdict):
    runs, _ = study
    key = lambda r: (r.family, r.total_layers, r.seed)  # noqa: E731
    q = {key(r): r for r in runs if r.kind == "qmlp"}
    d = {key(r): r for r in runs if r.kind == "deepqmlp"}
    assert q.keys() == d.keys()
    for k in q:
        assert q[k].model.n_trainable == d[k].model.n_trainable

    def means(group, scale):
        i = SCALES.index(scale)
        return (
            float(np.mean([group[k].noisy[i][0] for k in group])),
            float(np.mean([group[k].noisy[i][1] for k in group])),
        )

    (ql4, qa4), (dl4, da4) = means(q, 4.0), means(d, 4.0)
    (ql025, _), (dl025, _) = means(q, 0.25), means(d, 0.25)
    rel4 = (ql4 - dl4) / ql4
    gap025 = abs(dl025 - ql025) / ql025
    ok = rel4 >= 0.10 and da4 >= qa4 and gap025 <= 0.10
    assert verdict(
        7,
        "noise resilience",
        ok,
        f"x4: DeepQMLP loss {dl4:.4f} vs QMLP {ql4:.4f} ({rel4:.1%} lower), acc {da4:.4f} vs {qa4:.4f}; "
        f"x0.25: loss gap {gap025:.1%} ({dl025:.4f} vs {ql025:.4f}), {len(q)} pairs",
    )


@pytest.mark.slow
def test_noise_monotonicity(study, verdict):
    runs, _ = study
    worst, where = 0.0, ""
    for r in runs:
        losses = [loss for loss, _ in r.noisy]
        for s, a, b in zip(SCALES[1:], losses, losses[1:]):
            drop = (a - b) / a
            if drop > worst:
                worst, where = drop, f"{r.kind}/{r.family}/L{r.total_layers}/s{r.seed} at x{s}"
    detail = f"largest relative loss decrease between scales {worst:.2%}" + (f" ({where})" if where else "")
    assert verdict(8, "noise monotonicity", worst <= 0.02, detail)


def test_cli_determinism(tmp_path, verdict):
    conf = {
        "dataset": {"family": "R1_sq", "samples_per_class": 15, "seed": 3},
        "architecture": {"kind": "qmlp", "layers": [2]},
        "training": {"epochs": 3, "batch_size": 10, "seeds": [0, 1]},
        "noise_sweep": {"scales": [0.5, 4.0], "shots": 500},
    }
    deep_conf = {**conf, "architecture": {"kind": "deepqmlp", "layers": [1, 1]}}
    (tmp_path / "q.json").write_text(json.dumps(conf))
    (tmp_path / "d.json").write_text(json.dumps(deep_conf))

    def run_all(out):
        q, d = out / "q", out / "d"
        codes = [
            main(["train", "--config", str(tmp_path / "q.json"), "--out", str(q)]),
            main(["train", "--config", str(tmp_path / "d.json"), "--out", str(d)]),
        ]
        qm = sorted(str(p) for p in q.glob("*.model.json"))
        dm = sorted(str(p) for p in d.glob("*.model.json"))
        codes += [
            main(["noise-sweep", *qm, *dm, "--config", str(tmp_path / "q.json"), "--out", str(out / "sweep")]),
            main(["compare", "--qmlp", *qm, "--deep", *dm, "--config", str(tmp_path / "q.json"), "--out", str(out / "cmp")]),
            main(["gen-data", "--family", "P2_sq", "--seed", "9", "--out", str(out / "data.csv")]),
            main(["plot", str(out / "sweep" / "sweep.csv"), "--out", str(out / "sweep.svg")]),
        ]
        return codes, {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}

    codes_a, files_a = run_all(tmp_path / "a")
    codes_b, files_b = run_all(tmp_path / "b")
    differing = [str(k) for k in files_a if files_a[k] != files_b.get(k)]
    ok = codes_a == codes_b == [0] * 6 and files_a.keys() == files_b.keys() and not differing
    assert verdict(
        9,
        "CLI determinism",
        ok,
        f"{len(files_a)} artifacts from train/noise-sweep/compare/gen-data/plot, {len(differing)} differ",
    )
