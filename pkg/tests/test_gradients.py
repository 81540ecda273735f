import numpy as np
import pytest

from qmlp.circuit import CircuitSpec, HiddenLayerSpec, build_encoding, build_hidden_layer
from qmlp.gradients import (
    finite_difference_gradient,
    parameter_shift_gradient,
    shift_rule_batch,
    shift_rule_evaluations,
)
from qmlp.simulator import Gate


def cos_circuit():
    """<Z> = cos(theta): a single RY on |0>."""
    return CircuitSpec(1, (Gate("RY", (0,), parameter_slot=0),), 1, 0)


def max_diff(a, b):
    return max(
        np.abs(a.d_out_d_params - b.d_out_d_params).max(initial=0.0),
        np.abs(a.d_out_d_inputs - b.d_out_d_inputs).max(initial=0.0),
    )


class TestShiftRule:
    def test_cos_circuit(self):
        jac = parameter_shift_gradient(cos_circuit(), [], [np.pi / 2])
        assert jac.d_out_d_params[0, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_encoding_input_has_zero_gradient(self):
        circ = CircuitSpec(1, tuple(build_encoding(1)), 0, 1)
        for x in np.linspace(-np.pi, np.pi, 9):
            jac = parameter_shift_gradient(circ, [x], [])
            assert abs(jac.d_out_d_inputs[0, 0]) < 1e-12

    def test_zero_params_match_finite_differences(self):
        rng = np.random.default_rng(0)
        for n, L in [(2, 1), (3, 2), (4, 3)]:
            circ = build_hidden_layer(HiddenLayerSpec(n, L))
            x = rng.uniform(-np.pi, np.pi, n)
            p = np.zeros(circ.n_params)
            ps, fd = parameter_shift_gradient(circ, x, p), finite_difference_gradient(circ, x, p)
            assert np.all(np.isfinite(ps.d_out_d_params))
            assert max_diff(ps, fd) < 1e-6

    def test_random_draws_match_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n, L = int(rng.integers(2, 5)), int(rng.integers(1, 5))
            circ = build_hidden_layer(HiddenLayerSpec(n, L))
            x = rng.uniform(-np.pi, np.pi, n)
            p = rng.uniform(-np.pi, np.pi, circ.n_params)
            jac = parameter_shift_gradient(circ, x, p)
            assert jac.d_out_d_params.shape == (n, circ.n_params)
            assert jac.d_out_d_inputs.shape == (n, n)
            assert np.abs(jac.d_out_d_params).max() <= 1 + 1e-12
            assert max_diff(jac, finite_difference_gradient(circ, x, p)) < 1e-6

    def test_periodicity(self):
        # RZ/RY slots repeat after 2*pi; CRZ(t + 2*pi) = Z_control CRZ(t), so those need 4*pi
        rng = np.random.default_rng(2)
        circ = build_hidden_layer(HiddenLayerSpec(3, 2))
        x = rng.uniform(-np.pi, np.pi, 3)
        p = rng.uniform(-np.pi, np.pi, circ.n_params)
        period = np.zeros(circ.n_params)
        for g in circ.gates:
            if g.parameter_slot is not None:
                period[g.parameter_slot] = 4 * np.pi if g.kind == "CRZ" else 2 * np.pi
        a = parameter_shift_gradient(circ, x, p)
        b = parameter_shift_gradient(circ, x + 2 * np.pi, p + period)
        assert max_diff(a, b) < 1e-9

    def test_crz_slot_not_two_pi_periodic(self):
        rng = np.random.default_rng(3)
        circ = build_hidden_layer(HiddenLayerSpec(3, 2))
        x = rng.uniform(-np.pi, np.pi, 3)
        p = rng.uniform(-np.pi, np.pi, circ.n_params)
        shifted = p.copy()
        shifted[0] += 2 * np.pi
        a = parameter_shift_gradient(circ, x, p)
        b = parameter_shift_gradient(circ, x, shifted)
        assert max_diff(a, b) > 1e-3

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        circ = build_hidden_layer(HiddenLayerSpec(2, 2))
        X = rng.uniform(-np.pi, np.pi, (4, 2))
        p = rng.uniform(-np.pi, np.pi, circ.n_params)
        E, jp, ji = shift_rule_batch(circ, X, p)
        for b in range(4):
            single = parameter_shift_gradient(circ, X[b], p)
            np.testing.assert_allclose(jp[b], single.d_out_d_params, atol=1e-14)
            np.testing.assert_allclose(ji[b], single.d_out_d_inputs, atol=1e-14)

    def test_evaluation_count(self):
        # RZ inputs and RY params cost two runs each, CRZ params four (two decomposition angles)
        for n, L in [(2, 1), (3, 2), (4, 4)]:
            circ = build_hidden_layer(HiddenLayerSpec(n, L))
            n_crz, n_ry = circ.count("CRZ"), circ.count("RY")
            assert shift_rule_evaluations(circ) == 2 * (circ.n_inputs + n_ry) + 4 * n_crz
            assert shift_rule_evaluations(circ) == 2 * (circ.n_params + circ.n_inputs) + 2 * n_crz

    def test_length_mismatch(self):
        circ = build_hidden_layer(HiddenLayerSpec(2, 1))
        with pytest.raises(ValueError):
            parameter_shift_gradient(circ, [0.0], np.zeros(4))


class TestFiniteDifference:
    def test_stationary_point(self):
        jac = finite_difference_gradient(cos_circuit(), [], [0.0])
        assert abs(jac.d_out_d_params[0, 0]) < 1e-8

    @pytest.mark.parametrize("h", [0.0, -1e-5])
    def test_step_must_be_positive(self, h):
        with pytest.raises(ValueError):
            finite_difference_gradient(cos_circuit(), [], [0.0], h=h)
