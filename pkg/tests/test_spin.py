import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import singlet_anticorrelation
from pilotwave.errors import ConfigError, ImpossibleOutcome
from pilotwave.rng import stream
from pilotwave.spin import (MeasurementAxis, TwoQubitState, anticorrelation_probability,
                            cell_probabilities, collapse, marginal_up_right, no_signaling_audit,
                            no_signaling_sweep, right_outcome_probabilities, rotate_left_basis,
                            rotate_left_state, sample_sequential_measurement)

R = np.sqrt(0.5)
angles = st.floats(-10, 10, allow_nan=False)


@st.composite
def states(draw):
    parts = draw(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
    v = np.array(parts[:4]) + 1j * np.array(parts[4:])
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1, 0, 0, 0], dtype=complex)
    return TwoQubitState.normalized(*v)


def test_normalization_enforced():
    with pytest.raises(ConfigError):
        TwoQubitState(1, 1, 0, 0)


def test_axis_canonical():
    assert MeasurementAxis(-np.pi / 2).theta == pytest.approx(1.5 * np.pi)
    assert MeasurementAxis(5 * np.pi).theta == pytest.approx(np.pi)
    with pytest.raises(ConfigError):
        MeasurementAxis(np.inf)


class TestRotate:
    def test_gamma_zero(self):
        s = TwoQubitState.normalized(0.3, 0.5j, -0.2, 0.6)
        dec = rotate_left_basis(s, 0.0)
        np.testing.assert_allclose(dec.i_branch, [s.d, s.a])  # [up2, down2]
        assert dec.weights[0] == pytest.approx(abs(s.a) ** 2 + abs(s.d) ** 2, abs=1e-15)

    def test_quarter_turn(self):
        s = TwoQubitState.normalized(0.3, 0.5j, -0.2, 0.6)
        dec = rotate_left_basis(s, np.pi / 2)
        np.testing.assert_allclose(dec.i_branch, [-s.b, -s.c], atol=1e-15)
        np.testing.assert_allclose(dec.j_branch, [s.d, s.a], atol=1e-15)

    @pytest.mark.parametrize("theta", np.linspace(0, 2 * np.pi, 12, endpoint=False))
    def test_singlet_even_weights(self, theta):
        w = rotate_left_basis(TwoQubitState.singlet(), MeasurementAxis(theta)).weights
        assert w == pytest.approx((0.5, 0.5), abs=1e-15)

    @given(states(), angles)
    @settings(max_examples=100, deadline=None)
    def test_weights_sum_to_one(self, s, g):
        w = rotate_left_basis(s, g).weights
        assert abs(sum(w) - 1) < 1e-12 and min(w) >= 0

    @given(states(), angles, angles)
    @settings(max_examples=100, deadline=None)
    def test_rotation_composition(self, s, g1, g2):
        twice = rotate_left_state(rotate_left_state(s, g1), g2)
        once = rotate_left_state(s, g1 + g2)
        np.testing.assert_allclose(twice.amplitudes, once.amplitudes, atol=1e-12)


class TestCollapse:
    def test_product_state(self):
        dec = rotate_left_basis(TwoQubitState(1, 0, 0, 0), 0.0)
        np.testing.assert_array_equal(collapse(dec, "i"), [0, 1])

    @pytest.mark.parametrize("theta", [0.0, 0.7, np.pi / 2, 2.5, 4.0])
    def test_singlet_partner_anti_aligned(self, theta):
        axis = MeasurementAxis(theta)
        right = collapse(rotate_left_basis(TwoQubitState.singlet(), axis), "i")
        # certain to read "down" along the same axis
        assert right_outcome_probabilities(right, axis) == pytest.approx((0.0, 1.0), abs=1e-15)

    def test_impossible(self):
        dec = rotate_left_basis(TwoQubitState(1, 0, 0, 0), 0.0)
        with pytest.raises(ImpossibleOutcome):
            collapse(dec, "j")

    @given(states(), angles)
    @settings(max_examples=50, deadline=None)
    def test_unit_norm(self, s, g):
        dec = rotate_left_basis(s, g)
        for k, out in enumerate("ij"):
            if dec.weights[k] > 1e-12:
                assert np.linalg.norm(collapse(dec, out)) == pytest.approx(1, abs=1e-12)


class TestMarginal:
    def test_examples(self):
        assert marginal_up_right(TwoQubitState(0, 1, 0, 0)) == 1.0
        assert marginal_up_right(TwoQubitState.singlet()) == pytest.approx(0.5)
        s = TwoQubitState(np.sqrt(0.4), np.sqrt(0.3), np.sqrt(0.2), np.sqrt(0.1))
        assert marginal_up_right(s) == pytest.approx(0.4, abs=1e-15)


class TestNoSignaling:
    def test_random_states(self):
        rng = stream(2024)
        amps = np.array([TwoQubitState.random(rng).amplitudes for _ in range(1000)])
        axes = [MeasurementAxis(t) for t in np.linspace(0, 2 * np.pi, 20, endpoint=False)]
        assert no_signaling_sweep(amps, axes).max() < 1e-12

    def test_sweep_agrees_with_audit(self):
        rng = stream(5)
        sts = [TwoQubitState.random(rng) for _ in range(5)]
        axes = [MeasurementAxis(0.3), MeasurementAxis(2.0)]
        sweep = no_signaling_sweep([s.amplitudes for s in sts], axes)
        for i, s in enumerate(sts):
            for j, ax in enumerate(axes):
                assert sweep[i, j] == pytest.approx(no_signaling_audit(s, ax).discrepancy, abs=1e-15)

    def test_singlet(self):
        a = no_signaling_audit(TwoQubitState.singlet(), MeasurementAxis(np.pi / 3))
        assert a.post_measurement_marginal == pytest.approx(0.5, abs=1e-15)
        assert a.unmeasured_marginal == pytest.approx(0.5, abs=1e-15)

    @given(angles, angles, angles)
    @settings(max_examples=50, deadline=None)
    def test_product(self, l, r, g):
        left = [np.cos(l), np.sin(l)]
        right = [np.cos(r), 1j * np.sin(r)]
        a = no_signaling_audit(TwoQubitState.product(left, right), g)
        assert a.post_measurement_marginal == pytest.approx(np.cos(r) ** 2, abs=1e-12)
        assert a.discrepancy < 1e-12

    def test_degenerate_branch(self):
        a = no_signaling_audit(TwoQubitState(1, 0, 0, 0), 0.0)
        assert a.discrepancy == 0.0


class TestSampling:
    def test_identical_axes_perfect_anticorrelation(self):
        ax = MeasurementAxis(0.8)
        c = sample_sequential_measurement(TwoQubitState.singlet(), ax, ax, 100_000, seed=1)
        assert c["ii"] + c["jj"] == 0
        assert sum(c.values()) == 100_000

    def test_right_angle_cells(self):
        n = 100_000
        c = sample_sequential_measurement(TwoQubitState.singlet(), MeasurementAxis(0),
                                          MeasurementAxis(np.pi / 2), n, seed=2)
        sigma = np.sqrt(0.25 * 0.75 * n)
        for v in c.values():
            assert abs(v - 0.25 * n) <= 3 * sigma

    def test_up_up_product(self):
        c = sample_sequential_measurement(TwoQubitState(0, 0, 0, 1), MeasurementAxis(0),
                                          MeasurementAxis(0), 1000, seed=3)
        assert c == {"ii": 1000, "ij": 0, "ji": 0, "jj": 0}

    def test_converges_to_analytic(self):
        rng = stream(9)
        n = 100_000
        for k in range(5):
            s = TwoQubitState.random(rng)
            la, ra = MeasurementAxis(rng.uniform(0, 6.28)), MeasurementAxis(rng.uniform(0, 6.28))
            c = sample_sequential_measurement(s, la, ra, n, seed=k)
            p = cell_probabilities(s, la, ra)
            for cell, prob in p.items():
                assert abs(c[cell] - n * prob) <= 3 * np.sqrt(n * prob * (1 - prob)) + 1

    def test_deterministic(self):
        s = TwoQubitState.singlet()
        args = (s, MeasurementAxis(0.1), MeasurementAxis(1.3), 5000)
        assert sample_sequential_measurement(*args, seed=4) == sample_sequential_measurement(*args, seed=4)

    def test_bad_n(self):
        with pytest.raises(ConfigError):
            sample_sequential_measurement(TwoQubitState.singlet(), 0, 0, 0, seed=0)


@pytest.mark.parametrize("theta", np.linspace(0, 2 * np.pi, 24, endpoint=False))
def test_singlet_anticorrelation_closed_form(theta):
    s = TwoQubitState.singlet()
    p = anticorrelation_probability(s, MeasurementAxis(0.4), MeasurementAxis(0.4 + theta))
    assert p == pytest.approx(singlet_anticorrelation(theta), abs=1e-12)


def test_cells_sum_to_one():
    rng = stream(1)
    for _ in range(20):
        p = cell_probabilities(TwoQubitState.random(rng), rng.uniform(0, 3), rng.uniform(0, 3))
        assert sum(p.values()) == pytest.approx(1, abs=1e-12)
