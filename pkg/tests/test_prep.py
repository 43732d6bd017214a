import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinorbit_hardy.hardy import hardy_state
from spinorbit_hardy.prep import (
    HALF_WAVE,
    JONES_L,
    JONES_R,
    QUARTER_WAVE,
    ConventionMismatchError,
    PrepPipeline,
    UnsupportedModeError,
    WavePlate,
    hardy_pipeline,
    jones_matrix,
    jones_to_spin,
    linear_polarization,
    prepare_hardy,
    qplate_apply,
)
from spinorbit_hardy.qstate import StateVector

angles = st.floats(-math.pi, math.pi, allow_nan=False)
amps = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))


def same_up_to_phase(a, b, tol=1e-12):
    a, b = np.asarray(a, dtype=complex).ravel(), np.asarray(b, dtype=complex).ravel()
    k = np.argmax(np.abs(b))
    phase = a[k] / b[k]
    return abs(abs(phase) - 1) < tol and np.allclose(a, phase * b, atol=tol)


class TestJones:
    @given(st.sampled_from([HALF_WAVE, QUARTER_WAVE]), angles)
    def test_unitary(self, kind, theta):
        m = jones_matrix(WavePlate(kind, theta))
        assert np.abs(m.conj().T @ m - np.eye(2)).max() <= 1e-12

    def test_half_wave_at_zero(self):
        assert same_up_to_phase(jones_matrix(WavePlate(HALF_WAVE, 0)), np.diag([1, -1]))

    @given(angles)
    def test_two_quarter_waves_make_a_half_wave(self, theta):
        q = jones_matrix(WavePlate(QUARTER_WAVE, theta))
        assert same_up_to_phase(q @ q, jones_matrix(WavePlate(HALF_WAVE, theta)))

    @given(angles, angles)
    def test_half_wave_mirrors_linear_polarization(self, theta, alpha):
        out = jones_matrix(WavePlate(HALF_WAVE, theta)) @ linear_polarization(alpha)
        assert abs(abs(np.vdot(linear_polarization(2 * theta - alpha), out)) - 1) <= 1e-12

    @given(angles, angles)
    def test_axis_rotation_conjugates(self, theta, phi):
        rot = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        a = jones_matrix(WavePlate(QUARTER_WAVE, theta + phi))
        b = rot @ jones_matrix(WavePlate(QUARTER_WAVE, theta)) @ rot.T
        assert np.allclose(a, b, atol=1e-12)

    def test_circular_basis(self):
        assert np.allclose(jones_to_spin(JONES_L), [1, 0])
        assert np.allclose(jones_to_spin(JONES_R), [0, 1])

    def test_bad_plate(self):
        with pytest.raises(ValueError):
            WavePlate("full-wave", 0)

    @given(st.lists(st.tuples(st.sampled_from([HALF_WAVE, QUARTER_WAVE]), angles), max_size=6), angles)
    def test_pipeline_preserves_norm(self, plates, alpha):
        pipe = PrepPipeline(linear_polarization(alpha), [WavePlate(k, t) for k, t in plates], qplate_enabled=False)
        assert abs(np.linalg.norm(pipe.polarization()) - 1) <= 1e-12

    def test_plates_applied_in_order(self):
        plates = [WavePlate(QUARTER_WAVE, 0.3), WavePlate(HALF_WAVE, 0.1)]
        pipe = PrepPipeline(linear_polarization(0.0), plates, qplate_enabled=False)
        expected = jones_matrix(plates[1]) @ jones_matrix(plates[0]) @ linear_polarization(0.0)
        assert np.allclose(pipe.polarization(), expected)


class TestQPlate:
    def test_left(self):
        assert np.allclose(qplate_apply([1, 0]).amplitudes, [0, 0, 1, 0])  # |R>|+1>

    def test_right(self):
        assert np.allclose(qplate_apply([0, 1]).amplitudes, [0, 1, 0, 0])  # |L>|-1>

    @pytest.mark.parametrize("g", [0.0, 0.2, math.radians(24.9), math.pi / 4])
    def test_generates_hardy_state(self, g):
        pol = np.array([-math.sin(g), math.cos(g)])  # cos g |R> - sin g |L>
        assert np.allclose(qplate_apply(pol).amplitudes, hardy_state(g).amplitudes, atol=1e-15)

    def test_rejects_nonzero_oam(self):
        with pytest.raises(UnsupportedModeError):
            qplate_apply([1, 0], oam=1)

    @given(amps, amps, amps, amps)
    def test_isometry(self, a0, a1, b0, b1):
        a, b = np.array([a0, a1]), np.array([b0, b1])
        if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
            return
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        inner_out = np.vdot(qplate_apply(a).amplitudes, qplate_apply(b).amplitudes)
        assert abs(inner_out - np.vdot(a, b)) <= 1e-12


class TestPrepareHardy:
    def test_zero(self):
        assert prepare_hardy(0).same_ray(StateVector([0, 1, 0, 0]))

    def test_optimum(self):
        g = math.radians(24.9)
        assert prepare_hardy(g).overlap(hardy_state(g)) >= 1 - 1e-10

    @pytest.mark.parametrize("g", [0.0, 0.1, math.pi / 8, math.radians(24.9), math.pi / 4])
    def test_intermediate_polarization(self, g):
        spin = jones_to_spin(hardy_pipeline(g).polarization())
        target = np.array([-math.sin(g), math.cos(g)])
        assert abs(abs(np.vdot(target, spin)) ** 2 - 1) <= 1e-12

    def test_grid(self):
        for g in np.linspace(0, math.pi / 4, 100):
            assert prepare_hardy(g).overlap(hardy_state(g)) >= 1 - 1e-10

    @pytest.mark.parametrize("g", [0.0, 0.2, math.radians(24.9)])
    def test_flipped_convention_is_detected(self, g):
        with pytest.raises(ConventionMismatchError) as info:
            prepare_hardy(g, retardance_sign=-1)
        assert info.value.overlap < 0.6

    def test_range(self):
        with pytest.raises(ValueError):
            prepare_hardy(1.0)
