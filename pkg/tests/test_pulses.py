import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcpulse.pulses import (
    T_G,
    CarrierPulse,
    GeneralPulse,
    PulseSequence,
    Repeat,
    SidebandPulse,
    build_hamiltonian,
    propagate,
    pulse_dagger,
    pulse_sqrt,
    sequence_dagger,
    sequence_unitary,
    su2_angle_axis,
    su2_rotation,
)

TRUNC = 4
DIM = 2 * (TRUNC + 1)


def expm_reference(pulse) -> np.ndarray:
    h = build_hamiltonian(TRUNC, pulse.delta, getattr(pulse, "chi", 0.0),
                          getattr(pulse, "phi", 0.0), getattr(pulse, "g", 0.0),
                          getattr(pulse, "beta", 0.0))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * pulse.duration)) @ v.conj().T


angles = st.floats(-10.0, 10.0, allow_nan=False)
unit = st.floats(-1.0, 1.0, allow_nan=False)


@given(theta=angles, a=unit, b=unit, c=unit)
def test_su2_round_trip(theta, a, b, c):
    norm = np.sqrt(a * a + b * b + c * c)
    if norm < 1e-3:
        return
    axis = np.array([a, b, c]) / norm
    u = su2_rotation(theta, axis)
    t2, ax2 = su2_angle_axis(u)
    assert np.allclose(su2_rotation(t2, ax2), u, atol=1e-12)


@given(delta=st.floats(-2, 2), chi=st.floats(0, 2), phi=st.floats(0, 6.3),
       dur=st.floats(0, 20))
@settings(max_examples=30, deadline=None)
def test_carrier_matches_hamiltonian(delta, chi, phi, dur):
    p = CarrierPulse(delta=delta, chi=chi, phi=phi, duration=dur)
    assert np.allclose(propagate(TRUNC, p), expm_reference(p), atol=1e-10)


@given(delta=st.floats(-2, 2), g=st.floats(0, 1), beta=st.floats(0, 6.3),
       dur=st.floats(0, 20))
@settings(max_examples=30, deadline=None)
def test_sideband_matches_hamiltonian(delta, g, beta, dur):
    p = SidebandPulse(delta=delta, g=g, beta=beta, duration=dur)
    assert np.allclose(propagate(TRUNC, p), expm_reference(p), atol=1e-10)


def test_general_pulse_unitary():
    p = GeneralPulse(delta=0.3, chi=0.7, phi=1.1, g=1.0, beta=0.4, duration=9.0)
    u = propagate(TRUNC, p)
    assert np.allclose(u @ u.conj().T, np.eye(DIM), atol=1e-12)
    assert np.allclose(u, expm_reference(p), atol=1e-10)


def test_resonant_sideband_leaves_ground_fixed():
    p = SidebandPulse(delta=0.0, g=1.0, beta=0.9, duration=3.0)
    u = propagate(TRUNC, p)
    assert abs(u[0, 0] - 1.0) < 1e-14


@pytest.mark.parametrize("pulse", [
    CarrierPulse(delta=0.4, chi=0.8, phi=0.3, duration=5.0),
    SidebandPulse(delta=-0.2, g=0.9, beta=2.0, duration=4.0),
    GeneralPulse(delta=0.1, chi=0.5, phi=1.0, g=0.7, beta=0.2, duration=3.0),
])
def test_pulse_sqrt_and_dagger(pulse):
    u = propagate(TRUNC, pulse)
    h = propagate(TRUNC, pulse_sqrt(pulse))
    assert np.allclose(h @ h, u, atol=1e-12)
    d = propagate(TRUNC, pulse_dagger(pulse))
    assert np.allclose(d @ u, np.eye(DIM), atol=1e-12)


def test_sequence_order_and_duration():
    a = CarrierPulse(chi=1.0, duration=1.0)
    b = SidebandPulse(g=1.0, duration=2.0)
    seq = PulseSequence((a, b))
    assert np.allclose(sequence_unitary(TRUNC, seq),
                       propagate(TRUNC, b) @ propagate(TRUNC, a))
    assert seq.total_duration == 3.0


def test_repeat_semantics():
    body = (SidebandPulse(g=0.6, beta=1.0, duration=1.3),
            CarrierPulse(chi=0.4, phi=0.2, duration=0.7))
    rep = PulseSequence((Repeat(body, 5),))
    flat = PulseSequence(body * 5)
    assert np.allclose(sequence_unitary(TRUNC, rep),
                       sequence_unitary(TRUNC, flat), atol=1e-12)
    assert rep.total_duration == pytest.approx(flat.total_duration)
    assert rep.pulse_count() == 10


def test_sequence_dagger_inverts_repeats():
    body = (SidebandPulse(g=0.6, beta=1.0, duration=1.3),
            CarrierPulse(chi=0.4, phi=0.2, duration=0.7))
    seq = PulseSequence((Repeat(body, 3), CarrierPulse(chi=1.0, duration=2.0)))
    u = sequence_unitary(TRUNC, seq)
    d = sequence_unitary(TRUNC, sequence_dagger(seq))
    assert np.allclose(d @ u, np.eye(DIM), atol=1e-12)


def test_json_round_trip():
    seq = PulseSequence((
        CarrierPulse(delta=0.2, chi=0.9, phi=1.5, duration=2.0),
        Repeat((SidebandPulse(g=1.0, beta=0.3, duration=T_G / 2),), 4),
        GeneralPulse(delta=0.1, chi=0.5, phi=1.0, g=0.7, beta=0.2,
                     duration=3.0, mode=2),
    ))
    back = PulseSequence.from_json(seq.to_json())
    assert np.allclose(sequence_unitary(TRUNC, back),
                       sequence_unitary(TRUNC, seq), atol=1e-12)
    assert back.total_duration == pytest.approx(seq.total_duration)
    assert back.items[2].mode == 2
