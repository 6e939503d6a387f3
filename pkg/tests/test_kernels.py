import numpy as np
import pytest

from jcpulse import _kernels_py, kernels
from jcpulse.hilbert import build_space
from jcpulse.pulses import PulseSequence, SidebandPulse, sequence_unitary
from jcpulse.semi_analytic import VGateSpec, _block_weights, v_gate_family2_blocks

try:
    from jcpulse import _core  # noqa: F401
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

N_BLOCKS = 4
RNG = np.random.default_rng(11)


def _random_pulses(m):
    return (RNG.uniform(0, 1, m), RNG.uniform(-1, 1, m),
            RNG.uniform(0, 2 * np.pi, m), RNG.uniform(0, 2 * np.pi, m))


def test_block_pulses_match_dense_propagator():
    g, delta, beta, dur = _random_pulses(3)
    pb = _kernels_py.sideband_block_pulses(g, delta, beta, dur, N_BLOCKS)
    for k in range(3):
        pulse = SidebandPulse(g=g[k], delta=delta[k], beta=beta[k],
                              duration=dur[k])
        dense = sequence_unitary(N_BLOCKS - 1, PulseSequence((pulse,)))
        # full blocks 1..N_BLOCKS-1 at truncation N_BLOCKS-1
        from jcpulse.hilbert import h2_members
        for b in range(1, N_BLOCKS):
            idx = h2_members(N_BLOCKS - 1, b)
            assert np.allclose(pb[k, b], dense[np.ix_(idx, idx)], atol=1e-12)
        assert np.isclose(pb[k, 0, 1, 1], dense[0, 0])       # |0 down>
        top = 2 * (N_BLOCKS - 1) + 1
        assert np.isclose(pb[k, 0, 0, 0], dense[top, top])   # |trunc up>


def test_block_chain_order():
    g, delta, beta, dur = _random_pulses(4)
    pb = _kernels_py.sideband_block_pulses(g, delta, beta, dur, N_BLOCKS)
    chain = np.asarray(_kernels_py.block_chain(pb))
    for b in range(N_BLOCKS + 1):
        ref = np.eye(2, dtype=complex)
        for k in range(4):
            ref = pb[k, b] @ ref
        assert np.allclose(chain[b], ref, atol=1e-12)


def _vsa_args(n_comp=3):
    space = build_space(n_comp)
    spec = VGateSpec(1, 3, 1, n_comp)
    tgt = np.ascontiguousarray(v_gate_family2_blocks(space, spec))
    wmode, d_perp = _block_weights(space, spec)
    return n_comp + 1, tgt, wmode, int(d_perp), float(space.dim_comp)


def test_vsa_gradient_matches_finite_differences():
    args = _vsa_args()
    m = 5
    params = np.concatenate([RNG.uniform(0, np.pi / 2, m),
                             RNG.uniform(0, 2 * np.pi, m)])
    f0, grad = _kernels_py.vsa_objective_grad(params, *args)
    h = 1e-7
    for i in range(len(params)):
        p1, p2 = params.copy(), params.copy()
        p1[i] += h
        p2[i] -= h
        fd = (_kernels_py.vsa_objective_grad(p1, *args)[0]
              - _kernels_py.vsa_objective_grad(p2, *args)[0]) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6)


def test_bus_gradient_matches_finite_differences():
    n_blocks = 3
    from jcpulse.twomode import _bus_weights, bus_blocks
    wmode, d_perp, norm = _bus_weights(2)
    tgt = np.ascontiguousarray(bus_blocks(2, n_blocks))
    deltas = RNG.uniform(-1, 1, 4)
    dt = np.pi
    f0, grad = _kernels_py.bus_objective_grad(deltas, dt, n_blocks, tgt,
                                              wmode, d_perp, norm)
    h = 1e-7
    for i in range(len(deltas)):
        p1, p2 = deltas.copy(), deltas.copy()
        p1[i] += h
        p2[i] -= h
        fd = (_kernels_py.bus_objective_grad(p1, dt, n_blocks, tgt, wmode,
                                             d_perp, norm)[0]
              - _kernels_py.bus_objective_grad(p2, dt, n_blocks, tgt, wmode,
                                               d_perp, norm)[0]) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_compiled_matches_pure_python():
    from jcpulse import _core
    g, delta, beta, dur = _random_pulses(6)
    pb_c = np.asarray(_core.sideband_block_pulses(g, delta, beta, dur, N_BLOCKS))
    pb_p = _kernels_py.sideband_block_pulses(g, delta, beta, dur, N_BLOCKS)
    assert np.allclose(pb_c, pb_p, atol=1e-13)
    assert np.allclose(np.asarray(_core.block_chain(pb_c)),
                       _kernels_py.block_chain(pb_p), atol=1e-13)

    args = _vsa_args()
    m = 5
    params = np.concatenate([RNG.uniform(0, np.pi / 2, m),
                             RNG.uniform(0, 2 * np.pi, m)])
    fc, gc = _core.vsa_objective_grad(params, *args)
    fp, gp = _kernels_py.vsa_objective_grad(params, *args)
    assert fc == pytest.approx(fp, abs=1e-13)
    assert np.allclose(np.asarray(gc), gp, atol=1e-12)


def test_selector_exposes_expected_symbols():
    for name in ("sideband_block_pulses", "block_chain", "vsa_objective_grad",
                 "bus_objective_grad"):
        assert hasattr(kernels, name)
    assert isinstance(kernels.IS_COMPILED, bool)
