import numpy as np
import pytest

from conftest import haar_unitary, random_axis
from jcpulse import kernels, semi_analytic as sa
from jcpulse.fourier_synth import blocks_to_matrix, sequence_blocks
from jcpulse.hilbert import ConfigurationError, build_space
from jcpulse.law_eberly import BlockRotation, _block2_indices
from jcpulse.metrics import phase_min_error, subspace_objective
from jcpulse.pulses import T_G, sequence_unitary

RNG = np.random.default_rng(17)

QUICK = sa.OptimizeVConfig(m_start=2, m_max=12, restarts=8, maxiter=1000)


# ---------------------------------------------------------------------------
# gate specifications and exact targets


def test_spec_validation():
    sa.VGateSpec(1, 2, 1, 2)
    sa.VGateSpec(2, 3, 2, 2)       # family 2 reaches one block higher
    with pytest.raises(ConfigurationError):
        sa.VGateSpec(3, 1, 0, 2)
    with pytest.raises(ConfigurationError):
        sa.VGateSpec(1, 1, 1, 2)   # need n >= n_script + 1
    with pytest.raises(ConfigurationError):
        sa.VGateSpec(1, 3, 0, 2)   # family 1 tops out at n_comp


def test_spec_key_distinguishes_specs():
    keys = {s.key() for s in sa.v_specs_for_dimension(3)}
    assert len(keys) == len(sa.v_specs_for_dimension(3))


def test_v_gate_blocks_three_cases(space2):
    z = np.diag([-1j, 1j])
    b = sa.v_gate_family2_blocks(space2, sa.VGateSpec(2, 2, 0, 2))
    assert np.allclose(b[2], z) and np.allclose(b[1], np.eye(2))
    b = sa.v_gate_family2_blocks(space2, sa.VGateSpec(1, 2, 0, 2))
    assert np.allclose(b[2], z) and np.allclose(b[3], z)
    b = sa.v_gate_family2_blocks(space2, sa.VGateSpec(1, 1, 0, 2))
    assert np.allclose(b[1], np.eye(2)) and np.allclose(b[2], -np.eye(2))


def test_scalar_variant_is_phased_z_pi(space2):
    """At n = n_script + 1 the gate equals e^{-i pi/2} times z-pi on the
    carrier block, so it conjugates identically (the scalar cancels)."""
    u = sa.v_gate_target(space2, sa.VGateSpec(1, 1, 0, 2))
    idx = _block2_indices(space2.n_comp + 1, 1, 1)
    sub = u[np.ix_(idx, idx)]
    assert np.allclose(sub, np.exp(-0.5j * np.pi) * np.diag([-1j, 1j]))


def test_v_gate_target_unitary(space3):
    for spec in sa.v_specs_for_dimension(3):
        u = sa.v_gate_target(space3, spec)
        assert np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() < 1e-14


# ---------------------------------------------------------------------------
# kernel objective vs reference metric


@pytest.mark.parametrize("a,n,ns,n_comp", [
    (2, 1, 0, 2), (2, 3, 2, 2), (1, 2, 0, 2), (1, 1, 0, 2),
    (2, 2, 0, 3), (1, 3, 1, 3),
])
def test_kernel_objective_matches_metric(a, n, ns, n_comp):
    space = build_space(n_comp)
    spec = sa.VGateSpec(a, n, ns, n_comp)
    n_blocks = n_comp + 1
    tgt = np.ascontiguousarray(sa.v_gate_family2_blocks(space, spec))
    wmode, d_perp = sa._block_weights(space, spec)
    m = 5
    x = np.concatenate([RNG.uniform(0, np.pi / 2, m), RNG.uniform(0, 2 * np.pi, m)])
    val, _ = kernels.vsa_objective_grad(x, n_blocks, tgt, wmode, int(d_perp),
                                        float(space.dim_comp))
    g, beta = sa.sequence_from_params(x, m)
    run = sa.OptimizationRun(spec, m, 0, g, beta, 0.0, False)
    cand = blocks_to_matrix(space, sequence_blocks(run.to_sequence(), n_blocks))
    ref = subspace_objective(space, a, n, ns, sa.v_gate_target(space, spec), cand)
    assert val == pytest.approx(ref, abs=1e-12)


def test_kernel_gradient_matches_fd(space2):
    spec = sa.VGateSpec(2, 2, 1, 2)
    tgt = np.ascontiguousarray(sa.v_gate_family2_blocks(space2, spec))
    wmode, d_perp = sa._block_weights(space2, spec)
    args = (3, tgt, wmode, int(d_perp), float(space2.dim_comp))
    x = RNG.uniform(0, 2 * np.pi, 8)
    _, grad = kernels.vsa_objective_grad(x, *args)
    h = 1e-6
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd = (kernels.vsa_objective_grad(xp, *args)[0]
              - kernels.vsa_objective_grad(xm, *args)[0]) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=1e-6)


# ---------------------------------------------------------------------------
# optimizer


def test_optimize_v_converges_and_is_deterministic(space2):
    spec = sa.VGateSpec(2, 1, 0, 2)
    runs = [sa.optimize_v(space2, spec, 1e-8, config=QUICK, seed=3)
            for _ in range(2)]
    assert runs[0].success
    assert runs[0].achieved_error <= 1e-8
    assert np.array_equal(runs[0].g, runs[1].g)
    assert np.array_equal(runs[0].beta, runs[1].beta)
    assert runs[0].m_pulses == runs[1].m_pulses
    assert np.all(runs[0].g <= 1.0) and np.all(runs[0].g >= 0.0)
    assert runs[0].duration == runs[0].m_pulses * T_G / 2.0


def test_optimized_sequence_realizes_gate(space2):
    spec = sa.VGateSpec(1, 2, 1, 2)
    run = sa.optimize_v(space2, spec, 1e-9, config=QUICK, seed=0)
    assert run.success
    cand = blocks_to_matrix(space2, sequence_blocks(run.to_sequence(), 3))
    err = subspace_objective(space2, 1, 2, 1, sa.v_gate_target(space2, spec), cand)
    assert err <= 1e-9
    # resonant half-period pulses always fix |0 down>
    assert abs(cand[0, 0] - 1.0) < 1e-12


def test_optimize_v_rejects_bad_threshold(space2):
    with pytest.raises(ValueError):
        sa.optimize_v(space2, sa.VGateSpec(2, 1, 0, 2), 0.0)


def test_run_json_round_trip(space2):
    spec = sa.VGateSpec(2, 2, 1, 2)
    run = sa.OptimizationRun(spec, 3, 7, np.array([0.1, 0.5, 1.0]),
                             np.array([0.0, 2.0, 4.0]), 1e-9, True,
                             wall_time=1.5, iterate_log=[[3, 0, 1e-9]])
    back = sa.OptimizationRun.from_json(run.to_json())
    assert back.spec == spec
    assert np.array_equal(back.g, run.g)
    assert np.array_equal(back.beta, run.beta)
    assert back.achieved_error == run.achieved_error
    assert back.success and back.seed == 7


def test_cache_round_trip(tmp_path, space2):
    spec = sa.VGateSpec(2, 1, 0, 2)
    run = sa.optimize_v(space2, spec, 1e-8, config=QUICK, seed=0)
    cache = sa.VCache(str(tmp_path))
    cache.put(spec, 1e-8, run)
    fresh = sa.VCache(str(tmp_path))
    back = fresh.get(spec, 1e-8)
    assert back is not None and back.success
    assert np.array_equal(back.g, run.g)
    assert fresh.get(spec, 1e-7) is None  # threshold is part of the key


def test_cache_get_or_optimize_prefers_stored(tmp_path, space2):
    spec = sa.VGateSpec(2, 1, 0, 2)
    marker = sa.OptimizationRun(spec, 4, 99, np.full(4, 0.25), np.zeros(4),
                                1e-12, True)
    cache = sa.VCache(str(tmp_path))
    cache.put(spec, 1e-8, marker)
    got = sa.VCache(str(tmp_path)).get_or_optimize(space2, spec, 1e-8,
                                                   config=QUICK)
    assert got.seed == 99 and got.m_pulses == 4


# ---------------------------------------------------------------------------
# conjugation assembly with exact V gates


@pytest.mark.parametrize("fam,block,ns", [
    (1, 1, 0), (1, 2, 1), (1, 2, 0), (2, 1, 0), (2, 2, 1), (2, 2, 0), (2, 3, 2),
])
@pytest.mark.parametrize("xy_only", [True, False])
def test_assembled_rotation_with_exact_v(space2, fam, block, ns, xy_only):
    trunc = space2.n_comp + 1
    d = 2 * (trunc + 1)
    rot = BlockRotation(fam, block, 1.3, tuple(random_axis(RNG, xy_only=xy_only)))
    spec = sa.VGateSpec(fam, block, ns, 2)
    u = sa.assemble_u_matrix(space2, rot, sa.v_gate_target(space2, spec))
    assert np.abs(u @ u.conj().T - np.eye(d)).max() < 1e-12
    idx = _block2_indices(trunc, fam, block)
    assert np.abs(u[np.ix_(idx, idx)] - rot.matrix2()).max() < 1e-12
    lower = sorted({i for j in range(ns + 1)
                    for i in _block2_indices(trunc, fam, j)}
                   | ({0} if fam == 2 else set()))
    assert np.abs(u[:, lower] - np.eye(d)[:, lower]).max() < 1e-12


def test_assemble_u_pulse_form_matches_matrix_form(space2):
    """assemble_u with an optimized V sequence equals assemble_u_matrix with
    that sequence's matrix."""
    trunc = space2.n_comp + 1
    spec = sa.VGateSpec(2, 2, 1, 2)
    run = sa.optimize_v(space2, spec, 1e-8, config=QUICK, seed=1)
    assert run.success
    rot = BlockRotation(2, 2, 0.9, tuple(random_axis(RNG, xy_only=False)))
    seq = sa.assemble_u(space2, rot, run.to_sequence())
    v_mat = blocks_to_matrix(space2, sequence_blocks(run.to_sequence(), trunc))
    ref = sa.assemble_u_matrix(space2, rot, v_mat)
    assert np.abs(sequence_unitary(trunc, seq) - ref).max() < 1e-10


# ---------------------------------------------------------------------------
# full-gate compiler


def test_v_specs_cover_compiler_requests(space3):
    available = {s.key() for s in sa.v_specs_for_dimension(3)}
    requested = set()
    b = sa._embedded_target(space3, haar_unitary(space3.dim_comp, RNG))

    def emit(rot, spec):
        requested.add(spec.key())
        u = sa.assemble_u_matrix(space3, rot, sa.v_gate_target(space3, spec))
        b[:] = u @ b

    sa._eliminate(space3, b, emit)
    assert requested <= available


def test_v_specs_count(space2):
    assert len(sa.v_specs_for_dimension(2)) == 10


@pytest.mark.parametrize("n_comp", [1, 2, 3])
def test_compile_exact_v_machine_precision(n_comp):
    space = build_space(n_comp)
    target = haar_unitary(space.dim_comp, RNG)
    u = sa.compile_gate_exact_v(space, target)
    d = space.dim_comp
    report = phase_min_error(space, target, u[:d, :d], projector=np.eye(d))
    assert report.eta < 1e-12
    assert abs(report.optimal_phase) < 1e-9  # phase layer leaves no residue


def test_compile_sa_small_gate(tmp_path):
    space = build_space(1)
    target = haar_unitary(space.dim_comp, np.random.default_rng(5))
    cache = sa.VCache(str(tmp_path))
    seq, report, duration = sa.compile_gate_sa(
        space, target, eta=1e-3, cache=cache,
        config=sa.OptimizeVConfig(m_start=2, m_max=16, restarts=12))
    assert report.eta <= 1e-3
    assert duration > 0
    assert seq.pulse_count() > 0


def test_compile_sa_rejects_nonunitary(space2):
    with pytest.raises(ValueError):
        sa._embedded_target(space2, np.ones((6, 6)))


# ---------------------------------------------------------------------------
# budget arithmetic


def test_budget_arithmetic():
    assert sa.gate_count_sa(2) == 30
    assert sa.gate_count_sa(3) == 56
    assert sa.eps_threshold(1e-4, 2) == pytest.approx(1.1111111111111112e-07)
