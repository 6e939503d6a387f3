import numpy as np
import pytest

from jcpulse import direct_numeric as dn
from jcpulse.hilbert import SPIN_DOWN, SPIN_UP, build_space, flat_index
from jcpulse.pulses import T_G, sequence_unitary

RNG = np.random.default_rng(4)


def _random_controls(n_steps, dt, seed=0):
    rng = np.random.default_rng(seed)
    return dn.PiecewiseControls(
        dt, rng.uniform(0, 0.9, n_steps), rng.uniform(-0.9, 0.9, n_steps),
        rng.uniform(0, 2 * np.pi, n_steps))


# ---------------------------------------------------------------------------
# target and plumbing


def test_cinc_prime_target_permutation(space2):
    u = dn.cinc_prime_target(space2)
    d = space2.dim_comp
    assert np.abs(u @ u.conj().T - np.eye(d)).max() < 1e-15
    for n in range(3):
        dn_idx = flat_index(n, SPIN_DOWN)
        assert u[dn_idx, dn_idx] == 1.0
        assert u[flat_index((n + 1) % 3, SPIN_UP), flat_index(n, SPIN_UP)] == 1.0
    # cubed increment is the identity on the up ladder
    assert np.abs(np.linalg.matrix_power(u, 3) - np.eye(d)).max() < 1e-15


def test_controls_validation():
    with pytest.raises(ValueError):
        dn.PiecewiseControls(0.0, [0.1], [0.0], [0.0])
    with pytest.raises(ValueError):
        dn.PiecewiseControls(1.0, [0.1, 0.2], [0.0], [0.0])
    ctrl = _random_controls(5, 0.5 * T_G)
    assert ctrl.n_steps == 5
    assert ctrl.t_f == pytest.approx(2.5 * T_G)


def test_controls_param_round_trip():
    ctrl = _random_controls(4, 0.5 * T_G, seed=2)
    back = dn.PiecewiseControls.from_params(ctrl.params(), ctrl.dt)
    assert np.array_equal(back.chi, ctrl.chi)
    assert np.array_equal(back.delta, ctrl.delta)
    assert np.array_equal(back.phi, ctrl.phi)


def test_step_unitary_matches_sequence_propagator(space2):
    """Each eigh-built step equals the pulse-level propagator of the
    equivalent full-strength general pulse."""
    ctrl = _random_controls(3, 0.5 * T_G, seed=7)
    trunc = space2.n_opt
    u_steps = np.eye(2 * (trunc + 1), dtype=complex)
    for s in dn._step_unitaries(trunc, ctrl):
        u_steps = s @ u_steps
    u_seq = sequence_unitary(trunc, ctrl.to_sequence())
    assert np.abs(u_steps - u_seq).max() < 1e-10


def test_step_unitary_is_unitary(space2):
    u = dn._step_unitary(space2.n_opt, 0.5 * T_G, 0.3, -0.2, 1.0)
    assert np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() < 1e-12


# ---------------------------------------------------------------------------
# objective


def test_simulate_identity_controls_give_low_fidelity(space2):
    tgt = dn.cinc_prime_target(space2)
    f, leak, cost = dn.simulate(space2, tgt, _random_controls(4, 0.5 * T_G))
    assert 0.0 <= f <= 1.0
    assert leak >= 0.0
    assert cost == pytest.approx(1.0 - f + 100.0 * leak)


def test_cost_and_grad_value_matches_simulate(space2):
    tgt = dn.cinc_prime_target(space2)
    ctrl = _random_controls(4, 0.5 * T_G, seed=3)
    c0, _ = dn._cost_and_grad(ctrl.params(), space2, tgt, ctrl.dt, 100.0, 1e-6)
    f, leak, cost = dn.simulate(space2, tgt, ctrl, w=100.0)
    assert c0 == pytest.approx(cost, abs=1e-10)


def test_cost_and_grad_matches_naive_fd(space2):
    tgt = dn.cinc_prime_target(space2)
    ctrl = _random_controls(3, 0.5 * T_G, seed=5)
    params = ctrl.params()
    h = 1e-6
    _, grad = dn._cost_and_grad(params, space2, tgt, ctrl.dt, 100.0, h)
    for i in range(len(params)):
        pp, pm = params.copy(), params.copy()
        pp[i] += h
        pm[i] -= h
        fp, _, cp = dn.simulate(space2, tgt,
                                dn.PiecewiseControls.from_params(pp, ctrl.dt))
        fm, _, cm = dn.simulate(space2, tgt,
                                dn.PiecewiseControls.from_params(pm, ctrl.dt))
        assert grad[i] == pytest.approx((cp - cm) / (2 * h), abs=1e-7)


def test_leakage_shrinks_when_padding_grows():
    """The same controls leak less probability into the penalty band when
    the computational band is given more padding below it."""
    tight = build_space(2, n_pad=3, n_opt=7)
    wide = build_space(2, n_pad=5, n_opt=7)
    ctrl = _random_controls(4, 0.5 * T_G, seed=11)
    tgt = dn.cinc_prime_target(tight)
    _, leak_tight, _ = dn.simulate(tight, tgt, ctrl)
    _, leak_wide, _ = dn.simulate(wide, tgt, ctrl)
    assert leak_wide <= leak_tight + 1e-12


# ---------------------------------------------------------------------------
# optimizer


@pytest.fixture(scope="module")
def quick_run():
    space = build_space(2)
    tgt = dn.cinc_prime_target(space)
    cfg = dn.OptimizeConfig(restarts=2, maxiter=300)
    run = dn.optimize_piecewise(space, tgt, 0.5 * T_G, 6 * T_G,
                                config=cfg, seed=1)
    return space, tgt, run


def test_optimize_improves_over_random(quick_run):
    space, tgt, run = quick_run
    assert run.fidelity > 0.5
    assert run.cost < 0.5
    assert len(run.restart_log) == 2
    for rec in run.restart_log:
        assert len(rec) == 5
    assert run.controls.n_steps == 12


def test_optimize_is_deterministic(quick_run):
    space, tgt, run = quick_run
    again = dn.optimize_piecewise(space, tgt, 0.5 * T_G, 6 * T_G,
                                  config=dn.OptimizeConfig(restarts=2,
                                                           maxiter=300),
                                  seed=1)
    assert again.fidelity == run.fidelity
    assert np.array_equal(again.controls.chi, run.controls.chi)


def test_verify_in_larger_space_fills_check(quick_run):
    space, tgt, run = quick_run
    out = dn.verify_in_larger_space(space, run, tgt)
    assert out.fidelity_check is not None
    # confinement: check-space fidelity within the leakage scale of F
    assert abs(out.fidelity_check - out.fidelity) < max(1e-3, 50 * out.leak)


def test_run_json_round_trip(quick_run):
    _, _, run = quick_run
    back = dn.OptimizationRun.from_json(run.to_json())
    assert back.fidelity == run.fidelity
    assert back.leak == run.leak
    assert back.controls.dt == pytest.approx(run.controls.dt)
    assert np.allclose(back.controls.phi, run.controls.phi)


def test_optimize_rejects_bad_horizon(space2):
    with pytest.raises(ValueError):
        dn.optimize_piecewise(space2, dn.cinc_prime_target(space2),
                              T_G, 0.2 * T_G)
    with pytest.raises(ValueError):
        dn.optimize_piecewise(space2, np.eye(4), T_G, 2 * T_G)
