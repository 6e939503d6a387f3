"""Timing comparison of the compiled kernels against the numpy fallback.

Run as a script; each kernel is timed on workloads shaped like the inner
loop of the sideband-sequence optimizers.  The compiled extension is used
as imported; the fallback is loaded explicitly so both are measured in one
process regardless of JCPULSE_PURE_PY.
"""

import time

import numpy as np

from jcpulse import _kernels_py, kernels
from jcpulse.hilbert import build_space
from jcpulse.semi_analytic import VGateSpec, _block_weights, v_gate_family2_blocks


def timeit(fn, *args, repeat=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_block_pulses(impl, m, n_blocks, rng):
    g = rng.uniform(0, 1, m)
    delta = rng.uniform(-1, 1, m)
    beta = rng.uniform(0, 2 * np.pi, m)
    dur = np.full(m, np.pi)
    return timeit(impl.sideband_block_pulses, g, delta, beta, dur, n_blocks)


def bench_block_chain(impl, m, n_blocks, rng):
    pulses = np.asarray(kernels.sideband_block_pulses(
        rng.uniform(0, 1, m), rng.uniform(-1, 1, m),
        rng.uniform(0, 2 * np.pi, m), np.full(m, np.pi), n_blocks))
    return timeit(impl.block_chain, pulses)


def bench_vsa(impl, m, n_comp, rng):
    space = build_space(n_comp)
    spec = VGateSpec(1, n_comp, n_comp - 1, n_comp)
    tgt = np.ascontiguousarray(v_gate_family2_blocks(space, spec))
    wmode, d_perp = _block_weights(space, spec)
    x = rng.uniform(0, 2 * np.pi, 2 * m)
    return timeit(impl.vsa_objective_grad, x, n_comp + 1, tgt, wmode,
                  int(d_perp), float(space.dim_comp))


def bench_bus(impl, m, n_comp, rng):
    from jcpulse.twomode import _bus_weights, bus_blocks

    tgt = np.ascontiguousarray(bus_blocks(n_comp, n_comp + 1))
    wmode, d_perp, norm = _bus_weights(n_comp)
    x = rng.uniform(-2, 2, m)
    return timeit(impl.bus_objective_grad, x, np.pi, n_comp + 1, tgt, wmode,
                  d_perp, norm)


def main():
    rng = np.random.default_rng(0)
    if not kernels.IS_COMPILED:
        print("warning: compiled extension unavailable, comparing the "
              "fallback against itself")
    cases = [
        ("sideband_block_pulses m=24 N=6",
         lambda impl: bench_block_pulses(impl, 24, 7, rng)),
        ("block_chain           m=24 N=6",
         lambda impl: bench_block_chain(impl, 24, 7, rng)),
        ("vsa_objective_grad    m=24 N=6",
         lambda impl: bench_vsa(impl, 24, 6, rng)),
        ("bus_objective_grad    m=8  N=2",
         lambda impl: bench_bus(impl, 8, 2, rng)),
    ]
    print(f"{'kernel':<34}{'compiled':>12}{'pure-py':>12}{'speedup':>10}")
    for name, bench in cases:
        tc = bench(kernels)
        tp = bench(_kernels_py)
        print(f"{name:<34}{tc * 1e6:>10.1f}us{tp * 1e6:>10.1f}us"
              f"{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
