"""Pure-numpy fallback kernels for the hot per-block optimization loops.

A resonant (or detuned) sideband pulse acts on each two-level block h2_n as
a 2x2 rotation whose angle scales with sqrt(n).  The kernels below compute
products of such block rotations and the gradient of the block-trace
objective used by the sequence optimizers.  Block index n runs 0..n_blocks;
block 0 packs the two degenerate one-dimensional corners (|0 down> at [1,1]
and the truncation-top |trunc up> at [0,0]) as a diagonal 2x2.

Objective convention shared by both kernels:

    z = d_perp + sum_n w_n(T_n^dag B_n),   f = 1 - |z| / norm

where B_n is the ordered block product, T_n the target block, and the weight
mode w_n selects: 0 skip, 1 full trace, 2 only the [0,0] corner, 3 only the
[1,1] corner.
"""

from __future__ import annotations

import numpy as np

IS_COMPILED = False


def sideband_block_pulses(g, delta, beta, duration, n_blocks):
    """Per-pulse block rotations, shape (M, n_blocks+1, 2, 2).

    Arguments are arrays of shape (M,).  Entry [m, n] is the rotation that
    pulse m applies on h2_n; entry [m, 0] holds the two 1x1 detuning phases.
    """
    g = np.asarray(g, dtype=float)
    m = g.shape[0]
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (m,))
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (m,))
    duration = np.broadcast_to(np.asarray(duration, dtype=float), (m,))
    n = np.arange(n_blocks + 1, dtype=float)
    gn = g[:, None] * np.sqrt(n)[None, :]
    w = np.hypot(delta[:, None], gn)
    theta = duration[:, None] * w
    safe = np.where(w > 0, w, 1.0)
    ax = gn * np.cos(beta)[:, None] / safe
    ay = gn * np.sin(beta)[:, None] / safe
    az = -delta[:, None] / safe
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    out = np.empty((m, n_blocks + 1, 2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * az
    out[..., 0, 1] = -1j * s * (ax - 1j * ay)
    out[..., 1, 0] = -1j * s * (ax + 1j * ay)
    out[..., 1, 1] = c + 1j * s * az
    ph = delta * duration / 2.0
    out[:, 0, 0, 0] = np.exp(1j * ph)
    out[:, 0, 0, 1] = 0.0
    out[:, 0, 1, 0] = 0.0
    out[:, 0, 1, 1] = np.exp(-1j * ph)
    return out


def block_chain(pulse_blocks):
    """Ordered product over the pulse axis: B_n = U_{M-1,n} ... U_{0,n}."""
    m, nb = pulse_blocks.shape[0], pulse_blocks.shape[1]
    out = np.broadcast_to(np.eye(2, dtype=complex), (nb, 2, 2)).copy()
    for k in range(m):
        out = pulse_blocks[k] @ out
    return out


def _weighted_trace(tgt, blocks, wmode):
    z = 0.0 + 0.0j
    for n in range(tgt.shape[0]):
        w = wmode[n]
        if w == 0:
            continue
        t, b = tgt[n], blocks[n]
        if w == 1:
            z += np.conj(t[0, 0]) * b[0, 0] + np.conj(t[1, 0]) * b[1, 0] \
                + np.conj(t[0, 1]) * b[0, 1] + np.conj(t[1, 1]) * b[1, 1]
        elif w == 2:
            z += np.conj(t[0, 0]) * b[0, 0]
        else:
            z += np.conj(t[1, 1]) * b[1, 1]
    return z


def _chain_envs(pulse_blocks):
    """Prefix products P_m (pulses < m applied) and suffix products S_m
    (pulses >= m still to apply), so B = S_{m+1} U_m P_m for every m."""
    m, nb = pulse_blocks.shape[0], pulse_blocks.shape[1]
    eye = np.broadcast_to(np.eye(2, dtype=complex), (nb, 2, 2))
    prefix = np.empty((m + 1, nb, 2, 2), dtype=complex)
    suffix = np.empty((m + 1, nb, 2, 2), dtype=complex)
    prefix[0] = eye
    for k in range(m):
        prefix[k + 1] = pulse_blocks[k] @ prefix[k]
    suffix[m] = eye
    for k in range(m - 1, -1, -1):
        suffix[k] = suffix[k + 1] @ pulse_blocks[k]
    return prefix, suffix


def _assemble_grad(z, dz, norm):
    az = abs(z)
    if az == 0.0:
        return np.zeros(len(dz))
    return -np.real(np.conj(z) * np.asarray(dz)) / (az * norm)


def vsa_objective_grad(params, n_blocks, tgt, wmode, d_perp, norm):
    """Objective and gradient for a resonant fixed-length pulse sequence.

    params = [x_1..x_M, beta_1..beta_M] with g_m = sin^2(x_m) (g_max = 1)
    and per-pulse duration T_g/2 = pi.  Returns (f, grad).
    """
    m = params.shape[0] // 2
    x = params[:m]
    beta = params[m:]
    g = np.sin(x) ** 2
    dur = np.full(m, np.pi)
    pb = sideband_block_pulses(g, np.zeros(m), beta, dur, n_blocks)
    prefix, suffix = _chain_envs(pb)
    z = d_perp + _weighted_trace(tgt, prefix[m], wmode)
    f = 1.0 - abs(z) / norm

    n = np.arange(n_blocks + 1, dtype=float)
    sqrtn = np.sqrt(n)
    # generator of the resonant rotation: G = [[0, e^{-i beta}], [e^{i beta}, 0]]
    dz = np.zeros(2 * m, dtype=complex)
    for k in range(m):
        eb = np.exp(1j * beta[k])
        gmat = np.array([[0.0, np.conj(eb)], [eb, 0.0]], dtype=complex)
        u = pb[k]
        # d(theta_n)/dx = pi*sqrt(n)*sin(2x); dU = -i/2 * dtheta * G U
        du_dx = (-0.5j * np.pi * np.sin(2.0 * x[k])) * sqrtn[:, None, None] \
            * (gmat @ u)
        sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
        du_db = -0.5j * (sz @ u - u @ sz)
        du_dx[0] = 0.0  # block 0 is insensitive to a resonant pulse
        du_db[0] = 0.0
        env_pre = prefix[k]
        env_suf = suffix[k + 1]
        dz[k] = _weighted_trace(tgt, env_suf @ du_dx @ env_pre, wmode)
        dz[m + k] = _weighted_trace(tgt, env_suf @ du_db @ env_pre, wmode)
    return f, _assemble_grad(z, dz, norm)


def bus_objective_grad(deltas, dt, n_blocks, tgt, wmode, d_perp, norm):
    """Objective and gradient for a detuning-only sequence at g = g_max, beta = 0."""
    m = deltas.shape[0]
    g = np.ones(m)
    pb = sideband_block_pulses(g, deltas, np.zeros(m), np.full(m, dt), n_blocks)
    prefix, suffix = _chain_envs(pb)
    z = d_perp + _weighted_trace(tgt, prefix[m], wmode)
    f = 1.0 - abs(z) / norm

    n = np.arange(n_blocks + 1, dtype=float)
    sqrtn = np.sqrt(n)
    t = dt / 2.0
    dz = np.zeros(m, dtype=complex)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    for k in range(m):
        d = deltas[k]
        w = np.hypot(d, sqrtn)
        safe = np.where(w > 0, w, 1.0)
        c, s = np.cos(t * w), np.sin(t * w)
        # U_n = c I - i s (mx sx + mz sz), mx = sqrt(n)/w, mz = -d/w
        dc = -t * s * d / safe
        ds = t * c * d / safe
        dmx = -sqrtn * d / safe**3
        dmz = -n / safe**3
        mx = sqrtn / safe
        mz = -d / safe
        du = (dc[:, None, None] * eye
              - 1j * ds[:, None, None] * (mx[:, None, None] * sx
                                          + mz[:, None, None] * sz)
              - 1j * s[:, None, None] * (dmx[:, None, None] * sx
                                         + dmz[:, None, None] * sz))
        # block 0: diag(e^{i d t}, e^{-i d t}) with t = dt/2
        du[0] = np.diag([1j * t * np.exp(1j * d * dt / 2.0),
                         -1j * t * np.exp(-1j * d * dt / 2.0)])
        dz[k] = _weighted_trace(tgt, suffix[k + 1] @ du @ prefix[k], wmode)
    return f, _assemble_grad(z, dz, norm)
