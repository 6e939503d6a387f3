"""Control-pulse primitives and exact propagators.

Units: g_max = 1 internally, so the vacuum Rabi period is T_g = 2*pi and all
durations reported to users are in units of T_g.  The three pulse regimes:

- carrier (g = 0): H = -Delta*sz/2 + chi*(cos(phi)*sx + sin(phi)*sy)/2,
  the same SU(2) rotation on every h1_n block,
- sideband (chi = 0): H = -Delta*sz/2 + g*sum_n sqrt(n)*(cos(beta)*sx_n
  + sin(beta)*sy_n)/2, an SU(2) rotation on each h2_n block with a
  sqrt(n)-scaled coupling,
- general: both drives on, propagated by Hermitian eigendecomposition.

Sequences store pulses first-applied-first; the matrix of a sequence is the
reverse-ordered product.  A Repeat node raises a subsequence to an integer
power without expanding it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import PAULI, h2_members

G_MAX = 1.0
T_G = 2.0 * np.pi / G_MAX


def su2_rotation(theta: float, axis: np.ndarray) -> np.ndarray:
    """exp(-i*theta*(axis . sigma)/2) for a unit 3-vector axis."""
    ax, ay, az = axis
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    return np.array(
        [[c - 1j * s * az, -1j * s * (ax - 1j * ay)],
         [-1j * s * (ax + 1j * ay), c + 1j * s * az]],
        dtype=complex,
    )


def su2_angle_axis(u: np.ndarray) -> tuple[float, np.ndarray]:
    """Inverse of su2_rotation, up to the sign ambiguity (theta, m) ~ (-theta, -m).

    The input must be special unitary; a global phase of -1 is tolerated and
    absorbed into the angle.
    """
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    if abs(det - 1.0) > 1e-9:
        if abs(det + 1.0) < 1e-9:
            u = 1j * u
        else:
            raise ValueError(f"block is not special unitary, det = {det}")
    c = np.real(u[0, 0] + u[1, 1]) / 2.0
    sv = np.array([
        -np.imag(u[0, 1] + u[1, 0]) / 2.0,
        np.real(u[1, 0] - u[0, 1]) / 2.0,
        -np.imag(u[0, 0] - u[1, 1]) / 2.0,
    ])
    s = np.linalg.norm(sv)
    theta = 2.0 * np.arctan2(s, c)
    if s < 1e-15:
        # +I -> identity; -I -> full 2 pi turn (theta = 2 atan2(0, -1))
        return (0.0 if c > 0 else theta), np.array([0.0, 0.0, 1.0])
    return theta, sv / s


@dataclass(frozen=True)
class CarrierPulse:
    delta: float = 0.0
    chi: float = 0.0
    phi: float = 0.0
    duration: float = 0.0
    mode: int = 0

    kind = "carrier"

    def __post_init__(self):
        if self.duration < 0 or self.chi < 0:
            raise ValueError("carrier pulse needs duration >= 0 and chi >= 0")

    def block(self) -> np.ndarray:
        """The 2x2 rotation applied on every h1_n block."""
        w = np.hypot(self.delta, self.chi)
        if w == 0.0:
            return np.eye(2, dtype=complex)
        axis = np.array([
            self.chi * np.cos(self.phi), self.chi * np.sin(self.phi), -self.delta
        ]) / w
        return su2_rotation(self.duration * w, axis)


@dataclass(frozen=True)
class SidebandPulse:
    g: float = 0.0
    delta: float = 0.0
    beta: float = 0.0
    duration: float = 0.0
    mode: int = 0

    kind = "sideband"

    def __post_init__(self):
        if self.duration < 0 or self.g < 0:
            raise ValueError("sideband pulse needs duration >= 0 and g >= 0")

    def blocks(self, n_blocks: int) -> np.ndarray:
        """Array (n_blocks+1, 2, 2): the rotation on h2_n for n = 0..n_blocks.

        Entry 0 is the 1x1 phase on |0 down> embedded as the [1,1] corner of
        a diagonal 2x2; its [0,0] corner carries the phase of the degenerate
        top state |trunc up>, so entry n of the array is reusable at any
        truncation.
        """
        n = np.arange(n_blocks + 1)
        gn = self.g * np.sqrt(n)
        w = np.hypot(self.delta, gn)
        theta = self.duration * w
        with np.errstate(invalid="ignore"):
            ax = np.where(w > 0, gn * np.cos(self.beta) / np.where(w > 0, w, 1), 0.0)
            ay = np.where(w > 0, gn * np.sin(self.beta) / np.where(w > 0, w, 1), 0.0)
            az = np.where(w > 0, -self.delta / np.where(w > 0, w, 1), 0.0)
        c = np.cos(theta / 2.0)
        s = np.sin(theta / 2.0)
        out = np.empty((n_blocks + 1, 2, 2), dtype=complex)
        out[:, 0, 0] = c - 1j * s * az
        out[:, 0, 1] = -1j * s * (ax - 1j * ay)
        out[:, 1, 0] = -1j * s * (ax + 1j * ay)
        out[:, 1, 1] = c + 1j * s * az
        # block 0: pure detuning phases on the two degenerate 1x1 corners
        out[0] = np.diag([np.exp(1j * self.delta * self.duration / 2.0),
                          np.exp(-1j * self.delta * self.duration / 2.0)])
        return out


@dataclass(frozen=True)
class GeneralPulse:
    delta: float = 0.0
    chi: float = 0.0
    phi: float = 0.0
    g: float = 0.0
    beta: float = 0.0
    duration: float = 0.0
    mode: int = 0

    kind = "general"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("pulse duration must be >= 0")


Pulse = CarrierPulse | SidebandPulse | GeneralPulse


@dataclass(frozen=True)
class Repeat:
    """A subsequence applied `times` times in succession.

    The body is stored as a plain item tuple; a PulseSequence is unwrapped.
    """

    body: tuple
    times: int

    kind = "repeat"

    def __post_init__(self):
        body = self.body
        if isinstance(body, PulseSequence):
            body = body.items
        object.__setattr__(self, "body", tuple(body))
        if self.times < 0:
            raise ValueError("repeat count must be >= 0")

    @property
    def body_sequence(self) -> "PulseSequence":
        return PulseSequence(self.body)


@dataclass(frozen=True)
class PulseSequence:
    items: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.items + other.items)

    @property
    def total_duration(self) -> float:
        t = 0.0
        for it in self.items:
            if isinstance(it, Repeat):
                t += it.times * it.body_sequence.total_duration
            else:
                t += it.duration
        return t

    def pulse_count(self) -> int:
        c = 0
        for it in self.items:
            if isinstance(it, Repeat):
                c += it.times * it.body_sequence.pulse_count()
            else:
                c += 1
        return c

    def flattened(self):
        """Yield atomic pulses in application order, expanding repeats."""
        for it in self.items:
            if isinstance(it, Repeat):
                for _ in range(it.times):
                    yield from it.body_sequence.flattened()
            else:
                yield it

    def to_json(self) -> list[dict]:
        return [_item_to_json(it) for it in self.items]

    @classmethod
    def from_json(cls, records: list[dict]) -> "PulseSequence":
        return cls(tuple(_item_from_json(r) for r in records))


def _item_to_json(it) -> dict:
    if isinstance(it, Repeat):
        return {"kind": "repeat", "times": it.times, "body": it.body_sequence.to_json()}
    rec = {"kind": it.kind, "mode": it.mode, "delta": it.delta,
           "chi": getattr(it, "chi", 0.0), "phi": getattr(it, "phi", 0.0),
           "g": getattr(it, "g", 0.0), "beta": getattr(it, "beta", 0.0),
           "duration": it.duration / T_G}
    return rec


def _item_from_json(rec: dict):
    kind = rec.get("kind", "general")
    if kind == "repeat":
        return Repeat(PulseSequence.from_json(rec["body"]).items, int(rec["times"]))
    common = dict(mode=int(rec.get("mode", 0)), delta=float(rec.get("delta", 0.0)),
                  duration=float(rec.get("duration", 0.0)) * T_G)
    if kind == "carrier":
        return CarrierPulse(chi=float(rec.get("chi", 0.0)),
                            phi=float(rec.get("phi", 0.0)), **common)
    if kind == "sideband":
        return SidebandPulse(g=float(rec.get("g", 0.0)),
                             beta=float(rec.get("beta", 0.0)), **common)
    if kind == "general":
        return GeneralPulse(chi=float(rec.get("chi", 0.0)),
                            phi=float(rec.get("phi", 0.0)),
                            g=float(rec.get("g", 0.0)),
                            beta=float(rec.get("beta", 0.0)), **common)
    raise ValueError(f"unknown pulse kind {kind!r}")


def build_hamiltonian(trunc: int, delta: float, chi: float, phi: float,
                      g: float, beta: float) -> np.ndarray:
    """Truncated H = H_spin + H_coupling on levels 0..trunc (Hermitian)."""
    d = 2 * (trunc + 1)
    h = np.zeros((d, d), dtype=complex)
    hs = -0.5 * delta * PAULI["z"] + 0.5 * chi * (
        np.cos(phi) * PAULI["x"] + np.sin(phi) * PAULI["y"])
    # spin basis order within a level is (down, up) = flat parity (0, 1);
    # PAULI uses (up, down), so swap both axes
    hs = hs[::-1, ::-1]
    for n in range(trunc + 1):
        h[2 * n:2 * n + 2, 2 * n:2 * n + 2] = hs
    for n in range(1, trunc + 1):
        # <n down| a^dag sigma_- |n-1 up> = sqrt(n)
        cpl = 0.5 * g * np.sqrt(n) * np.exp(1j * beta)
        h[2 * n, 2 * n - 1] += cpl
        h[2 * n - 1, 2 * n] += np.conj(cpl)
    return h


def propagate_carrier(trunc: int, pulse: CarrierPulse) -> np.ndarray:
    """Exact carrier propagator: the same 2x2 rotation on every h1_n block."""
    b = pulse.block()
    d = 2 * (trunc + 1)
    u = np.zeros((d, d), dtype=complex)
    # block basis is (up, down); flat order within a level is (down, up)
    bb = b[::-1, ::-1]
    for n in range(trunc + 1):
        u[2 * n:2 * n + 2, 2 * n:2 * n + 2] = bb
    return u


def propagate_sideband(trunc: int, pulse: SidebandPulse) -> np.ndarray:
    """Exact sideband propagator, block diagonal over h2_n."""
    d = 2 * (trunc + 1)
    u = np.zeros((d, d), dtype=complex)
    blocks = pulse.blocks(trunc)
    u[0, 0] = blocks[0][1, 1]
    for n in range(1, trunc + 1):
        idx = h2_members(trunc, n)
        u[np.ix_(idx, idx)] = blocks[n]
    # degenerate top block: |trunc up> under pure detuning
    top = 2 * trunc + 1
    u[top, top] = np.exp(1j * pulse.delta * pulse.duration / 2.0)
    return u


def propagate_general(trunc: int, pulse: GeneralPulse) -> np.ndarray:
    """exp(-i*H*T) for the full truncated Hamiltonian, via eigendecomposition."""
    h = build_hamiltonian(trunc, pulse.delta, pulse.chi, pulse.phi,
                          pulse.g, pulse.beta)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * pulse.duration)) @ v.conj().T


def propagate(trunc: int, pulse: Pulse) -> np.ndarray:
    if isinstance(pulse, CarrierPulse):
        return propagate_carrier(trunc, pulse)
    if isinstance(pulse, SidebandPulse):
        return propagate_sideband(trunc, pulse)
    if isinstance(pulse, GeneralPulse):
        return propagate_general(trunc, pulse)
    raise TypeError(f"not a pulse: {pulse!r}")


def sequence_unitary(trunc: int, seq: PulseSequence) -> np.ndarray:
    """Ordered product of pulse propagators, first pulse rightmost."""
    d = 2 * (trunc + 1)
    u = np.eye(d, dtype=complex)
    for it in seq:
        if isinstance(it, Repeat):
            u = np.linalg.matrix_power(sequence_unitary(trunc, it.body_sequence), it.times) @ u
        else:
            u = propagate(trunc, it) @ u
    return u


def pulse_sqrt(pulse: Pulse) -> Pulse:
    """Same parameters at half duration; the propagator squares to the original."""
    return type(pulse)(**{**pulse.__dict__, "duration": pulse.duration / 2.0})


def pulse_dagger(pulse: Pulse) -> Pulse:
    """Pulse whose propagator is the exact inverse of the input's.

    Sideband: reverse the detuning and shift beta by pi; carrier: reverse the
    detuning and shift phi by pi.  A general pulse flips both drive phases.
    """
    kw = dict(pulse.__dict__)
    kw["delta"] = -pulse.delta
    if isinstance(pulse, CarrierPulse):
        kw["phi"] = pulse.phi + np.pi
    elif isinstance(pulse, SidebandPulse):
        kw["beta"] = pulse.beta + np.pi
    else:
        kw["phi"] = pulse.phi + np.pi
        kw["beta"] = pulse.beta + np.pi
    return type(pulse)(**kw)


def sequence_dagger(seq: PulseSequence) -> PulseSequence:
    """Elementwise pulse_dagger in reverse order; exact inverse sequence."""
    items = []
    for it in reversed(seq.items):
        if isinstance(it, Repeat):
            items.append(Repeat(sequence_dagger(PulseSequence(it.body)).items,
                                it.times))
        else:
            items.append(pulse_dagger(it))
    return PulseSequence(tuple(items))
