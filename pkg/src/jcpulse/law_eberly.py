"""Analytic compiler: state preparation and unitary synthesis as per-block rotations.

A BlockRotationProgram is an abstract pulse program: an ordered list of
layers, each holding SU(2) rotations on disjoint blocks of one family.  The
compiler empties target columns level by level, top down.  For a column
being steered to |n s>:

- a family-1 rotation on block m gathers the population of h1_m into
  |m down>,
- a family-2 rotation on block m moves |m down> into |m-1 up>,

repeating from m = N down to n+1, with a final phase-zeroing transfer
(torque vector acquiring a z-component) landing exactly on |n s>.  Column
(N, up) needs no transfers, only a family-2 z-rotation on block N+1 to
cancel its leftover phase; within the computational space that block is the
single state |N up>, so the layer is diagonal and leaks nothing.

Programs for targets (rather than state preparation) are built by compiling
the reduction R with R U = 1 and inverting it layer by layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import SPIN_DOWN, SPIN_UP, ModeSpace, embed_block, flat_index
from .pulses import su2_angle_axis, su2_rotation


@dataclass(frozen=True)
class BlockRotation:
    family: int
    block: int
    angle: float
    axis: tuple[float, float, float]

    def __post_init__(self):
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-12:
            raise ValueError("rotation axis must be a unit vector")

    def matrix2(self) -> np.ndarray:
        return su2_rotation(self.angle, np.asarray(self.axis))

    def inverse(self) -> "BlockRotation":
        return BlockRotation(self.family, self.block, -self.angle, self.axis)

    @property
    def is_identity(self) -> bool:
        return self.angle == 0.0

    def to_json(self) -> dict:
        return {"family": self.family, "block": self.block,
                "angle": self.angle, "axis": list(self.axis)}

    @classmethod
    def from_json(cls, rec: dict) -> "BlockRotation":
        return cls(int(rec["family"]), int(rec["block"]),
                   float(rec["angle"]), tuple(rec["axis"]))


@dataclass(frozen=True)
class BlockRotationProgram:
    layers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(l) for l in self.layers))
        for layer in self.layers:
            fams = {r.family for r in layer}
            blocks = [r.block for r in layer]
            if len(fams) > 1:
                raise ValueError("a layer must hold rotations of one family")
            if len(set(blocks)) != len(blocks):
                raise ValueError("a layer must hold at most one rotation per block")

    def __iter__(self):
        return iter(self.layers)

    def __len__(self):
        return len(self.layers)

    def rotations(self):
        for layer in self.layers:
            yield from layer

    def inverse(self) -> "BlockRotationProgram":
        return BlockRotationProgram(tuple(
            tuple(r.inverse() for r in layer) for layer in reversed(self.layers)))

    def to_json(self) -> list:
        return [[r.to_json() for r in layer] for layer in self.layers]

    @classmethod
    def from_json(cls, recs: list) -> "BlockRotationProgram":
        return cls(tuple(tuple(BlockRotation.from_json(r) for r in layer)
                         for layer in recs))


def two_level_transfer(amp_a: complex, amp_b: complex,
                       zero_phase: bool = False) -> tuple[float, np.ndarray]:
    """Rotation (angle, axis) mapping the state (amp_a, amp_b) to (0, r e^{i gamma}).

    Without zero_phase the axis lies in the xy-plane and gamma = arg(amp_b);
    with zero_phase a z-rotation is folded in so gamma = 0 exactly (the axis
    acquires a z-component).  Both amplitudes zero gives the identity.
    """
    ra, rb = abs(amp_a), abs(amp_b)
    if ra == 0.0 and rb == 0.0:
        return 0.0, np.array([0.0, 0.0, 1.0])
    if ra == 0.0:
        if not zero_phase:
            return 0.0, np.array([0.0, 0.0, 1.0])
        u = np.eye(2, dtype=complex)
    else:
        pa = float(np.angle(amp_a))
        pb = float(np.angle(amp_b)) if rb > 0 else 0.0
        theta = 2.0 * np.arctan2(ra, rb)
        alpha = pb - pa + np.pi / 2.0
        u = su2_rotation(theta, np.array([np.cos(alpha), np.sin(alpha), 0.0]))
    if zero_phase:
        out_phase = float(np.angle(u[1, 0] * amp_a + u[1, 1] * amp_b))
        u = su2_rotation(-2.0 * out_phase, np.array([0.0, 0.0, 1.0])) @ u
    return su2_angle_axis(u)


def _block2_indices(trunc: int, family: int, block: int) -> list[int]:
    if family == 1:
        return [flat_index(block, SPIN_UP), flat_index(block, SPIN_DOWN)]
    if block == 0:
        return [flat_index(0, SPIN_DOWN)]
    idx = [flat_index(block - 1, SPIN_UP)]
    if block <= trunc:
        idx.append(flat_index(block, SPIN_DOWN))
    return idx


def apply_rotation(state_or_matrix: np.ndarray, trunc: int,
                   rot: BlockRotation) -> np.ndarray:
    """Apply a block rotation in place to a state vector or to matrix columns."""
    idx = _block2_indices(trunc, rot.family, rot.block)
    u = rot.matrix2()
    if len(idx) == 1:
        if abs(rot.axis[0]) > 1e-12 or abs(rot.axis[1]) > 1e-12:
            raise ValueError("degenerate block admits only z-axis rotations")
        state_or_matrix[idx[0]] = u[0, 0] * state_or_matrix[idx[0]]
    else:
        state_or_matrix[idx] = u @ state_or_matrix[idx]
    return state_or_matrix


def evaluate(space: ModeSpace, program: BlockRotationProgram,
             trunc: int | None = None) -> np.ndarray:
    """Exact matrix of the program, identity on every untouched block."""
    if trunc is None:
        trunc = space.n_comp
    d = 2 * (trunc + 1)
    u = np.eye(d, dtype=complex)
    for layer in program:
        for rot in layer:
            apply_rotation(u, trunc, rot)
    return u


def rotation_matrix(space: ModeSpace, rot: BlockRotation,
                    trunc: int | None = None) -> np.ndarray:
    if trunc is None:
        trunc = space.n_comp
    return embed_block(trunc, rot.family, rot.block, rot.matrix2())


def _reduce_column(column: np.ndarray, n: int, s: int, n_comp: int,
                   emit) -> None:
    """Emit rotation layers steering `column` to |n s> with zero phase.

    `emit(rot)` must apply the rotation to the working state and record it.
    The rotations only touch blocks at or above the target, so previously
    prepared basis states (all below) are untouched by construction.
    """
    for m in range(n_comp, n, -1):
        a = column[flat_index(m, SPIN_UP)]
        b = column[flat_index(m, SPIN_DOWN)]
        angle, axis = two_level_transfer(a, b)
        emit(BlockRotation(1, m, angle, tuple(axis)))
        # family-2 block basis is (|m-1 up>, |m down>); transfer to the
        # upper member is the swapped-basis transfer, final one phase-zeroed
        last = (s == SPIN_UP) and (m == n + 1)
        a = column[flat_index(m, SPIN_DOWN)]
        b = column[flat_index(m - 1, SPIN_UP)]
        angle, axis = two_level_transfer(a, b, zero_phase=last)
        ax, ay, az = axis
        emit(BlockRotation(2, m, angle, (ax, -ay, -az)))
    if s == SPIN_DOWN:
        a = column[flat_index(n, SPIN_UP)]
        b = column[flat_index(n, SPIN_DOWN)]
        angle, axis = two_level_transfer(a, b, zero_phase=True)
        emit(BlockRotation(1, n, angle, tuple(axis)))
    elif n == n_comp:
        # nothing to transfer; cancel the residual phase of |N up> with a
        # family-2 z-rotation on block N+1 (diagonal within the computational
        # space, so nothing leaks)
        phase = float(np.angle(column[flat_index(n_comp, SPIN_UP)]))
        emit(BlockRotation(2, n_comp + 1, 2.0 * phase, (0.0, 0.0, 1.0)))


def state_prep(space: ModeSpace, state: np.ndarray) -> BlockRotationProgram:
    """Program mapping `state` to |0 down> exactly (phase zeroed)."""
    n_comp = space.n_comp
    d = space.dim_comp
    if state.shape != (d,):
        raise ValueError(f"state must live on the computational space, dim {d}")
    if abs(np.linalg.norm(state) - 1.0) > 1e-9:
        raise ValueError("state must be normalized")
    work = state.astype(complex).copy()
    layers = []

    def emit(rot):
        apply_rotation(work, n_comp, rot)
        layers.append((rot,))

    _reduce_column(work, 0, SPIN_DOWN, n_comp, emit)
    return BlockRotationProgram(tuple(layers))


def compile_unitary(space: ModeSpace, target: np.ndarray) -> BlockRotationProgram:
    """Program reproducing `target` on the computational space, phase-exactly.

    Columns are prepared in the order |0 down>, |0 up>, |1 down>, ...; each
    sub-program maps the current image of |n s> to |n s> while leaving the
    already-prepared basis states exact fixed points.
    """
    d = space.dim_comp
    if target.shape != (d, d):
        raise ValueError(f"target must be {d}x{d}")
    if np.abs(target @ target.conj().T - np.eye(d)).max() > 1e-9:
        raise ValueError("target must be unitary")
    n_comp = space.n_comp
    work = target.astype(complex).copy()
    layers = []

    def emit(rot):
        apply_rotation(work, n_comp, rot)
        layers.append((rot,))

    for n in range(n_comp + 1):
        for s in (SPIN_DOWN, SPIN_UP):
            _reduce_column(work[:, flat_index(n, s)], n, s, n_comp, emit)
    # layers reduce target to the identity; the program for the target is
    # the inverse in reverse order
    return BlockRotationProgram(tuple(layers)).inverse()
