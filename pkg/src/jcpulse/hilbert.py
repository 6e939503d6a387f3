"""Basis indexing, operators and projectors for the truncated oscillator-spin space.

A state |n s> with oscillator level n and spin s is stored at flat index
2n + (0 for spin down, 1 for spin up), so the dimension at truncation L is
2(L+1).  Two families of invariant two-dimensional subspaces organize all
pulse propagators:

- family 1: h1_n = {|n up>, |n down>}, invariant under the spin drive,
- family 2: h2_n = {|n-1 up>, |n down>} (n >= 1) and h2_0 = {|0 down>},
  invariant under the spin-oscillator coupling.

Within a family-2 block the basis order is (|n-1 up>, |n down>), which makes
the block Pauli operators the ordinary sigma_x, sigma_y, sigma_z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPIN_DOWN = 0
SPIN_UP = 1

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class ConfigurationError(ValueError):
    """Invalid space or operator parameters."""


@dataclass(frozen=True)
class ModeSpace:
    """Truncation bookkeeping: N < n_pad < n_opt < n_check.

    n_comp is the highest computational oscillator level (the qudit has
    n_comp+1 levels), n_pad the highest un-penalized level, n_opt the
    highest level simulated during optimization and n_check the truncation
    used for final verification.
    """

    n_comp: int
    n_pad: int
    n_opt: int
    n_check: int

    def __post_init__(self):
        if self.n_comp < 1:
            raise ConfigurationError("n_comp must be >= 1")
        if not (self.n_comp < self.n_pad < self.n_opt < self.n_check):
            raise ConfigurationError(
                "require n_comp < n_pad < n_opt < n_check, got "
                f"{self.n_comp}, {self.n_pad}, {self.n_opt}, {self.n_check}"
            )

    def dim(self, trunc: int) -> int:
        """Dimension of the space truncated at oscillator level trunc."""
        return 2 * (trunc + 1)

    @property
    def dim_comp(self) -> int:
        return self.dim(self.n_comp)


@dataclass(frozen=True)
class BasisIndex:
    n: int
    s: int  # SPIN_DOWN or SPIN_UP

    @property
    def flat(self) -> int:
        return 2 * self.n + self.s

    @classmethod
    def from_flat(cls, flat: int) -> "BasisIndex":
        return cls(flat // 2, flat % 2)


def build_space(n_comp: int, n_pad: int | None = None, n_opt: int | None = None,
                n_check: int | None = None) -> ModeSpace:
    """Validated ModeSpace; defaults n_pad = N+3, n_opt = N+5, n_check = 4*n_opt."""
    if n_pad is None:
        n_pad = n_comp + 3
    if n_opt is None:
        n_opt = n_comp + 5
    if n_check is None:
        n_check = 4 * n_opt
    return ModeSpace(n_comp, n_pad, n_opt, n_check)


def flat_index(n: int, s: int) -> int:
    return 2 * n + s


def basis_state(trunc: int, n: int, s: int) -> np.ndarray:
    v = np.zeros(2 * (trunc + 1), dtype=complex)
    v[flat_index(n, s)] = 1.0
    return v


def comp_projector(space: ModeSpace, trunc: int) -> np.ndarray:
    """Projector onto the computational space (levels 0..n_comp, both spins)."""
    d = 2 * (trunc + 1)
    p = np.zeros((d, d), dtype=complex)
    k = 2 * (space.n_comp + 1)
    p[:k, :k] = np.eye(k)
    return p


def proj_h1(trunc: int, n: int) -> np.ndarray:
    """Rank-2 projector onto h1_n = {|n up>, |n down>}."""
    if not 0 <= n <= trunc:
        raise ConfigurationError(f"h1 block {n} out of range for truncation {trunc}")
    d = 2 * (trunc + 1)
    p = np.zeros((d, d), dtype=complex)
    p[2 * n, 2 * n] = 1.0
    p[2 * n + 1, 2 * n + 1] = 1.0
    return p


def h2_members(trunc: int, n: int) -> list[int]:
    """Flat indices spanning h2_n at the given truncation, upper state first.

    n = 0 is the one-dimensional block {|0 down>}; n = trunc+1 degenerates to
    {|trunc up>}, the top of the truncated ladder.
    """
    if not 0 <= n <= trunc + 1:
        raise ConfigurationError(f"h2 block {n} out of range for truncation {trunc}")
    if n == 0:
        return [flat_index(0, SPIN_DOWN)]
    members = [flat_index(n - 1, SPIN_UP)]
    if n <= trunc:
        members.append(flat_index(n, SPIN_DOWN))
    return members


def proj_h2(trunc: int, n: int) -> np.ndarray:
    """Projector onto h2_n; rank 2 except for n = 0 and n = trunc+1 (rank 1)."""
    d = 2 * (trunc + 1)
    p = np.zeros((d, d), dtype=complex)
    for i in h2_members(trunc, n):
        p[i, i] = 1.0
    return p


def pauli_block(trunc: int, family: int, axis: str, n: int) -> np.ndarray:
    """Block Pauli operator, zero outside its subspace.

    Family 1 is the ordinary spin Pauli restricted to h1_n; family 2 the
    sigma_{j,n} operators on h2_n, with sigma_{j,0} = 0 by definition.
    """
    if family not in (1, 2):
        raise ConfigurationError(f"unknown family {family}")
    if axis not in PAULI:
        raise ConfigurationError(f"unknown axis {axis!r}")
    d = 2 * (trunc + 1)
    op = np.zeros((d, d), dtype=complex)
    if family == 1:
        idx = [flat_index(n, SPIN_UP), flat_index(n, SPIN_DOWN)]
    else:
        if n == 0:
            return op
        idx = h2_members(trunc, n)
        if len(idx) == 1:
            # degenerate top block: only the sigma_z diagonal survives
            if axis == "z":
                op[idx[0], idx[0]] = 1.0
            return op
    op[np.ix_(idx, idx)] = PAULI[axis]
    return op


def embed_block(trunc: int, family: int, n: int, block: np.ndarray) -> np.ndarray:
    """Identity matrix with a 2x2 block written into subspace (family, n)."""
    d = 2 * (trunc + 1)
    u = np.eye(d, dtype=complex)
    if family == 1:
        idx = [flat_index(n, SPIN_UP), flat_index(n, SPIN_DOWN)]
    else:
        idx = h2_members(trunc, n)
    if len(idx) == 1:
        u[idx[0], idx[0]] = block[0, 0]
    else:
        u[np.ix_(idx, idx)] = block
    return u


def opt_subspace_projector(space: ModeSpace, a: int, n: int,
                           n_script: int) -> tuple[np.ndarray, int]:
    """Projector onto the subspace optimized for a V gate, plus d_perp.

    Returns (P, d_perp) on the computational truncation, where d_perp is the
    dimension of the computational space orthogonal to P.  The h2_{N+1}
    contribution is restricted to its computational member |N up>, so
    rank(P) + d_perp = 2(N+1) always.
    """
    N = space.n_comp
    if a not in (1, 2):
        raise ConfigurationError(f"unknown family {a}")
    if n < n_script + 1:
        raise ConfigurationError(f"need n >= n_script+1, got n={n}, n_script={n_script}")
    if a == 1:
        if n > N:
            raise ConfigurationError(f"family-1 block {n} above n_comp={N}")
        if n != n_script + 1:
            blocks = set(range(1, n_script + 2))
        else:
            blocks = set(range(1, n_script + 1))
        if n != N:
            blocks |= {n, n + 1, N + 1}
        else:
            blocks |= {N, N + 1}
    else:
        if n > N + 1:
            raise ConfigurationError(f"family-2 block {n} above n_comp+1={N + 1}")
        blocks = set(range(1, n_script + 1)) | {n, N + 1}
    d = space.dim_comp
    p = np.zeros((d, d), dtype=complex)
    rank = 0
    for b in sorted(blocks):
        for i in h2_members(N, b):
            p[i, i] = 1.0
            rank += 1
    return p, d - rank
