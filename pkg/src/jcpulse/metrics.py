"""Error, fidelity and leakage functionals.

All norms are Frobenius, ||M|| = sqrt(Tr{M^dag M}).  The phase-minimized
error between a target T and candidate C on a projector P is

    raw^2 = ||P T P||^2 + ||P C P||^2 - 2 |Tr{P T^dag P C P}|

with optimal phase arg Tr{P T^dag P C P}.  The normalized squared error is
eta = raw^2 / (2 rank(P)), which equals raw^2 / (4(N+1)) on the full
computational projector, and relates to gate fidelity by F ~ 1 - 2 eta for
small errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import ModeSpace, comp_projector, opt_subspace_projector


@dataclass(frozen=True)
class ErrorReport:
    raw_error: float
    eta: float
    fidelity: float
    optimal_phase: float


def _proj_rank(projector: np.ndarray) -> int:
    return int(round(np.real(np.trace(projector))))


def phase_min_error(space: ModeSpace, target: np.ndarray, candidate: np.ndarray,
                    projector: np.ndarray | None = None) -> ErrorReport:
    """Phase-minimized Frobenius error report on a projector (default: comp space)."""
    if target.shape != candidate.shape:
        raise ValueError("target and candidate must share dimensions")
    if projector is None:
        trunc = target.shape[0] // 2 - 1
        projector = comp_projector(space, trunc)
    pt = projector @ target @ projector
    pc = projector @ candidate @ projector
    tr = np.trace(pt.conj().T @ pc)
    phase = float(np.angle(tr)) if abs(tr) > 0 else 0.0
    # direct subtraction at the optimal phase: the trace form of raw^2
    # cancels catastrophically once the error drops below sqrt(eps)
    raw_sq = float(np.linalg.norm(pt - np.exp(-1j * phase) * pc) ** 2)
    rank = _proj_rank(projector)
    eta = raw_sq / (2.0 * rank)
    fid = abs(tr) ** 2 / rank**2
    return ErrorReport(raw_error=float(np.sqrt(raw_sq)), eta=float(eta),
                       fidelity=float(fid), optimal_phase=phase)


def gate_fidelity(space: ModeSpace, target: np.ndarray,
                  candidate: np.ndarray) -> float:
    """F = |Tr{P_C target^dag P_C candidate P_C}|^2 / (2(N+1))^2."""
    trunc = target.shape[0] // 2 - 1
    p = comp_projector(space, trunc)
    tr = np.trace((p @ target @ p).conj().T @ (p @ candidate @ p))
    return float(abs(tr) ** 2 / space.dim_comp**2)


def subspace_objective(space: ModeSpace, a: int, n: int, n_script: int,
                       target: np.ndarray, candidate: np.ndarray) -> float:
    """Optimization objective for a V gate on its optimized subspace.

    eps = 1 - |d_perp + Tr{P V^dag P V_c P}| / (2(N+1)), with P and d_perp
    from opt_subspace_projector; an upper bound on the phase-min error.
    """
    p, d_perp = opt_subspace_projector(space, a, n, n_script)
    k = p.shape[0]
    tr = np.trace((p @ target[:k, :k] @ p).conj().T @ (p @ candidate[:k, :k] @ p))
    return float(1.0 - abs(d_perp + tr) / space.dim_comp)


def leakage_projector(space: ModeSpace) -> np.ndarray:
    """Projector onto penalized levels n_pad+1 .. n_opt (n_opt truncation)."""
    d = space.dim(space.n_opt)
    p = np.zeros((d, d), dtype=complex)
    lo = 2 * (space.n_pad + 1)
    p[lo:d, lo:d] = np.eye(d - lo)
    return p


def leakage(space: ModeSpace, cumulative_unitaries) -> float:
    """Computational-state-averaged leaked population, summed over subpulses.

    L = sum_j (Tr{M_j M_j^dag} + |Tr M_j|^2) / (2(N+1)(2N+3)) with
    M_j = P_C U_j^dag P_L U_j P_C; equals the Haar average over
    computational states of the squared leaked population
    ||P_L U_j |psi>||^4 summed over j.
    """
    n = space.n_comp
    pc = comp_projector(space, space.n_opt)
    pl = leakage_projector(space)
    norm = 2.0 * (n + 1) * (2 * n + 3)
    total = 0.0
    for u in cumulative_unitaries:
        lu = pl @ u @ pc
        m = lu.conj().T @ lu  # = P_C U^dag P_L U P_C
        total += (np.real(np.trace(m @ m.conj().T)) + abs(np.trace(m)) ** 2) / norm
    return float(total)


def cost_cfn(fidelity: float, leak: float, w: float = 100.0) -> float:
    """Leakage-penalized infidelity C = 1 - F + w*L."""
    return 1.0 - fidelity + w * leak
