import numpy as np
import pytest

from jcpulse.hilbert import (
    SPIN_DOWN,
    SPIN_UP,
    BasisIndex,
    ConfigurationError,
    build_space,
    comp_projector,
    embed_block,
    flat_index,
    h2_members,
    opt_subspace_projector,
    pauli_block,
    proj_h1,
    proj_h2,
)


def test_flat_index_round_trip():
    for n in range(6):
        for s in (SPIN_DOWN, SPIN_UP):
            b = BasisIndex(n, s)
            assert b.flat == flat_index(n, s) == 2 * n + s
            assert BasisIndex.from_flat(b.flat) == b


def test_build_space_defaults():
    sp = build_space(2)
    assert (sp.n_comp, sp.n_pad, sp.n_opt, sp.n_check) == (2, 5, 7, 28)
    assert sp.dim_comp == 6


def test_build_space_validation():
    with pytest.raises(ConfigurationError):
        build_space(0)
    with pytest.raises(ConfigurationError):
        build_space(3, n_pad=3)


def test_h2_members():
    assert h2_members(4, 0) == [flat_index(0, SPIN_DOWN)]
    assert h2_members(4, 2) == [flat_index(1, SPIN_UP), flat_index(2, SPIN_DOWN)]
    # top degenerate block has only the |trunc up> member
    assert h2_members(4, 5) == [flat_index(4, SPIN_UP)]


def test_projectors_partition_space():
    trunc = 5
    total_h1 = sum(proj_h1(trunc, n) for n in range(trunc + 1))
    total_h2 = sum(proj_h2(trunc, n) for n in range(trunc + 2))
    d = 2 * (trunc + 1)
    assert np.allclose(total_h1, np.eye(d))
    assert np.allclose(total_h2, np.eye(d))


def test_pauli_blocks_algebra():
    trunc = 3
    for family, n in [(1, 0), (1, 2), (2, 1), (2, 3)]:
        x = pauli_block(trunc, family, "x", n)
        y = pauli_block(trunc, family, "y", n)
        z = pauli_block(trunc, family, "z", n)
        p = proj_h1(trunc, n) if family == 1 else proj_h2(trunc, n)
        assert np.allclose(x @ y - y @ x, 2j * z)
        assert np.allclose(x @ x, p)


def test_embed_block_identity_elsewhere():
    trunc = 3
    u = embed_block(trunc, 2, 2, np.array([[0, 1], [1, 0]], dtype=complex))
    idx = h2_members(trunc, 2)
    off = [i for i in range(2 * (trunc + 1)) if i not in idx]
    assert np.allclose(u[np.ix_(off, off)], np.eye(len(off)))
    assert u[idx[0], idx[1]] == 1


def test_comp_projector_rank(space2):
    p = comp_projector(space2, space2.n_opt)
    assert np.real(np.trace(p)) == space2.dim_comp


@pytest.mark.parametrize("n_comp", [2, 3, 4])
def test_opt_subspace_projector_rank(n_comp):
    """Enforced rank plus free-state count always totals 2(N+1)."""
    space = build_space(n_comp)
    for a in (1, 2):
        top = n_comp if a == 1 else n_comp + 1
        for ns in range(-1 if a == 1 else 0, top):
            for n in range(ns + 1, top + 1):
                p, d_perp = opt_subspace_projector(space, a, n, ns)
                assert np.allclose(p, p @ p)
                rank = int(round(np.real(np.trace(p))))
                assert rank + d_perp == 2 * (n_comp + 1)


def test_opt_subspace_projector_validation(space2):
    with pytest.raises(ConfigurationError):
        opt_subspace_projector(space2, 3, 1, 0)
    with pytest.raises(ConfigurationError):
        opt_subspace_projector(space2, 1, 1, 1)  # needs n >= n_script + 1
