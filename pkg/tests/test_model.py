import itertools

import numpy as np
import pytest

from xyconv.model import (
    DimensionError,
    ModelParams,
    apply_hamiltonian,
    build_dense_hamiltonian,
    cyclic_shift_permutation,
    matrix_free,
)

X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z = np.diag([1.0, -1.0])


def site_operator(op, site, L):
    """Kronecker-product oracle. Site i is bit i, so site 0 is the rightmost factor;
    basis index bit value 1 means spin up, i.e. the first row of Z."""
    up_first = np.array([[0.0, 1.0], [1.0, 0.0]])  # reorder so index 0 = down, 1 = up
    op = up_first @ op @ up_first
    out = np.eye(1)
    for s in reversed(range(L)):
        out = np.kron(out, op if s == site else np.eye(2))
    return out


def kron_hamiltonian(L, gamma, h):
    H = np.zeros((2**L, 2**L), dtype=complex)
    for i in range(L):
        j = (i + 1) % L
        H -= 0.5 * (1 + gamma) * site_operator(X, i, L) @ site_operator(X, j, L)
        H -= 0.5 * (1 - gamma) * site_operator(Y, i, L) @ site_operator(Y, j, L)
        H -= h * site_operator(Z, i, L)
    return H


@pytest.mark.parametrize("L,gamma,h", [(2, 1.0, 0.0), (3, 0.3, 0.7), (4, 0.5, 1.2), (5, 0.0, 0.4), (6, 0.8, 0.0)])
def test_dense_matches_kronecker_oracle(L, gamma, h):
    H = kron_hamiltonian(L, gamma, h)
    assert np.max(np.abs(H.imag)) < 1e-14
    M = build_dense_hamiltonian(ModelParams(L, gamma, h)).matrix
    np.testing.assert_allclose(M, H.real, atol=1e-14)


def test_two_site_ising_ground_energy_is_minus_two():
    M = build_dense_hamiltonian(ModelParams(2, 1.0, 0.0)).matrix
    assert np.all(np.diag(M) == 0.0)
    assert np.linalg.eigvalsh(M)[0] == pytest.approx(-2.0, abs=1e-14)


def test_large_field_favours_all_up():
    p = ModelParams(4, 1.0, 50.0)
    diag = np.diag(build_dense_hamiltonian(p).matrix)
    assert np.argmin(diag) == 0b1111
    assert diag[0b1111] == pytest.approx(-4 * p.h)


def test_symmetric_and_translation_invariant_bitwise():
    M = build_dense_hamiltonian(ModelParams(8, 0.5, 0.7)).matrix
    assert np.array_equal(M, M.T)
    perm = cyclic_shift_permutation(8)
    P = M[np.ix_(perm, perm)]
    assert np.array_equal(P, M)


def test_ising_limit_has_no_yy_term():
    # at gamma = 1 and h = 0 the matrix is exactly -sum XX: parallel and antiparallel flips coincide
    L = 4
    M = build_dense_hamiltonian(ModelParams(L, 1.0, 0.0)).matrix
    XX = sum(site_operator(X, i, L) @ site_operator(X, (i + 1) % L, L) for i in range(L)).real
    np.testing.assert_array_equal(M, -XX)


def test_spectrum_invariant_under_site_relabeling():
    p = ModelParams(6, 0.37, 0.81)
    M = build_dense_hamiltonian(p).matrix
    perm = cyclic_shift_permutation(6)
    for _ in range(3):
        perm = perm[cyclic_shift_permutation(6)]
    np.testing.assert_allclose(np.linalg.eigvalsh(M[np.ix_(perm, perm)]), np.linalg.eigvalsh(M), atol=1e-12)


def test_unit_vector_gives_column():
    p = ModelParams(6, 1.0, 0.3)
    M = build_dense_hamiltonian(p).matrix
    for k in (0, 5, 37, 63):
        e = np.zeros(p.dim)
        e[k] = 1.0
        np.testing.assert_array_equal(apply_hamiltonian(p, e), M[:, k])


def test_all_ones_xx_two_sites():
    p = ModelParams(2, 0.0, 0.0)
    M = build_dense_hamiltonian(p).matrix
    out = apply_hamiltonian(p, np.ones(4))
    np.testing.assert_allclose(out, M.sum(axis=1))
    # doubled bond: |01> <-> |10> with amplitude -2, parallel pairs untouched at gamma = 0
    np.testing.assert_allclose(out, [0.0, -2.0, -2.0, 0.0])


@pytest.mark.parametrize("L", range(2, 11))
def test_matrix_free_equals_dense(L):
    rng = np.random.default_rng(L)
    for gamma, h in [(0.0, 0.0), (1.0, 0.5), (rng.uniform(), rng.uniform(0, 2))]:
        p = ModelParams(L, gamma, h)
        M = build_dense_hamiltonian(p).matrix
        V = rng.standard_normal((100 if L <= 8 else 10, p.dim))
        for v in V:
            np.testing.assert_allclose(apply_hamiltonian(p, v), M @ v, atol=1e-12, rtol=0)


def test_matrix_free_symmetry_random_vectors():
    rng = np.random.default_rng(3)
    for L in (5, 9, 12):
        p = ModelParams(L, rng.uniform(), rng.uniform(0, 2))
        v, w = rng.standard_normal((2, p.dim))
        lhs, rhs = w @ apply_hamiltonian(p, v), apply_hamiltonian(p, w) @ v
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


def test_ground_eigenpair_residual_through_matrix_free():
    p = ModelParams(8, 1.0, 2.0)
    w, V = np.linalg.eigh(build_dense_hamiltonian(p).matrix)
    assert np.linalg.norm(apply_hamiltonian(p, V[:, 0]) - w[0] * V[:, 0]) < 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [dict(L=1, gamma=0.5, h=0.1), dict(L=25, gamma=0.5, h=0.1), dict(L=4, gamma=1.5, h=0.1),
     dict(L=4, gamma=-0.1, h=0.1), dict(L=4, gamma=0.5, h=-1.0), dict(L=4.5, gamma=0.5, h=0.0)],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_dense_ceiling():
    with pytest.raises(DimensionError):
        build_dense_hamiltonian(ModelParams(15, 1.0, 0.0))


def test_operator_wrappers_agree():
    p = ModelParams(5, 0.2, 0.9)
    v = np.random.default_rng(0).standard_normal(p.dim)
    dense, free = build_dense_hamiltonian(p), matrix_free(p)
    assert dense.is_dense and not free.is_dense
    np.testing.assert_allclose(dense @ v, free @ v, atol=1e-12)
    with pytest.raises(ValueError):
        free.matvec(np.ones(3))


def test_shift_permutation_is_cyclic():
    for L in (2, 3, 7):
        perm = cyclic_shift_permutation(L)
        acc = np.arange(2**L)
        for _ in range(L):
            acc = perm[acc]
        assert np.array_equal(acc, np.arange(2**L))
        assert sorted(perm) == list(range(2**L))


def test_bits_map_to_sites():
    # the field term counts up spins minus down spins, whatever their positions
    L, h = 4, 1.0
    diag = np.diag(build_dense_hamiltonian(ModelParams(L, 0.0, h)).matrix)
    for bits in itertools.product((0, 1), repeat=L):
        idx = sum(b << i for i, b in enumerate(bits))
        assert diag[idx] == pytest.approx(-h * (2 * sum(bits) - L))
