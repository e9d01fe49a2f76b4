"""Numerical subspace primitives: bases, projectors, invariant subspaces."""

import numpy as np
import numpy.testing as npt
import pytest
import scipy.linalg as sla

from turnpike.linalg import (
    complement,
    eig_class_counts,
    intersect,
    invariant_subspace,
    kernel_basis,
    orth_basis,
    projector,
    reachable_subspace,
    subspace_gap,
)


def test_orth_basis_rank_and_orthonormality():
    rng = np.random.default_rng(0)
    V = rng.standard_normal((6, 2))
    M = np.hstack([V, V @ rng.standard_normal((2, 3))])  # rank 2 by construction
    Q = orth_basis(M)
    assert Q.shape == (6, 2)
    npt.assert_allclose(Q.T @ Q, np.eye(2), atol=1e-12)
    # same column space
    npt.assert_allclose(projector(Q) @ M, M, atol=1e-10)


def test_orth_basis_zero_matrix():
    assert orth_basis(np.zeros((4, 3))).shape == (4, 0)


def test_kernel_basis_annihilates():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((2, 5))
    K = kernel_basis(M)
    assert K.shape == (5, 3)
    npt.assert_allclose(M @ K, 0.0, atol=1e-12)


def test_complement_and_intersect():
    e = np.eye(5)
    U = e[:, :2]
    W = complement(U)
    assert W.shape == (5, 3)
    npt.assert_allclose(U.T @ W, 0.0, atol=1e-13)
    V = e[:, 1:3]
    X = intersect(U, V)
    assert X.shape == (5, 1)
    npt.assert_allclose(np.abs(X[:, 0]), e[:, 1], atol=1e-10)


def test_subspace_gap_extremes():
    e = np.eye(4)
    assert subspace_gap(e[:, :2], e[:, :2]) <= 1e-12
    assert subspace_gap(e[:, :2], e[:, :1]) == pytest.approx(np.pi / 2)


def test_invariant_subspace_planted_classes():
    rng = np.random.default_rng(2)
    D = np.diag([-2.0, -0.5, 0.0, 1.5])
    Q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    A = Q @ D @ Q.T
    for which, dim in [("neg", 2), ("zero", 1), ("pos", 1), ("nonneg", 2)]:
        V = invariant_subspace(A, which)
        assert V.shape[1] == dim
        # must be A-invariant
        resid = np.linalg.norm(A @ V - V @ (V.T @ A @ V), 2)
        assert resid <= 1e-10
    assert eig_class_counts(A) == (2, 1, 1)


def test_invariant_subspace_handles_defective_blocks():
    # nilpotent chain: a single zero eigenvalue of multiplicity 2
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    V = invariant_subspace(A, "zero")
    assert V.shape[1] == 2


def test_reachable_subspace_full_for_chain():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    assert reachable_subspace(A, B).shape[1] == 2


def test_reachable_subspace_planted_uncontrolled_part():
    rng = np.random.default_rng(3)
    A = sla.block_diag(rng.standard_normal((2, 2)), rng.standard_normal((2, 2)))
    B = np.vstack([rng.standard_normal((2, 1)), np.zeros((2, 1))])
    V = reachable_subspace(A, B)
    assert V.shape[1] == 2
    npt.assert_allclose(V[2:, :], 0.0, atol=1e-10)


def test_reachable_subspace_zero_input():
    A = np.random.default_rng(4).standard_normal((3, 3))
    assert reachable_subspace(A, np.zeros((3, 1))).shape == (3, 0)


def test_reachable_subspace_survives_wide_eigenvalue_range():
    # oscillator bank spanning two decades of frequency; the raw Krylov
    # stack loses the slow modes to rank tolerance at this scale
    N = 16
    om = np.arange(1, N + 1) * np.pi / 10.0
    A = np.block([[np.zeros((N, N)), np.eye(N)], [-np.diag(om**2), np.zeros((N, N))]])
    b = np.zeros(2 * N)
    b[N:] = np.where(np.arange(1, N + 1) % 2 == 1, 1.0, 0.0)  # odd modes only
    V = reachable_subspace(A, b[:, None])
    assert V.shape[1] == N  # 8 controlled oscillators, position and velocity
