"""Shared numerical-linear-algebra primitives.

Everything here works on plain ndarrays and returns orthonormal bases
(n x d matrices, possibly with d = 0).  Tolerances follow two global
conventions:

* eigenvalue classification: tau = EIG_TOL_FACTOR * max(1, ||A||_2)
* rank decisions: RANK_TOL_FACTOR * sigma_max

Desk-scale matrices with well-separated spectra are assumed throughout;
none of this is meant for n in the thousands.
"""

import numpy as np
import scipy.linalg as sla

EIG_TOL_FACTOR = 1e-8
RANK_TOL_FACTOR = 1e-10
INCLUSION_TOL = 1e-8


def classification_tol(A):
    """Tolerance separating zero-real-part eigenvalues from the rest."""
    return EIG_TOL_FACTOR * max(1.0, np.linalg.norm(A, 2))


def orth_basis(M, rtol=RANK_TOL_FACTOR):
    """Orthonormal basis of the column space of M (n x d, d possibly 0)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0:
        return np.zeros((M.shape[0], 0))
    rank = int(np.sum(s > rtol * s[0]))
    return U[:, :rank]


def kernel_basis(M, rtol=RANK_TOL_FACTOR):
    """Orthonormal basis of the kernel of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] == 0 or M.size == 0:
        return np.eye(M.shape[1])
    return sla.null_space(M, rcond=rtol)


def projector(V):
    """Orthogonal projector onto span(V); V must have orthonormal columns."""
    if V.shape[1] == 0:
        return np.zeros((V.shape[0], V.shape[0]))
    return V @ V.T


def intersect(U, V):
    """Orthonormal basis of span(U) ∩ span(V).

    Computed as the kernel of the stacked complement projectors
    [(I - P_U); (I - P_V)], which is numerically symmetric in the two
    arguments and needs no basis pairing.
    """
    n = U.shape[0]
    if U.shape[1] == 0 or V.shape[1] == 0:
        return np.zeros((n, 0))
    stacked = np.vstack([np.eye(n) - projector(U), np.eye(n) - projector(V)])
    return kernel_basis(stacked)


def complement(V):
    """Orthonormal basis of the orthogonal complement of span(V)."""
    n = V.shape[0]
    if V.shape[1] == 0:
        return np.eye(n)
    return kernel_basis(V.T)


def subspace_gap(U, V):
    """Largest principal angle (radians) between two spaces, 0 if both empty."""
    if U.shape[1] == 0 and V.shape[1] == 0:
        return 0.0
    if U.shape[1] != V.shape[1]:
        return np.pi / 2
    if U.shape[1] == 0:
        return 0.0
    return float(sla.subspace_angles(U, V).max())


_SORT_PREDICATES = {
    # predicates receive (re, im) from the real Schur reordering
    "neg": lambda tau: (lambda re, im: re < -tau),
    "zero": lambda tau: (lambda re, im: abs(re) <= tau),
    "pos": lambda tau: (lambda re, im: re > tau),
    "nonneg": lambda tau: (lambda re, im: re > -tau),
}


def invariant_subspace(A, which, tau=None):
    """Orthonormal basis of the invariant subspace of A for an eigenvalue class.

    Parameters
    ----------
    A : (n, n) array
    which : {"neg", "zero", "pos", "nonneg"}
        Re < -tau, |Re| <= tau, Re > tau, Re > -tau respectively.
    tau : float, optional
        Classification tolerance; defaults to classification_tol(A).

    Uses an ordered real Schur form and takes the leading columns, which
    handles defective eigenvalues (nilpotent blocks) that raw
    eigenvectors cannot.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if tau is None:
        tau = classification_tol(A)
    sort = _SORT_PREDICATES[which](tau)
    try:
        _, Z, sdim = sla.schur(A, output="real", sort=sort)
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        from .exceptions import TurnpikeError

        raise TurnpikeError(f"Schur decomposition failed: {exc}") from exc
    return Z[:, :sdim]


def eig_class_counts(A, tau=None):
    """Number of eigenvalues (with multiplicity) in each real-part class."""
    A = np.asarray(A, dtype=float)
    if tau is None:
        tau = classification_tol(A)
    ev = np.linalg.eigvals(A)
    neg = int(np.sum(ev.real < -tau))
    zero = int(np.sum(np.abs(ev.real) <= tau))
    pos = int(np.sum(ev.real > tau))
    return neg, zero, pos


def controllability_matrix(A, B):
    """[B, AB, ..., A^{n-1}B] as an n x (n*m) matrix."""
    n = A.shape[0]
    blocks = []
    Ak = np.asarray(B, dtype=float)
    for _ in range(n):
        blocks.append(Ak)
        Ak = A @ Ak
    return np.hstack(blocks)


def reachable_subspace(A, B, rtol=RANK_TOL_FACTOR):
    """Smallest A-invariant subspace containing range(B).

    Grown by orthonormalized sweeps V <- orth([V, A V]) so every rank
    decision is made at unit scale.  The raw Krylov stack weights mode j
    by |lambda_j|^{n-1}, which swamps any fixed tolerance once ||A||
    reaches a few tens; the n = 32 wave semi-discretization already
    loses genuinely observed modes that way.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    scale = np.linalg.norm(A, 2)
    As = A / scale if scale > 0 else A
    V = orth_basis(B, rtol)
    while 0 < V.shape[1] < n:
        W = orth_basis(np.hstack([V, As @ V]), rtol)
        if W.shape[1] == V.shape[1]:
            break
        V = W
    return V


def observability_matrix(A, C):
    """[C; CA; ...; CA^{n-1}] stacked as a (n*p) x n matrix."""
    n = A.shape[0]
    blocks = []
    Ck = np.asarray(C, dtype=float)
    for _ in range(n):
        blocks.append(Ck)
        Ck = Ck @ A
    return np.vstack(blocks)


def is_stabilizable_pair(A, B, tau=None):
    """PBH test: rank [A - lam*I, B] = n at every eigenvalue with Re >= -tau."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if tau is None:
        tau = classification_tol(A)
    for lam in np.linalg.eigvals(A):
        if lam.real < -tau:
            continue
        M = np.hstack([A - lam * np.eye(n), B.astype(complex)])
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= RANK_TOL_FACTOR * s[0]:
            return False
    return True
