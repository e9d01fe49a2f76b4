"""Spectral, observability and stabilizability subspaces, and the
decision predicates built on them.

The central objects: the unobservable space NO(C,A), its undetectable
part NO0+(C,A) (unobservable modes with Re >= 0), the detectable
complement W with orthogonal projectors D and R, and the stabilizable
subspace S(A,B).  The headline predicate is W ⊆ S(A,B), which decides
whether the observed part of the state can be driven to rest.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError
from .linalg import (
    INCLUSION_TOL,
    RANK_TOL_FACTOR,
    classification_tol,
    complement,
    intersect,
    invariant_subspace,
    orth_basis,
    projector,
    reachable_subspace,
)


@dataclass
class SubspaceBasis:
    """Orthonormal basis of a subspace of R^n (dim may be zero)."""

    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    def projector(self):
        return projector(self.basis)

    def contains(self, other, tol=INCLUSION_TOL):
        """Whether span(other) ⊆ span(self) up to the projector-defect tolerance."""
        P = self.projector()
        Q = projector(other if isinstance(other, np.ndarray) else other.basis)
        n = P.shape[0]
        return np.linalg.norm((np.eye(n) - P) @ Q, 2) <= tol


@dataclass
class SubspaceReport:
    """Observability-side subspaces of a pair (A, C), with projectors.

    D projects orthogonally onto the detectable part W, R onto the
    undetectable part NO0+; D + R = I and CR = 0.
    """

    L_neg: SubspaceBasis
    L_zero: SubspaceBasis
    L_pos: SubspaceBasis
    unobservable: SubspaceBasis
    undetectable: SubspaceBasis
    detectable: SubspaceBasis  # W = orthogonal complement of NO0+
    D: np.ndarray
    R: np.ndarray

    def to_dict(self):
        return {
            "dims": {
                "L_neg": self.L_neg.dim,
                "L_zero": self.L_zero.dim,
                "L_pos": self.L_pos.dim,
                "unobservable": self.unobservable.dim,
                "undetectable": self.undetectable.dim,
                "detectable": self.detectable.dim,
            },
            "bases": {
                "detectable": self.detectable.basis.tolist(),
                "undetectable": self.undetectable.basis.tolist(),
            },
            "D": self.D.tolist(),
            "R": self.R.tolist(),
        }


def spectral_subspace(A, which):
    """Invariant subspace of A for one eigenvalue class.

    which is "neg", "zero", "pos" or "nonneg" (Re < -tau, |Re| <= tau,
    Re > tau, Re > -tau).  Computed from an ordered real Schur form so
    defective eigenvalues are handled.
    """
    return SubspaceBasis(invariant_subspace(np.asarray(A, dtype=float), which))


def unobservable_space(A, C):
    """Largest A-invariant subspace inside ker C.

    Computed as the orthogonal complement of the smallest A^T-invariant
    subspace containing range(C^T); the iterated-orthonormal form keeps
    the rank decisions scale-free, unlike the raw stacked observability
    matrix.
    """
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[1] != A.shape[0]:
        raise DimensionError("C column count must match A")
    return SubspaceBasis(complement(reachable_subspace(A.T, C.T)))


def undetectable_space(A, C):
    """Unobservable modes with nonnegative real part: NO(C,A) ∩ L^{0,+}(A)."""
    A = np.asarray(A, dtype=float)
    no = unobservable_space(A, C).basis
    lnn = invariant_subspace(A, "nonneg")
    return SubspaceBasis(intersect(no, lnn))


def detectable_projections(A, C):
    """Subspace report for (A, C): spectral classes, NO, NO0+, W, D, R.

    For a detectable pair, D = I.
    """
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]

    no = unobservable_space(A, C)
    no0p = undetectable_space(A, C)
    W = SubspaceBasis(complement(no0p.basis))
    R = projector(no0p.basis)
    D = np.eye(n) - R

    return SubspaceReport(
        L_neg=spectral_subspace(A, "neg"),
        L_zero=spectral_subspace(A, "zero"),
        L_pos=spectral_subspace(A, "pos"),
        unobservable=no,
        undetectable=no0p,
        detectable=W,
        D=D,
        R=R,
    )


def stabilizable_subspace(A, B):
    """S(A,B): reachable subspace of (A, B) plus L^-(A)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    reach = reachable_subspace(A, B)
    lneg = invariant_subspace(A, "neg")
    return SubspaceBasis(orth_basis(np.hstack([reach, lneg])))


def is_C_stabilizable(A, B, C):
    """Whether W ⊆ S(A,B), the inclusion deciding the turnpike property.

    Returns (verdict, defect) with defect = ||(I - P_S) P_W||_2.  The
    defect is the sine of the largest angle by which W sticks out of S,
    so it doubles as a diagnostic when the verdict is false.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    no0p = undetectable_space(A, C)
    W = complement(no0p.basis)
    S = stabilizable_subspace(A, B)
    defect = float(np.linalg.norm((np.eye(n) - S.projector()) @ projector(W), 2))
    return defect <= INCLUSION_TOL, defect


def weak_hautus(A, C):
    """Rank test [A - i*beta*I; C] at every near-imaginary eigenvalue of A.

    Returns (ok, failing_eigenvalues).  Only eigenvalues with
    |Re| <= tau are examined; the test is on the imaginary part alone,
    i.e. the stacked matrix at i*Im(lambda).
    """
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    tau = classification_tol(A)
    failures = []
    seen = []
    for lam in np.linalg.eigvals(A):
        if abs(lam.real) > tau:
            continue
        beta = lam.imag
        if any(abs(beta - b) <= tau for b in seen):
            continue
        seen.append(beta)
        M = np.vstack([A - 1j * beta * np.eye(n), C.astype(complex)])
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= RANK_TOL_FACTOR * s[0]:
            failures.append(complex(lam))
    return len(failures) == 0, failures


def is_controllable(A, B):
    """Whether the reachable subspace of (A, B) is the whole state space."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    return reachable_subspace(A, B).shape[1] == A.shape[0]


def kalman_reduce(A, B, C):
    """Restriction of (DA, DB, C) to the detectable subspace W.

    Returns (Ar, Br, Cr, Vw) with the reduced matrices expressed in the
    orthonormal W-basis Vw.  The observed output is preserved exactly:
    Cx = C(Dx) for every x, so simulating the reduced system from
    matched data reproduces Cx(t).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    no0p = undetectable_space(A, C)
    Vw = complement(no0p.basis)
    # D = Vw Vw^T, so Vw^T D A Vw collapses to Vw^T A Vw
    Ar = Vw.T @ A @ Vw
    Br = Vw.T @ B
    Cr = C @ Vw
    return Ar, Br, Cr, Vw
