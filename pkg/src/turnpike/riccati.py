"""Hamiltonian matrix, the antistrong Riccati solution, and the
velocity-turnpike projections.

The algebraic Riccati equation E A + A* E - E BB* E + C*C = 0 is solved
through the invariant subspaces of Ham = [A, -BB*; -C*C, -A*].  The
usual stabilizing solution takes the strictly stable n-dimensional
subspace; here detectability is not assumed, so Ham may carry
eigenvalues on the imaginary axis and the stable subspace alone is too
small.  The antistrong solution completes it with half of each critical
Jordan structure: for a critical eigenvalue lam the canonical subspace

    sum_j  ker((Ham - lam)^j) ∩ range((Ham - lam)^j)

picks exactly the lower half of every Jordan chain.  Under
stabilizability of (A, B) the critical partial multiplicities are even,
so this selection has the right dimension and the result is a graph
subspace; anything else is reported as a degeneracy, never regularized.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateRiccatiError, HypothesisError, NotStabilizableError
from .linalg import (
    RANK_TOL_FACTOR,
    classification_tol,
    intersect,
    invariant_subspace,
    is_stabilizable_pair,
    kernel_basis,
    orth_basis,
)


@dataclass
class RiccatiResult:
    """Antistrong Riccati solution with its Hamiltonian and transform.

    Lambda = [I, 0; -E_hat, I] block-triangularizes Ham; residual is the
    ARE residual in the 2-norm.
    """

    E_hat: np.ndarray
    A_plus: np.ndarray
    Ham: np.ndarray
    Lambda: np.ndarray
    residual: float

    def to_dict(self):
        return {
            "E_hat": self.E_hat.tolist(),
            "A_plus": self.A_plus.tolist(),
            "residual": float(self.residual),
            "closed_loop_spectrum": [
                {"re": float(l.real), "im": float(l.imag)}
                for l in np.linalg.eigvals(self.A_plus)
            ],
        }


@dataclass
class VelocityProjections:
    """Oblique projections splitting R^n = NO0(C,A) ⊕ L^-(A - BB*E).

    P1 maps onto the neutral kernel directions that the cost cannot see;
    P2 onto the decaying complement.  Also carries the adjoint-side
    bases needed to extract the kernel component of q(T).
    """

    P1: np.ndarray
    P2: np.ndarray
    ker_Ap_star: np.ndarray
    Lneg_Ap_star: np.ndarray
    basis_cond: float

    def to_dict(self):
        return {
            "P1": self.P1.tolist(),
            "P2": self.P2.tolist(),
            "basis_cond": float(self.basis_cond),
        }


def build_hamiltonian(A, B, C):
    """The 2n x 2n block matrix [A, -BB*; -C*C, -A*]."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    return np.block([[A, -B @ B.T], [-C.T @ C, -A.T]])


def _complex_orth(M, rtol=RANK_TOL_FACTOR):
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > rtol * s[0]))
    return U[:, :rank]


def _complex_kernel(M, rtol=RANK_TOL_FACTOR):
    U, s, Vh = np.linalg.svd(M)
    if s.size == 0:
        return np.eye(M.shape[1], dtype=complex)
    rank = int(np.sum(s > rtol * s[0]))
    return Vh[rank:].conj().T


def _complex_intersect(U, V):
    n = U.shape[0]
    if U.shape[1] == 0 or V.shape[1] == 0:
        return np.zeros((n, 0), dtype=complex)
    P1 = np.eye(n) - U @ U.conj().T
    P2 = np.eye(n) - V @ V.conj().T
    return _complex_kernel(np.vstack([P1, P2]))


def _critical_half_chains(H, lam, tau):
    """Canonical subspace sum_j ker((H-lam)^j) ∩ range((H-lam)^j).

    For a Jordan chain of length 2m at lam this is the span of its first
    m vectors, i.e. the half that belongs in the antistrong invariant
    subspace.
    """
    n2 = H.shape[0]
    M = H.astype(complex) - lam * np.eye(n2)
    pieces = []
    Mk = np.eye(n2, dtype=complex)
    for _ in range(n2):
        Mk = Mk @ M
        K = _complex_kernel(Mk)
        if K.shape[1] == 0:
            break
        R = _complex_orth(Mk)
        W = _complex_intersect(K, R)
        if W.shape[1] > 0:
            pieces.append(W)
        if K.shape[1] == n2:
            break
    if not pieces:
        return np.zeros((n2, 0))
    W = np.hstack(pieces)
    if abs(lam.imag) > tau:
        return np.hstack([W.real, W.imag])
    return W.real


def solve_are_antistrong(A, B, C):
    """Antistrong solution of the algebraic Riccati equation.

    Returns a RiccatiResult whose E_hat is symmetric PSD and whose
    closed loop A_plus = A - BB*E_hat has spectrum in Re <= tau.
    Requires (A, B) stabilizable; when the selected invariant subspace
    is not a graph (vertical singular block) a DegenerateRiccatiError is
    raised with diagnostics instead of regularizing.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]

    if not is_stabilizable_pair(A, B):
        raise NotStabilizableError(
            "(A, B) is not stabilizable; the antistrong Riccati solution "
            "requires every unstable mode to be controllable"
        )

    ham = build_hamiltonian(A, B, C)
    tau = classification_tol(ham)

    stable = invariant_subspace(ham, "neg", tau=tau)
    blocks = [stable]

    ev = np.linalg.eigvals(ham)
    critical = ev[np.abs(ev.real) <= tau]
    handled = []
    for lam in critical:
        if lam.imag < -tau:
            continue  # conjugate partner is handled with the im >= 0 member
        if any(abs(lam - mu) <= 10 * tau for mu in handled):
            continue
        handled.append(lam)
        blocks.append(_critical_half_chains(ham, lam, tau))

    V = orth_basis(np.hstack(blocks))
    if V.shape[1] != n:
        raise DegenerateRiccatiError(
            f"selected invariant subspace has dimension {V.shape[1]}, expected {n}",
            diagnostics={
                "stable_dim": stable.shape[1],
                "critical_eigenvalues": [complex(l) for l in handled],
            },
        )

    X1, X2 = V[:n, :], V[n:, :]
    s = np.linalg.svd(X1, compute_uv=False)
    if s[-1] <= RANK_TOL_FACTOR * max(s[0], 1.0):
        raise DegenerateRiccatiError(
            "invariant subspace is not a graph over the state block "
            f"(smallest singular value {s[-1]:.2e})",
            diagnostics={"X1_singular_values": s.tolist()},
        )

    E = np.linalg.solve(X1.T, X2.T).T
    E = 0.5 * (E + E.T)

    eigs = np.linalg.eigvalsh(E)
    if eigs.min() < -1e-9 * max(1.0, eigs.max()):
        raise DegenerateRiccatiError(
            f"recovered solution is not positive semidefinite (min eig {eigs.min():.2e})",
            diagnostics={"E_eigenvalues": eigs.tolist()},
        )

    A_plus = A - B @ B.T @ E
    residual = float(
        np.linalg.norm(E @ A + A.T @ E - E @ B @ B.T @ E + C.T @ C, 2)
    )
    Lambda = np.block(
        [[np.eye(n), np.zeros((n, n))], [-E, np.eye(n)]]
    )
    return RiccatiResult(E_hat=E, A_plus=A_plus, Ham=ham, Lambda=Lambda, residual=residual)


def lambda_triangularize(result: RiccatiResult):
    """Block-triangularize Ham with Lambda = [I, 0; -E, I].

    Returns (Lambda Ham Lambda^{-1}, defect) where defect is the 2-norm
    of the lower-left block, which the Riccati equation says must vanish.
    """
    n = result.E_hat.shape[0]
    E = result.E_hat
    Lam_inv = np.block([[np.eye(n), np.zeros((n, n))], [E, np.eye(n)]])
    T = result.Lambda @ result.Ham @ Lam_inv
    defect = float(np.linalg.norm(T[n:, :n], 2))
    return T, defect


def check_weak_hautus_equivalence(A, B, C):
    """dim L^0(Ham) = 0 if and only if the weak Hautus test holds.

    Returns (L0_trivial, hautus, agree).  Requires (A, B) stabilizable,
    which is exactly the hypothesis under which the equivalence is an
    equivalence.
    """
    from .subspaces import weak_hautus

    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if not is_stabilizable_pair(A, B):
        raise NotStabilizableError(
            "(A, B) is not stabilizable; the kernel/Hautus equivalence needs it"
        )
    ham = build_hamiltonian(A, B, C)
    L0 = invariant_subspace(ham, "zero", tau=classification_tol(ham))
    l0_trivial = L0.shape[1] == 0
    hautus, _ = weak_hautus(A, C)
    return l0_trivial, hautus, l0_trivial == hautus


def velocity_projections(A, B, C, result: RiccatiResult):
    """Oblique projections for the velocity-turnpike decomposition.

    Hypothesis: NO0(C,A) ⊆ ker A (unobservable neutral modes do not
    rotate).  Then R^n = NO0(C,A) ⊕ L^-(A_plus) and the pair (P1, P2)
    projects along that splitting.  Violations raise HypothesisError
    naming the offending subspace.
    """
    from .subspaces import unobservable_space

    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]

    no = unobservable_space(A, C).basis
    L0A = invariant_subspace(A, "zero")
    V1 = intersect(no, L0A)  # NO0(C,A)

    if V1.shape[1] > 0:
        drift = np.linalg.norm(A @ V1, 2) / max(1.0, np.linalg.norm(A, 2))
        if drift > 1e-8:
            raise HypothesisError(
                "NO0(C,A) is not contained in ker(A) "
                f"(relative drift {drift:.2e}); the velocity decomposition "
                "requires unobservable neutral modes to be constants"
            )

    V2 = invariant_subspace(result.A_plus, "neg")
    if V1.shape[1] + V2.shape[1] != n:
        raise HypothesisError(
            f"NO0(C,A) (dim {V1.shape[1]}) and L^-(A_plus) (dim {V2.shape[1]}) "
            f"do not decompose R^{n}; the closed loop keeps neutral modes "
            "outside the unobservable kernel"
        )

    P = np.hstack([V1, V2])
    cond = float(np.linalg.cond(P))
    sel = np.zeros((n, n))
    sel[: V1.shape[1], : V1.shape[1]] = np.eye(V1.shape[1])
    P1 = P @ sel @ np.linalg.inv(P)
    P2 = np.eye(n) - P1

    Ap_star = result.A_plus.T
    ker_star = kernel_basis(Ap_star)
    Lneg_star = invariant_subspace(Ap_star, "neg")
    return VelocityProjections(
        P1=P1,
        P2=P2,
        ker_Ap_star=ker_star,
        Lneg_Ap_star=Lneg_star,
        basis_cond=cond,
    )
