"""The steady problem: minimize (|u|^2 + |Cx - z|^2)/2 over Ax + Bu = 0.

A minimizer always exists (the constraint set is a subspace and the cost
is convex and coercive on its quotient), but it need not be unique: the
cost cannot see displacements along ker(A) ∩ ker(C).  We therefore
return the minimal-||x|| representative and the kernel direction
separately, and all cross-module comparisons go through (u, Cx), which
are unique by strict convexity.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import kernel_basis, orth_basis
from .riccati import build_hamiltonian

# least-squares membership threshold for [0; C*z] in range(Ham)
RANGE_RESIDUAL_TOL = 1e-8


@dataclass
class SteadySolution:
    """Minimizer of the steady cost with the minimizer-set geometry.

    kernel_dir spans ker(A) ∩ ker(C): argmin = {(u_bar, x_bar + d)} for
    d in that span.  p_bar is the steady adjoint when the optimality
    system is solvable, else None.
    """

    u_bar: np.ndarray
    x_bar: np.ndarray
    j_value: float
    kernel_dir: np.ndarray
    p_bar: Optional[np.ndarray] = None

    def to_dict(self):
        return {
            "u_bar": self.u_bar.tolist(),
            "x_bar": self.x_bar.tolist(),
            "j_value": float(self.j_value),
            "kernel_dir": self.kernel_dir.tolist(),
            "p_bar": None if self.p_bar is None else self.p_bar.tolist(),
        }

    def distance_sq(self, u, x):
        """Squared distance of a point (u, x) to the minimizer set."""
        du = u - self.u_bar
        dx = x - self.x_bar
        if self.kernel_dir.shape[1] > 0:
            dx = dx - self.kernel_dir @ (self.kernel_dir.T @ dx)
        return float(du @ du + dx @ dx)


def solve_steady(A, B, C, z):
    """Global minimizer of the steady cost over the constraint subspace.

    Parametrizes the null space of [A B] by SVD and solves the reduced
    unconstrained least-squares problem in (Cx, u); among all minimizers
    the returned x_bar has minimal norm (the ker(A) ∩ ker(C) component
    is removed).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n, m = B.shape

    kernel_dir = kernel_basis(np.vstack([A, C]))

    ns = kernel_basis(np.hstack([A, B]))  # columns parametrize {(x, u) : Ax + Bu = 0}
    if ns.shape[1] == 0:
        x_bar = np.zeros(n)
        u_bar = np.zeros(m)
    else:
        # cost is quadratic in the null-space coordinates: match (Cx, u) to (z, 0)
        rows = np.vstack([C @ ns[:n, :], ns[n:, :]])
        target = np.concatenate([z, np.zeros(m)])
        coef, *_ = np.linalg.lstsq(rows, target, rcond=None)
        v = ns @ coef
        x_bar, u_bar = v[:n], v[n:]
        if kernel_dir.shape[1] > 0:
            x_bar = x_bar - kernel_dir @ (kernel_dir.T @ x_bar)

    res = C @ x_bar - z
    j_value = 0.5 * float(u_bar @ u_bar) + 0.5 * float(res @ res)

    solvable, x_os, p_bar = steady_system_solvable(A, B, C, z)
    return SteadySolution(
        u_bar=u_bar,
        x_bar=x_bar,
        j_value=j_value,
        kernel_dir=kernel_dir,
        p_bar=p_bar if solvable else None,
    )


def hamiltonian_kernel_range(A, B, C):
    """Kernel and range of Ham from the block structure, cross-checked.

    kernel(Ham) = [ker A ∩ ker C] x [ker A* ∩ ker B*]
    range(Ham)  = [range A + range B] x [range A* + range C*]

    Both come back as orthonormal bases in R^{2n}.  The answer is
    verified against a direct SVD of the assembled Ham; disagreement
    beyond tolerance raises, since it would mean the formulas and the
    matrix disagree about the same object.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]

    k_top = kernel_basis(np.vstack([A, C]))
    k_bot = kernel_basis(np.vstack([A.T, B.T]))
    kernel = np.zeros((2 * n, k_top.shape[1] + k_bot.shape[1]))
    kernel[:n, : k_top.shape[1]] = k_top
    kernel[n:, k_top.shape[1] :] = k_bot

    r_top = orth_basis(np.hstack([A, B]))
    r_bot = orth_basis(np.hstack([A.T, C.T]))
    rng = np.zeros((2 * n, r_top.shape[1] + r_bot.shape[1]))
    rng[:n, : r_top.shape[1]] = r_top
    rng[n:, r_top.shape[1] :] = r_bot

    ham = build_hamiltonian(A, B, C)
    k_svd = kernel_basis(ham)
    r_svd = orth_basis(ham)
    _check_same_space("kernel", kernel, k_svd)
    _check_same_space("range", rng, r_svd)
    return kernel, rng


def _check_same_space(name, U, V, tol=1e-8):
    import scipy.linalg as sla

    from .exceptions import TurnpikeError

    if U.shape[1] != V.shape[1]:
        raise TurnpikeError(
            f"hamiltonian {name} dimension mismatch: formula {U.shape[1]}, svd {V.shape[1]}"
        )
    if U.shape[1] == 0:
        return
    angle = float(sla.subspace_angles(U, V).max())
    if angle > tol:
        raise TurnpikeError(
            f"hamiltonian {name} bases disagree: principal angle {angle:.2e}"
        )


def steady_system_solvable(A, B, C, z):
    """Solvability of the steady optimality system Ham [x; p] = [0; -C*z].

    Returns (solvable, x_bar, p_bar).  Membership of the right-hand side
    in range(Ham) is decided by the least-squares residual; the returned
    pair is the minimal-norm solution.  When unsolvable the pair is the
    least-squares surrogate and should not be used as a steady adjoint.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    C = np.atleast_2d(np.asarray(C, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n = A.shape[0]

    ham = build_hamiltonian(A, B, C)
    rhs = np.concatenate([np.zeros(n), -C.T @ z])
    sol, *_ = np.linalg.lstsq(ham, rhs, rcond=None)
    residual = float(np.linalg.norm(ham @ sol - rhs))
    solvable = residual <= RANGE_RESIDUAL_TOL * (1.0 + float(np.linalg.norm(z)))
    return solvable, sol[:n], sol[n:]
