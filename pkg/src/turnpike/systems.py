"""Problem instances: LQ triples and Fourier-projected point-control PDEs.

A SystemSpec is the triple (A, B, C) with a running target z, initial
state x0 and an optional terminal state x1 (its presence marks the
fixed-endpoint problem).  The heat and wave builders project a 1-D
interval PDE with one control point and one observation point onto its
leading sine modes, which keeps every eigenvalue simple and every
eigenfunction explicit.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigError, DimensionError

# |phi_k(point)| below this is treated as an exact zero.  sin at rational
# multiples of pi evaluates to exact-ish zeros polluted by floating point.
POINT_ZERO_FACTOR = 1e-9


@dataclass
class SystemSpec:
    """An LQ problem instance.

    The cost is  integral of (|u|^2 + |Cx - z|^2)/2  subject to
    x' = Ax + Bu, x(0) = x0, and optionally x(T) = x1.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    z: np.ndarray
    x0: np.ndarray
    x1: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.asarray(self.B, dtype=float)
        if self.B.ndim == 1:
            self.B = self.B[:, None]
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.x1 is not None:
            self.x1 = np.atleast_1d(np.asarray(self.x1, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionError(f"B has {self.B.shape[0]} rows, expected {n}")
        if self.C.shape[1] != n:
            raise DimensionError(f"C has {self.C.shape[1]} cols, expected {n}")
        if self.z.shape[0] != self.C.shape[0]:
            raise DimensionError(
                f"z has length {self.z.shape[0]}, expected {self.C.shape[0]}"
            )
        if self.x0.shape[0] != n:
            raise DimensionError(f"x0 has length {self.x0.shape[0]}, expected {n}")
        if self.x1 is not None and self.x1.shape[0] != n:
            raise DimensionError(f"x1 has length {self.x1.shape[0]}, expected {n}")
        for name in ("A", "B", "C", "z", "x0"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DimensionError(f"{name} contains non-finite entries")
        if self.x1 is not None and not np.all(np.isfinite(self.x1)):
            raise DimensionError("x1 contains non-finite entries")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def fixed_endpoint(self):
        return self.x1 is not None

    def to_dict(self):
        d = {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "z": self.z.tolist(),
            "x0": self.x0.tolist(),
        }
        if self.x1 is not None:
            d["x1"] = self.x1.tolist()
        return d


@dataclass
class PdeSpec:
    """Point-controlled, point-observed PDE on the interval (0, L).

    kind is "heat" or "wave"; c is the constant potential and applies to
    the heat equation only.
    """

    kind: str
    N: int
    L: float
    x_con: float
    x_obs: float
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("heat", "wave"):
            raise ConfigError(f"unknown pde kind {self.kind!r}", field="kind")
        if self.N < 1:
            raise ConfigError("N must be >= 1", field="N")
        if not (0.0 < self.x_con < self.L):
            raise ConfigError("x_con must lie in (0, L)", field="x_con")
        if not (0.0 < self.x_obs < self.L):
            raise ConfigError("x_obs must lie in (0, L)", field="x_obs")


@dataclass
class GridSpec:
    """Uniform time grid on [0, T]."""

    T: float
    steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError("T must be positive", field="T")
        if self.steps < 2:
            raise ConfigError("steps must be >= 2", field="steps")

    @property
    def h(self):
        return self.T / self.steps

    def times(self):
        return np.linspace(0.0, self.T, self.steps + 1)


def eigenfunctions_at(spec: PdeSpec, point):
    """Values phi_k(point) = sqrt(2/L) sin(k pi point / L), k = 1..N."""
    k = np.arange(1, spec.N + 1)
    return np.sqrt(2.0 / spec.L) * np.sin(k * np.pi * point / spec.L)


def heat_eigenvalues(spec: PdeSpec):
    """lambda_k = (k pi / L)^2 + c for the heat operator -d_xx + c."""
    k = np.arange(1, spec.N + 1)
    return (k * np.pi / spec.L) ** 2 + spec.c


def _point_zero_tol(spec: PdeSpec):
    return POINT_ZERO_FACTOR * np.sqrt(2.0 / spec.L)


def build_heat(spec: PdeSpec, z=1.0, x0=None):
    """Sine-mode projection of the point-controlled heat equation.

    A = diag(-lambda_1, ..., -lambda_N), B_k = phi_k(x_con), and C the
    1 x N row of phi_k(x_obs).  x0 defaults to all ones.
    """
    if spec.kind != "heat":
        raise ConfigError("build_heat requires kind='heat'", field="kind")
    lam = heat_eigenvalues(spec)
    A = np.diag(-lam)
    B = eigenfunctions_at(spec, spec.x_con)[:, None]
    C = eigenfunctions_at(spec, spec.x_obs)[None, :]
    if x0 is None:
        x0 = np.ones(spec.N)
    return SystemSpec(A=A, B=B, C=C, z=np.atleast_1d(float(z)), x0=np.asarray(x0, dtype=float))


def build_wave(spec: PdeSpec, z=1.0, x0=None):
    """Sine-mode projection of the point-controlled wave equation.

    State dimension 2N (modal positions then velocities):
    A = [[0, I], [-D, 0]] with D = diag((k pi / L)^2); the control enters
    the velocity block and the position block is observed.
    """
    if spec.kind != "wave":
        raise ConfigError("build_wave requires kind='wave'", field="kind")
    N = spec.N
    k = np.arange(1, N + 1)
    lam = (k * np.pi / spec.L) ** 2
    A = np.block(
        [[np.zeros((N, N)), np.eye(N)], [-np.diag(lam), np.zeros((N, N))]]
    )
    phi_con = eigenfunctions_at(spec, spec.x_con)
    phi_obs = eigenfunctions_at(spec, spec.x_obs)
    B = np.concatenate([np.zeros(N), phi_con])[:, None]
    C = np.concatenate([phi_obs, np.zeros(N)])[None, :]
    if x0 is None:
        x0 = np.ones(2 * N)
    return SystemSpec(A=A, B=B, C=C, z=np.atleast_1d(float(z)), x0=np.asarray(x0, dtype=float))


def heat_turnpike_predicate(spec: PdeSpec):
    """Mode-wise turnpike test for the projected heat system.

    Returns (ok, witnesses).  ok is True iff every observed mode
    (phi_i(x_obs) != 0) is either controlled (phi_i(x_con) != 0) or
    stable (lambda_i > 0).  witnesses lists the violating mode indices
    (1-based).
    """
    if spec.kind != "heat":
        raise ConfigError("heat_turnpike_predicate requires kind='heat'", field="kind")
    tol = _point_zero_tol(spec)
    obs = np.abs(eigenfunctions_at(spec, spec.x_obs)) > tol
    con = np.abs(eigenfunctions_at(spec, spec.x_con)) > tol
    lam = heat_eigenvalues(spec)
    witnesses = [
        int(k + 1)
        for k in range(spec.N)
        if obs[k] and not (con[k] or lam[k] > 0)
    ]
    return len(witnesses) == 0, witnesses


def wave_turnpike_predicate(spec: PdeSpec):
    """Mode-wise turnpike test for the projected wave system.

    Returns (ok, witnesses); ok iff every observed mode is controlled.
    Wave modes are never asymptotically stable on their own, so there is
    no stability escape hatch here.
    """
    if spec.kind != "wave":
        raise ConfigError("wave_turnpike_predicate requires kind='wave'", field="kind")
    tol = _point_zero_tol(spec)
    obs = np.abs(eigenfunctions_at(spec, spec.x_obs)) > tol
    con = np.abs(eigenfunctions_at(spec, spec.x_con)) > tol
    witnesses = [int(k + 1) for k in range(spec.N) if obs[k] and not con[k]]
    return len(witnesses) == 0, witnesses


def double_integrator(z=0.0, x0=(1.0, 0.0), x1=None):
    """The double integrator with velocity observation.

    x1' = x2, x2' = u, y = x2.  The classic velocity-turnpike example:
    the position is invisible to the cost, so only x2 and u settle.
    """
    return SystemSpec(
        A=np.array([[0.0, 1.0], [0.0, 0.0]]),
        B=np.array([[0.0], [1.0]]),
        C=np.array([[0.0, 1.0]]),
        z=np.atleast_1d(float(z)),
        x0=np.asarray(x0, dtype=float),
        x1=None if x1 is None else np.asarray(x1, dtype=float),
    )


def random_stable_system(seed, n=4, m=2, p=2, margin=0.6, z_scale=0.5):
    """Seeded random triple with A shifted to be Hurwitz by `margin`.

    Deterministic given the seed; used by tests and CLI examples.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) * 0.8
    A = A - (np.linalg.eigvals(A).real.max() + margin) * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    z = rng.standard_normal(p) * z_scale
    x0 = rng.standard_normal(n)
    return SystemSpec(A=A, B=B, C=C, z=z, x0=x0)


def system_from_dict(d):
    """Build a SystemSpec from a raw-matrix mapping (JSON-decoded)."""
    try:
        return SystemSpec(
            A=np.asarray(d["A"], dtype=float),
            B=np.asarray(d["B"], dtype=float),
            C=np.asarray(d["C"], dtype=float),
            z=np.asarray(d["z"], dtype=float),
            x0=np.asarray(d["x0"], dtype=float),
            x1=None if d.get("x1") is None else np.asarray(d["x1"], dtype=float),
        )
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r} in system document",
                          field=exc.args[0]) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed system document: {exc}") from exc
