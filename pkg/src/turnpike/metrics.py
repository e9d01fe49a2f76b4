"""Turnpike measurement: deviation curves, exponential entry/exit fits,
the horizon-sweep verifier, velocity-turnpike diagnostics, and the
spectral-splitting decay check.

Negative results are first-class here.  A solver blow-up, a flat fit,
or a midpoint deviation that refuses to shrink with the horizon is
recorded as evidence against turnpike behavior, not raised as an
error, because the phenomenon is an if-and-only-if and both outcomes
must be measurable.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .exceptions import BlowUpError, FitUndefinedError, NotASolutionError
from .horizon import Trajectory, solve_free_endpoint
from .linalg import classification_tol, invariant_subspace, kernel_basis
from .riccati import RiccatiResult, VelocityProjections
from .steady import SteadySolution
from .systems import GridSpec, SystemSpec

FLOOR_FACTOR = 1e-14
ENTRY_WINDOW = (0.05, 0.5)
EXIT_WINDOW = (0.5, 0.95)
RAMP_WINDOW = (0.1, 0.9)
R2_FLAG_LIMIT = 0.5
MIDPOINT_DECAY_RATIO = 0.5
BOUND_SLACK = 1.5


@dataclass
class TurnpikeFit:
    """One-sided exponential fit e(t) ~ K exp(-mu s), s = t or T - t."""

    K: float
    mu: float
    r2: float
    window: tuple
    side: str

    @property
    def flagged(self):
        """Fit quality too poor to support an exponential-decay claim."""
        return self.r2 < R2_FLAG_LIMIT

    def to_dict(self):
        return {
            "K": float(self.K),
            "mu": float(self.mu),
            "r2": float(self.r2),
            "window": [float(self.window[0]), float(self.window[1])],
            "side": self.side,
            "flagged": bool(self.flagged),
        }


def deviation_curve(traj: Trajectory, steady: SteadySolution, D=None):
    """Nodewise e(t) = ||u(t) - u_bar|| + ||D(x(t) - x_bar)||.

    D restricts the state comparison to the directions where decay is
    claimed; D = None means the full state (identity).
    """
    du = traj.u - steady.u_bar
    dx = traj.x - steady.x_bar
    if D is not None:
        dx = dx @ np.asarray(D).T
    return np.linalg.norm(du, axis=1) + np.linalg.norm(dx, axis=1)


def fit_exponential(t, e, side, window=None):
    """Log-linear fit of a deviation series on a boundary-free window.

    entry: ln e regressed against t on [0.05 T, 0.5 T].
    exit:  ln e regressed against T - t on [0.5 T, 0.95 T].
    The series is floored at 1e-14 * max(e) before the log.  A series
    that is identically zero has nothing to fit.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if side not in ("entry", "exit"):
        raise ValueError(f"side must be 'entry' or 'exit', got {side!r}")
    emax = float(e.max(initial=0.0))
    if emax <= 0.0:
        raise FitUndefinedError("deviation series is identically zero")
    T = float(t[-1])
    if window is None:
        frac = ENTRY_WINDOW if side == "entry" else EXIT_WINDOW
        window = (frac[0] * T, frac[1] * T)
    mask = (t >= window[0]) & (t <= window[1])
    if int(mask.sum()) < 3:
        raise FitUndefinedError(
            f"window [{window[0]:g}, {window[1]:g}] holds fewer than 3 nodes"
        )
    s = t[mask] if side == "entry" else T - t[mask]
    y = np.log(np.maximum(e[mask], FLOOR_FACTOR * emax))
    design = np.vstack([s, np.ones_like(s)]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-30 else max(0.0, 1.0 - ss_res / ss_tot)
    return TurnpikeFit(
        K=float(np.exp(coef[1])),
        mu=float(-coef[0]),
        r2=min(r2, 1.0),
        window=(float(window[0]), float(window[1])),
        side=side,
    )


def deviation_bound_check(t, e, entry: TurnpikeFit, exit_: TurnpikeFit,
                          slack=BOUND_SLACK):
    """Nodewise check e(t) <= slack * K [exp(-mu t) + exp(-mu (T-t))]
    with K = max of the two fitted amplitudes, mu = min of the rates.

    Returns (ok, worst_ratio).  worst_ratio is the smallest slack that
    would make the bound hold with these fitted constants.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    T = float(t[-1])
    K = max(entry.K, exit_.K)
    mu = min(entry.mu, exit_.mu)
    model = K * (np.exp(-mu * t) + np.exp(-mu * (T - t)))
    worst = float(np.max(e / np.maximum(model, 1e-300)))
    return worst <= slack, worst


@dataclass
class CTurnpikeReport:
    """Horizon-sweep evidence for or against deviation decay.

    verdict is decided by the midpoint-deviation trend (geometric
    decrease in T, or blow-up); the rate/amplitude consistency checks
    are reported as supporting diagnostics because they are only
    meaningful when decay actually happens.
    """

    verdict: bool
    predicted: bool
    defect: float
    horizons: List[float]
    midpoint_deviations: List[Optional[float]]
    midpoint_ratios: List[float]
    midpoint_decreasing: bool
    mu_values: List[float]
    mu_consistent: bool
    k_values: List[float]
    k_bounded: bool
    fits: List[dict]
    blow_up: Optional[dict]
    flags: List[str]
    curves: Optional[list] = None  # [(T, t, e)] when requested; not serialized

    @property
    def agrees(self):
        return self.verdict == self.predicted

    def to_dict(self):
        return {
            "verdict": bool(self.verdict),
            "predicted": bool(self.predicted),
            "agrees": bool(self.agrees),
            "stabilizability_defect": float(self.defect),
            "horizons": [float(T) for T in self.horizons],
            "midpoint_deviations": [
                None if v is None else float(v) for v in self.midpoint_deviations
            ],
            "midpoint_ratios": [float(r) for r in self.midpoint_ratios],
            "midpoint_decreasing": bool(self.midpoint_decreasing),
            "mu_values": [float(v) for v in self.mu_values],
            "mu_consistent": bool(self.mu_consistent),
            "k_values": [float(v) for v in self.k_values],
            "k_bounded": bool(self.k_bounded),
            "fits": self.fits,
            "blow_up": self.blow_up,
            "flags": list(self.flags),
        }


def verify_c_turnpike(sys: SystemSpec, steady: SteadySolution, horizons,
                      steps=4000, keep_curves=False, max_workers=None):
    """Solve the free-endpoint problem over an ascending list of horizons
    and weigh the evidence for exponential interior decay.

    The deviation is measured in the detectable directions: e(t) =
    ||u - u_bar|| + ||D(x - x_bar)|| with D from detectable_projections.
    The verdict is true when every consecutive midpoint deviation
    e(T/2) drops by at least a factor of 2 (and no sweep blew up);
    deviations below 1e-12 of the overall scale count as converged.
    The verdict is reported next to the algebraic prediction so callers
    can see whether measurement and subspace test agree.

    Horizons are independent problems and run on a thread pool; results
    are assembled in list order, so the report is deterministic.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .subspaces import detectable_projections, is_C_stabilizable

    horizons = [float(T) for T in horizons]
    if len(horizons) < 3 or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("need at least 3 strictly ascending horizons")

    predicted, defect = is_C_stabilizable(sys.A, sys.B, sys.C)
    D = detectable_projections(sys.A, sys.C).D

    def run_one(T):
        try:
            traj = solve_free_endpoint(sys, GridSpec(T=T, steps=steps))
        except BlowUpError as err:
            return T, None, None, err
        e = deviation_curve(traj, steady, D)
        return T, traj.t, e, None

    if max_workers is None:
        max_workers = min(4, len(horizons))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(run_one, horizons))

    mids: List[Optional[float]] = []
    fits: List[dict] = []
    flags: List[str] = []
    curves = [] if keep_curves else None
    blow_up = None
    for T, t, e, err in rows:
        if err is not None:
            blow_up = {
                "T": T,
                "node": err.node,
                "channel": err.channel,
                "growth_rate": err.growth_rate,
                "message": str(err),
            }
            mids.append(None)
            fits.append({"T": T, "entry": None, "exit": None})
            flags.append(f"T={T:g}: solver blow-up ({err.channel})")
            continue
        if keep_curves:
            curves.append((T, t, e))
        mids.append(float(e[len(e) // 2]))
        entry = exit_ = None
        try:
            entry = fit_exponential(t, e, "entry")
            exit_ = fit_exponential(t, e, "exit")
        except FitUndefinedError:
            flags.append(f"T={T:g}: deviation identically zero, no fit")
        rec = {
            "T": T,
            "entry": None if entry is None else entry.to_dict(),
            "exit": None if exit_ is None else exit_.to_dict(),
        }
        if entry is not None and exit_ is not None:
            ok, worst = deviation_bound_check(t, e, entry, exit_)
            rec["bound_ok"] = bool(ok)
            rec["bound_worst_ratio"] = float(worst)
        fits.append(rec)

    measured = [m for m in mids if m is not None]
    scale = max(measured) if measured else 1.0
    floor = 1e-12 * max(scale, 1e-12)
    ratios = []
    for a, b in zip(measured, measured[1:]):
        ratios.append(0.0 if b < floor else b / max(a, 1e-300))
    decreasing = bool(measured) and all(r <= MIDPOINT_DECAY_RATIO for r in ratios)

    mu_values = [
        rec[side]["mu"]
        for rec in fits
        for side in ("entry", "exit")
        if rec.get(side) and not rec[side]["flagged"]
    ]
    mu_pos = [m for m in mu_values if m > 0]
    mu_consistent = (
        len(mu_pos) == len(mu_values) > 0
        and (max(mu_pos) - min(mu_pos)) <= 0.25 * max(mu_pos)
    )
    k_values = [
        rec[side]["K"]
        for rec in fits
        for side in ("entry", "exit")
        if rec.get(side) and not rec[side]["flagged"]
    ]
    k_bounded = bool(k_values) and max(k_values) <= 10.0 * max(min(k_values), 1e-300)

    verdict = blow_up is None and decreasing
    if verdict != predicted:
        flags.append(
            "measured verdict disagrees with the subspace prediction "
            f"(defect {defect:.3e}); inspect fits"
        )
    return CTurnpikeReport(
        verdict=verdict,
        predicted=predicted,
        defect=float(defect),
        horizons=horizons,
        midpoint_deviations=mids,
        midpoint_ratios=ratios,
        midpoint_decreasing=decreasing,
        mu_values=mu_values,
        mu_consistent=bool(mu_consistent),
        k_values=k_values,
        k_bounded=bool(k_bounded),
        fits=fits,
        blow_up=blow_up,
        flags=flags,
        curves=curves,
    )


@dataclass
class VelocityReport:
    """Interior behavior of a fixed-endpoint run whose drifting
    directions admit no steady target: plateau values, the transport
    ramp, and how fast the pair closes in on the steady set."""

    u_hat: np.ndarray
    x_hat: np.ndarray
    q_hat: np.ndarray
    ramp_slope: np.ndarray
    ramp_slope_fit: np.ndarray
    ramp_r2: float
    dist_sq_to_argmin: float
    pair_dist_sq: float
    entry: Optional[TurnpikeFit]
    exit: Optional[TurnpikeFit]

    def to_dict(self):
        return {
            "u_hat": self.u_hat.tolist(),
            "x_hat": self.x_hat.tolist(),
            "q_hat": self.q_hat.tolist(),
            "ramp_slope": self.ramp_slope.tolist(),
            "ramp_slope_fit": self.ramp_slope_fit.tolist(),
            "ramp_r2": float(self.ramp_r2),
            "dist_sq_to_argmin": float(self.dist_sq_to_argmin),
            "pair_dist_sq": float(self.pair_dist_sq),
            "entry": None if self.entry is None else self.entry.to_dict(),
            "exit": None if self.exit is None else self.exit.to_dict(),
        }


def velocity_report(traj: Trajectory, riccati: RiccatiResult,
                    proj: VelocityProjections, steady: SteadySolution):
    """Estimate the velocity-turnpike quantities from a fixed-endpoint run.

    q_hat is the kernel component of the terminal decoupled adjoint
    q(T) in the splitting ker(A_plus*) (+) Lneg(A_plus*); x_hat is the
    time average of P2 x over [0.4 T, 0.6 T]; u_hat = -B* E x_hat -
    B* q_hat, so the constraint identity holds by construction.  The
    hatted values are estimators: the theory guarantees existence, not
    a formula, so they are read off the trajectory itself.

    dist_sq_to_argmin is the trapezoid time average over the whole
    horizon of the squared pointwise distance of (u(t), x(t)) to the
    steady minimizer set; pair_dist_sq is the same distance for the
    single pair (u_hat, x_hat).
    """
    if traj.q is None:
        raise ValueError("velocity_report needs a fixed-endpoint trajectory "
                         "with the decoupled adjoint channel q")
    if traj.sys is None:
        raise ValueError("trajectory carries no system reference")
    t = traj.t
    T = traj.T
    steps = traj.steps

    # oblique split of q(T): kernel part transported, stable part a layer
    ker = proj.ker_Ap_star
    stab = proj.Lneg_Ap_star
    basis = np.hstack([ker, stab])
    coef = np.linalg.solve(basis, traj.q[-1])
    q_hat = ker @ coef[: ker.shape[1]]

    lo, hi = int(0.4 * steps), int(0.6 * steps) + 1
    x_hat = (traj.x[lo:hi] @ proj.P2.T).mean(axis=0)

    Bmat = traj.sys.B
    u_hat = -(Bmat.T @ riccati.E_hat @ x_hat) - Bmat.T @ q_hat
    ramp_slope = -(Bmat @ Bmat.T) @ q_hat

    # free linear fit of P1 x on the interior window; the model line is
    # x0 - t BB* q_hat, compared through the fitted slope
    wlo = int(RAMP_WINDOW[0] * steps)
    whi = int(RAMP_WINDOW[1] * steps) + 1
    tw = t[wlo:whi]
    yw = traj.x[wlo:whi] @ proj.P1.T
    design = np.vstack([tw, np.ones_like(tw)]).T
    coefs, *_ = np.linalg.lstsq(design, yw, rcond=None)
    pred = design @ coefs
    ss_res = float(np.sum((yw - pred) ** 2))
    ss_tot = float(np.sum((yw - yw.mean(axis=0)) ** 2))
    if ss_tot <= 1e-30:
        ramp_r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        ramp_r2 = max(0.0, 1.0 - ss_res / ss_tot)
    ramp_slope_fit = coefs[0]

    w = np.ones(steps + 1)
    w[0] = w[-1] = 0.5
    d2 = np.array(
        [steady.distance_sq(traj.u[i], traj.x[i]) for i in range(steps + 1)]
    )
    dist_sq = float(np.sum(w * d2) / steps)
    pair_dist_sq = float(steady.distance_sq(u_hat, x_hat))

    dev = np.linalg.norm(traj.u - u_hat, axis=1) + np.linalg.norm(
        traj.x @ proj.P2.T - x_hat, axis=1
    )
    entry = exit_ = None
    try:
        entry = fit_exponential(t, dev, "entry")
        exit_ = fit_exponential(t, dev, "exit")
    except FitUndefinedError:
        pass

    return VelocityReport(
        u_hat=u_hat,
        x_hat=x_hat,
        q_hat=q_hat,
        ramp_slope=ramp_slope,
        ramp_slope_fit=ramp_slope_fit,
        ramp_r2=float(ramp_r2),
        dist_sq_to_argmin=dist_sq,
        pair_dist_sq=pair_dist_sq,
        entry=entry,
        exit=exit_,
    )


@dataclass
class SpectralSplitReport:
    """Decay certificates for the stable/critical/antistable components
    of an approximate solution of y' = H y."""

    dims: tuple
    stable_fit: Optional[TurnpikeFit]
    antistable_fit: Optional[TurnpikeFit]
    k_star: float
    bound_ok: bool
    defect: float

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "stable_fit": None if self.stable_fit is None else self.stable_fit.to_dict(),
            "antistable_fit": None
            if self.antistable_fit is None
            else self.antistable_fit.to_dict(),
            "k_star": float(self.k_star),
            "bound_ok": bool(self.bound_ok),
            "defect": float(self.defect),
        }


def spectral_split_decay(t, y, H, defect_rtol=0.05):
    """Split y(t) along the spectral decomposition of H and certify that
    the stable part decays forward, the antistable part backward, and
    the distance to the critical subspace obeys a two-sided envelope
    weighted by ||y(0)|| and ||y(T)||.

    The input must actually solve y' = H y: the centered two-step
    defect, relative to ||H|| ||y||, is checked first.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    H = np.asarray(H, dtype=float)
    T = float(t[-1])
    h = t[1] - t[0]
    n = H.shape[0]

    Hnorm = float(np.linalg.norm(H, 2))
    ymax = float(np.abs(y).max())
    dy = (y[2:] - y[:-2]) / (2 * h)
    defect = float(np.linalg.norm(dy - y[1:-1] @ H.T, axis=1).max(initial=0.0))
    if defect > defect_rtol * max(Hnorm * ymax, 1e-300):
        raise NotASolutionError(
            f"centered defect {defect:.3e} exceeds {defect_rtol:g} * ||H|| ||y||; "
            "the input does not solve y' = H y on this grid"
        )

    tau = classification_tol(H)
    Vm = invariant_subspace(H, "neg", tau)
    V0 = invariant_subspace(H, "zero", tau)
    Vp = invariant_subspace(H, "pos", tau)
    dims = (Vm.shape[1], V0.shape[1], Vp.shape[1])
    basis = np.hstack([Vm, V0, Vp])
    if basis.shape[1] != n:
        raise NotASolutionError(
            f"spectral split is incomplete ({basis.shape[1]} of {n} directions); "
            "H has defective clustering at the classification tolerance"
        )
    coef = np.linalg.solve(basis, y.T).T
    km, k0 = dims[0], dims[1]
    y_m = coef[:, :km] @ Vm.T
    y_p = coef[:, km + k0 :] @ Vp.T

    norm_m = np.linalg.norm(y_m, axis=1)
    norm_p = np.linalg.norm(y_p, axis=1)

    def _try_fit(series, side):
        try:
            f = fit_exponential(t, series, side)
        except FitUndefinedError:
            return None
        return f

    stable_fit = _try_fit(norm_m, "entry")
    antistable_fit = _try_fit(norm_p, "exit")

    dist0 = norm_m + norm_p
    y0n = float(np.linalg.norm(y[0]))
    yTn = float(np.linalg.norm(y[-1]))
    rates = [f.mu for f in (stable_fit, antistable_fit) if f is not None and not f.flagged]
    mu = min(rates) if rates else 0.0
    envelope = np.exp(-mu * t) * y0n + np.exp(-mu * (T - t)) * yTn
    k_star = float(np.max(dist0 / np.maximum(envelope, 1e-300)))
    bound_ok = bool(np.isfinite(k_star)) and (
        (not rates) or all(m > 0 for m in rates)
    )
    return SpectralSplitReport(
        dims=dims,
        stable_fit=stable_fit,
        antistable_fit=antistable_fit,
        k_star=k_star,
        bound_ok=bound_ok,
        defect=defect,
    )
