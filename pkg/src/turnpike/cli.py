"""Command-line front end: analyze / solve / sweep / reproduce.

All outputs are deterministic given (config, seed): CSV floats use
%.17g, JSON is emitted sorted with fixed indentation, and the SVG
emitter is coordinate-stable.  Exit status is 0 unless a solver or
config error occurs; a turnpike verdict of false is a result, not an
error.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import (
    ExperimentConfig,
    config_from_dict,
    load_config,
    logger,
    setup_logging,
)
from .exceptions import (
    ConfigError,
    FitUndefinedError,
    HypothesisError,
    TurnpikeError,
)
from .horizon import solve_fixed_endpoint, solve_free_endpoint
from .metrics import deviation_curve, fit_exponential, velocity_report, verify_c_turnpike
from .riccati import solve_are_antistrong, velocity_projections
from .steady import solve_steady
from .subspaces import (
    detectable_projections,
    is_C_stabilizable,
    is_controllable,
    weak_hautus,
)
from .svgplot import line_plot
from .systems import (
    GridSpec,
    heat_turnpike_predicate,
    wave_turnpike_predicate,
)

HEAT_POTENTIAL = -((2.0 * np.pi / 10.0) ** 2) - 1.0

PRESETS = {
    "heat": {
        "problem": {
            "kind": "heat",
            "N": 16,
            "L": 10.0,
            "c": HEAT_POTENTIAL,
            "x_con": 10.0 / 3.0,
            "x_obs": 5.0,
            "z": 1.0,
        },
        "grid": {"T": 30.0, "steps": 3000},
        "horizons": [10.0, 20.0, 40.0],
        "mode": "free",
    },
    "wave": {
        "problem": {
            "kind": "wave",
            "N": 16,
            "L": 10.0,
            "x_con": 5.0,
            "x_obs": 5.0,
            "z": 1.0,
        },
        "grid": {"T": 30.0, "steps": 6000},
        "horizons": [10.0, 20.0, 40.0],
        "mode": "free",
    },
    "double-integrator": {
        "problem": {
            "kind": "double_integrator",
            "z": 0.0,
            "x0": [1.0, 0.0],
            "x1": [0.0, 1.0],
        },
        "grid": {"T": 40.0, "steps": 4000},
        "horizons": [10.0, 20.0, 40.0, 80.0],
        "mode": "fixed",
    },
}


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _resolve_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}",
                field="preset",
            )
        cfg = config_from_dict(PRESETS[args.preset])
    else:
        raise ConfigError("need --config FILE or --preset NAME", field="config")
    if getattr(args, "T", None) is not None:
        cfg.grid = GridSpec(T=float(args.T), steps=cfg.grid.steps)
    if getattr(args, "steps", None) is not None:
        cfg.grid = GridSpec(T=cfg.grid.T, steps=int(args.steps))
    if getattr(args, "seed", None) is not None:
        cfg.seed = int(args.seed)
        if cfg.problem.get("kind") == "random":
            cfg.problem["seed"] = cfg.seed
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    if getattr(args, "horizons", None):
        cfg.horizons = [float(v) for v in args.horizons.split(",")]
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg


def cmd_analyze(cfg: ExperimentConfig):
    system = cfg.system()
    rep = detectable_projections(system.A, system.C)
    cs_ok, cs_defect = is_C_stabilizable(system.A, system.B, system.C)
    wh_ok, wh_failures = weak_hautus(system.A, system.C)
    try:
        ric = solve_are_antistrong(system.A, system.B, system.C)
        ric_doc = ric.to_dict()
    except TurnpikeError as err:
        ric_doc = {"error": str(err)}
    doc = {
        "schema": 1,
        "problem": cfg.problem,
        "dims": {"n": system.n, "m": system.m, "p": system.C.shape[0]},
        "subspaces": rep.to_dict(),
        "c_stabilizable": {"verdict": bool(cs_ok), "defect": float(cs_defect)},
        "weak_hautus": {
            "ok": bool(wh_ok),
            "failures": [
                {"re": float(b.real), "im": float(b.imag)} for b in wh_failures
            ],
        },
        "controllable": bool(is_controllable(system.A, system.B)),
        "riccati": ric_doc,
    }
    pde = cfg.pde()
    if pde is not None:
        predicate = (
            heat_turnpike_predicate if pde.kind == "heat" else wave_turnpike_predicate
        )
        ok, witnesses = predicate(pde)
        doc["pde_predicate"] = {"ok": bool(ok), "witness_modes": list(witnesses)}
    _write_json(os.path.join(cfg.output_dir, "analyze.json"), doc)
    return doc


def cmd_solve(cfg: ExperimentConfig):
    system = cfg.system()
    if cfg.mode == "fixed":
        traj = solve_fixed_endpoint(system, cfg.grid)
    else:
        traj = solve_free_endpoint(system, cfg.grid)
    csv_path = os.path.join(cfg.output_dir, "trajectory.csv")
    traj.write_csv(csv_path)
    doc = {"schema": 1, **traj.summary(), "csv": csv_path, "config": cfg.to_dict()}
    _write_json(os.path.join(cfg.output_dir, "summary.json"), doc)
    logger.info("solve: cost %.6g, residual %.3e", traj.cost, traj.residual)
    return doc, traj


def cmd_sweep(cfg: ExperimentConfig):
    if len(cfg.horizons) < 3:
        raise ConfigError("sweep needs at least 3 horizons", field="horizons")
    system = cfg.system()
    steady = solve_steady(system.A, system.B, system.C, system.z)
    if cfg.mode == "free":
        report = verify_c_turnpike(
            system, steady, cfg.horizons, steps=cfg.grid.steps, keep_curves=True
        )
        doc = {"schema": 1, "mode": "free", **report.to_dict()}
        if report.curves:
            series = [
                (f"T={T:g}", t, e) for T, t, e in report.curves
            ]
            try:
                line_plot(
                    os.path.join(cfg.output_dir, "deviations.svg"),
                    series,
                    title="deviation from the steady pair",
                    xlabel="t",
                    ylabel="e(t)",
                    logy=True,
                )
            except ValueError:
                pass  # all-zero deviations have no log-scale image
    else:
        doc = _sweep_fixed(cfg, system, steady)
    _write_json(os.path.join(cfg.output_dir, "sweep.json"), doc)
    return doc


def _sweep_fixed(cfg: ExperimentConfig, system, steady):
    """Velocity-turnpike sweep: per-horizon fixed-endpoint runs, plateau
    estimates, and the 1/T law for the distance to the steady set."""
    ric = solve_are_antistrong(system.A, system.B, system.C)
    flags = []
    try:
        proj = velocity_projections(system.A, system.B, system.C, ric)
    except HypothesisError as err:
        proj = None
        flags.append(f"velocity hypothesis violated: {err}")

    def run_one(T):
        return solve_fixed_endpoint(system, GridSpec(T=T, steps=cfg.grid.steps))

    with ThreadPoolExecutor(max_workers=min(4, len(cfg.horizons))) as pool:
        trajs = list(pool.map(run_one, cfg.horizons))

    per_T = []
    curves = []
    dist = []
    for T, traj in zip(cfg.horizons, trajs):
        if proj is not None:
            vr = velocity_report(traj, ric, proj, steady)
            rec = {"T": T, "cost": traj.cost, **vr.to_dict()}
            dist.append(vr.dist_sq_to_argmin)
            dev = np.linalg.norm(traj.u - vr.u_hat, axis=1) + np.linalg.norm(
                traj.x @ proj.P2.T - vr.x_hat, axis=1
            )
            curves.append((f"T={T:g}", traj.t, dev))
        else:
            e = deviation_curve(traj, steady)
            rec = {"T": T, "cost": traj.cost}
            try:
                fit = fit_exponential(traj.t, e, "entry")
                rec["entry"] = fit.to_dict()
                if fit.flagged:
                    flags.append(
                        f"T={T:g}: deviation does not decay exponentially "
                        f"(r2 = {fit.r2:.3f}); oscillatory or non-turnpike behavior"
                    )
            except FitUndefinedError:
                rec["entry"] = None
            rec["midpoint_deviation"] = float(e[len(e) // 2])
            curves.append((f"T={T:g}", traj.t, e))
        per_T.append(rec)

    doc = {"schema": 1, "mode": "fixed", "per_T": per_T, "flags": flags}
    if len(dist) >= 2 and all(d > 0 for d in dist):
        slope = np.polyfit(np.log(cfg.horizons), np.log(dist), 1)[0]
        doc["dist_sq_power"] = float(slope)
    if curves:
        try:
            line_plot(
                os.path.join(cfg.output_dir, "deviations.svg"),
                curves,
                title="deviation from the interior plateau",
                xlabel="t",
                ylabel="e(t)",
                logy=True,
            )
        except ValueError:
            pass
    if proj is not None and trajs:
        _ramp_plot(cfg, trajs[-1], proj, per_T[-1])
    return doc


def _ramp_plot(cfg, traj, proj, rec):
    """The drifting component of the largest-horizon run against the
    predicted transport line."""
    y = traj.x @ proj.P1.T
    slope = proj.P1 @ np.asarray(rec["ramp_slope"])
    model = traj.x[0] @ proj.P1.T + np.outer(traj.t, slope)
    series = []
    for j in range(y.shape[1]):
        if np.ptp(y[:, j]) > 1e-12 or abs(slope[j]) > 1e-12:
            series.append((f"P1x[{j + 1}]", traj.t, y[:, j]))
            series.append((f"model[{j + 1}]", traj.t, model[:, j]))
    if series:
        line_plot(
            os.path.join(cfg.output_dir, "ramp.svg"),
            series,
            title="transport ramp",
            xlabel="t",
            ylabel="P1 x",
        )


def cmd_reproduce(name, args):
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}", field="name"
        )
    args.preset = name
    args.config = None
    cfg = _resolve_config(args)

    analysis = cmd_analyze(cfg)
    summary, traj = cmd_solve(cfg)
    _figures(cfg, traj)
    sweep = cmd_sweep(cfg)

    verdict = {"schema": 1, "name": name, "mode": cfg.mode}
    if "pde_predicate" in analysis:
        verdict["predicate"] = analysis["pde_predicate"]
        verdict["sweep_verdict"] = sweep.get("verdict")
        verdict["agrees"] = sweep.get("verdict") == analysis["pde_predicate"]["ok"]
    else:
        last = sweep["per_T"][-1] if sweep.get("per_T") else {}
        verdict["ramp_r2"] = last.get("ramp_r2")
        verdict["dist_sq_power"] = sweep.get("dist_sq_power")
        verdict["flags"] = sweep.get("flags", [])
    _write_json(os.path.join(cfg.output_dir, "verdict.json"), verdict)
    return verdict


def _figures(cfg, traj):
    """Control and observed-output curves for a solved run."""
    system = traj.sys
    line_plot(
        os.path.join(cfg.output_dir, "control.svg"),
        [
            (f"u_{j + 1}", traj.t, traj.u[:, j])
            for j in range(traj.u.shape[1])
        ],
        title="optimal control",
        xlabel="t",
        ylabel="u",
    )
    y = traj.x @ system.C.T
    series = [(f"y_{j + 1}", traj.t, y[:, j]) for j in range(y.shape[1])]
    series.append(("z", traj.t, np.full(len(traj.t), float(system.z[0]))))
    line_plot(
        os.path.join(cfg.output_dir, "observed.svg"),
        series,
        title="observed state",
        xlabel="t",
        ylabel="Cx",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="turnpike",
        description="LQ turnpike analysis: subspace tests, horizon solvers, "
        "rate measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, horizons=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"one of {sorted(PRESETS)}")
        p.add_argument("--T", type=float, help="override horizon length")
        p.add_argument("--steps", type=int, help="override grid steps")
        p.add_argument("--seed", type=int, help="override random seed")
        p.add_argument("--out", help="output directory")
        if horizons:
            p.add_argument("--horizons", help="comma-separated sweep horizons")

    common(sub.add_parser("analyze", help="subspace and predicate report"))
    common(sub.add_parser("solve", help="solve one finite-horizon problem"))
    common(sub.add_parser("sweep", help="horizon sweep with turnpike fits"),
           horizons=True)
    rp = sub.add_parser("reproduce", help="run a named example end to end")
    rp.add_argument("name", choices=sorted(PRESETS))
    rp.add_argument("--T", type=float, help="override horizon length")
    rp.add_argument("--steps", type=int, help="override grid steps")
    rp.add_argument("--seed", type=int, help="override random seed")
    rp.add_argument("--out", help="output directory")
    rp.add_argument("--horizons", help="comma-separated sweep horizons")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup_logging()
        if args.command == "analyze":
            doc = cmd_analyze(_resolve_config(args))
            print(json.dumps(doc, indent=2, sort_keys=True))
        elif args.command == "solve":
            doc, _ = cmd_solve(_resolve_config(args))
            print(json.dumps(doc, indent=2, sort_keys=True))
        elif args.command == "sweep":
            doc = cmd_sweep(_resolve_config(args))
            print(json.dumps(doc, indent=2, sort_keys=True))
        elif args.command == "reproduce":
            doc = cmd_reproduce(args.name, args)
            print(json.dumps(doc, indent=2, sort_keys=True))
    except ConfigError as err:
        print(f"config error ({err.field}): {err}", file=sys.stderr)
        return 2
    except TurnpikeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
