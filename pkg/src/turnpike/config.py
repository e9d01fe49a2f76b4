"""Experiment configuration: JSON ingestion, problem dispatch, logging.

A config names a problem (explicit matrices, a PDE discretization, or
a seeded random system), a time grid, and what to do with it.  All
validation errors carry the offending field so a bad file fails with
an actionable message instead of a traceback from deep inside numpy.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import List

from .exceptions import ConfigError
from .systems import (
    GridSpec,
    PdeSpec,
    SystemSpec,
    build_heat,
    build_wave,
    double_integrator,
    random_stable_system,
    system_from_dict,
)

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

logger = logging.getLogger("turnpike")


def setup_logging():
    """Configure the package logger from TURNPIKE_LOG (error|info|debug)."""
    raw = os.environ.get("TURNPIKE_LOG", "error").strip().lower()
    if raw not in LOG_LEVELS:
        raise ConfigError(
            f"TURNPIKE_LOG must be one of {sorted(LOG_LEVELS)}, got {raw!r}",
            field="TURNPIKE_LOG",
        )
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logger.setLevel(LOG_LEVELS[raw])
    return logger


@dataclass
class ExperimentConfig:
    problem: dict
    grid: GridSpec
    horizons: List[float] = field(default_factory=list)
    mode: str = "free"
    output_dir: str = "."
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("free", "fixed"):
            raise ConfigError(
                f"mode must be 'free' or 'fixed', got {self.mode!r}", field="mode"
            )
        if not isinstance(self.problem, dict) or "kind" not in self.problem:
            raise ConfigError("problem needs a 'kind'", field="problem.kind")
        self.horizons = [float(T) for T in self.horizons]
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ConfigError("horizons must be strictly ascending", field="horizons")

    def system(self) -> SystemSpec:
        return resolve_problem(self.problem)

    def pde(self):
        """The PdeSpec behind a heat/wave problem, None otherwise."""
        kind = self.problem["kind"]
        if kind not in ("heat", "wave"):
            return None
        return _pde_spec(self.problem)

    def to_dict(self):
        return {
            "problem": self.problem,
            "grid": {"T": self.grid.T, "steps": self.grid.steps},
            "horizons": list(self.horizons),
            "mode": self.mode,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }


def _pde_spec(p):
    try:
        return PdeSpec(
            kind=p["kind"],
            N=int(p["N"]),
            L=float(p["L"]),
            x_con=float(p["x_con"]),
            x_obs=float(p["x_obs"]),
            c=float(p.get("c", 0.0)),
        )
    except KeyError as err:
        raise ConfigError(f"problem is missing {err.args[0]!r}",
                          field=f"problem.{err.args[0]}") from err


def resolve_problem(p) -> SystemSpec:
    """Build the SystemSpec a problem dict describes.

    kinds: 'matrices' (A/B/C/z/x0[/x1] inline), 'heat', 'wave',
    'double_integrator', 'random' (seeded generator).
    """
    kind = p.get("kind")
    if kind == "matrices":
        return system_from_dict(p)
    if kind in ("heat", "wave"):
        spec = _pde_spec(p)
        build = build_heat if kind == "heat" else build_wave
        return build(spec, z=float(p.get("z", 1.0)), x0=p.get("x0"))
    if kind == "double_integrator":
        return double_integrator(
            z=float(p.get("z", 0.0)),
            x0=tuple(p.get("x0", (1.0, 0.0))),
            x1=None if p.get("x1") is None else tuple(p["x1"]),
        )
    if kind == "random":
        return random_stable_system(int(p.get("seed", 0)))
    raise ConfigError(f"unknown problem kind {kind!r}", field="problem.kind")


def config_from_dict(d) -> ExperimentConfig:
    for key in ("problem", "grid"):
        if key not in d:
            raise ConfigError(f"config is missing {key!r}", field=key)
    g = d["grid"]
    try:
        grid = GridSpec(T=float(g["T"]), steps=int(g["steps"]))
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad grid: {err}", field="grid") from err
    return ExperimentConfig(
        problem=d["problem"],
        grid=grid,
        horizons=d.get("horizons", []),
        mode=d.get("mode", "free"),
        output_dir=d.get("output_dir", "."),
        seed=int(d.get("seed", 0)),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}", field="path") from err
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config is not valid JSON (line {err.lineno}, column {err.colno}): "
            f"{err.msg}",
            field=f"line {err.lineno}",
        ) from err
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object", field="root")
    return config_from_dict(data)
