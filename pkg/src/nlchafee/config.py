"""Run configuration: YAML parsing, validation, and ProblemSpec assembly.

Unknown keys are rejected by name; numeric fields are range-checked.  The
output directory can be overridden with the NLCHAFEE_OUTPUT_DIR environment
variable.
"""

from __future__ import annotations

import importlib
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .model import (
    Nonlinearity,
    ProblemSpec,
    affine_diffusion,
    builtin_cubic,
    constant_diffusion,
    table_diffusion,
)

__all__ = ["RunConfig", "SolverConfig", "OutputConfig", "VerifyConfig",
           "load_config", "parse_config", "build_problem_spec", "output_directory"]

ENV_OUTPUT_DIR = "NLCHAFEE_OUTPUT_DIR"


@dataclass
class SolverConfig:
    N: int = 64
    dt: float = 1e-4
    t_end: float = 20.0
    sample_interval: float = 1e-2
    grid_points: int = 257
    deadband: Optional[float] = None


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv", "json", "dot")
    plots: bool = True


@dataclass
class VerifyConfig:
    trajectories: int = 50
    t_end: float = 20.0
    stability_probes: int = 20
    residual_trajectories: int = 5


@dataclass
class RunConfig:
    problem: dict = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    seed: int = 0
    base_dir: Path = field(default_factory=Path)


def _require_keys(section: dict, allowed: set, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _get_num(section: dict, key: str, default, where: str, *,
             lo=None, hi=None, integer=False):
    val = section.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    if integer:
        if int(val) != val:
            raise ConfigError(f"{where}.{key} must be an integer")
        val = int(val)
    else:
        val = float(val)
    if lo is not None and val < lo:
        raise ConfigError(f"{where}.{key} must be >= {lo}")
    if hi is not None and val > hi:
        raise ConfigError(f"{where}.{key} must be <= {hi}")
    return val


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}")
    return parse_config(raw if raw is not None else {}, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _require_keys(raw, {"problem", "solver", "outputs", "verify", "seed"}, "config")

    cfg = RunConfig(base_dir=Path(base_dir))
    cfg.seed = _get_num(raw, "seed", 0, "config", integer=True)

    problem = raw.get("problem", {}) or {}
    _require_keys(problem, {"lambda", "h", "grid_points", "nonlinearity", "diffusion"},
                  "problem")
    cfg.problem = {
        "lambda": _get_num(problem, "lambda", 50.0, "problem", lo=1e-12),
        "h": _get_num(problem, "h", 0.0, "problem"),
        "grid_points": _get_num(problem, "grid_points", 1025, "problem",
                                lo=3, integer=True),
        "nonlinearity": _parse_nonlinearity(problem.get("nonlinearity", {}) or {}),
        "diffusion": _parse_diffusion(problem.get("diffusion", {}) or {}),
    }

    solver = raw.get("solver", {}) or {}
    _require_keys(solver, {"N", "dt", "t_end", "sample_interval", "grid_points",
                           "deadband"}, "solver")
    cfg.solver = SolverConfig(
        N=_get_num(solver, "N", 64, "solver", lo=1, integer=True),
        dt=_get_num(solver, "dt", 1e-4, "solver", lo=1e-12),
        t_end=_get_num(solver, "t_end", 20.0, "solver", lo=1e-12),
        sample_interval=_get_num(solver, "sample_interval", 1e-2, "solver", lo=1e-12),
        grid_points=_get_num(solver, "grid_points", 257, "solver", lo=257, integer=True),
        deadband=_get_num(solver, "deadband", None, "solver", lo=0.0),
    )

    outputs = raw.get("outputs", {}) or {}
    _require_keys(outputs, {"directory", "formats", "plots"}, "outputs")
    formats = outputs.get("formats", ["csv", "json", "dot"])
    if not isinstance(formats, (list, tuple)):
        raise ConfigError("outputs.formats must be a list")
    for fmt in formats:
        if fmt not in ("csv", "json", "dot"):
            raise ConfigError(f"unknown output format {fmt!r}")
    directory = outputs.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigError("outputs.directory must be a string")
    plots = outputs.get("plots", True)
    if not isinstance(plots, bool):
        raise ConfigError("outputs.plots must be a boolean")
    cfg.outputs = OutputConfig(directory=directory, formats=tuple(formats), plots=plots)

    verify = raw.get("verify", {}) or {}
    _require_keys(verify, {"trajectories", "t_end", "stability_probes",
                           "residual_trajectories"}, "verify")
    cfg.verify = VerifyConfig(
        trajectories=_get_num(verify, "trajectories", 50, "verify", lo=1, integer=True),
        t_end=_get_num(verify, "t_end", 20.0, "verify", lo=1e-6),
        stability_probes=_get_num(verify, "stability_probes", 20, "verify",
                                  lo=1, integer=True),
        residual_trajectories=_get_num(verify, "residual_trajectories", 5, "verify",
                                       lo=1, integer=True),
    )
    return cfg


def _parse_nonlinearity(section: dict) -> dict:
    _require_keys(section, {"name", "module", "factory"}, "problem.nonlinearity")
    name = section.get("name", "cubic")
    if name == "cubic":
        return {"name": "cubic"}
    if name == "custom":
        module = section.get("module")
        factory = section.get("factory")
        if not module or not factory:
            raise ConfigError(
                "problem.nonlinearity.module and .factory are required for 'custom'")
        return {"name": "custom", "module": module, "factory": factory}
    raise ConfigError(f"unknown nonlinearity name {name!r} (cubic | custom)")


def _parse_diffusion(section: dict) -> dict:
    _require_keys(section, {"name", "params"}, "problem.diffusion")
    name = section.get("name", "constant")
    params = section.get("params", {}) or {}
    if name == "constant":
        _require_keys(params, {"value"}, "problem.diffusion.params")
        return {"name": "constant",
                "value": _get_num(params, "value", 1.0, "diffusion", lo=1e-12)}
    if name == "affine":
        _require_keys(params, {"a0", "slope"}, "problem.diffusion.params")
        return {"name": "affine",
                "a0": _get_num(params, "a0", 1.0, "diffusion", lo=1e-12),
                "slope": _get_num(params, "slope", 1.0, "diffusion", lo=0.0)}
    if name == "table":
        _require_keys(params, {"path"}, "problem.diffusion.params")
        path = params.get("path")
        if not isinstance(path, str):
            raise ConfigError("problem.diffusion.params.path must be a string")
        return {"name": "table", "path": path}
    raise ConfigError(f"unknown diffusion name {name!r} (constant | affine | table)")


def build_problem_spec(cfg: RunConfig) -> ProblemSpec:
    nl_desc = cfg.problem["nonlinearity"]
    if nl_desc["name"] == "cubic":
        nl = builtin_cubic()
    else:
        try:
            module = importlib.import_module(nl_desc["module"])
            factory = getattr(module, nl_desc["factory"])
        except (ImportError, AttributeError) as exc:
            raise ConfigError(f"cannot load custom nonlinearity: {exc}")
        nl = factory()
        if not isinstance(nl, Nonlinearity):
            raise ConfigError("custom nonlinearity factory must return a Nonlinearity")

    d_desc = cfg.problem["diffusion"]
    if d_desc["name"] == "constant":
        diff = constant_diffusion(d_desc["value"])
    elif d_desc["name"] == "affine":
        diff = affine_diffusion(d_desc["a0"], d_desc["slope"])
    else:
        path = Path(d_desc["path"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError:
            raise ConfigError(f"table diffusion CSV not found: {path}")
        except ValueError:
            data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        if data.shape[1] != 2:
            raise ConfigError("table diffusion CSV must have two columns (s, a)")
        diff = table_diffusion(data[:, 0], data[:, 1], name=f"table({path.name})")

    return ProblemSpec(
        lam=cfg.problem["lambda"],
        nonlinearity=nl,
        diffusion=diff,
        h=cfg.problem["h"],
        grid_points=cfg.problem["grid_points"],
    )


def output_directory(cfg: RunConfig) -> Path:
    override = os.environ.get(ENV_OUTPUT_DIR)
    out = Path(override) if override else Path(cfg.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out
