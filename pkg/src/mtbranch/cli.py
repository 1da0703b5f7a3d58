"""Command-line entry point: ``mtbranch {solve,sweep,sharp,count,asym}``.

Settings come from, in increasing priority: built-in defaults, a flat
``key = value`` file given with ``--config``, and command-line flags.
Exit codes: 0 ok, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import asymptotics as asy
from . import branch, io
from .ode_engine import MU_MAX, MU_MIN, ShootingError, integrate_profile

ENV_OUT = "MT_BRANCH_SEED_DIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    mu: Optional[float] = None
    mu_min: float = MU_MIN
    mu_max: float = 24.0
    nodes: int = 400
    Lambda: Optional[float] = None
    R_max: float = 5.0
    out: Optional[str] = None
    format: str = "json"
    jobs: int = 1
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def validate(self) -> None:
        if self.command in ("solve", "asym"):
            if self.mu is None:
                raise UsageError(f"{self.command} requires --mu")
            if not MU_MIN <= self.mu <= MU_MAX:
                raise UsageError(f"--mu must lie in [{MU_MIN:g}, {MU_MAX:g}], got {self.mu:g}")
        if self.command == "count":
            if self.Lambda is None or not self.Lambda > 0:
                raise UsageError("count requires a positive --Lambda")
        if self.command in ("sweep", "sharp", "count"):
            if not MU_MIN <= self.mu_min < self.mu_max <= MU_MAX:
                raise UsageError(f"need {MU_MIN:g} <= --mu-min < --mu-max <= {MU_MAX:g}")
            if self.nodes < 3:
                raise UsageError("--nodes must be >= 3")
        if self.R_max <= 0:
            raise UsageError("--R-max must be positive")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if not (0 < self.rel_tol < 1e-2 and 0 < self.abs_tol < 1e-2):
            raise UsageError("--rel-tol and --abs-tol must lie in (0, 1e-2)")

    @property
    def controls(self) -> branch.SolverControls:
        return branch.SolverControls(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    def out_dir(self) -> Path:
        d = Path(self.out or os.environ.get(ENV_OUT) or "mtbranch_out")
        try:
            d.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {d}: {exc}") from exc
        if not os.access(d, os.W_OK):
            raise UsageError(f"output directory {d} is not writable")
        return d

    def grid(self) -> np.ndarray:
        return branch.default_grid(self.nodes, self.mu_min, self.mu_max)


_CASTS = {"mu": float, "mu_min": float, "mu_max": float, "nodes": int, "Lambda": float,
          "R_max": float, "out": str, "format": str, "jobs": int, "rel_tol": float, "abs_tol": float}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Unknown keys are errors."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CASTS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _CASTS[key](val)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {val!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./mtbranch_out)")
    common.add_argument("--format", choices=("csv", "json"), help="stdout summary format")
    common.add_argument("--jobs", type=int, help="parallel solves in sweeps")
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--abs-tol", dest="abs_tol", type=float)

    sweep_opts = argparse.ArgumentParser(add_help=False)
    sweep_opts.add_argument("--mu-min", dest="mu_min", type=float)
    sweep_opts.add_argument("--mu-max", dest="mu_max", type=float)
    sweep_opts.add_argument("--nodes", type=int, help="log-spaced base nodes before refinement")

    p = argparse.ArgumentParser(prog="mtbranch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve one branch point")
    s.add_argument("--mu", type=float)
    sub.add_parser("sweep", parents=[common, sweep_opts], help="sample the energy curve")
    sub.add_parser("sharp", parents=[common, sweep_opts], help="locate the supremum of the energy curve")
    c = sub.add_parser("count", parents=[common, sweep_opts], help="count solutions at an energy level")
    c.add_argument("--Lambda", type=float)
    a = sub.add_parser("asym", parents=[common], help="blow-up checks for one profile")
    a.add_argument("--mu", type=float)
    a.add_argument("--R-max", dest="R_max", type=float, help="comparison radius for w (bubble units)")
    return p


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    if getattr(ns, "config", None):
        for k, v in read_config_file(ns.config).items():
            setattr(cfg, k, v)
    for k in _CASTS:
        v = getattr(ns, k, None)
        if v is not None:
            setattr(cfg, k, v)
    cfg.validate()
    return cfg


def _emit(cfg: RunConfig, summary: dict) -> None:
    if cfg.format == "json":
        sys.stdout.write(io.json_text(summary))
    else:
        for k, v in summary.items():
            if isinstance(v, (dict, list, tuple)):
                v = io.json_text(v).replace("\n", " ").strip()
            elif isinstance(v, float):
                v = io.fmt(v)
            print(f"{k},{v}")


def _point_dict(pt: branch.BranchPoint) -> dict:
    return {
        "mu": pt.mu,
        "log_lambda_mu": pt.log_lambda_mu,
        "lambda_mu": pt.lambda_mu,
        "Lambda": pt.dirichlet_energy,
        "E_value": pt.mt_value,
        "s_hat": pt.s_hat,
        "step_count": pt.step_count,
        "energy_identity_gap": pt.energy_identity_gap,
    }


def cmd_solve(cfg: RunConfig) -> dict:
    out = cfg.out_dir()
    prof = integrate_profile(cfg.controls.for_mu(cfg.mu))
    pt = branch.point_from_profile(prof)
    io.write_csv(out / "profile.csv", io.PROFILE_HEADER, io.profile_rows(prof))
    summary = _point_dict(pt)
    summary["tau_hat"] = prof.tau_hat
    io.write_json(out / "solve.json", summary)
    return summary


def _sweep(cfg: RunConfig) -> branch.BranchCurve:
    return branch.sweep_branch(cfg.grid(), cfg.controls, jobs=cfg.jobs)


def _curve_summary(curve: branch.BranchCurve) -> dict:
    return {
        "mu_sharp": curve.mu_sharp,
        "lambda_sharp": curve.lambda_sharp,
        "four_pi": branch.FOUR_PI,
        "refined": curve.refined,
        "grid": curve.grid,
        "n_local_maxima": curve.n_local_maxima,
        "failures": [{"mu": m, "error": e} for m, e in curve.failures],
        "warnings": list(curve.warnings),
        "small_mu_eigenvalue": branch.eigenvalue_limit_report(curve),
    }


def cmd_sweep(cfg: RunConfig) -> dict:
    out = cfg.out_dir()
    curve = _sweep(cfg)
    io.write_csv(out / "branch.csv", io.BRANCH_HEADER, io.branch_rows(curve))
    summary = _curve_summary(curve)
    io.write_json(out / "branch.json", summary)
    return summary


def cmd_sharp(cfg: RunConfig) -> dict:
    out = cfg.out_dir()
    curve = branch.refine_curve(_sweep(cfg), cfg.controls)
    io.write_csv(out / "branch.csv", io.BRANCH_HEADER, io.branch_rows(curve))
    summary = {
        "Lambda_sharp": curve.lambda_sharp,
        "mu_sharp": curve.mu_sharp,
        "four_pi": branch.FOUR_PI,
        "margin": curve.lambda_sharp - branch.FOUR_PI,
    }
    io.write_json(out / "sharp.json", {**summary, **_curve_summary(curve)})
    return summary


def cmd_count(cfg: RunConfig) -> dict:
    out = cfg.out_dir()
    curve = _sweep(cfg)
    try:
        curve = branch.refine_curve(curve, cfg.controls)
    except branch.BracketError as exc:
        curve = replace(curve, warnings=curve.warnings + (str(exc),))
    res = branch.count_solutions(cfg.Lambda, curve, cfg.controls)
    summary = {
        "Lambda": res.Lambda,
        "regime": res.regime,
        "observed_count": res.observed_count,
        "crossings": list(res.crossings),
        "mu_window": list(res.mu_window),
        "lambda_sharp": res.lambda_sharp,
        "four_pi": branch.FOUR_PI,
        "warning": res.warning,
        "curve_warnings": list(curve.warnings),
    }
    io.write_json(out / "count.json", summary)
    return summary


FLUX_RADII = (10.0, 100.0, 1000.0, 10000.0)


def cmd_asym(cfg: RunConfig) -> dict:
    out = cfg.out_dir()
    prof = integrate_profile(cfg.controls.for_mu(cfg.mu))
    if cfg.R_max > prof.tau_hat:
        raise UsageError(f"--R-max {cfg.R_max:g} exceeds tau_hat={prof.tau_hat:.6g}")
    dec = asy.decompose(prof, cfg.R_max)
    chk = asy.decay_check(prof)
    R = np.geomspace(min(0.1, prof.tau_hat), prof.tau_hat, 200)
    R[-1] = prof.tau_hat
    q = asy.quantization_profile(prof, R)
    io.write_csv(out / "decomposition.csv", io.DECOMPOSITION_HEADER, io.decomposition_rows(dec))
    io.write_csv(out / "quantization.csv", io.QUANTIZATION_HEADER, io.quantization_rows(q))
    summary = {
        "mu": prof.mu,
        "sup_err_w": dec.sup_err_w,
        "decay_ok": chk.decay_ok,
        "density_ok": chk.density_ok,
        "R0": chk.R0,
        "flux_at_r": {io.fmt(r): 2 * math.pi * r * asy.w_prime(r) for r in FLUX_RADII},
        "max_eta_excess": chk.max_eta_excess,
        "max_density": chk.max_density,
        "Lambda": prof.dirichlet_energy,
        "warning": chk.warning,
    }
    io.write_json(out / "asym.json", summary)
    return summary


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "sharp": cmd_sharp,
            "count": cmd_count, "asym": cmd_asym}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        summary = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"mtbranch {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ShootingError, ArithmeticError, branch.BracketError) as exc:
        print(f"mtbranch {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    _emit(cfg, summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
