"""Command-line front end: ``elliptic {catalog,eig,solve-monotone,branch,mp}``.

Settings come from defaults, then an optional ``key = value`` config file,
then command-line flags.  Exit codes: 0 success, 1 solver error (summary
written with ``"failed": true``), 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .barriers import default_barriers, monotone_iterate, stability_classify
from .branch import (
    ContinuationConfig,
    estimate_lambda_star,
    pseudo_arclength_continue,
    trace_minimal_branch,
)
from .exceptions import EllipticError, NoFold
from .grid import build_grid, norm_inf, write_field_csv
from .linops import assemble, lambda1_exact, smallest_eigenpair
from .minimax import energy, mountain_pass, second_solution
from .problems import CATALOG, Problem, catalog, catalog_listing
from .validation import check_count, check_positive

log = logging.getLogger("elliptic")

COMMANDS = ("catalog", "eig", "solve-monotone", "branch", "mp")

DEFAULT_TOL = {"eig": 1e-10, "solve-monotone": 1e-10, "branch": 1e-10, "mp": 1e-6}


@dataclass
class RunConfig:
    """Resolved settings for one command.

    problem    catalog name (default gelfand)
    params     nonlinearity parameters; the value ``lambda1`` means lambda1_h
    lam        coupling lambda (default 1.0)
    n, dim     interior nodes per axis (99) and dimension (1)
    tol        tolerance; None picks the command default in DEFAULT_TOL
    out        output directory (default ``out``)
    seed       seed for randomized starts (default 0)
    m          mountain-pass path segments (32)
    direction  monotone start: ``super`` or ``sub`` (super)
    arclength  continue past the fold (False)
    lambda_max continuation bound (inf)
    lambda_min lower lambda bound of the arclength run (0)
    norm_cap   sup-norm cap of the arclength run (1e3)
    second     mp: run the second-solution driver (False)
    shift      eig: constant shift c of -Lap_h + c (0)
    """

    command: str = "catalog"
    problem: str = "gelfand"
    params: dict = field(default_factory=dict)
    lam: float = 1.0
    n: int = 99
    dim: int = 1
    tol: float | None = None
    out: str = "out"
    seed: int = 0
    m: int = 32
    direction: str = "super"
    arclength: bool = False
    lambda_max: float = math.inf
    lambda_min: float = 0.0
    norm_cap: float = 1e3
    second: bool = False
    shift: float = 0.0

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOL.get(self.command, 1e-10)


class ConfigError(Exception):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = errors


_FIELD_TYPES = {
    "problem": str, "lam": float, "n": int, "dim": int, "tol": float, "out": str,
    "seed": int, "m": int, "direction": str, "arclength": bool, "lambda_max": float,
    "lambda_min": float, "norm_cap": float, "second": bool, "shift": float,
}
_ALIASES = {"lambda": "lam", "lambda-max": "lambda_max", "lambda-min": "lambda_min",
            "norm-cap": "norm_cap"}


def _coerce(key, raw, errors):
    typ = _FIELD_TYPES[key]
    try:
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        return typ(raw)
    except (TypeError, ValueError):
        errors.append(f"{key}: cannot parse {raw!r} as {typ.__name__}")
        return None


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; ``param.NAME`` sets a parameter."""
    out, errors = {}, []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{path}:{lineno}: expected key = value")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key).replace("-", "_")
        if key.startswith("param."):
            out.setdefault("params", {})[key[6:]] = value
        elif key in _FIELD_TYPES:
            out[key] = value
        else:
            errors.append(f"{path}:{lineno}: unknown key {key!r}")
    if errors:
        raise ConfigError(errors)
    return out


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--n", default=S, help="interior nodes per axis (99)")
    common.add_argument("--dim", default=S, help="1 or 2 (1)")
    common.add_argument("--tol", default=S, help="tolerance (command default)")
    common.add_argument("--out", default=S, help="output directory (out)")
    common.add_argument("--seed", default=S, help="random seed (0)")
    common.add_argument("--config", default=S, help="key = value config file")
    common.add_argument("--problem", default=S, help=f"one of {', '.join(CATALOG)}")
    common.add_argument("--param", action="append", default=S, metavar="KEY=VALUE",
                        help="nonlinearity parameter; VALUE may be 'lambda1'")

    p = argparse.ArgumentParser(prog="elliptic", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command")
    cat = sub.add_parser("catalog", parents=[common], help="list nonlinearities")
    cat.add_argument("action", nargs="?", default="list", choices=["list"])
    eig = sub.add_parser("eig", parents=[common], help="principal eigenpair of -Lap_h + c")
    eig.add_argument("--shift", default=S)
    mono = sub.add_parser("solve-monotone", parents=[common], help="monotone iteration")
    mono.add_argument("--lambda", dest="lam", default=S)
    mono.add_argument("--direction", default=S, choices=["sub", "super"])
    br = sub.add_parser("branch", parents=[common], help="bifurcation diagram")
    br.add_argument("--arclength", action="store_true", default=S)
    br.add_argument("--lambda-max", dest="lambda_max", default=S)
    br.add_argument("--lambda-min", dest="lambda_min", default=S)
    br.add_argument("--norm-cap", dest="norm_cap", default=S)
    mp = sub.add_parser("mp", parents=[common], help="mountain-pass saddle")
    mp.add_argument("--lambda", dest="lam", default=S)
    mp.add_argument("--m", default=S)
    mp.add_argument("--second", action="store_true", default=S)
    return p


def parse_config(argv) -> RunConfig:
    """Parse argv (and the optional config file) into a validated RunConfig."""
    ns = vars(_parser().parse_args(argv))
    command = ns.pop("command", None) or "catalog"
    ns.pop("action", None)
    errors = []
    merged: dict = {}
    if "config" in ns:
        try:
            merged.update(read_config_file(ns.pop("config")))
        except ConfigError as err:
            errors.extend(err.errors)
        except OSError as err:
            errors.append(f"config: {err}")
    params = dict(merged.pop("params", {}))
    for item in ns.pop("param", []) or []:
        if "=" not in item:
            errors.append(f"param: expected KEY=VALUE, got {item!r}")
            continue
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    merged.update(ns)
    cfg = RunConfig(command=command)
    for key, raw in merged.items():
        val = _coerce(key, raw, errors)
        if val is not None:
            setattr(cfg, key, val)
    cfg.params = params
    errors += validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg: RunConfig) -> list:
    errors = []
    errors += check_count("n", cfg.n, 3)
    if cfg.dim not in (1, 2):
        errors.append(f"dim: must be 1 or 2, got {cfg.dim}")
    if cfg.tol is not None:
        errors += check_positive("tol", cfg.tol)
    errors += check_count("m", cfg.m, 8)
    if cfg.problem not in CATALOG:
        errors.append(f"problem: unknown name {cfg.problem!r}")
    if cfg.direction not in ("sub", "super"):
        errors.append(f"direction: must be sub or super, got {cfg.direction!r}")
    if cfg.lam < 0:
        errors.append(f"lambda: must be nonnegative, got {cfg.lam}")
    for k, v in cfg.params.items():
        if v != "lambda1":
            try:
                float(v)
            except ValueError:
                errors.append(f"param.{k}: not a number: {v!r}")
    return errors


# --- outputs -------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def write_diagram_csv(path, diagram):
    cols = ["lambda", "sup_norm", "l2_norm", "lambda1_lin", "tag", "arclength"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in diagram.rows():
            w.writerow([row[c] if c == "tag" else f"{row[c]:.17g}" for c in cols])


# --- commands ------------------------------------------------------------


def _problem(cfg: RunConfig, grid) -> Problem:
    lam1 = lambda1_exact(grid)
    params = {k: (lam1 if v == "lambda1" else float(v)) for k, v in cfg.params.items()}
    return Problem(grid, catalog(cfg.problem, **params), cfg.lam)


def _grid(cfg):
    return build_grid(cfg.dim, cfg.n)


def cmd_catalog(cfg, out, summary):
    listing = catalog_listing()
    print(json.dumps(_jsonable(listing), indent=2, sort_keys=True))
    summary["entries"] = [e["name"] for e in listing]


def cmd_eig(cfg, out, summary):
    grid = _grid(cfg)
    pair = smallest_eigenpair(assemble(grid, cfg.shift), tol=cfg.tolerance)
    write_field_csv(out / "eigenvector.csv", grid, pair.vector)
    summary.update(lambda1=pair.value, closed_form=lambda1_exact(grid) + cfg.shift,
                   residual=pair.residual, iterations=pair.iterations)


def cmd_solve_monotone(cfg, out, summary):
    grid = _grid(cfg)
    problem = _problem(cfg, grid)
    summary["lambda"] = cfg.lam
    pair = default_barriers(problem)
    u, trace = monotone_iterate(problem, pair, "from_" + cfg.direction, tol=cfg.tolerance)
    st = stability_classify(problem, u)
    write_field_csv(out / "solution.csv", grid, u)
    summary.update(sup_norm=norm_inf(u), residual=trace.residuals[-1], lambda1_lin=st.lambda1_lin,
                   tag=st.tag, iterations=trace.iterations)


def cmd_branch(cfg, out, summary):
    grid = _grid(cfg)
    problem = _problem(cfg, grid)
    ccfg = ContinuationConfig(lambda_max=cfg.lambda_max, lambda_min=cfg.lambda_min,
                              norm_cap=cfg.norm_cap, newton_tol=cfg.tolerance)
    diagram = trace_minimal_branch(problem, ccfg)
    fp0 = problem.nonlinearity.fprime0
    summary["bound_lambda1_over_fprime0"] = lambda1_exact(grid) / fp0 if fp0 > 0 else None
    if diagram.termination == "fold":
        try:
            summary["lambda_star"] = estimate_lambda_star(diagram, problem)
        except NoFold:
            pass
        if cfg.arclength:
            pseudo_arclength_continue(problem, diagram, ccfg)
    summary.update(termination=diagram.termination, n_points=len(diagram.points))
    write_diagram_csv(out / "diagram.csv", diagram)


def cmd_mp(cfg, out, summary):
    grid = _grid(cfg)
    problem = _problem(cfg, grid)
    summary["lambda"] = cfg.lam
    if cfg.second:
        sol = second_solution(problem, cfg.lam, m=cfg.m, tol=cfg.tolerance)
        res = sol.result
        u = sol.u2
        write_field_csv(out / "minimal.csv", grid, sol.minimal)
        summary.update(minimal_sup_norm=norm_inf(sol.minimal), ordering=sol.certificate["ordering"],
                       c=energy(problem, cfg.lam, u))
    else:
        e1 = smallest_eigenpair(assemble(grid)).vector
        t = 1.0
        for _ in range(40):
            if energy(problem, cfg.lam, t * e1) < 0:
                break
            t *= 2.0
        res = mountain_pass(problem, cfg.lam, t * e1, m=cfg.m, tol=cfg.tolerance)
        u = res.u
        summary["c"] = res.c
    st = stability_classify(problem, u, cfg.lam)
    write_field_csv(out / "saddle.csv", grid, u)
    summary.update(sup_norm=norm_inf(u), grad_norm=res.grad_norm, lambda1_lin=st.lambda1_lin,
                   iters=res.iters)


HANDLERS = {
    "catalog": cmd_catalog,
    "eig": cmd_eig,
    "solve-monotone": cmd_solve_monotone,
    "branch": cmd_branch,
    "mp": cmd_mp,
}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    summary = {"command": cfg.command, "problem": cfg.problem, "n": cfg.n, "dim": cfg.dim}
    if cfg.command != "catalog":
        out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)
    try:
        HANDLERS[cfg.command](cfg, out, summary)
    except EllipticError as err:
        name = type(err).__name__
        print(f"{name}: {err}", file=sys.stderr)
        summary.update(failed=True, error=name, message=str(err))
        write_json(out / "summary.json", summary)
        return 1
    summary["failed"] = False
    if cfg.command != "catalog":
        write_json(out / "summary.json", summary)
    return 0


def _setup_logging():
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("ELLIPTIC_LOG", "quiet").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as err:
        print("invalid configuration:", file=sys.stderr)
        for e in err.errors:
            print(f"  - {e}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
