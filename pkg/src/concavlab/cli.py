"""Command-line front end.

Solver settings come from, in increasing priority: built-in defaults, a
JSON config file (``--config`` or the path in ``CONCAVLAB_CONFIG``), and
command-line flags. The config file may hold solver keys
(``restarts``, ``max_iters``, ``rel_tol``, ``part_cap``, ``seed``), a
``mode``, and a ``plan`` object for ``sweep`` / ``verify-isometry``.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from .concavification import ConcaveSpace, concavification_norm
from .experiments import (
    EXIT_INVALID,
    EXIT_OK,
    ExperimentPlan,
    PlanError,
    exit_code,
    rows_to_csv,
    run_plan,
    summarize,
)
from .lattice import LatticeSpace, StructuralError
from .optim import OracleSizeError, SolverConfig
from .orthomaps import verify_orthomaps
from .quotient import QuotientElement, quotient_norm
from .tensor import Tensor, TensorSpace, fremlin_norm

CONFIG_ENV = "CONCAVLAB_CONFIG"
SOLVER_KEYS = ("restarts", "max_iters", "rel_tol", "part_cap", "seed")


def _read_json(value: str):
    """Parse ``value`` as a JSON file path, or as inline JSON text."""
    path = Path(value)
    try:
        if path.is_file():
            return json.loads(path.read_text())
    except OSError:
        pass
    try:
        return json.loads(value)
    except json.JSONDecodeError as err:
        raise click.BadParameter(f"neither a readable file nor JSON text: {value!r} ({err})") from err


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise click.UsageError(f"cannot read config {path}: {err}") from err
    if not isinstance(data, dict):
        raise click.UsageError(f"config {path} must hold a JSON object")
    return data


def _solver_config(cfg: dict, **flags) -> SolverConfig:
    base = {k: cfg[k] for k in SOLVER_KEYS if k in cfg}
    try:
        return SolverConfig.from_dict(base).updated(**flags)
    except (TypeError, ValueError) as err:
        raise click.UsageError(f"invalid solver settings: {err}") from err


def solver_options(f):
    f = click.option("--rel-tol", type=float, default=None, help="Relative convergence tolerance.")(f)
    f = click.option("--max-iters", type=int, default=None, help="Iteration cap per restart.")(f)
    f = click.option("--restarts", type=int, default=None, help="Number of solver restarts.")(f)
    f = click.option("--seed", type=int, default=None, help="Seed for all randomness.")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help=f"JSON config file (default: ${CONFIG_ENV}).")(f)
    return f


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


def _solver_json(rep) -> dict | None:
    if rep is None or not hasattr(rep, "converged"):
        return None
    return {
        "converged": rep.converged,
        "restarts_used": rep.restarts_used,
        "cap_hit": rep.cap_hit,
        "iterations": rep.iterations,
        "lower_bound": rep.lower_bound,
    }


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log solver warnings and progress.")
def main(verbose):
    """Concavifications, Fremlin tensor norms and diagonal quotients."""
    logging.basicConfig(level=logging.INFO if verbose else logging.ERROR, format="%(levelname)s %(message)s")


@main.command()
@click.option("--space", "space_arg", required=True, help="LatticeSpace JSON (file or text).")
@click.option("--p", "p", type=float, required=True, help="Concavification exponent.")
@click.option("--x", "x_arg", required=True, help="Vector as a JSON list (file or text).")
@click.option("--mode", type=click.Choice(["auto", "closed_form", "optimize", "brute_force"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@solver_options
def norm(space_arg, p, x_arg, mode, out, config_path, seed, restarts, max_iters, rel_tol):
    """Concavification norm of a vector, with its decomposition."""
    cfg = _load_config(config_path)
    config = _solver_config(cfg, seed=seed, restarts=restarts, max_iters=max_iters, rel_tol=rel_tol)
    mode = mode or cfg.get("mode", "auto")
    try:
        s = ConcaveSpace(LatticeSpace.from_dict(_read_json(space_arg)), p)
        x = s.vector(_read_json(x_arg))
        res = concavification_norm(s, x, mode=mode, config=config)
    except (StructuralError, ValueError, KeyError) as err:
        raise click.UsageError(str(err)) from err
    _emit({"value": res.value, "converged": res.converged, "method": res.method,
           "witness": res.witness.to_dict(), "solver": _solver_json(res.report)}, out)
    sys.exit(EXIT_OK if res.converged else 3)


def _tensor_input(tensor_arg, space_arg, exponents):
    data = _read_json(tensor_arg)
    if "factors" in data:
        ts = TensorSpace.from_dict({"factors": data["factors"]})
    else:
        if space_arg is None or exponents is None:
            raise click.UsageError("give factor spaces in the tensor file or via --space and --exponents")
        base = LatticeSpace.from_dict(_read_json(space_arg))
        ts = TensorSpace.power(base, [float(e) for e in exponents.split(",")])
    return Tensor.from_dict(ts, data)


def _tensor_options(f):
    f = click.option("--exponents", default=None, help="Comma-separated factor exponents, e.g. 1,1.")(f)
    f = click.option("--space", "space_arg", default=None, help="Shared base LatticeSpace JSON.")(f)
    f = click.option("--tensor", "tensor_arg", required=True,
                     help='Tensor JSON {"shape", "entries", "factors"?} (file or text).')(f)
    return f


@main.command("tensor-norm")
@_tensor_options
@click.option("--mode", type=click.Choice(["optimize", "brute_force"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@solver_options
def tensor_norm(tensor_arg, space_arg, exponents, mode, out, config_path, seed, restarts, max_iters, rel_tol):
    """Fremlin projective norm of a tensor, with a positive decomposition."""
    cfg = _load_config(config_path)
    config = _solver_config(cfg, seed=seed, restarts=restarts, max_iters=max_iters, rel_tol=rel_tol)
    mode = mode or cfg.get("mode", "optimize")
    try:
        u = _tensor_input(tensor_arg, space_arg, exponents)
        res = fremlin_norm(u, mode=mode, config=config)
    except (StructuralError, ValueError, KeyError, OracleSizeError) as err:
        raise click.UsageError(str(err)) from err
    _emit({"value": res.value, "converged": res.converged, "method": res.method,
           "witness": res.witness.to_dict(), "solver": _solver_json(res.report)}, out)
    sys.exit(EXIT_OK if res.converged else 3)


@main.command("quotient-norm")
@_tensor_options
@click.option("--mode", type=click.Choice(["optimize", "brute_force"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@solver_options
def quotient_norm_cmd(tensor_arg, space_arg, exponents, mode, out, config_path, seed, restarts, max_iters, rel_tol):
    """Norm of a tensor's class modulo the zero-diagonal ideal."""
    cfg = _load_config(config_path)
    config = _solver_config(cfg, seed=seed, restarts=restarts, max_iters=max_iters, rel_tol=rel_tol)
    mode = mode or cfg.get("mode", "optimize")
    try:
        u = _tensor_input(tensor_arg, space_arg, exponents)
        res = quotient_norm(QuotientElement.of(u), mode=mode, config=config)
    except (StructuralError, ValueError, KeyError, OracleSizeError) as err:
        raise click.UsageError(str(err)) from err
    solver = res.report["solver"]
    _emit({"value": res.value, "converged": res.converged, "method": res.method,
           "witness": res.witness.to_dict(), "decomposition": res.report["decomposition"].to_dict(),
           "solver": _solver_json(solver)}, out)
    sys.exit(EXIT_OK if res.converged else 3)


@main.command("verify-orthomaps")
@click.option("--samples", type=int, default=1000, show_default=True, help="Random maps per arity.")
@click.option("--arities", default="2,3,4", show_default=True)
@click.option("--dims", default="2,3,4", show_default=True)
@click.option("--norm-samples", type=int, default=50, show_default=True)
@click.option("--oracle-samples", type=int, default=5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
def verify_orthomaps_cmd(samples, arities, dims, norm_samples, oracle_samples, out, seed, config_path):
    """Check collapse, factorisation and mu bounds on random maps."""
    cfg = _load_config(config_path)
    seed = seed if seed is not None else cfg.get("seed", 0)
    if samples < 1:
        click.echo("samples must be positive", err=True)
        sys.exit(EXIT_INVALID)
    checks = verify_orthomaps(
        samples=samples,
        seed=seed,
        arities=tuple(int(a) for a in arities.split(",")),
        dims=tuple(int(d) for d in dims.split(",")),
        norm_samples=norm_samples,
        oracle_samples=oracle_samples,
    )
    ok = all(c["failures"] == 0 for c in checks.values())
    for name, c in checks.items():
        status = "PASS" if c["failures"] == 0 else "FAIL"
        click.echo(f"{status} {name}: {c['count']} samples, worst {c['worst']:.3e} (tol {c['tol']:g})", err=True)
    if out:
        Path(out).write_text(json.dumps({"all_pass": ok, "checks": checks}, indent=2) + "\n")
    sys.exit(EXIT_OK if ok else 1)


def _plan(cfg: dict, plan_arg, seed, samples, restarts, max_iters, rel_tol, families=None) -> ExperimentPlan:
    data = dict(cfg.get("plan", {}))
    if plan_arg:
        data.update(_read_json(plan_arg))
    solver = dict(data.get("solver", {}))
    solver.update({k: cfg[k] for k in SOLVER_KEYS if k in cfg and k != "seed"})
    for key, val in (("restarts", restarts), ("max_iters", max_iters), ("rel_tol", rel_tol)):
        if val is not None:
            solver[key] = val
    if solver:
        data["solver"] = solver
    if seed is not None:
        data["seed"] = seed
    elif "seed" in cfg and "seed" not in data:
        data["seed"] = cfg["seed"]
    if samples is not None:
        data["samples"] = samples
    if families is not None:
        data["families"] = families
    return ExperimentPlan.from_dict(data)


def _plan_options(f):
    f = click.option("--workers", type=int, default=1, show_default=True, help="Worker processes.")(f)
    f = click.option("--samples", type=int, default=None, help="Samples per grid point.")(f)
    f = click.option("--plan", "plan_arg", default=None, help="ExperimentPlan JSON (file or text).")(f)
    return f


def _run_checked(ctx_plan):
    try:
        return ctx_plan()
    except PlanError as err:
        click.echo(f"invalid plan: {err}", err=True)
        sys.exit(EXIT_INVALID)


@main.command()
@_plan_options
@click.option("--out-dir", type=click.Path(file_okay=False), default="sweep-out", show_default=True)
@solver_options
def sweep(plan_arg, samples, workers, out_dir, config_path, seed, restarts, max_iters, rel_tol):
    """Run every theorem family over the plan grid.

    Writes ``results.csv`` and ``summary.json`` to ``--out-dir``. Exit code
    0 when every family passes, 1 on a tolerance failure, 2 for an invalid
    plan, 3 when some solve did not converge.
    """
    cfg = _load_config(config_path)
    plan = _run_checked(lambda: _plan(cfg, plan_arg, seed, samples, restarts, max_iters, rel_tol))
    rows = run_plan(plan, workers=workers)
    summary = summarize(rows, plan)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(rows_to_csv(rows))
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    for name, fam in summary["families"].items():
        click.echo(f"{fam['status'].upper():12s} {name}: {fam['pass']}/{fam['count']} "
                   f"worst rel err {fam['worst_rel_err']}", err=True)
    sys.exit(exit_code(summary))


@main.command("verify-isometry")
@_plan_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default stdout).")
@solver_options
def verify_isometry(plan_arg, samples, workers, out, config_path, seed, restarts, max_iters, rel_tol):
    """Compare quotient norms of T(x) with concavification norms of x."""
    cfg = _load_config(config_path)
    plan = _run_checked(
        lambda: _plan(cfg, plan_arg, seed, samples, restarts, max_iters, rel_tol, families=["main-isometry"])
    )
    rows = run_plan(plan, workers=workers)
    text = rows_to_csv(rows)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(exit_code(summarize(rows)))


if __name__ == "__main__":
    main()
