"""Command-line front end.

Subcommands: solve, sweep, rho, validate, dump-field, diff-field.
Configuration comes from flat `key = value` files (--config) overridden
by explicit flags; the output directory falls back to the
MASPLIT_OUT_DIR environment variable and then to ./masplit-out. Every
run is driven by one integer seed, so identical configurations produce
bit-identical CSV output.

Exit codes: 0 success, 1 usage or invalid input, 2 data-level failure
(non-convergence, loss of positive definiteness, a failing validation
suite, or a field difference beyond tolerance).
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import estimate_contraction_norm, rate_bound
from .errors import MasplitError
from .fieldio import read_field, write_field, write_problem_bundle
from .fields import ScalarField, SymMatrixField
from .matfield import ellipticity_report
from .problems import ExternalProblem, make_manufactured
from .report import (
    render_sweep_figure,
    render_trace_figure,
    trace_summary,
    utc_now,
    write_manifest,
    write_resolution_csv,
    write_rho_json,
    write_summary_json,
    write_sweep_csv,
    write_trace_csv,
)
from .solver import SolverConfig, solve
from .validation import SUITES, run_suites

__all__ = ["main", "entry"]

ENV_OUT_DIR = "MASPLIT_OUT_DIR"
DEFAULT_OUT_DIR = "masplit-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _as_int(text):
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"expected an integer, got {text!r}") from exc


def _as_float(text):
    try:
        return float(text)
    except ValueError as exc:
        raise UsageError(f"expected a number, got {text!r}") from exc


def _as_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _as_str(text):
    return str(text)


SOLVE_SPEC = {
    "n": (_as_int, 64),
    "eps": (_as_float, None),
    "f_file": (_as_str, None),
    "variant": (_as_str, "l2"),
    "m": (_as_int, 2),
    "tol": (_as_float, 1e-12),
    "max_iters": (_as_int, 200),
    "init": (_as_str, "zero"),
    "init_file": (_as_str, None),
    "amp": (_as_float, 1e-3),
    "seed": (_as_int, 0),
    "dealias": (_as_bool, False),
    "allow_nonelliptic": (_as_bool, False),
    "figures": (_as_bool, True),
    "out_dir": (_as_str, None),
}
SWEEP_SPEC = {
    "n": (_as_str, "32,64"),
    "eps": (_as_str, None),
    "variant": (_as_str, "l2"),
    "m": (_as_int, 2),
    "tol": (_as_float, 1e-12),
    "max_iters": (_as_int, 200),
    "init": (_as_str, "zero"),
    "amp": (_as_float, 1e-3),
    "seed": (_as_int, 0),
    "dealias": (_as_bool, False),
    "allow_nonelliptic": (_as_bool, False),
    "figures": (_as_bool, True),
    "jobs": (_as_int, 1),
    "out_dir": (_as_str, None),
}
RHO_SPEC = {
    "eps": (_as_float, None),
    "n": (_as_int, 32),
    "field": (_as_str, None),
    "seed": (_as_int, 0),
    "tol": (_as_float, 1e-10),
    "max_iters": (_as_int, 10_000),
    "out_dir": (_as_str, None),
}
VALIDATE_SPEC = {
    "suite": (_as_str, "all"),
    "seed": (_as_int, 0),
    "cases": (_as_int, None),
}
DUMP_SPEC = {
    "eps": (_as_float, None),
    "n": (_as_int, 64),
    "what": (_as_str, "all"),
    "out_dir": (_as_str, None),
}
DIFF_SPEC = {
    "tol": (_as_float, 0.0),
}
_ALL_KEYS = (
    set(SOLVE_SPEC)
    | set(SWEEP_SPEC)
    | set(RHO_SPEC)
    | set(VALIDATE_SPEC)
    | set(DUMP_SPEC)
    | set(DIFF_SPEC)
)


def _read_config_file(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _ALL_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _resolve(args, file_values, spec):
    """Merge flag > config-file > default for every key in spec."""
    resolved = {}
    for key, (convert, default) in spec.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_values:
            resolved[key] = convert(file_values[key])
        else:
            resolved[key] = default
    return resolved


def _pick_out_dir(cfg):
    return cfg.get("out_dir") or os.environ.get(ENV_OUT_DIR) or DEFAULT_OUT_DIR


def _parse_list(text, convert, flag):
    items = [piece.strip() for piece in str(text).split(",")]
    items = [piece for piece in items if piece]
    if not items:
        raise UsageError(f"--{flag} needs a non-empty comma-separated list")
    return [convert(piece) for piece in items]


def _build_problem(cfg):
    if cfg.get("f_file"):
        try:
            target = read_field(cfg["f_file"])
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        if not isinstance(target, ScalarField):
            raise UsageError(f"{cfg['f_file']}: target dump must hold a scalar field")
        return ExternalProblem(f=target)
    if cfg.get("eps") is not None:
        try:
            return make_manufactured(cfg["eps"], cfg["n"])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError("no problem source: pass --eps or --f-file")


def _solver_config(cfg, n):
    try:
        return SolverConfig(
            n=n,
            variant=cfg["variant"],
            m=cfg["m"],
            tol_increment=cfg["tol"],
            max_iters=cfg["max_iters"],
            init=cfg["init"],
            init_amplitude=cfg["amp"],
            init_path=cfg.get("init_file"),
            seed=cfg["seed"],
            dealias=cfg["dealias"],
            allow_nonelliptic=cfg["allow_nonelliptic"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _config_echo(command, cfg, extra=None):
    echo = {"command": command, **cfg}
    if extra:
        echo.update(extra)
    return echo


def cmd_solve(args):
    file_values = _read_config_file(args.config) if args.config else {}
    cfg = _resolve(args, file_values, SOLVE_SPEC)
    out = Path(_pick_out_dir(cfg))
    problem = _build_problem(cfg)
    config = _solver_config(cfg, problem.f.n)
    started = utc_now()
    trace = solve(config, problem)
    out.mkdir(parents=True, exist_ok=True)
    echo = _config_echo("solve", {**cfg, "out_dir": str(out), "n": problem.f.n})
    outputs = []
    write_trace_csv(trace, out / "trace.csv")
    outputs.append("trace.csv")
    write_summary_json(out / "summary.json", echo, trace, problem)
    outputs.append("summary.json")
    if trace.final_hessian is not None:
        write_field(out / "final_hessian.bin", trace.final_hessian)
        outputs.append("final_hessian.bin")
    if trace.final_potential is not None:
        write_field(out / "final_potential.bin", trace.final_potential)
        outputs.append("final_potential.bin")
    if cfg["figures"]:
        label = f"n={problem.f.n}, variant={cfg['variant']}"
        if cfg.get("eps") is not None:
            label += f", eps={cfg['eps']:g}"
        render_trace_figure(trace, out / "trace.png", title=label)
        outputs.append("trace.png")
    summary = trace_summary(trace, problem)
    write_manifest(
        out, "solve", args.argv_echo, echo, outputs, summary, started, utc_now()
    )
    rho = summary["rho_obs"]
    print(
        f"solve: n={problem.f.n} iters={trace.iterations} "
        f"converged={trace.converged} rho_obs="
        + (f"{rho:.4f}" if rho is not None else "n/a")
        + f" -> {out}"
    )
    return 0 if trace.converged else 2


def cmd_sweep(args):
    file_values = _read_config_file(args.config) if args.config else {}
    cfg = _resolve(args, file_values, SWEEP_SPEC)
    if cfg["eps"] is None:
        raise UsageError("sweep needs --eps with a comma-separated list")
    eps_list = _parse_list(cfg["eps"], _as_float, "eps")
    n_list = _parse_list(cfg["n"], _as_int, "n")
    out = Path(_pick_out_dir(cfg))
    started = utc_now()

    def run_cell(cell):
        eps, n = cell
        problem = make_manufactured(eps, n)
        trace = solve(_solver_config(cfg, n), problem)
        summary = trace_summary(trace, problem)
        return {
            "eps": eps,
            "n": n,
            "trace": trace,
            "problem": problem,
            "rho_obs": summary["rho_obs"],
            "rho_bound": summary["rho_bound"],
            "kappa": summary["kappa"],
            "iters_to_plateau": summary["iters_to_plateau"],
            "plateau_err_l2": summary["plateau_error_l2"],
            "plateau_err_u_l2": summary["plateau_error"],
            "converged": trace.converged,
        }

    cells = [(eps, n) for eps in eps_list for n in n_list]
    jobs = max(1, cfg["jobs"])
    if jobs == 1:
        records = [run_cell(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_cell, cells))

    out.mkdir(parents=True, exist_ok=True)
    echo = _config_echo("sweep", {**cfg, "out_dir": str(out)})
    outputs = []
    for rec in records:
        cell_dir = out / "cells" / f"eps{rec['eps']:g}_n{rec['n']}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        rel = cell_dir.relative_to(out)
        write_trace_csv(rec["trace"], cell_dir / "trace.csv")
        outputs.append(str(rel / "trace.csv"))
        cell_echo = {**echo, "eps": rec["eps"], "n": rec["n"]}
        write_summary_json(
            cell_dir / "summary.json", cell_echo, rec["trace"], rec["problem"]
        )
        outputs.append(str(rel / "summary.json"))
    write_sweep_csv(records, out / "sweep.csv")
    outputs.append("sweep.csv")
    write_resolution_csv(records, out / "resolution.csv")
    outputs.append("resolution.csv")
    if cfg["figures"]:
        render_sweep_figure(records, out / "sweep.png")
        outputs.append("sweep.png")
    summary = {
        "cells": [
            {key: rec[key] for key in ("eps", "n", "rho_obs", "converged")}
            for rec in records
        ]
    }
    write_manifest(
        out, "sweep", args.argv_echo, echo, outputs, summary, started, utc_now()
    )
    all_converged = all(rec["converged"] for rec in records)
    print(f"sweep: {len(records)} cells, all converged={all_converged} -> {out}")
    return 0 if all_converged else 2


def cmd_rho(args):
    file_values = _read_config_file(args.config) if args.config else {}
    cfg = _resolve(args, file_values, RHO_SPEC)
    if cfg.get("field"):
        try:
            base = read_field(cfg["field"])
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        if not isinstance(base, SymMatrixField):
            raise UsageError(f"{cfg['field']}: expected a matrix field dump")
    elif cfg.get("eps") is not None:
        try:
            base = make_manufactured(cfg["eps"], cfg["n"]).hessian_exact
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("no base point: pass --eps or --field")
    report = ellipticity_report(base)
    if not report.elliptic:
        print(
            f"error: base field is not positive definite (nu1={report.nu1:.6g})",
            file=sys.stderr,
        )
        return 2
    started = utc_now()
    estimate = estimate_contraction_norm(
        base, seed=cfg["seed"], tol=cfg["tol"], max_iters=cfg["max_iters"]
    )
    bound = rate_bound(report.kappa)
    out = Path(_pick_out_dir(cfg))
    out.mkdir(parents=True, exist_ok=True)
    write_rho_json(out / "rho.json", estimate, report.kappa, bound)
    echo = _config_echo("rho", {**cfg, "out_dir": str(out)})
    summary = {
        "rho0": estimate.rho0,
        "kappa": report.kappa,
        "rate_bound": bound,
        "margin": bound - estimate.rho0,
    }
    write_manifest(
        out, "rho", args.argv_echo, echo, ["rho.json"], summary, started, utc_now()
    )
    print(
        f"rho: rho0={estimate.rho0:.6f} bound={bound:.6f} "
        f"margin={bound - estimate.rho0:.3e} iters={estimate.iterations} -> {out}"
    )
    return 0


def cmd_validate(args):
    file_values = _read_config_file(args.config) if args.config else {}
    cfg = _resolve(args, file_values, VALIDATE_SPEC)
    if cfg["suite"] in (None, "all"):
        names = sorted(SUITES)
    else:
        names = [piece.strip() for piece in cfg["suite"].split(",") if piece.strip()]
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            raise UsageError(
                f"unknown suite {unknown[0]!r}; available: {', '.join(sorted(SUITES))}"
            )
    results = run_suites(names, seed=cfg["seed"], cases=cfg["cases"])
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        tail = f" ({result.detail})" if result.detail else ""
        print(f"[{status}] {result.suite}: {result.name}{tail}")
    failed = sum(1 for result in results if not result.passed)
    print(f"validate: {len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def cmd_dump_field(args):
    file_values = _read_config_file(args.config) if args.config else {}
    cfg = _resolve(args, file_values, DUMP_SPEC)
    if cfg["eps"] is None:
        raise UsageError("dump-field needs --eps")
    what = ("f", "u", "hessian") if cfg["what"] == "all" else (cfg["what"],)
    for name in what:
        if name not in ("f", "u", "hessian"):
            raise UsageError(f"--what must be one of all, f, u, hessian; got {name!r}")
    try:
        problem = make_manufactured(cfg["eps"], cfg["n"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(_pick_out_dir(cfg))
    written = write_problem_bundle(out, problem, what)
    print(f"dump-field: wrote {', '.join(written)} -> {out}")
    return 0


def cmd_diff_field(args):
    cfg = _resolve(args, {}, DIFF_SPEC)
    fields = []
    for path in (args.first, args.second):
        try:
            fields.append(read_field(path))
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    a, b = fields
    if type(a) is not type(b) or a.n != b.n:
        print(
            f"error: dumps disagree in kind or size "
            f"({type(a).__name__} n={a.n} vs {type(b).__name__} n={b.n})",
            file=sys.stderr,
        )
        return 2
    if isinstance(a, ScalarField):
        diff = float(abs(a.values - b.values).max())
    else:
        diff = float(abs(a.stack() - b.stack()).max())
    print(f"diff-field: max abs difference {diff:.17g}")
    return 0 if diff <= cfg["tol"] else 2


def _add_common(parser):
    parser.add_argument("--config", help="flat key = value configuration file")


def _add_solver_flags(parser, with_init_file=True):
    parser.add_argument("--variant", choices=["l2", "hm"], default=None)
    parser.add_argument("--m", type=int, default=None, help="Sobolev order for the hm variant")
    parser.add_argument("--tol", type=float, default=None, help="increment stopping tolerance")
    parser.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    parser.add_argument("--init", choices=["zero", "perturbed", "file"], default=None)
    if with_init_file:
        parser.add_argument("--init-file", dest="init_file", default=None)
    parser.add_argument("--amp", type=float, default=None, help="perturbed-init amplitude")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--dealias", action="store_const", const=True, default=None)
    parser.add_argument(
        "--allow-nonelliptic",
        dest="allow_nonelliptic",
        action="store_const",
        const=True,
        default=None,
    )
    parser.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--out-dir", dest="out_dir", default=None)


def build_parser():
    parser = _Parser(prog="masplit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"masplit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_solve = sub.add_parser("solve", help="run the iteration on one problem")
    _add_common(p_solve)
    p_solve.add_argument("--n", type=int, default=None)
    p_solve.add_argument("--eps", type=float, default=None)
    p_solve.add_argument("--f-file", dest="f_file", default=None, help="scalar field dump to use as target")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(handler=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a grid of (eps, n) cells")
    _add_common(p_sweep)
    p_sweep.add_argument("--n", default=None, help="comma-separated grid sizes")
    p_sweep.add_argument("--eps", default=None, help="comma-separated amplitudes")
    p_sweep.add_argument("--jobs", type=int, default=None)
    _add_solver_flags(p_sweep, with_init_file=False)
    p_sweep.set_defaults(handler=cmd_sweep)

    p_rho = sub.add_parser("rho", help="estimate the linearized contraction norm")
    _add_common(p_rho)
    p_rho.add_argument("--n", type=int, default=None)
    p_rho.add_argument("--eps", type=float, default=None)
    p_rho.add_argument("--field", default=None, help="matrix field dump to expand around")
    p_rho.add_argument("--seed", type=int, default=None)
    p_rho.add_argument("--tol", type=float, default=None)
    p_rho.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p_rho.add_argument("--out-dir", dest="out_dir", default=None)
    p_rho.set_defaults(handler=cmd_rho)

    p_val = sub.add_parser("validate", help="run the oracle suites")
    _add_common(p_val)
    p_val.add_argument("--suite", default=None, help="comma-separated suite names or 'all'")
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--cases", type=int, default=None)
    p_val.set_defaults(handler=cmd_validate)

    p_dump = sub.add_parser("dump-field", help="write a manufactured problem to dumps")
    _add_common(p_dump)
    p_dump.add_argument("--eps", type=float, default=None)
    p_dump.add_argument("--n", type=int, default=None)
    p_dump.add_argument("--what", default=None, help="all, f, u or hessian")
    p_dump.add_argument("--out-dir", dest="out_dir", default=None)
    p_dump.set_defaults(handler=cmd_dump_field)

    p_diff = sub.add_parser("diff-field", help="compare two field dumps")
    _add_common(p_diff)
    p_diff.add_argument("first")
    p_diff.add_argument("second")
    p_diff.add_argument("--tol", type=float, default=None)
    p_diff.set_defaults(handler=cmd_diff_field)
    return parser


def main(argv=None):
    argv = list(argv) if argv is not None else sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.argv_echo = argv
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MasplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main(sys.argv[1:]))
