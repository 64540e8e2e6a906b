"""Delimited, JSON and figure output for runs.

CSV numbers are written with shortest round-trip formatting and no
timestamps, so identical configurations produce bit-identical files.
Figures are rendered off-screen from the same data that lands in the
CSVs. Every run directory gets a manifest listing the command, a hash
of the resolved configuration, and the produced files with sizes.
"""

import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import rate_bound

__all__ = [
    "TRACE_HEADER",
    "SWEEP_HEADER",
    "RESOLUTION_HEADER",
    "write_trace_csv",
    "write_sweep_csv",
    "write_resolution_csv",
    "trace_summary",
    "write_summary_json",
    "write_rho_json",
    "write_manifest",
    "render_trace_figure",
    "render_sweep_figure",
]

TRACE_HEADER = "iter, err_l2, err_h32, err_h2, increment_l2, err_u_l2, det_residual_max"
SWEEP_HEADER = "eps, n, rho_obs, rho_bound, kappa, iters_to_plateau"
RESOLUTION_HEADER = "eps, n, plateau_err_l2, plateau_err_u_l2"


def _fmt(value):
    if value is None:
        return "nan"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def write_trace_csv(trace, path):
    lines = [TRACE_HEADER]
    for row in trace.rows:
        lines.append(
            ", ".join(
                [
                    str(row.iteration),
                    _fmt(row.err_l2),
                    _fmt(row.err_h32),
                    _fmt(row.err_h2),
                    _fmt(row.increment_l2),
                    _fmt(row.err_u_l2),
                    _fmt(row.det_residual_max),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep_csv(records, path):
    lines = [SWEEP_HEADER]
    for rec in records:
        lines.append(
            ", ".join(
                [
                    _fmt(rec["eps"]),
                    str(rec["n"]),
                    _fmt(rec["rho_obs"]),
                    _fmt(rec["rho_bound"]),
                    _fmt(rec["kappa"]),
                    str(rec["iters_to_plateau"]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_resolution_csv(records, path):
    lines = [RESOLUTION_HEADER]
    for rec in records:
        lines.append(
            ", ".join(
                [
                    _fmt(rec["eps"]),
                    str(rec["n"]),
                    _fmt(rec["plateau_err_l2"]),
                    _fmt(rec["plateau_err_u_l2"]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(val) for val in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _bound_from_report(report):
    if report is None or not report.elliptic or not math.isfinite(report.kappa):
        return None, None
    return report.kappa, rate_bound(report.kappa)


def trace_summary(trace, problem=None):
    """Key run numbers as a plain dict (used by summary JSON and sweeps)."""
    report = getattr(problem, "report", None) if problem is not None else None
    kappa, bound = _bound_from_report(report)
    fit = trace.rate_fit
    plateau_u = trace.plateau_value("err_u_l2")
    plateau_l2 = trace.plateau_value("err_l2")
    return {
        "converged": trace.converged,
        "iterations": int(trace.iterations),
        "variant": trace.variant,
        "m": trace.m,
        "rho_obs": fit.rho if fit else None,
        "r_squared": fit.r_squared if fit else None,
        "rho_bound": bound,
        "kappa": kappa,
        "iters_to_plateau": int(trace.iters_to_plateau()),
        "plateau_error": None if math.isnan(plateau_u) else plateau_u,
        "plateau_error_l2": None if math.isnan(plateau_l2) else plateau_l2,
        "det_residual_max": float(trace.column("det_residual_max")[-1]),
    }


def write_summary_json(path, config, trace, problem=None):
    _dump_json({"config": config, **trace_summary(trace, problem)}, path)


def write_rho_json(path, estimate, kappa, bound):
    _dump_json(
        {
            "rho0": estimate.rho0,
            "residual": estimate.residual,
            "iterations": int(estimate.iterations),
            "converged": estimate.converged,
            "kappa": kappa,
            "rate_bound": bound,
            "margin": None if bound is None else bound - estimate.rho0,
        },
        path,
    )


def config_hash(config):
    canonical = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, command, argv, config, outputs, summary, started, finished):
    """Record what a run produced. Outputs are paths relative to out_dir;
    each entry is checked to exist and carries its byte size."""
    out = Path(out_dir)
    entries = []
    for name in outputs:
        target = out / name
        if not target.is_file():
            raise FileNotFoundError(f"manifest lists missing output {target}")
        entries.append({"path": name, "bytes": target.stat().st_size})
    _dump_json(
        {
            "command": command,
            "argv": list(argv),
            "config": config,
            "config_hash": config_hash(config),
            "started": started,
            "finished": finished,
            "outputs": entries,
            "summary": summary,
        },
        out / "manifest.json",
    )
    return out / "manifest.json"


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_CURVES = (
    ("err_l2", "error, order 0"),
    ("err_h32", "error, order 3/2"),
    ("err_h2", "error, order 2"),
    ("increment_l2", "increment"),
)


def render_trace_figure(trace, path, title=None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    iters = trace.column("iter")
    for column, label in _CURVES:
        values = trace.column(column)
        mask = np.isfinite(values) & (values > 0.0)
        if mask.any():
            ax.semilogy(iters[mask], values[mask], label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("norm")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sweep_figure(records, path):
    """Two panels: per-cell error histories and plateau error vs grid size."""
    plt = _pyplot()
    fig, (left, right) = plt.subplots(1, 2, figsize=(11.0, 4.5))
    for rec in records:
        trace = rec["trace"]
        iters = trace.column("iter")
        values = trace.column("err_l2")
        mask = np.isfinite(values) & (values > 0.0)
        if not mask.any():
            values = trace.column("increment_l2")
            mask = np.isfinite(values) & (values > 0.0)
        if mask.any():
            left.semilogy(
                iters[mask], values[mask], label=f"eps={rec['eps']:g}, n={rec['n']}"
            )
    left.set_xlabel("iteration")
    left.set_ylabel("error, order 0")
    left.grid(True, alpha=0.3)
    left.legend(fontsize=8)
    by_eps = {}
    for rec in records:
        by_eps.setdefault(rec["eps"], []).append(rec)
    for eps, cells in sorted(by_eps.items()):
        cells = sorted(cells, key=lambda rec: rec["n"])
        sizes = [rec["n"] for rec in cells]
        plateaus = [
            rec["plateau_err_u_l2"]
            if rec["plateau_err_u_l2"] is not None
            else rec["plateau_err_l2"]
            for rec in cells
        ]
        pairs = [(n, p) for n, p in zip(sizes, plateaus) if p is not None and p > 0.0]
        if pairs:
            right.loglog(*zip(*pairs), marker="o", label=f"eps={eps:g}")
    right.set_xlabel("grid size n")
    right.set_ylabel("plateau error")
    right.grid(True, alpha=0.3, which="both")
    right.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
