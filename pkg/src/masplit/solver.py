"""Alternating-projection iteration and its convergence trace.

One sweep maps the iterate P through two projections: first onto the
subspace of discrete Hessian fields (which also yields the zero-mean
potential generating the projection), then nodewise onto the
determinant constraint. Iterates after the constraint step satisfy
det(I + P) = f to roundoff, so the det_residual_max column of the trace
is a feasibility audit rather than an error measure; with the optional
two-thirds dealias filter the constraint is perturbed by the removed
modes and the column reports that honestly.

The trace keeps one row per sweep (plus row 0 for the initial state)
with the Sobolev errors against the exact Hessian when the problem has
one, the increment norm, the potential error, and the feasibility
residual. Rate fitting uses the pre-floor part of the error history:
rows before the first value within a factor of 10 of the final one.
"""

import math
from dataclasses import dataclass

import numpy as np

from .detproj import project_field
from .errors import InsufficientData, MasplitError
from .fieldio import read_field
from .fields import ScalarField, SymMatrixField, random_matrix_field
from .matfield import det_field, plus_identity
from .torus import dealias, project_onto_hessians, sobolev_norm

__all__ = [
    "SolverConfig",
    "TraceRow",
    "ConvergenceTrace",
    "RateFit",
    "apply_step",
    "solve",
    "fit_rate",
]

TRACE_COLUMNS = (
    "iter",
    "err_l2",
    "err_h32",
    "err_h2",
    "increment_l2",
    "err_u_l2",
    "det_residual_max",
)

_VARIANTS = ("l2", "hm")
_INITS = ("zero", "perturbed", "file")
_STREAM_INIT = 1  # spawn key for the init-noise rng, distinct per purpose
_SMOOTH_MODES = 4.0  # spectral width of the perturbation noise


@dataclass(frozen=True)
class SolverConfig:
    n: int | None = None
    variant: str = "l2"
    m: int = 2
    tol_increment: float = 1e-12
    max_iters: int = 200
    init: str = "zero"
    init_amplitude: float = 1e-3
    init_path: str | None = None
    seed: int = 0
    dealias: bool = False
    allow_nonelliptic: bool = False

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        if self.init not in _INITS:
            raise ValueError(f"init must be one of {_INITS}, got {self.init!r}")
        if self.m not in (0, 1, 2):
            raise ValueError(f"Sobolev order m must be 0, 1 or 2, got {self.m!r}")
        if not self.tol_increment > 0.0:
            raise ValueError("tol_increment must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.init_amplitude < 0.0:
            raise ValueError("init_amplitude must be nonnegative")

    @property
    def sobolev_order(self):
        """Order actually recorded for the projection step."""
        return self.m if self.variant == "hm" else 0


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    err_l2: float
    err_h32: float
    err_h2: float
    increment_l2: float
    err_u_l2: float
    det_residual_max: float


@dataclass
class RateFit:
    """Least-squares geometric rate over the pre-floor window."""

    rho: float
    r_squared: float
    window: int
    points: int

    def __float__(self):
        return self.rho

    @property
    def geometric(self):
        return 0.0 < self.rho <= 1.0 and self.r_squared >= 0.9


@dataclass
class ConvergenceTrace:
    rows: list
    converged: bool
    variant: str
    m: int
    config: SolverConfig
    rate_fit: RateFit | None = None
    final_hessian: SymMatrixField | None = None
    final_potential: ScalarField | None = None

    @property
    def iterations(self):
        return self.rows[-1].iteration

    def column(self, name):
        if name == "iter":
            return np.array([row.iteration for row in self.rows], dtype=np.int64)
        if name not in TRACE_COLUMNS:
            raise KeyError(f"unknown trace column {name!r}")
        return np.array([getattr(row, name) for row in self.rows])

    def _history(self, column):
        """Finite positive values of a column with their iteration numbers."""
        values = self.column(column)
        iters = self.column("iter")
        mask = np.isfinite(values) & (values > 0.0)
        return iters[mask], values[mask]

    def _rate_column(self, column=None):
        if column is not None:
            return column
        iters, _ = self._history("err_l2")
        return "err_l2" if len(iters) > 0 else "increment_l2"

    def iters_to_plateau(self, column=None):
        """First recorded iteration within a factor 10 of the final value."""
        iters, values = self._history(self._rate_column(column))
        if len(values) == 0:
            return self.iterations
        eligible = values < 10.0 * values[-1]
        if not eligible.any():
            return int(iters[-1])
        return int(iters[int(np.argmax(eligible))])

    def plateau_value(self, column="err_u_l2", tail=10):
        """Median of the trailing finite values of a column (nan if none)."""
        values = self.column(column)
        values = values[np.isfinite(values)]
        if len(values) == 0:
            return math.nan
        return float(np.median(values[-min(tail, len(values)):]))


def fit_rate(trace, column=None):
    """Geometric decay rate of a trace column before it reaches its floor.

    Fits log(value) against iteration by least squares over the rows
    preceding the first value within 10x of the final one, and requires
    at least 5 such rows. Accepts a ConvergenceTrace (column chosen
    automatically: err_l2 when available, else increment_l2) or a plain
    sequence of positive values. The returned fit flags non-geometric
    histories via its `geometric` property instead of guessing.
    """
    if isinstance(trace, ConvergenceTrace):
        iters, values = trace._history(trace._rate_column(column))
    else:
        values = np.asarray(trace, dtype=np.float64)
        mask = np.isfinite(values) & (values > 0.0)
        iters, values = np.arange(len(values))[mask], values[mask]
    if len(values) < 5:
        raise InsufficientData(f"need at least 5 positive values, have {len(values)}")
    eligible = values < 10.0 * values[-1]
    cut = int(np.argmax(eligible)) if eligible.any() else len(values)
    if cut < 5:
        raise InsufficientData(
            f"only {cut} rows precede the floor; cannot fit a rate"
        )
    t = iters[:cut].astype(np.float64)
    logv = np.log(values[:cut])
    design = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, logv, rcond=None)
    predicted = design @ coef
    ss_res = float(np.sum((logv - predicted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return RateFit(
        rho=float(np.exp(coef[0])),
        r_squared=r_squared,
        window=cut,
        points=len(values),
    )


def apply_step(iterate, f, variant="l2", m=0, use_dealias=False):
    """One sweep of the iteration.

    Returns (next_iterate, hessian_projection, potential): the result of
    the Hessian-subspace projection, the potential generating it, and
    the subsequent nodewise determinant projection (optionally filtered
    by the two-thirds rule).
    """
    order = m if variant == "hm" else 0
    hessian, potential = project_onto_hessians(iterate, order)
    projected = project_field(hessian, f)
    if use_dealias:
        projected = dealias(projected)
    return projected, hessian, potential


def _initial_iterate(config, problem, n):
    if config.init == "zero":
        return SymMatrixField.zeros(n)
    if config.init == "perturbed":
        exact = getattr(problem, "hessian_exact", None)
        if exact is None:
            raise MasplitError("perturbed init requires a problem with a known Hessian")
        rng = np.random.default_rng([config.seed, _STREAM_INIT])
        noise = random_matrix_field(n, rng, smooth_modes=_SMOOTH_MODES)
        return exact + config.init_amplitude * noise
    if not config.init_path:
        raise MasplitError("init 'file' requires init_path")
    loaded = read_field(config.init_path)
    if not isinstance(loaded, SymMatrixField):
        raise MasplitError(f"{config.init_path}: initial iterate must be a matrix field")
    if loaded.n != n:
        raise MasplitError(
            f"{config.init_path}: grid size {loaded.n} does not match problem size {n}"
        )
    return loaded


def _hessian_errors(iterate, exact):
    if exact is None:
        return math.nan, math.nan, math.nan
    diff = iterate - exact
    return (
        sobolev_norm(diff, 0.0),
        sobolev_norm(diff, 1.5),
        sobolev_norm(diff, 2.0),
    )


def _det_residual(iterate, f):
    det = det_field(plus_identity(iterate))
    return float(np.abs(det.values - f.values).max())


def solve(config, problem):
    """Run the iteration on a problem; returns the ConvergenceTrace.

    Non-convergence within the budget is reported through the trace's
    converged flag, never as an exception, so the partial history stays
    available for diagnosis.
    """
    n = problem.f.n
    if config.n is not None and config.n != n:
        raise ValueError(f"config grid size {config.n} != problem grid size {n}")
    if float(problem.f.values.min()) <= 0.0:
        raise MasplitError("target field must be positive everywhere")
    report = getattr(problem, "report", None)
    if report is not None and not report.elliptic and not config.allow_nonelliptic:
        raise MasplitError(
            "problem is not uniformly elliptic; set allow_nonelliptic to proceed"
        )
    exact_hessian = getattr(problem, "hessian_exact", None)
    exact_potential = getattr(problem, "u_exact", None)

    iterate = _initial_iterate(config, problem, n)
    rows = [
        TraceRow(
            0,
            *_hessian_errors(iterate, exact_hessian),
            math.nan,
            math.nan,
            _det_residual(iterate, problem.f),
        )
    ]
    converged = False
    potential = None
    for step in range(1, config.max_iters + 1):
        nxt, _, potential = apply_step(
            iterate, problem.f, config.variant, config.m, config.dealias
        )
        increment = sobolev_norm(nxt - iterate, 0.0)
        err_u = (
            sobolev_norm(potential - exact_potential, 0.0)
            if exact_potential is not None
            else math.nan
        )
        rows.append(
            TraceRow(
                step,
                *_hessian_errors(nxt, exact_hessian),
                increment,
                err_u,
                _det_residual(nxt, problem.f),
            )
        )
        iterate = nxt
        if increment <= config.tol_increment:
            converged = True
            break

    trace = ConvergenceTrace(
        rows=rows,
        converged=converged,
        variant=config.variant,
        m=config.sobolev_order,
        config=config,
        final_hessian=iterate,
        final_potential=potential,
    )
    try:
        trace.rate_fit = fit_rate(trace)
    except InsufficientData:
        trace.rate_fit = None
    return trace
