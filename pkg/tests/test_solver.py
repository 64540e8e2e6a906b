import math

import numpy as np
import pytest

from masplit import (
    ConvergenceTrace,
    EllipticityReport,
    ExternalProblem,
    InsufficientData,
    MasplitError,
    ScalarField,
    SolverConfig,
    SymMatrixField,
    TraceRow,
    apply_step,
    fit_rate,
    make_manufactured,
    sobolev_norm,
    solve,
    write_field,
)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(variant="h1")
    with pytest.raises(ValueError):
        SolverConfig(init="warm")
    with pytest.raises(ValueError):
        SolverConfig(m=3)
    with pytest.raises(ValueError):
        SolverConfig(tol_increment=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(init_amplitude=-1.0)
    assert SolverConfig(variant="hm", m=1).sobolev_order == 1
    assert SolverConfig(variant="l2", m=2).sobolev_order == 0


def test_exact_hessian_is_a_fixed_point():
    problem = make_manufactured(0.002, 32)
    base = problem.hessian_exact
    stepped, _, potential = apply_step(base, problem.f)
    gap = sobolev_norm(stepped - base)
    assert gap <= 1e-12 * (1.0 + sobolev_norm(base))
    assert sobolev_norm(potential - problem.u_exact) <= 1e-12


def test_flat_problem_converges_immediately():
    problem = ExternalProblem(f=ScalarField.constant(16, 1.0))
    trace = solve(SolverConfig(max_iters=5), problem)
    assert trace.converged and trace.iterations == 1
    assert np.abs(trace.final_hessian.stack()).max() == 0.0
    assert math.isnan(trace.rows[1].err_l2)  # no reference solution


def test_zero_init_run_is_feasible_and_monotone():
    problem = make_manufactured(0.005, 32)
    trace = solve(SolverConfig(n=32, max_iters=200), problem)
    assert trace.converged
    # every post-projection iterate satisfies the constraint to roundoff
    assert all(r.det_residual_max <= 1e-12 for r in trace.rows[1:])
    err = trace.column("err_l2")
    floor = 10.0 * err[-1]
    pre = err[err > floor]
    assert np.all(np.diff(pre) < 0.0)
    assert len(trace.rows) <= 201
    assert trace.iterations == trace.rows[-1].iteration
    assert trace.rate_fit is not None and trace.rate_fit.geometric


def test_trace_column_accessors():
    problem = make_manufactured(0.002, 16)
    trace = solve(SolverConfig(max_iters=100), problem)
    assert np.array_equal(trace.column("iter"), np.arange(len(trace.rows)))
    assert math.isnan(trace.column("increment_l2")[0])
    with pytest.raises(KeyError):
        trace.column("nope")
    err_u = trace.column("err_u_l2")
    plateau = trace.plateau_value("err_u_l2")
    # median of the trailing window sits inside that window's range
    assert err_u[-1] <= plateau <= err_u[-10]
    assert 0 < trace.iters_to_plateau() <= trace.iterations


def test_fit_rate_on_synthetic_geometric_decay():
    fit = fit_rate(0.9 ** np.arange(60))
    assert fit.rho == pytest.approx(0.9, abs=1e-12)
    assert fit.r_squared > 1.0 - 1e-12
    assert fit.window == 38  # rows before the factor-10 floor heuristic
    assert fit.points == 60
    assert fit.geometric
    assert float(fit) == fit.rho


def test_fit_rate_needs_enough_points():
    with pytest.raises(InsufficientData):
        fit_rate([1.0, 0.9, 0.8, 0.7])
    with pytest.raises(InsufficientData):
        fit_rate(np.ones(50))  # flat history: no pre-floor window
    noisy = 1.0 + 0.01 * np.sin(np.arange(50))
    with pytest.raises(InsufficientData):
        fit_rate(noisy)


def test_fit_rate_flags_non_geometric_histories():
    # algebraic decay fits poorly but must not raise
    fit = fit_rate(1.0 / (1.0 + np.arange(200)) ** 2)
    assert not fit.geometric


def test_perturbed_init_is_seeded_and_converges():
    problem = make_manufactured(0.002, 32)
    config = SolverConfig(init="perturbed", init_amplitude=1e-3, seed=5, max_iters=200)
    a = solve(config, problem)
    b = solve(config, problem)
    assert a.converged
    assert np.array_equal(a.final_hessian.stack(), b.final_hessian.stack())
    c = solve(
        SolverConfig(init="perturbed", init_amplitude=1e-3, seed=6, max_iters=200),
        problem,
    )
    # different seeds perturb in different directions
    assert a.rows[1].err_l2 != c.rows[1].err_l2
    # local convergence: ends at the same plateau as the zero-init run
    zero = solve(SolverConfig(max_iters=200), problem)
    assert a.rows[-1].err_l2 <= 2.0 * max(zero.rows[-1].err_l2, 1e-13)


def test_file_init_round_trip(tmp_path):
    problem = make_manufactured(0.002, 32)
    path = tmp_path / "start.bin"
    write_field(path, problem.hessian_exact)
    trace = solve(
        SolverConfig(init="file", init_path=str(path), max_iters=50), problem
    )
    assert trace.converged and trace.iterations <= 2
    assert trace.rows[0].err_l2 == 0.0


def test_file_init_validates_the_dump(tmp_path):
    problem = make_manufactured(0.002, 32)
    with pytest.raises(MasplitError):
        solve(SolverConfig(init="file"), problem)  # no path given
    wrong_size = tmp_path / "wrong.bin"
    write_field(wrong_size, SymMatrixField.zeros(16))
    with pytest.raises(MasplitError):
        solve(SolverConfig(init="file", init_path=str(wrong_size)), problem)
    wrong_kind = tmp_path / "kind.bin"
    write_field(wrong_kind, ScalarField.zeros(32))
    with pytest.raises(MasplitError):
        solve(SolverConfig(init="file", init_path=str(wrong_kind)), problem)


def test_weighted_variant_coincides_with_plain_least_squares():
    # the per-mode weight cancels in the subspace projection, so the hm
    # iterates equal the l2 iterates bitwise, row for row
    problem = make_manufactured(0.002, 32)
    plain = solve(SolverConfig(variant="l2", max_iters=120), problem)
    weighted = solve(SolverConfig(variant="hm", m=2, max_iters=120), problem)
    assert weighted.m == 2 and plain.m == 0
    assert len(plain.rows) == len(weighted.rows)
    for a, b in zip(plain.rows, weighted.rows):
        assert a.err_l2 == b.err_l2
        assert a.det_residual_max == b.det_residual_max
    assert np.array_equal(
        plain.final_hessian.stack(), weighted.final_hessian.stack()
    )


def test_dealias_variant_still_converges():
    problem = make_manufactured(0.002, 32)
    trace = solve(SolverConfig(dealias=True, max_iters=200, tol_increment=1e-10), problem)
    assert trace.converged
    assert trace.rows[-1].err_l2 < 1e-8


def test_solve_rejects_bad_problems():
    problem = make_manufactured(0.002, 32)
    with pytest.raises(ValueError):
        solve(SolverConfig(n=64), problem)  # declared size disagrees
    with pytest.raises(MasplitError):
        solve(SolverConfig(), ExternalProblem(f=ScalarField.constant(16, -1.0)))
    with pytest.raises(MasplitError):
        solve(SolverConfig(), ExternalProblem(f=ScalarField.zeros(16)))


def test_nonelliptic_requires_opt_in():
    report = EllipticityReport(nu1=-0.5, nu2=2.0, kappa=float("inf"), elliptic=False)
    problem = ExternalProblem(f=ScalarField.constant(16, 1.0), report=report)
    with pytest.raises(MasplitError):
        solve(SolverConfig(), problem)
    trace = solve(SolverConfig(allow_nonelliptic=True), problem)
    assert trace.converged


def test_nonconvergence_reported_through_the_trace():
    problem = make_manufactured(0.005, 32)
    trace = solve(SolverConfig(max_iters=3), problem)
    assert not trace.converged
    assert trace.iterations == 3
    assert trace.rate_fit is None  # too few rows for a fit


def test_manual_trace_round_trip():
    rows = [
        TraceRow(i, 0.5**i, math.nan, math.nan, 0.5**i, math.nan, 0.0)
        for i in range(12)
    ]
    trace = ConvergenceTrace(
        rows=rows, converged=True, variant="l2", m=0, config=None
    )
    fit = fit_rate(trace)
    assert fit.rho == pytest.approx(0.5, abs=1e-12)
    fit_inc = fit_rate(trace, column="increment_l2")
    assert fit_inc.rho == pytest.approx(0.5, abs=1e-12)
