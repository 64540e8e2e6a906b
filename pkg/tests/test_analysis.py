import numpy as np
import pytest

from masplit import (
    MasplitError,
    SymMatrixField,
    estimate_contraction_norm,
    inner_product,
    linearized_matrix,
    linearized_step,
    make_manufactured,
    project_onto_hessians,
    projection_derivative_field,
    random_matrix_field,
    rate_bound,
    sobolev_norm,
)

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def test_rate_bound_frozen_value_and_domain():
    # kappa = 1 gives 1/sqrt(2); the bound grows towards 1 with kappa
    assert rate_bound(1.0) == pytest.approx(INV_SQRT2, abs=1e-15)
    assert rate_bound(1.0) < rate_bound(2.0) < rate_bound(10.0) < 1.0
    with pytest.raises(ValueError):
        rate_bound(0.5)
    with pytest.raises(ValueError):
        rate_bound(float("inf"))
    with pytest.raises(ValueError):
        rate_bound(float("nan"))


def test_contraction_norm_at_the_flat_base_point():
    estimate = estimate_contraction_norm(SymMatrixField.zeros(32), seed=0)
    assert estimate.converged
    assert abs(estimate.rho0 - INV_SQRT2) <= 1e-3
    assert sobolev_norm(estimate.witness) == pytest.approx(1.0, abs=1e-12)
    assert estimate.residual < 1e-4
    assert 0 < estimate.iterations <= 10_000


def test_dense_operator_oracle_at_the_flat_base_point():
    # exact singular value of the composed projections at the flat base
    matrix = linearized_matrix(SymMatrixField.zeros(16))
    assert matrix.shape == (768, 768)
    top = float(np.linalg.svd(matrix, compute_uv=False)[0])
    assert abs(top - INV_SQRT2) <= 1e-10


def test_power_iteration_agrees_with_dense_svd():
    problem = make_manufactured(0.002, 16)
    base = problem.hessian_exact
    top = float(np.linalg.svd(linearized_matrix(base), compute_uv=False)[0])
    estimate = estimate_contraction_norm(base, seed=0)
    assert abs(top - estimate.rho0) <= 1e-3


def test_estimate_is_an_upper_envelope_of_random_probes():
    problem = make_manufactured(0.002, 32)
    base = problem.hessian_exact
    estimate = estimate_contraction_norm(base, seed=0)
    rng = np.random.default_rng(123)
    for _ in range(50):
        probe, _ = project_onto_hessians(random_matrix_field(32, rng))
        norm = sobolev_norm(probe)
        if norm < 1e-12:
            continue
        image = linearized_step(base, probe * (1.0 / norm))
        assert sobolev_norm(image) <= estimate.rho0 + 1e-6


def test_linearized_step_matches_projection_derivative_at_a_feasible_base():
    # at a feasible base the determinant-projection derivative restricted
    # to the subspace equals the linearized sweep
    problem = make_manufactured(0.002, 32)
    base = problem.hessian_exact
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = random_matrix_field(32, rng)
        subspace, _ = project_onto_hessians(x)
        via_step = linearized_step(base, x)
        via_derivative = projection_derivative_field(base, problem.f, subspace)
        gap = sobolev_norm(via_step - via_derivative)
        assert gap <= 1e-10 * max(1.0, sobolev_norm(x))


def test_linearized_step_is_linear():
    problem = make_manufactured(0.002, 32)
    base = problem.hessian_exact
    rng = np.random.default_rng(8)
    a = random_matrix_field(32, rng)
    b = random_matrix_field(32, rng)
    lin = linearized_step(base, a + 2.0 * b)
    parts = linearized_step(base, a) + 2.0 * linearized_step(base, b)
    assert sobolev_norm(lin - parts) <= 1e-12


def test_symmetrized_operator_is_self_adjoint_on_the_subspace():
    problem = make_manufactured(0.002, 32)
    base = problem.hessian_exact
    rng = np.random.default_rng(9)

    def apply_sym(x):
        y = linearized_step(base, x)
        z, _ = project_onto_hessians(y)
        return z

    for _ in range(5):
        a, _ = project_onto_hessians(random_matrix_field(32, rng))
        b, _ = project_onto_hessians(random_matrix_field(32, rng))
        lhs = inner_product(apply_sym(a), b)
        rhs = inner_product(a, apply_sym(b))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_contraction_norm_grows_with_amplitude_and_respects_the_bound():
    previous = 0.0
    for eps in (0.002, 0.01, 0.02):
        problem = make_manufactured(eps, 32)
        estimate = estimate_contraction_norm(problem.hessian_exact, seed=0)
        bound = rate_bound(problem.report.kappa)
        assert estimate.rho0 <= bound + 1e-3
        assert estimate.rho0 > previous
        previous = estimate.rho0


def test_degenerate_base_is_rejected():
    stack = np.zeros((3, 16, 16))
    stack[0] = -1.0
    stack[2] = -1.0  # I + P vanishes at every node; no normal direction
    base = SymMatrixField.from_stack(stack)
    with pytest.raises(MasplitError):
        estimate_contraction_norm(base, seed=0)


def test_estimate_is_deterministic_per_seed():
    base = make_manufactured(0.002, 16).hessian_exact
    a = estimate_contraction_norm(base, seed=3)
    b = estimate_contraction_norm(base, seed=3)
    assert a.rho0 == b.rho0 and a.iterations == b.iterations
