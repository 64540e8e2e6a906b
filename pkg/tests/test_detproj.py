import numpy as np
import pytest

import masplit.detproj as detproj
from masplit import (
    AmbiguousProjection,
    ContractivityViolated,
    NonConvergence,
    ScalarField,
    SymMatrixField,
    cof,
    make_manufactured,
    project_field,
    project_field_info,
    project_pair,
    project_point,
    projection_derivative,
    projection_derivative_field,
    random_matrix_field,
    tangent_projector,
    target_sensitivity_fd,
)

SQRT2 = np.sqrt(2.0)


def branch_distance(m1, m2, f):
    """Independent oracle: dense scan of t -> (t, f/t) plus ternary refine."""
    t = np.logspace(-4.0, 4.0, 200_001)
    d2 = (t - m1) ** 2 + (f / t - m2) ** 2
    k = int(np.argmin(d2))
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, len(t) - 1)]

    def val(tt):
        return (tt - m1) ** 2 + (f / tt - m2) ** 2

    for _ in range(200):
        u = lo + (hi - lo) / 3.0
        v = hi - (hi - lo) / 3.0
        if val(u) <= val(v):
            hi = v
        else:
            lo = u
    return np.sqrt(val(0.5 * (lo + hi)))


def draw_case(rng):
    while True:
        m1, m2 = rng.uniform(-1.0, 4.0, size=2)
        if m1 + m2 > 0.3:
            break
    f = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    return float(m1), float(m2), f


def test_symmetric_point_projects_to_the_vertex():
    # from (3, 3) onto xy = 4 the unique nearest point is the vertex (2, 2)
    result = project_pair(3.0, 3.0, 4.0)
    assert result.x == pytest.approx(2.0, abs=1e-12)
    assert result.y == pytest.approx(2.0, abs=1e-12)
    assert result.mu == pytest.approx(-0.5, abs=1e-12)
    assert result.residual < 1e-12
    assert branch_distance(3.0, 3.0, 4.0) == pytest.approx(SQRT2, abs=1e-9)


def test_symmetric_point_past_the_vertex_curvature_center_is_ambiguous():
    # on xy = 1 the vertex curvature center sits at (2, 2); (3, 3) is past
    # it, so two mirror feet at t = (3 +/- sqrt(5))/2 are equidistant
    with pytest.raises(AmbiguousProjection) as info:
        project_pair(3.0, 3.0, 1.0)
    assert "equidistant" in str(info.value)


def test_rejected_inputs():
    with pytest.raises(ValueError):
        project_pair(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        project_pair(1.0, 1.0, -2.0)
    with pytest.raises(ValueError):
        project_pair(np.nan, 1.0, 1.0)
    with pytest.raises(AmbiguousProjection):
        project_pair(-2.0, 1.0, 1.0)  # m1 + m2 <= 0


def test_distance_matches_independent_oracle():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(200):
        m1, m2, f = draw_case(rng)
        try:
            result = project_pair(m1, m2, f)
        except AmbiguousProjection:
            continue  # genuine medial-axis draw; refusal is the contract
        assert result.x > 0.0 and result.y > 0.0
        assert abs(result.x * result.y - f) <= 1e-12 * max(1.0, f)
        achieved = np.hypot(result.x - m1, result.y - m2)
        worst = max(worst, achieved - branch_distance(m1, m2, f))
    assert worst <= 1e-8


def test_zero_budget_falls_back_to_enumeration():
    direct = project_pair(1.3, 0.7, 1.1)
    forced = project_pair(1.3, 0.7, 1.1, budget=0)
    assert forced.fallback
    assert forced.x == pytest.approx(direct.x, abs=1e-10)
    assert forced.y == pytest.approx(direct.y, abs=1e-10)


def test_no_feet_and_no_newton_reports_nonconvergence(monkeypatch):
    monkeypatch.setattr(detproj, "_stationary_feet", lambda m1, m2, f: [])
    with pytest.raises(NonConvergence) as info:
        project_pair(1.3, 0.7, 1.1, budget=0)
    assert info.value.diagnostic["f"] == 1.1


def test_point_projection_feasibility_and_spd():
    rng = np.random.default_rng(7)
    for _ in range(100):
        m1, m2, f = draw_case(rng)
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        mat = rot @ np.diag([m1, m2]) @ rot.T - np.eye(2)
        try:
            q = project_point(mat, f)
        except AmbiguousProjection:
            continue
        iq = q + np.eye(2)
        assert np.linalg.det(iq) == pytest.approx(f, rel=1e-12, abs=1e-12)
        assert np.linalg.eigvalsh(iq).min() > 0.0


def test_point_projection_is_rotation_equivariant():
    rng = np.random.default_rng(8)
    for _ in range(50):
        m1, m2, f = draw_case(rng)
        mat = np.diag([m1, m2]) - np.eye(2)
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        try:
            q_then_rot = rot @ project_point(mat, f) @ rot.T
            rot_then_q = project_point(rot @ mat @ rot.T, f)
        except AmbiguousProjection:
            continue
        assert np.abs(q_then_rot - rot_then_q).max() < 1e-12 * (
            1.0 + np.abs(q_then_rot).max()
        )


def test_point_projection_is_idempotent():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m1, m2, f = draw_case(rng)
        mat = np.diag([m1, m2]) - np.eye(2)
        try:
            q = project_point(mat, f)
        except AmbiguousProjection:
            continue
        again = project_point(q, f)
        assert np.abs(again - q).max() < 1e-12 * (1.0 + np.abs(q).max())


def test_field_projection_matches_pointwise_loop():
    problem = make_manufactured(0.002, 16)
    rng = np.random.default_rng(10)
    field = problem.hessian_exact + 0.05 * random_matrix_field(16, rng)
    info = project_field_info(field, problem.f)
    assert info.max_residual <= 1e-12
    assert info.fallback_count >= 0
    for i in (0, 5, 11):
        for j in (3, 8, 15):
            q = project_point(field.at(i, j), problem.f.values[i, j])
            assert np.abs(info.field.at(i, j) - q).max() < 1e-12


def test_field_projection_validates_inputs():
    field = SymMatrixField.zeros(16)
    with pytest.raises(ValueError):
        project_field(field, ScalarField.zeros(16))  # target not positive
    with pytest.raises(ValueError):
        project_field(field, ScalarField.constant(32, 1.0))  # size mismatch


def test_zero_field_with_small_target_is_ambiguous_everywhere():
    # projecting the zero matrix onto det(I + Q) = f has two equidistant
    # feet whenever f < 1/4 (the vertex curvature center is at 1 + 1)
    field = SymMatrixField.zeros(16)
    with pytest.raises(AmbiguousProjection) as info:
        project_field(field, ScalarField.constant(16, 0.2))
    assert info.value.node is not None


def test_derivative_matches_central_differences():
    rng = np.random.default_rng(11)
    step = 1e-5
    for _ in range(30):
        lam = rng.uniform(0.5, 2.5, size=2)
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        mat = rot @ np.diag(lam) @ rot.T - np.eye(2)
        f = float(np.linalg.det(mat + np.eye(2)) * rng.uniform(0.8, 1.25))
        a, b, d = rng.standard_normal(3)
        direction = np.array([[a, b], [b, d]])
        got = projection_derivative(mat, f, direction)
        upper = project_point(mat + step * direction, f)
        lower = project_point(mat - step * direction, f)
        fd = (upper - lower) / (2.0 * step)
        scale = max(np.abs(fd).max(), 1e-12)
        assert np.abs(got - fd).max() / scale < 1e-6


def test_derivative_on_the_surface_is_the_tangent_projector():
    rng = np.random.default_rng(12)
    for _ in range(20):
        m1, m2, f = draw_case(rng)
        mat = np.diag([m1, m2]) - np.eye(2)
        try:
            q = project_point(mat, f)
        except AmbiguousProjection:
            continue
        projector = tangent_projector(q, f)
        a, b, d = rng.standard_normal(3)
        direction = np.array([[a, b], [b, d]])
        via_derivative = projection_derivative(q, f, direction)
        via_projector = projector.apply(direction)
        assert np.abs(via_derivative - via_projector).max() < 1e-12 * (
            1.0 + np.abs(direction).max()
        )
        # the projector output is orthogonal to the constraint normal
        assert abs(np.sum(via_projector * projector.normal)) < 1e-12


def test_derivative_is_linear_and_symmetrizes_direction():
    mat = np.array([[0.3, 0.1], [0.1, -0.2]])
    f = 1.2
    d1 = np.array([[1.0, 0.5], [0.5, -1.0]])
    d2 = np.array([[-0.4, 0.2], [0.2, 0.9]])
    lhs = projection_derivative(mat, f, 2.0 * d1 - 3.0 * d2)
    rhs = 2.0 * projection_derivative(mat, f, d1) - 3.0 * projection_derivative(
        mat, f, d2
    )
    assert np.abs(lhs - rhs).max() < 1e-12
    skew = np.array([[0.0, 1.0], [0.0, 0.0]])
    sym = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert np.abs(
        projection_derivative(mat, f, skew) - projection_derivative(mat, f, sym)
    ).max() < 1e-14


def test_derivative_field_matches_pointwise():
    problem = make_manufactured(0.002, 16)
    rng = np.random.default_rng(13)
    base = problem.hessian_exact
    direction = random_matrix_field(16, rng)
    out = projection_derivative_field(base, problem.f, direction)
    for i in (1, 9):
        for j in (4, 14):
            point = projection_derivative(
                base.at(i, j), problem.f.values[i, j], direction.at(i, j)
            )
            assert np.abs(out.at(i, j) - point).max() < 1e-12


def test_focal_inputs_flag_contractivity_violation(monkeypatch):
    # curvature factors: at d1 = d2 = 1 both shape eigenvalues are
    # 1/sqrt(2), so a signed distance of 2 crosses the focal set
    *_, violated = detproj._derivative_core(
        np.float64(1.0), np.float64(1.0), 0.0, 2.0, 1.0, 0.0, 0.0
    )
    assert bool(violated)
    *_, fine = detproj._derivative_core(
        np.float64(1.0), np.float64(1.0), 0.0, 0.2, 1.0, 0.0, 0.0
    )
    assert not bool(fine)

    def always_violated(d1, d2, theta, signed, h11, h12, h22):
        return h11, h12, h22, np.ones_like(np.asarray(h11), dtype=bool)

    monkeypatch.setattr(detproj, "_derivative_core", always_violated)
    with pytest.raises(ContractivityViolated):
        projection_derivative(np.zeros((2, 2)), 1.1, np.eye(2))
    problem = make_manufactured(0.002, 16)
    with pytest.raises(ContractivityViolated) as info:
        projection_derivative_field(
            problem.hessian_exact, problem.f, SymMatrixField.zeros(16)
        )
    assert info.value.node == (0, 0)


def test_target_sensitivity_moves_along_the_normal():
    # differentiating det(I + Q(f)) = f in f gives cof(I + Q) : dQ/df = 1
    mat = np.array([[0.4, -0.1], [-0.1, 0.1]])
    f = 0.9
    q = project_point(mat, f)
    sens = target_sensitivity_fd(mat, f)
    pairing = float(np.sum(cof(q + np.eye(2)) * sens))
    assert pairing == pytest.approx(1.0, abs=1e-5)
