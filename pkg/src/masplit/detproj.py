"""Pointwise closest-point projection onto the determinant constraint.

Each node of the iterate carries a symmetric 2x2 matrix P that the
solver replaces with the nearest symmetric Q (Frobenius distance, the
off-diagonal entry counted twice) satisfying det(I + Q) = f with
I + Q positive definite. Diagonalizing I + P reduces the matrix problem
to projecting its eigenvalue pair (m1, m2) onto the positive branch of
the hyperbola {x * y = f, x > 0, y > 0}; the minimizer shares the input's
eigenframe, so the matrix answer is recovered by rotating back.

Two complementary root-finders cover the plane:

* Newton on the normal-line multiplier mu, where the stationarity
  conditions read x = (m1 + mu*m2)/(1 - mu^2), y = (m2 + mu*m1)/(1 - mu^2)
  and mu solves x(mu)*y(mu) = f. Near-feasible inputs (the solver's
  steady regime) sit at |mu| << 1 and converge in a handful of steps.
  The iteration is safeguarded by bisection on a bracket in (-1, 1).
* A global enumeration: stationary feet (t, f/t) are the positive roots
  of t^4 - m1*t^3 + m2*f*t - f^2 = 0, found by the companion-matrix
  root-finder and polished by Newton. This is singularity-free at
  mu = +-1 and sees every candidate, so the true minimizer is selected
  by explicit distance comparison.

Scalar calls always cross-check Newton against the enumeration. Grid
calls run vectorized Newton and fall back to the scalar path only on
nodes that failed to converge, left the positive quadrant, or drifted
beyond a conservative |mu| trust region.

Equidistant distinct feet (inputs on the medial axis of the branch) and
inputs with m1 + m2 <= 0, for which the normal-line family contains no
positive-definite point, raise AmbiguousProjection.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousProjection, ContractivityViolated, NonConvergence
from .fields import ScalarField, SymMatrixField
from .matfield import cof, eigen, eigen_grid, plus_identity, rotation

__all__ = [
    "HyperbolaProjection",
    "FieldProjection",
    "project_pair",
    "project_point",
    "project_field",
    "project_field_info",
    "projection_derivative",
    "projection_derivative_field",
    "TangentProjector",
    "tangent_projector",
    "target_sensitivity_fd",
]

NEWTON_TOL = 1e-14
NEWTON_BUDGET = 100
MU_TRUST = 0.35  # heuristic; nodes beyond it are re-solved by enumeration
TIE_RTOL = 1e-10
FOOT_MERGE_RTOL = 1e-8
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class HyperbolaProjection:
    """Foot of one eigenvalue pair on the positive hyperbola branch."""

    x: float
    y: float
    mu: float
    iterations: int
    residual: float
    fallback: bool


@dataclass(frozen=True)
class FieldProjection:
    """Projected field plus worst-case solver statistics over the grid."""

    field: SymMatrixField
    max_residual: float
    max_iterations: int
    fallback_count: int


def _newton_grid(m1, m2, f, tol, budget):
    """Safeguarded Newton for the multiplier mu on arrays.

    Returns (mu, x, y, residual, iterations, converged); residual is the
    signed constraint value x*y - f at the final mu.
    """
    shape = np.broadcast(m1, m2, f).shape
    mu = np.zeros(shape)
    lo = np.full(shape, -1.0 + 1e-12)
    hi = np.full(shape, 1.0 - 1e-12)
    scale = np.maximum(1.0, np.abs(f))
    converged = np.zeros(shape, dtype=bool)
    iterations = np.zeros(shape, dtype=np.int64)
    for _ in range(budget):
        one = 1.0 - mu * mu
        x = (m1 + mu * m2) / one
        y = (m2 + mu * m1) / one
        phi = x * y - f
        converged |= np.abs(phi) <= tol * scale
        active = ~converged
        if not active.any():
            break
        lo = np.where(active & (phi < 0.0), mu, lo)
        hi = np.where(active & (phi > 0.0), mu, hi)
        dx = (m2 * one + 2.0 * mu * (m1 + mu * m2)) / (one * one)
        dy = (m1 * one + 2.0 * mu * (m2 + mu * m1)) / (one * one)
        dphi = dx * y + x * dy
        safe = np.where(dphi != 0.0, dphi, 1.0)
        step = np.where(dphi != 0.0, phi / safe, 0.0)
        cand = mu - step
        wild = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(wild, 0.5 * (lo + hi), cand)
        mu = np.where(active, cand, mu)
        iterations[active] += 1
    one = 1.0 - mu * mu
    x = (m1 + mu * m2) / one
    y = (m2 + mu * m1) / one
    residual = x * y - f
    converged |= np.abs(residual) <= tol * scale
    return mu, x, y, residual, iterations, converged


def _polish_root(t, m1, m2, f):
    """Newton refinement of a positive root of the stationarity quartic."""
    for _ in range(60):
        g = ((t - m1) * t + 0.0) * t * t + m2 * f * t - f * f
        dg = (4.0 * t - 3.0 * m1) * t * t + m2 * f
        if dg == 0.0:
            break
        nt = t - g / dg
        if nt <= 0.0:
            nt = 0.5 * t
        if abs(nt - t) <= 1e-16 * max(1.0, abs(t)):
            t = nt
            break
        t = nt
    return t


def _stationary_feet(m1, m2, f):
    """All positive stationary feet (t, f/t), nearest first.

    Returns a list of (t, distance) deduplicated at relative spacing
    FOOT_MERGE_RTOL and sorted by distance to (m1, m2).
    """
    roots = np.roots([1.0, -m1, 0.0, m2 * f, -f * f])
    scale = max(1.0, abs(m1), abs(m2), abs(f))
    ts = []
    for r in roots:
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
            continue
        t = float(r.real)
        if t <= 0.0:
            continue
        t = _polish_root(t, m1, m2, f)
        g = t**4 - m1 * t**3 + m2 * f * t - f * f
        if t <= 0.0 or abs(g) > 1e-8 * max(t**4, scale**4):
            continue
        ts.append(t)
    ts.sort()
    merged = []
    for t in ts:
        if merged and abs(t - merged[-1]) <= FOOT_MERGE_RTOL * (1.0 + abs(t)):
            continue
        merged.append(t)
    feet = [(t, float(np.hypot(t - m1, f / t - m2))) for t in merged]
    feet.sort(key=lambda pair: pair[1])
    return feet


def project_pair(m1, m2, f, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Project the eigenvalue pair (m1, m2) onto {x*y = f, x, y > 0}.

    Newton supplies the fast path; the quartic enumeration always
    verifies global optimality and takes over when Newton missed or
    left the branch. Raises AmbiguousProjection for medial-axis inputs
    (two equidistant feet) and for m1 + m2 <= 0.
    """
    m1 = float(m1)
    m2 = float(m2)
    f = float(f)
    if not (np.isfinite(m1) and np.isfinite(m2) and np.isfinite(f)):
        raise ValueError("projection inputs must be finite")
    if f <= 0.0:
        raise ValueError("target determinant must be positive")
    if m1 + m2 <= 0.0:
        raise AmbiguousProjection(
            "no positive-definite projection: eigenvalue pair has nonpositive sum"
        )
    a1 = np.array([m1])
    a2 = np.array([m2])
    af = np.array([f])
    mu, x, y, residual, iterations, converged = _newton_grid(a1, a2, af, tol, budget)
    nx, ny, nmu = float(x[0]), float(y[0]), float(mu[0])
    nresid, niters = float(residual[0]), int(iterations[0])
    newton_ok = bool(converged[0]) and nx > 0.0 and ny > 0.0
    newton_dist = np.hypot(nx - m1, ny - m2) if newton_ok else np.inf

    feet = _stationary_feet(m1, m2, f)
    if not feet:
        if not newton_ok:
            raise NonConvergence(
                "hyperbola projection found no admissible foot",
                diagnostic={"m1": m1, "m2": m2, "f": f, "residual": nresid},
            )
        return HyperbolaProjection(nx, ny, nmu, niters, abs(nresid), False)

    best_t, best_dist = feet[0]
    if len(feet) > 1 and feet[1][1] - best_dist <= TIE_RTOL * (1.0 + best_dist):
        raise AmbiguousProjection(
            f"two equidistant projections at distance {best_dist:.6g} "
            f"(feet t={best_t:.6g} and t={feet[1][0]:.6g})"
        )
    if newton_dist <= best_dist + 1e-12 * (1.0 + best_dist):
        return HyperbolaProjection(nx, ny, nmu, niters, abs(nresid), False)
    bx, by = best_t, f / best_t
    return HyperbolaProjection(
        bx, by, (bx - m1) / by, niters, abs(bx * by - f), True
    )


def project_point(mat, f, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Nearest symmetric 2x2 matrix Q to mat with det(I + Q) = f, I + Q SPD."""
    arr = np.asarray(mat, dtype=np.float64)
    pair = eigen(arr + np.eye(2))
    hp = project_pair(pair.first, pair.second, f, tol, budget)
    rot = rotation(pair.theta)
    return rot @ np.diag([hp.x, hp.y]) @ rot.T - np.eye(2)


def _project_grid(m1, m2, fvals, tol, budget):
    """Vectorized projection of eigenvalue-pair grids; scalar fallback on
    flagged nodes. Returns (x, y, mu, |residual|, iterations, fallbacks)."""
    bad = m1 + m2 <= 0.0
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise AmbiguousProjection(
            f"no positive-definite projection at node ({i}, {j}): "
            "eigenvalue pair has nonpositive sum",
            node=(int(i), int(j)),
        )
    mu, x, y, residual, iterations, converged = _newton_grid(m1, m2, fvals, tol, budget)
    flagged = (~converged) | (x <= 0.0) | (y <= 0.0) | (np.abs(mu) >= MU_TRUST)
    count = 0
    for i, j in zip(*np.nonzero(flagged)):
        try:
            hp = project_pair(m1[i, j], m2[i, j], fvals[i, j], tol, budget)
        except AmbiguousProjection as exc:
            raise AmbiguousProjection(
                f"{exc} at node ({i}, {j})", node=(int(i), int(j))
            ) from exc
        x[i, j] = hp.x
        y[i, j] = hp.y
        mu[i, j] = hp.mu
        residual[i, j] = hp.residual
        iterations[i, j] = max(iterations[i, j], hp.iterations)
        count += 1
    return x, y, mu, np.abs(residual), iterations, count


def _check_target(f):
    if float(f.values.min()) <= 0.0:
        raise ValueError("target determinant field must be positive everywhere")


def project_field_info(field, f, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Nodewise projection of a matrix field; returns field and statistics."""
    if field.n != f.n:
        raise ValueError(f"grid sizes disagree: {field.n} vs {f.n}")
    _check_target(f)
    m1, m2, theta = eigen_grid(plus_identity(field))
    x, y, _, residual, iterations, fallbacks = _project_grid(
        m1, m2, f.values, tol, budget
    )
    c = np.cos(theta)
    s = np.sin(theta)
    projected = SymMatrixField(
        c * c * x + s * s * y - 1.0,
        c * s * (x - y),
        s * s * x + c * c * y - 1.0,
    )
    return FieldProjection(
        projected,
        float(residual.max()),
        int(iterations.max()),
        int(fallbacks),
    )


def project_field(field, f, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Nodewise nearest field Q with det(I + Q) = f and I + Q SPD."""
    return project_field_info(field, f, tol, budget).field


def _derivative_core(d1, d2, theta, signed_dist, h11, h12, h22):
    """Directional derivative of the projection in its eigenframe.

    (d1, d2) are the foot's eigenvalues, theta the shared eigenframe
    angle, signed_dist the distance to the foot signed by which side of
    the constraint the input sits on (positive where det(I + P) > f).
    The derivative is diagonal in the orthonormal tangent frame
    E1 = (d1*e11 - d2*e22)/lam, E2 = offdiag/sqrt(2), with curvature
    factors 1/(1 - signed_dist*l_i), l1 = 2*d1*d2/lam^3, l2 = 1/lam.
    Returns output components and the Neumann-violation mask.
    """
    lam = np.hypot(d1, d2)
    l1 = 2.0 * d1 * d2 / lam**3
    l2 = 1.0 / lam
    violated = signed_dist * np.maximum(l1, l2) >= 1.0 - 1e-12
    c = np.cos(theta)
    s = np.sin(theta)
    ht11 = c * c * h11 + 2.0 * c * s * h12 + s * s * h22
    ht12 = (c * c - s * s) * h12 + c * s * (h22 - h11)
    ht22 = s * s * h11 - 2.0 * c * s * h12 + c * c * h22
    a1 = (d1 * ht11 - d2 * ht22) / lam / (1.0 - signed_dist * l1)
    a2 = SQRT2 * ht12 / (1.0 - signed_dist * l2)
    ot11 = a1 * d1 / lam
    ot22 = -a1 * d2 / lam
    ot12 = a2 / SQRT2
    o11 = c * c * ot11 - 2.0 * c * s * ot12 + s * s * ot22
    o12 = c * s * (ot11 - ot22) + (c * c - s * s) * ot12
    o22 = s * s * ot11 + 2.0 * c * s * ot12 + c * c * ot22
    return o11, o12, o22, violated


def projection_derivative(mat, f, direction, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Derivative of project_point at mat applied to a direction matrix.

    Closed form: project, then scale the tangent components of the
    direction by the curvature factors of the constraint surface at the
    foot. Raises ContractivityViolated when the input lies at or beyond
    the focal distance of the surface, where the formula's Neumann
    series diverges.
    """
    arr = np.asarray(mat, dtype=np.float64)
    dirarr = np.asarray(direction, dtype=np.float64)
    pair = eigen(arr + np.eye(2))
    hp = project_pair(pair.first, pair.second, f, tol, budget)
    dist = float(np.hypot(pair.first - hp.x, pair.second - hp.y))
    signed = float(np.sign(pair.first * pair.second - f)) * dist
    h12 = 0.5 * (dirarr[0, 1] + dirarr[1, 0])
    o11, o12, o22, violated = _derivative_core(
        hp.x, hp.y, pair.theta, signed, dirarr[0, 0], h12, dirarr[1, 1]
    )
    if violated:
        raise ContractivityViolated(
            f"input at signed distance {signed:.6g} reaches the focal set of the constraint"
        )
    return np.array([[o11, o12], [o12, o22]])


def projection_derivative_field(field, f, direction, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Nodewise projection derivative applied to a direction field."""
    if field.n != f.n or direction.n != f.n:
        raise ValueError("grid sizes disagree")
    _check_target(f)
    m1, m2, theta = eigen_grid(plus_identity(field))
    x, y, _, _, _, _ = _project_grid(m1, m2, f.values, tol, budget)
    signed = np.sign(m1 * m2 - f.values) * np.hypot(m1 - x, m2 - y)
    o11, o12, o22, violated = _derivative_core(
        x, y, theta, signed, direction.p11, direction.p12, direction.p22
    )
    if violated.any():
        i, j = np.argwhere(violated)[0]
        raise ContractivityViolated(
            f"node ({i}, {j}) reaches the focal set of the constraint",
            node=(int(i), int(j)),
        )
    return SymMatrixField(o11, o12, o22)


@dataclass(frozen=True)
class TangentProjector:
    """Orthogonal projector onto the constraint tangent plane at a foot.

    base is the projected matrix Q; normal is the unit Frobenius normal
    of {det(I + .) = f} there, proportional to cof(I + Q).
    """

    base: np.ndarray
    normal: np.ndarray

    def apply(self, direction):
        arr = np.asarray(direction, dtype=np.float64)
        coef = float(np.sum(arr * self.normal))
        return arr - coef * self.normal


def tangent_projector(mat, f, tol=NEWTON_TOL, budget=NEWTON_BUDGET):
    """Tangent projector of the constraint surface at the foot of mat."""
    foot = project_point(mat, f, tol, budget)
    normal = cof(foot + np.eye(2))
    normal = normal / np.sqrt(np.sum(normal * normal))
    return TangentProjector(base=foot, normal=normal)


def target_sensitivity_fd(mat, f, delta=1e-6):
    """Finite-difference sensitivity of the projection to the target value.

    Central difference in f; exposed as a diagnostic only, since the
    solver never differentiates through the target.
    """
    upper = project_point(mat, f + delta)
    lower = project_point(mat, f - delta)
    return (upper - lower) / (2.0 * delta)
