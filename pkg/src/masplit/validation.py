"""Self-contained oracle suites for the numerically delicate pieces.

Each suite re-derives expected answers by an independent method (dense
parameter search, central finite differences, closed-form integrals)
and compares the fast implementations against them. The suites are
shared between the test suite and the command line so a deployed build
can be audited in place.
"""

from dataclasses import dataclass

import numpy as np

from .detproj import project_point, projection_derivative, tangent_projector
from .fields import ScalarField, SymMatrixField, random_matrix_field, random_scalar_field
from .matfield import eigen, rotation
from .torus import dft, hessian_of, idft, inner_product, project_onto_hessians, sobolev_norm

__all__ = [
    "CheckResult",
    "hyperbola_distance_oracle",
    "SUITES",
    "run_suite",
    "run_suites",
]

_STREAM_VALIDATE = 3
_T_POINTS = 1_000_001
_t_grid_cache = None


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _t_grid():
    global _t_grid_cache
    if _t_grid_cache is None:
        _t_grid_cache = np.logspace(-3.0, 3.0, _T_POINTS)
    return _t_grid_cache


def hyperbola_distance_oracle(m1, m2, f, refine=120):
    """Distance from (m1, m2) to {x*y = f, x, y > 0} by dense search.

    Scans one million logarithmically spaced feet (t, f/t) for
    t in [1e-3, 1e3], then golden-section refines the best bracket.
    Independent of the production Newton/quartic path.
    """
    t = _t_grid()
    d2 = (t - m1) ** 2 + (f / t - m2) ** 2
    i = int(np.argmin(d2))
    lo = t[max(i - 1, 0)]
    hi = t[min(i + 1, len(t) - 1)]

    def val(tt):
        return (tt - m1) ** 2 + (f / tt - m2) ** 2

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = val(c), val(d)
    for _ in range(refine):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = val(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = val(d)
    return float(np.sqrt(min(fc, fd)))


def _random_spd(rng, lam_lo=0.05, lam_hi=4.0):
    lam = np.exp(rng.uniform(np.log(lam_lo), np.log(lam_hi), size=2))
    theta = rng.uniform(-np.pi / 2.0, np.pi / 2.0)
    rot = rotation(theta)
    return rot @ np.diag(lam) @ rot.T, lam


def _random_sym(rng, scale=1.0):
    entries = rng.standard_normal(3)
    mat = np.array([[entries[0], entries[1]], [entries[1], entries[2]]])
    norm = np.sqrt(np.sum(mat * mat))
    return mat * (scale / norm)


def _frob(mat):
    return float(np.sqrt(np.sum(mat * mat)))


def run_det_projection(seed=0, cases=1000):
    """Random-matrix audit of the determinant projection."""
    rng = np.random.default_rng([seed, _STREAM_VALIDATE])
    eye = np.eye(2)
    worst = {"gap": 0.0, "resid": 0.0, "equiv": 0.0, "idem": 0.0}
    spd_ok = True
    failures = []
    for case in range(cases):
        target_mat, lam = _random_spd(rng)
        f = float(np.exp(rng.uniform(np.log(0.2), np.log(5.0))))
        try:
            foot = project_point(target_mat - eye, f)
        except Exception as exc:  # any raise on generic input is a failure
            failures.append(f"case {case}: {type(exc).__name__}: {exc}")
            continue
        shifted = foot + eye
        dist = _frob(target_mat - shifted)
        oracle = hyperbola_distance_oracle(lam[0], lam[1], f)
        worst["gap"] = max(worst["gap"], dist - oracle)
        det = float(np.linalg.det(shifted))
        worst["resid"] = max(worst["resid"], abs(det - f) / max(1.0, f))
        if eigen(shifted).lam1 <= 0.0:
            spd_ok = False
        beta = rng.uniform(-np.pi, np.pi)
        rot = rotation(beta)
        turned = project_point(rot @ target_mat @ rot.T - eye, f)
        worst["equiv"] = max(
            worst["equiv"],
            _frob(turned - (rot @ shifted @ rot.T - eye)) / (1.0 + _frob(foot)),
        )
        again = project_point(foot, f)
        worst["idem"] = max(worst["idem"], _frob(again - foot) / (1.0 + _frob(foot)))
    checks = [
        CheckResult(
            "det-projection",
            "no raises on generic input",
            not failures,
            failures[0] if failures else f"{cases} cases clean",
        ),
        CheckResult(
            "det-projection",
            "distance matches dense search within 1e-8",
            worst["gap"] <= 1e-8,
            f"worst excess {worst['gap']:.3e}",
        ),
        CheckResult(
            "det-projection",
            "determinant residual within 1e-12 (relative)",
            worst["resid"] <= 1e-12,
            f"worst {worst['resid']:.3e}",
        ),
        CheckResult("det-projection", "output keeps I + Q positive definite", spd_ok, ""),
        CheckResult(
            "det-projection",
            "rotation equivariance within 1e-12",
            worst["equiv"] <= 1e-12,
            f"worst {worst['equiv']:.3e}",
        ),
        CheckResult(
            "det-projection",
            "idempotence within 1e-12",
            worst["idem"] <= 1e-12,
            f"worst {worst['idem']:.3e}",
        ),
    ]
    return checks


def run_derivative(seed=0, cases=100):
    """Finite-difference audit of the projection derivative."""
    rng = np.random.default_rng([seed, _STREAM_VALIDATE + 10])
    eye = np.eye(2)
    step = 1e-5
    worst_fd = 0.0
    worst_tangent = 0.0
    worst_linear = 0.0
    failures = []
    for case in range(cases):
        anchor, _ = _random_spd(rng, 0.5, 2.5)
        f = float(np.exp(rng.uniform(np.log(0.6), np.log(1.6))))
        foot = project_point(anchor - eye, f)
        offset = rng.uniform(0.0, 0.2)
        point = foot + offset * _random_sym(rng)
        direction = _random_sym(rng)
        try:
            derived = projection_derivative(point, f, direction)
            upper = project_point(point + step * direction, f)
            lower = project_point(point - step * direction, f)
        except Exception as exc:
            failures.append(f"case {case}: {type(exc).__name__}: {exc}")
            continue
        numeric = (upper - lower) / (2.0 * step)
        rel = _frob(derived - numeric) / max(_frob(numeric), 1e-30)
        worst_fd = max(worst_fd, rel)
        # On the surface the derivative must reduce to the tangent projector.
        plane = tangent_projector(point, f)
        on_surface = projection_derivative(plane.base, f, direction)
        worst_tangent = max(worst_tangent, _frob(on_surface - plane.apply(direction)))
        # Linearity in the direction argument.
        other = _random_sym(rng)
        combo = projection_derivative(point, f, 0.7 * direction + 1.3 * other)
        parts = 0.7 * projection_derivative(point, f, direction) + 1.3 * (
            projection_derivative(point, f, other)
        )
        worst_linear = max(worst_linear, _frob(combo - parts))
    return [
        CheckResult(
            "derivative",
            "no raises on near-feasible input",
            not failures,
            failures[0] if failures else f"{cases} cases clean",
        ),
        CheckResult(
            "derivative",
            "matches central differences within 1e-6 (relative)",
            worst_fd <= 1e-6,
            f"worst {worst_fd:.3e}",
        ),
        CheckResult(
            "derivative",
            "reduces to the tangent projector on the surface (1e-12)",
            worst_tangent <= 1e-12,
            f"worst {worst_tangent:.3e}",
        ),
        CheckResult(
            "derivative",
            "linear in the direction argument (1e-12)",
            worst_linear <= 1e-12,
            f"worst {worst_linear:.3e}",
        ),
    ]


def run_spectral(seed=0, cases=100, n=32):
    """Transform identities and Hessian-subspace projection laws."""
    rng = np.random.default_rng([seed, _STREAM_VALIDATE + 20])
    x = np.arange(n) / n
    wave = ScalarField(np.tile(np.sin(2.0 * np.pi * x)[:, None], (1, n)))
    parseval_gap = abs(sobolev_norm(wave, 0.0) ** 2 - 0.5)
    semi_gap = abs(
        sobolev_norm(wave, 1.0, seminorm=True) ** 2 - 0.5 * (2.0 * np.pi) ** 2
    )
    worst = {
        "round": 0.0,
        "idem": 0.0,
        "adj": 0.0,
        "expand": 0.0,
        "ortho": 0.0,
        "fix": 0.0,
        "attain": 0.0,
    }
    for _ in range(cases):
        scalar = random_scalar_field(n, rng, zero_mean=False)
        back = idft(dft(scalar))
        worst["round"] = max(
            worst["round"],
            sobolev_norm(back - scalar, 0.0) / max(sobolev_norm(scalar, 0.0), 1e-30),
        )
        field = random_matrix_field(n, rng)
        other = random_matrix_field(n, rng)
        for order in (0, 1, 2):
            proj, _ = project_onto_hessians(field, order)
            twice, _ = project_onto_hessians(proj, order)
            norm = max(sobolev_norm(field, float(order)), 1e-30)
            worst["idem"] = max(
                worst["idem"], sobolev_norm(twice - proj, float(order)) / norm
            )
            worst["expand"] = max(
                worst["expand"],
                sobolev_norm(proj, float(order)) / norm - 1.0,
            )
            proj_other, _ = project_onto_hessians(other, order)
            lhs = inner_product(proj, other, float(order))
            rhs = inner_product(field, proj_other, float(order))
            scale = max(
                sobolev_norm(field, float(order)) * sobolev_norm(other, float(order)),
                1e-30,
            )
            worst["adj"] = max(worst["adj"], abs(lhs - rhs) / scale)
        proj, potential = project_onto_hessians(field)
        worst["ortho"] = max(
            worst["ortho"],
            abs(inner_product(proj, field - proj))
            / max(sobolev_norm(field, 0.0) ** 2, 1e-30),
        )
        hess = hessian_of(potential)
        worst["fix"] = max(
            worst["fix"],
            sobolev_norm(hess - proj, 0.0) / max(sobolev_norm(proj, 0.0), 1e-30),
        )
        # The projection must leave second-derivative fields untouched,
        # so its norm bound of 1 is attained there.
        pure = hessian_of(random_scalar_field(n, rng))
        for order in (0, 1, 2):
            kept, _ = project_onto_hessians(pure, order)
            ratio = sobolev_norm(kept, float(order)) / max(
                sobolev_norm(pure, float(order)), 1e-30
            )
            worst["attain"] = max(worst["attain"], abs(ratio - 1.0))
    return [
        CheckResult(
            "spectral",
            "Parseval on a pure wave (||sin||^2 = 1/2)",
            parseval_gap <= 1e-14,
            f"gap {parseval_gap:.3e}",
        ),
        CheckResult(
            "spectral",
            "first-order seminorm of a pure wave",
            semi_gap <= 1e-12,
            f"gap {semi_gap:.3e}",
        ),
        CheckResult(
            "spectral",
            "transform round trip within 1e-12",
            worst["round"] <= 1e-12,
            f"worst {worst['round']:.3e}",
        ),
        CheckResult(
            "spectral",
            "projection idempotent within 1e-12 (orders 0, 1, 2)",
            worst["idem"] <= 1e-12,
            f"worst {worst['idem']:.3e}",
        ),
        CheckResult(
            "spectral",
            "projection self-adjoint within 1e-10 (orders 0, 1, 2)",
            worst["adj"] <= 1e-10,
            f"worst {worst['adj']:.3e}",
        ),
        CheckResult(
            "spectral",
            "projection non-expansive (orders 0, 1, 2)",
            worst["expand"] <= 1e-10,
            f"worst excess {worst['expand']:.3e}",
        ),
        CheckResult(
            "spectral",
            "residual orthogonal to the subspace (1e-10)",
            worst["ortho"] <= 1e-10,
            f"worst {worst['ortho']:.3e}",
        ),
        CheckResult(
            "spectral",
            "returned potential regenerates the projection (1e-12)",
            worst["fix"] <= 1e-12,
            f"worst {worst['fix']:.3e}",
        ),
        CheckResult(
            "spectral",
            "norm bound attained on second-derivative inputs (1e-10)",
            worst["attain"] <= 1e-10,
            f"worst {worst['attain']:.3e}",
        ),
    ]


def run_interpolation(seed=0, cases=100, n=32):
    """Intermediate-norm inequality between orders 0, 3/2 and 2."""
    rng = np.random.default_rng([seed, _STREAM_VALIDATE + 30])
    worst = -np.inf
    for case in range(cases):
        smooth = 4.0 if case % 2 == 0 else None
        field = random_matrix_field(n, rng, smooth_modes=smooth)
        mid = sobolev_norm(field, 1.5)
        bound = sobolev_norm(field, 0.0) ** 0.25 * sobolev_norm(field, 2.0) ** 0.75
        worst = max(worst, mid / bound - 1.0)
    return [
        CheckResult(
            "interpolation",
            "||X||_{3/2} <= ||X||_0^{1/4} ||X||_2^{3/4} within 1e-12",
            worst <= 1e-12,
            f"worst ratio excess {worst:.3e}",
        )
    ]


SUITES = {
    "det-projection": run_det_projection,
    "derivative": run_derivative,
    "spectral": run_spectral,
    "interpolation": run_interpolation,
}


def run_suite(name, seed=0, cases=None):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(sorted(SUITES))}")
    fn = SUITES[name]
    if cases is None:
        return fn(seed=seed)
    return fn(seed=seed, cases=cases)


def run_suites(names=None, seed=0, cases=None):
    results = []
    for name in names if names is not None else sorted(SUITES):
        results.extend(run_suite(name, seed=seed, cases=cases))
    return results
