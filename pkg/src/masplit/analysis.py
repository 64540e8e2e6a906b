"""Linearized contraction analysis of the iteration map.

At a feasible iterate P the sweep's derivative acts on a perturbation X
as: project onto Hessian fields, then remove nodewise the component
along the unit cofactor direction of I + P (the normal of the
determinant constraint). The operator norm rho0 of that composition
bounds the local contraction factor; it is estimated by power iteration
on the self-adjoint composition of the map with its adjoint, which on
the Hessian subspace is one subspace projection and one pointwise
tangent step per iteration. A dense matrix builder (practical for small
grids) provides an independent oracle via the SVD.

At P = 0 with constant target the normal field is the identity
direction, and the estimate equals 1/sqrt(2) exactly: the kernel step
removes half of the weighted energy of every Hessian mode.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MasplitError
from .fields import SymMatrixField, random_matrix_field
from .matfield import cof_field, plus_identity
from .torus import inner_product, project_onto_hessians, sobolev_norm

__all__ = [
    "OperatorNormEstimate",
    "linearized_step",
    "estimate_contraction_norm",
    "linearized_matrix",
    "rate_bound",
]

_STREAM_PROBE = 2  # rng spawn key; keeps probes independent of init noise


@dataclass(frozen=True)
class OperatorNormEstimate:
    rho0: float
    iterations: int
    residual: float
    witness: SymMatrixField
    converged: bool


def _unit_cofactor(base):
    """Unit Frobenius normal field of the constraint at I + base."""
    normal = cof_field(plus_identity(base))
    norm = np.sqrt(normal.frobenius_sq())
    if float(norm.min()) <= 0.0:
        raise MasplitError("degenerate node: I + P vanishes, no constraint normal")
    inv = 1.0 / norm
    return SymMatrixField(normal.p11 * inv, normal.p12 * inv, normal.p22 * inv)


def _remove_normal_component(normal, field):
    coef = (
        field.p11 * normal.p11
        + 2.0 * field.p12 * normal.p12
        + field.p22 * normal.p22
    )
    return SymMatrixField(
        field.p11 - coef * normal.p11,
        field.p12 - coef * normal.p12,
        field.p22 - coef * normal.p22,
    )


def linearized_step(base, perturbation):
    """One application of the sweep derivative at a feasible base iterate."""
    hessian, _ = project_onto_hessians(perturbation)
    return _remove_normal_component(_unit_cofactor(base), hessian)


def estimate_contraction_norm(base, seed=0, tol=1e-10, max_iters=10_000):
    """Operator norm of the linearized sweep by power iteration.

    Iterates the self-adjoint composition on the Hessian subspace and
    stops when the Rayleigh quotient's relative change drops below tol.
    The returned residual is ||A w - lambda w|| for the unit witness w;
    converged=False marks a budget exhaustion (the estimate is then a
    trustworthy lower bound with accuracy on the order of the residual).
    """
    rng = np.random.default_rng([seed, _STREAM_PROBE])
    normal = _unit_cofactor(base)
    start, _ = project_onto_hessians(random_matrix_field(base.n, rng))
    norm = sobolev_norm(start, 0.0)
    if norm == 0.0:
        raise MasplitError("degenerate start vector for power iteration")
    witness = start * (1.0 / norm)

    def apply_sym(x):
        reduced, _ = project_onto_hessians(_remove_normal_component(normal, x))
        return reduced

    rayleigh_prev = None
    rayleigh = 0.0
    iterations = 0
    converged = False
    for iterations in range(1, max_iters + 1):
        image = apply_sym(witness)
        rayleigh = inner_product(witness, image)
        norm = sobolev_norm(image, 0.0)
        if norm == 0.0:
            rayleigh = 0.0
            converged = True
            break
        witness = image * (1.0 / norm)
        if rayleigh_prev is not None and abs(rayleigh - rayleigh_prev) <= tol * max(
            rayleigh, 1e-300
        ):
            converged = True
            break
        rayleigh_prev = rayleigh

    image = apply_sym(witness)
    rayleigh = inner_product(witness, image)
    residual = sobolev_norm(image - rayleigh * witness, 0.0)
    return OperatorNormEstimate(
        rho0=float(np.sqrt(max(rayleigh, 0.0))),
        iterations=iterations,
        residual=float(residual),
        witness=witness,
        converged=converged,
    )


def linearized_matrix(base):
    """Dense matrix of the sweep derivative in orthonormal coordinates.

    Coordinates are (p11, sqrt(2)*p12, p22) flattened, which makes the
    Euclidean norm of a coordinate vector equal the field's L2 norm, so
    the largest singular value of the returned matrix is the exact
    operator norm. Size is 3*n^2; intended for small grids.
    """
    n = base.n
    normal = _unit_cofactor(base)
    dim = 3 * n * n
    matrix = np.empty((dim, dim))
    scale = np.array([1.0, np.sqrt(2.0), 1.0])
    stack = np.zeros((3, n, n))
    for index in range(dim):
        comp, flat = divmod(index, n * n)
        stack[comp].flat[flat] = 1.0 / scale[comp]
        basis = SymMatrixField.from_stack(stack)
        hessian, _ = project_onto_hessians(basis)
        image = _remove_normal_component(normal, hessian)
        matrix[:, index] = np.concatenate(
            [
                image.p11.ravel(),
                np.sqrt(2.0) * image.p12.ravel(),
                image.p22.ravel(),
            ]
        )
        stack[comp].flat[flat] = 0.0
    return matrix


def rate_bound(kappa):
    """Contraction bound kappa/sqrt(1 + kappa^2) for a condition ratio."""
    kappa = float(kappa)
    if not np.isfinite(kappa) or kappa < 1.0:
        raise ValueError("condition ratio must be finite and at least 1")
    return kappa / np.sqrt(1.0 + kappa * kappa)
