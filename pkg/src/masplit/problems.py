"""Benchmark problems with known solutions.

The manufactured family uses the separable potential

    u(x, y) = epsilon * sin(2*pi*x) * sin(2*pi*y)

whose Hessian is known in closed form; the target determinant is
computed nodewise from it, so the sampled exact Hessian is a fixed point
of the discrete iteration up to roundoff. The eigenvalues of I + D2u
cover [1 - 4*pi^2*epsilon, 1 + 4*pi^2*epsilon] and the extremes are
attained on the grid diagonal, so uniform ellipticity holds exactly for
epsilon < 1/(4*pi^2).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, SymMatrixField, node_coordinates
from .matfield import EllipticityReport, ellipticity_report
from .torus import sobolev_norm

__all__ = [
    "ELLIPTIC_EPS_LIMIT",
    "ManufacturedProblem",
    "ExternalProblem",
    "make_manufactured",
    "error_vs_exact",
]

ELLIPTIC_EPS_LIMIT = 1.0 / (4.0 * np.pi**2)


@dataclass(frozen=True)
class ManufacturedProblem:
    epsilon: float
    n: int
    u_exact: ScalarField
    hessian_exact: SymMatrixField
    f: ScalarField
    report: EllipticityReport


@dataclass(frozen=True)
class ExternalProblem:
    """A problem given only by its target field, e.g. loaded from disk."""

    f: ScalarField
    u_exact: ScalarField | None = None
    hessian_exact: SymMatrixField | None = None
    report: EllipticityReport | None = None


def make_manufactured(epsilon, n):
    """Manufactured problem on an even n-by-n grid, n >= 16."""
    epsilon = float(epsilon)
    n = int(n)
    if n < 16 or n % 2 != 0:
        raise ValueError("grid size must be an even integer, at least 16")
    if epsilon < 0.0:
        raise ValueError("amplitude must be nonnegative")
    if epsilon >= ELLIPTIC_EPS_LIMIT:
        warnings.warn(
            f"amplitude {epsilon:g} reaches the ellipticity limit "
            f"{ELLIPTIC_EPS_LIMIT:g}; I + D2u is no longer uniformly positive",
            stacklevel=2,
        )
    x, y = node_coordinates(n)
    ss = np.sin(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y)
    cc = np.cos(2.0 * np.pi * x) * np.cos(2.0 * np.pi * y)
    amp = 4.0 * np.pi**2 * epsilon
    u = ScalarField(epsilon * ss)
    hessian = SymMatrixField(-amp * ss, amp * cc, -amp * ss)
    f = ScalarField((1.0 - amp * ss) ** 2 - (amp * cc) ** 2)
    return ManufacturedProblem(epsilon, n, u, hessian, f, ellipticity_report(hessian))


def error_vs_exact(value, problem, s=0.0):
    """Sobolev distance of a field to the problem's reference solution.

    Scalar fields compare against the exact potential, matrix fields
    against the exact Hessian.
    """
    if isinstance(value, ScalarField):
        if problem.u_exact is None:
            raise ValueError("problem carries no reference potential")
        reference = problem.u_exact
    elif isinstance(value, SymMatrixField):
        if problem.hessian_exact is None:
            raise ValueError("problem carries no reference Hessian")
        reference = problem.hessian_exact
    else:
        raise TypeError(f"unsupported field type {type(value).__name__}")
    if value.n != reference.n:
        raise ValueError(f"grid sizes disagree: {value.n} vs {reference.n}")
    return sobolev_norm(value - reference, s)
