"""Pointwise algebra of symmetric 2x2 matrices and matrix fields."""

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, SymMatrixField

__all__ = [
    "EigenPair",
    "eigen",
    "eigen_grid",
    "rotation",
    "cof",
    "cof_field",
    "det_field",
    "plus_identity",
    "EllipticityReport",
    "ellipticity_report",
]


def rotation(theta):
    """2x2 rotation matrix by angle theta."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _eigen_arrays(a11, a12, a22):
    """Closed-form spectral data of symmetric 2x2 arrays.

    Returns slot eigenvalues (first, second) and the rotation angle
    theta, normalized to (-pi/4, pi/4] by quarter-turn shifts that swap
    the slots. first/second are the diagonal entries of R^T A R, not
    sorted by size.
    """
    mean = 0.5 * (a11 + a22)
    half_gap = 0.5 * (a11 - a22)
    radius = np.hypot(half_gap, a12)
    theta = 0.5 * np.arctan2(2.0 * a12, a11 - a22)
    first = mean + radius
    second = mean - radius
    # Fold theta into (-pi/4, pi/4]; each quarter-turn shift swaps slots.
    high = theta > np.pi / 4
    low = theta <= -np.pi / 4
    theta = np.where(high, theta - np.pi / 2, theta)
    theta = np.where(low, theta + np.pi / 2, theta)
    swap = high | low
    first, second = np.where(swap, second, first), np.where(swap, first, second)
    return first, second, theta


@dataclass(frozen=True)
class EigenPair:
    """Spectral decomposition A = R(theta) diag(first, second) R(theta)^T.

    first and second are kept in rotation-slot order so reconstruction
    is exact with theta in (-pi/4, pi/4]; lam1/lam2 expose the same pair
    sorted ascending. theta = 0 on scalar multiples of the identity.
    """

    first: float
    second: float
    theta: float

    @property
    def lam1(self):
        return min(self.first, self.second)

    @property
    def lam2(self):
        return max(self.first, self.second)

    def reconstruct(self):
        rot = rotation(self.theta)
        return rot @ np.diag([self.first, self.second]) @ rot.T

    def vector(self, slot):
        """Unit eigenvector of the slot-0 or slot-1 eigenvalue."""
        rot = rotation(self.theta)
        return rot[:, slot]


def _as_sym(mat):
    arr = np.asarray(mat, dtype=np.float64)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if abs(arr[0, 1] - arr[1, 0]) > 1e-12 * (1.0 + np.abs(arr).max()):
        raise ValueError("matrix is not symmetric")
    return arr


def eigen(mat):
    """EigenPair of a symmetric 2x2 matrix."""
    arr = _as_sym(mat)
    off = 0.5 * (arr[0, 1] + arr[1, 0])
    first, second, theta = _eigen_arrays(arr[0, 0], off, arr[1, 1])
    return EigenPair(float(first), float(second), float(theta))


def eigen_grid(field):
    """Vectorized eigen over a SymMatrixField: arrays (first, second, theta)."""
    return _eigen_arrays(field.p11, field.p12, field.p22)


def cof(mat):
    """Cofactor matrix of a 2x2 matrix: cof(M) = tr(M) I - M for symmetric M."""
    arr = _as_sym(mat)
    return np.array([[arr[1, 1], -arr[0, 1]], [-arr[1, 0], arr[0, 0]]])


def cof_field(field):
    """Pointwise cofactor of a symmetric matrix field."""
    return SymMatrixField(field.p22, -field.p12, field.p11)


def det_field(field):
    """Pointwise determinant of a symmetric matrix field."""
    return ScalarField(field.p11 * field.p22 - field.p12**2)


def plus_identity(field):
    """The field I + P."""
    return SymMatrixField(field.p11 + 1.0, field.p12, field.p22 + 1.0)


@dataclass(frozen=True)
class EllipticityReport:
    """Extreme eigenvalues of I + P over the grid and their ratio."""

    nu1: float
    nu2: float
    kappa: float
    elliptic: bool


def ellipticity_report(field):
    """Eigenvalue range of I + P over all nodes.

    nu1/nu2 are the global minimum and maximum eigenvalues, kappa their
    ratio (inf when nu1 <= 0), and elliptic says whether I + P is
    positive definite everywhere.
    """
    first, second, _ = eigen_grid(plus_identity(field))
    nu1 = float(np.minimum(first, second).min())
    nu2 = float(np.maximum(first, second).max())
    elliptic = nu1 > 0.0
    kappa = nu2 / nu1 if elliptic else float("inf")
    return EllipticityReport(nu1, nu2, kappa, elliptic)
