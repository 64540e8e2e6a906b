"""Pseudospectral calculus on the periodic unit square.

The forward transform carries the 1/n^2 factor, so the (0,0)
coefficient is the field mean and the discrete Parseval identity reads

    sum_k |f_hat(k)|^2 = mean of f^2 = ||f||_L2^2.

Second derivatives act as the Fourier multipliers -(2*pi)^2 * k_a * k_b.
On an even grid the Nyquist line k = -n/2 has no distinguishable
conjugate partner, so the odd-order factor in the mixed derivative is
zeroed there (pure second derivatives use even powers and are left
untouched). This keeps every multiplier used here Hermitian-symmetric,
which in turn makes the projection onto discrete Hessian fields exactly
idempotent and self-adjoint on real data, and makes it reproduce
hessian_of outputs exactly. Sampled continuum Hessians of band-limited
potentials are unaffected because their Nyquist content is zero.

The projection project_onto_hessians acts mode by mode. In the Sobolev
inner product of order m, the weight of a single mode is one positive
scalar, so the per-mode least-squares problem and hence the minimizer do
not depend on m; the argument is validated and recorded by callers but
does not alter the result on the torus.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import FROBENIUS_WEIGHTS, ScalarField, SpectrumField, SymMatrixField

__all__ = [
    "dft",
    "idft",
    "hessian_of",
    "potential_norm_weights",
    "sobolev_norm",
    "inner_product",
    "project_onto_hessians",
    "dealias_mask",
    "dealias",
]

TWO_PI_SQ = (2.0 * np.pi) ** 2
W11, W12, W22 = FROBENIUS_WEIGHTS


@dataclass(frozen=True)
class _SpectralTable:
    """Precomputed per-mode quantities for one grid size."""

    n: int
    m11: np.ndarray  # k1*k1
    m12: np.ndarray  # k1~*k2~ with the Nyquist odd factor zeroed
    m22: np.ndarray  # k2*k2
    hess_norm_sq: np.ndarray  # m11^2 + 2*m12^2 + m22^2, Frobenius-weighted
    lap: np.ndarray  # |2*pi*k|^2


@lru_cache(maxsize=16)
def _table(n):
    if n < 2:
        raise ValueError("grid must have at least 2 nodes per side")
    k = np.fft.fftfreq(n, d=1.0 / n)
    kt = k.copy()
    if n % 2 == 0:
        kt[n // 2] = 0.0
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    kt1, kt2 = np.meshgrid(kt, kt, indexing="ij")
    m11 = k1 * k1
    m12 = kt1 * kt2
    m22 = k2 * k2
    hess_norm_sq = W11 * m11**2 + W12 * m12**2 + W22 * m22**2
    lap = TWO_PI_SQ * (k1 * k1 + k2 * k2)
    for arr in (m11, m12, m22, hess_norm_sq, lap):
        arr.setflags(write=False)
    return _SpectralTable(n, m11, m12, m22, hess_norm_sq, lap)


def dft(field):
    """Forward transform of a real scalar field, normalized by 1/n^2."""
    n = field.n
    return SpectrumField(np.fft.fft2(field.values) / (n * n))


def idft(spectrum):
    """Inverse of dft; imaginary residue of conjugate-symmetric input is dropped."""
    n = spectrum.n
    return ScalarField(np.fft.ifft2(spectrum.coeffs * (n * n)).real)


def _hessian_coeffs(u_hat, table):
    """Spectra of the three Hessian components from a potential spectrum."""
    scale = -TWO_PI_SQ
    return (
        scale * table.m11 * u_hat,
        scale * table.m12 * u_hat,
        scale * table.m22 * u_hat,
    )


def hessian_of(potential):
    """Matrix of second derivatives of a scalar potential."""
    n = potential.n
    table = _table(n)
    u_hat = np.fft.fft2(potential.values) / (n * n)
    h11, h12, h22 = _hessian_coeffs(u_hat, table)
    comps = np.fft.ifft2(np.stack([h11, h12, h22]) * (n * n), axes=(-2, -1)).real
    return SymMatrixField.from_stack(comps)


def potential_norm_weights(n, s, seminorm=False):
    """Per-mode squared weight of the order-s Sobolev (semi)norm."""
    if s < 0:
        raise ValueError("Sobolev order must be nonnegative")
    table = _table(n)
    if seminorm:
        return table.lap**s if s != 0 else np.ones_like(table.lap)
    return (1.0 + table.lap) ** s


def _component_spectra(field):
    n = field.n
    if isinstance(field, ScalarField):
        return [np.fft.fft2(field.values) / (n * n)], [1.0]
    comps = np.fft.fft2(field.stack(), axes=(-2, -1)) / (n * n)
    return [comps[0], comps[1], comps[2]], [W11, W12, W22]


def sobolev_norm(field, s=0.0, seminorm=False):
    """Order-s Sobolev norm of a scalar or symmetric-matrix field.

    Matrix fields use the Frobenius structure, counting the off-diagonal
    component twice. s = 0 gives the L2 norm; the seminorm flag drops
    the zero-frequency contribution and weights by |2*pi*k|^(2s).
    """
    weights = potential_norm_weights(field.n, s, seminorm)
    spectra, mults = _component_spectra(field)
    total = 0.0
    for spec, mult in zip(spectra, mults):
        total += mult * float(np.sum(weights * (spec.real**2 + spec.imag**2)))
    return float(np.sqrt(total))


def inner_product(a, b, s=0.0):
    """Order-s Sobolev inner product of two fields of the same kind."""
    if a.n != b.n:
        raise ValueError(f"grid sizes disagree: {a.n} vs {b.n}")
    if isinstance(a, ScalarField) != isinstance(b, ScalarField):
        raise TypeError("cannot pair a scalar field with a matrix field")
    weights = potential_norm_weights(a.n, s)
    spectra_a, mults = _component_spectra(a)
    spectra_b, _ = _component_spectra(b)
    total = 0.0
    for sa, sb, mult in zip(spectra_a, spectra_b, mults):
        total += mult * float(np.sum(weights * (sa * np.conj(sb)).real))
    return total


def project_onto_hessians(field, m=0):
    """Closest field of second-derivative matrices, plus its potential.

    Projects a symmetric matrix field onto the closed subspace of
    Hessians of zero-mean periodic potentials, mode by mode. Returns the
    projected matrix field and the potential generating it. The Sobolev
    order m of the ambient inner product is accepted for interface
    parity; per the module docstring it cannot change the minimizer.
    """
    if m not in (0, 1, 2):
        raise ValueError(f"unsupported Sobolev order {m!r}; use 0, 1 or 2")
    n = field.n
    table = _table(n)
    comps = np.fft.fft2(field.stack(), axes=(-2, -1)) / (n * n)
    norm_sq = table.hess_norm_sq
    safe = np.where(norm_sq > 0.0, norm_sq, 1.0)
    # Per mode: coefficient of the unit direction along (m11, m12, m22)
    # in the Frobenius-weighted inner product, then rescaled back.
    numer = W11 * table.m11 * comps[0] + W12 * table.m12 * comps[1] + W22 * table.m22 * comps[2]
    coef = np.where(norm_sq > 0.0, numer / safe, 0.0)
    h11 = coef * table.m11
    h12 = coef * table.m12
    h22 = coef * table.m22
    proj = np.fft.ifft2(np.stack([h11, h12, h22]) * (n * n), axes=(-2, -1)).real
    # hessian = -(2*pi)^2 * m * u_hat, so invert the scalar factor per mode.
    u_hat = np.where(norm_sq > 0.0, -coef / TWO_PI_SQ, 0.0)
    potential = np.fft.ifft2(u_hat * (n * n)).real
    return SymMatrixField.from_stack(proj), ScalarField(potential)


def dealias_mask(n):
    """Boolean keep-mask implementing the two-thirds truncation rule."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    cutoff = n / 3.0
    keep1d = np.abs(k) <= cutoff
    return np.logical_and.outer(keep1d, keep1d)


def dealias(field):
    """Zero all modes outside the two-thirds band of a field."""
    mask = dealias_mask(field.n)
    if isinstance(field, ScalarField):
        coef = np.fft.fft2(field.values)
        return ScalarField(np.fft.ifft2(coef * mask).real)
    comps = np.fft.fft2(field.stack(), axes=(-2, -1))
    return SymMatrixField.from_stack(np.fft.ifft2(comps * mask, axes=(-2, -1)).real)
