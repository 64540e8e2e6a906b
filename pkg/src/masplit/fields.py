"""Grid-sampled fields on the unit periodic square.

Everything in this package lives on a uniform n-by-n grid over [0,1)^2
with node (i, j) at (i/n, j/n), row index i along x. Three containers
cover all data flowing through the solver:

* ScalarField      -- one real value per node.
* SymMatrixField   -- a symmetric 2x2 matrix per node, stored as the
                      three distinct entries (p11, p12, p22).
* SpectrumField    -- complex Fourier coefficients of a scalar field,
                      kept in FFT layout with the forward transform
                      normalized by 1/n^2 so coeff(0,0) is the mean.

The containers validate shape and finiteness once at construction so
downstream numerics never have to re-check. They are frozen; arithmetic
returns new instances.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScalarField",
    "SymMatrixField",
    "SpectrumField",
    "node_coordinates",
    "random_scalar_field",
    "random_matrix_field",
]

FROBENIUS_WEIGHTS = (1.0, 2.0, 1.0)  # off-diagonal entry appears twice in the matrix


def _checked(values, n=None):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square 2-d array, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"component grids disagree: {arr.shape[0]} vs {n}")
    if arr.shape[0] < 2:
        raise ValueError("grid must have at least 2 nodes per side")
    if not np.isfinite(arr).all():
        raise ValueError("field contains non-finite values")
    return arr


def node_coordinates(n):
    """Return meshgrid arrays (X, Y) of the node positions i/n, j/n."""
    t = np.arange(n) / n
    return np.meshgrid(t, t, indexing="ij")


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _checked(self.values))
        self.values.setflags(write=False)

    @property
    def n(self):
        return self.values.shape[0]

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, n)))

    @classmethod
    def constant(cls, n, value):
        return cls(np.full((n, n), float(value)))

    @classmethod
    def from_function(cls, n, fn):
        """Sample fn(x, y) at the grid nodes; fn must accept arrays."""
        x, y = node_coordinates(n)
        return cls(fn(x, y))

    def mean(self):
        return float(self.values.mean())

    def __add__(self, other):
        return ScalarField(self.values + other.values)

    def __sub__(self, other):
        return ScalarField(self.values - other.values)

    def __mul__(self, scalar):
        return ScalarField(self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SymMatrixField:
    p11: np.ndarray
    p12: np.ndarray
    p22: np.ndarray

    def __post_init__(self):
        p11 = _checked(self.p11)
        p12 = _checked(self.p12, p11.shape[0])
        p22 = _checked(self.p22, p11.shape[0])
        for name, arr in (("p11", p11), ("p12", p12), ("p22", p22)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.p11.shape[0]

    @classmethod
    def zeros(cls, n):
        z = np.zeros((n, n))
        return cls(z, z.copy(), z.copy())

    @classmethod
    def from_stack(cls, stack):
        """Build from a (3, n, n) array ordered (p11, p12, p22)."""
        return cls(stack[0], stack[1], stack[2])

    def stack(self):
        """Return a writable (3, n, n) copy ordered (p11, p12, p22)."""
        return np.stack([self.p11, self.p12, self.p22])

    def at(self, i, j):
        """The full 2x2 matrix at node (i, j)."""
        return np.array(
            [[self.p11[i, j], self.p12[i, j]], [self.p12[i, j], self.p22[i, j]]]
        )

    def trace_field(self):
        return ScalarField(self.p11 + self.p22)

    def frobenius_sq(self):
        """Pointwise squared Frobenius norm (off-diagonal counted twice)."""
        return self.p11**2 + 2.0 * self.p12**2 + self.p22**2

    def __add__(self, other):
        return SymMatrixField(
            self.p11 + other.p11, self.p12 + other.p12, self.p22 + other.p22
        )

    def __sub__(self, other):
        return SymMatrixField(
            self.p11 - other.p11, self.p12 - other.p12, self.p22 - other.p22
        )

    def __mul__(self, scalar):
        s = float(scalar)
        return SymMatrixField(self.p11 * s, self.p12 * s, self.p22 * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectrumField:
    """Fourier coefficients in FFT layout, forward-normalized by 1/n^2."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square 2-d array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("spectrum contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def n(self):
        return self.coeffs.shape[0]

    def coeff(self, k1, k2):
        """Coefficient of the mode exp(2*pi*i*(k1*x + k2*y)).

        Integer frequencies in -n/2 .. n/2-1 are accepted and mapped to
        the FFT storage slot (k mod n).
        """
        n = self.n
        half = n // 2
        for k in (k1, k2):
            if not -half <= k <= half - 1 + (n % 2):
                raise ValueError(f"frequency {k} outside -{half}..{half - 1}")
        return complex(self.coeffs[k1 % n, k2 % n])


def random_scalar_field(n, rng, zero_mean=True):
    """White-noise scalar field with entries from the standard normal."""
    v = rng.standard_normal((n, n))
    if zero_mean:
        v = v - v.mean()
    return ScalarField(v)


def random_matrix_field(n, rng, smooth_modes=None, zero_mean=True):
    """Random symmetric matrix field, optionally spectrally smoothed.

    With smooth_modes set, each component is filtered by the Gaussian
    spectral window exp(-|k|^2 / (2*smooth_modes^2)) so the field is
    resolved well inside the grid's Nyquist band. Components are
    normalized to unit root-mean-square Frobenius size.
    """
    comps = rng.standard_normal((3, n, n))
    if smooth_modes is not None:
        k = np.fft.fftfreq(n, d=1.0 / n)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        window = np.exp(-(k1**2 + k2**2) / (2.0 * smooth_modes**2))
        comps = np.fft.ifft2(np.fft.fft2(comps, axes=(-2, -1)) * window, axes=(-2, -1)).real
    if zero_mean:
        comps -= comps.mean(axis=(-2, -1), keepdims=True)
    field = SymMatrixField.from_stack(comps)
    rms = np.sqrt(field.frobenius_sq().mean())
    if rms > 0:
        field = field * (1.0 / rms)
    return field
