"""Periodic-box discretization and the field/spectrum containers built on it.

The whole space is modeled as a periodic cube ``[-L/2, L/2)^3`` sampled on a
uniform lattice of ``n`` points per axis.  Fourier coefficients carry the
continuum normalization ``(2*pi)**-1.5 * integral(f(x) exp(-i p.x) dx)`` so
that transform identities, convolution factors and operator symbols keep
their continuum form on the lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid3", "ScalarField", "Spectrum", "VectorField", "NormReport"]


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic cube with an even number of points per axis.

    Parameters
    ----------
    box_length:
        Side length L of the cube ``[-L/2, L/2)^3``.
    points_per_axis:
        Even number n of samples per axis; spacing is ``L / n``.
    """

    box_length: float
    points_per_axis: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        n = self.points_per_axis
        if n <= 0 or n % 2 != 0:
            raise ValueError(f"points_per_axis must be a positive even integer, got {n}")

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.points_per_axis
        return (n, n, n)

    @property
    def cell_volume(self) -> float:
        """Real-space quadrature weight h^3."""
        return self.spacing**3

    @property
    def mode_volume(self) -> float:
        """Frequency-space quadrature weight (2*pi/L)^3."""
        return (2.0 * np.pi / self.box_length) ** 3

    @property
    def nyquist(self) -> float:
        """Largest per-axis frequency magnitude pi*n/L."""
        return np.pi * self.points_per_axis / self.box_length

    @cached_property
    def axis(self) -> np.ndarray:
        n = self.points_per_axis
        return -0.5 * self.box_length + self.spacing * np.arange(n)

    @cached_property
    def meshes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y, z = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return x, y, z

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        """Per-axis frequency lattice 2*pi*k/L, k in {0..n/2-1, -n/2..-1}."""
        n = self.points_per_axis
        k = np.fft.fftfreq(n, d=1.0 / n)
        return 2.0 * np.pi * k / self.box_length

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = self.frequency_axis
        px, py, pz = np.meshgrid(p, p, p, indexing="ij")
        return px, py, pz

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Euclidean frequency magnitude |p| on the lattice."""
        px, py, pz = self.wavevectors
        return np.sqrt(px**2 + py**2 + pz**2)

    @cached_property
    def center_phase(self) -> np.ndarray:
        # (-1)^(k1+k2+k3) relates the DFT of samples indexed from -L/2 to the
        # transform with the x=0 origin.
        n = self.points_per_axis
        k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        ksum = k[:, None, None] + k[None, :, None] + k[None, None, :]
        return np.where(ksum % 2 == 0, 1.0, -1.0)


def _negated_modes(values: np.ndarray) -> np.ndarray:
    """Reindex an fftn-layout array from p to -p."""
    flipped = values[::-1, ::-1, ::-1]
    return np.roll(flipped, 1, axis=(0, 1, 2))


@dataclass(frozen=True)
class ScalarField:
    """Real samples of a scalar function on a :class:`Grid3` lattice."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("field values must all be finite")
        object.__setattr__(self, "values", np.ascontiguousarray(values))

    @classmethod
    def zeros(cls, grid: Grid3) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid3, fn) -> "ScalarField":
        x, y, z = grid.meshes
        return cls(grid, fn(x, y, z))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check_same_grid(other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check_same_grid(other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def _check_same_grid(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


@dataclass(frozen=True)
class Spectrum:
    """Continuum-normalized Fourier coefficients on the frequency lattice.

    Coefficients are stored in ``numpy.fft.fftn`` layout and approximate
    ``(2*pi)**-1.5 * integral(f(x) exp(-i p.x) dx)`` at each lattice
    frequency.  A spectrum of a real field is conjugate symmetric:
    ``coeff(-p) == conj(coeff(p))``.
    """

    grid: Grid3
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coeff = np.asarray(self.coefficients, dtype=np.complex128)
        if coeff.shape != self.grid.shape:
            raise ValueError(
                f"coefficients shape {coeff.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.isfinite(coeff).all():
            raise ValueError("spectrum coefficients must all be finite")
        object.__setattr__(self, "coefficients", np.ascontiguousarray(coeff))

    def conjugate_asymmetry(self) -> float:
        """Max deviation from conjugate symmetry, relative to the peak coefficient."""
        coeff = self.coefficients
        scale = np.max(np.abs(coeff))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(_negated_modes(coeff).conj() - coeff)) / scale)

    def zero_mode(self) -> complex:
        return complex(self.coefficients[0, 0, 0])


@dataclass(frozen=True)
class VectorField:
    """Ordered components of an R^N-valued field sharing one grid."""

    components: tuple[ScalarField, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        grid = comps[0].grid
        for i, c in enumerate(comps):
            if c.grid != grid:
                raise ValueError(f"component {i} lives on a different grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid: Grid3, n_components: int) -> "VectorField":
        return cls(tuple(ScalarField.zeros(grid) for _ in range(n_components)))

    @property
    def grid(self) -> Grid3:
        return self.components[0].grid

    @property
    def n_components(self) -> int:
        return len(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components, strict=True)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components, strict=True)))

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__

    def euclidean_length(self) -> np.ndarray:
        """Pointwise Euclidean length |u(x)| over the grid."""
        return np.sqrt(sum(c.values**2 for c in self.components))


@dataclass(frozen=True)
class NormReport:
    """Bundle of the norms used throughout: L1, L2, Linf, H2 and optionally H^{2s}."""

    l1: float
    l2: float
    linf: float
    h2: float
    hs: float | None = None

    def as_dict(self) -> dict:
        out = {"l1": self.l1, "l2": self.l2, "linf": self.linf, "h2": self.h2}
        if self.hs is not None:
            out["hs"] = self.hs
        return out
