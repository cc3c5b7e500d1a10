"""Periodic grids, sampled fields, and physical parameters.

The box is [-L/2, L/2)^N with M points per axis, so the frequency lattice is
xi_k = 2*pi*k/L for k in {-M/2, ..., M/2-1}.  All spectral operators live in
:mod:`fnls.spectral`; this module only holds the immutable containers and the
smooth radial cutoff profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PHYSICAL = "physical"
FREQUENCY = "frequency"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)^N.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    box_length : float
        Side length L of the periodic box.
    points_per_dim : int
        Points per axis M; must be a power of two, at least 8.
    """

    dim: int
    box_length: float
    points_per_dim: int

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.box_length <= 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if self.points_per_dim < 8 or not _is_power_of_two(self.points_per_dim):
            raise ValueError(
                f"points_per_dim must be a power of two >= 8, got {self.points_per_dim}"
            )

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.dim

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        M = self.points_per_dim
        return -self.box_length / 2 + self.spacing * np.arange(M)

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinate meshes, one array per axis (indexing='ij')."""
        return tuple(np.meshgrid(*([self.axis_coordinates] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.coordinates))

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.spacing)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def wavenumber_sq(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def wavenumber_mag(self) -> np.ndarray:
        return np.sqrt(self.wavenumber_sq)

    @cached_property
    def wavenumbers_odd(self) -> tuple[np.ndarray, ...]:
        """Axis wavenumbers with the Nyquist mode zeroed (odd-order operators)."""
        k1 = self.axis_wavenumbers.copy()
        k1[self.points_per_dim // 2] = 0.0
        return tuple(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def transform_phase(self) -> np.ndarray:
        # e^{i xi_k L/2} = (-1)^k per axis; shifts the DFT origin to x = -L/2
        idx = np.rint(np.fft.fftfreq(self.points_per_dim) * self.points_per_dim)
        sign1 = np.where(idx.astype(np.int64) % 2 == 0, 1.0, -1.0)
        out = sign1
        for _ in range(self.dim - 1):
            out = np.multiply.outer(out, sign1)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kcut = np.abs(self.axis_wavenumbers).max() * (2.0 / 3.0)
        mask = np.ones(self.shape, dtype=bool)
        for k in self.wavenumbers:
            mask &= np.abs(k) <= kcut
        return mask

    def boundary_shell_mask(self, fraction: float = 0.1) -> np.ndarray:
        """Outer shell: points within `fraction` of the boundary in max-norm."""
        inner = (1.0 - fraction) * self.box_length / 2
        shell = np.zeros(self.shape, dtype=bool)
        for x in self.coordinates:
            shell |= np.abs(x) >= inner
        return shell


@dataclass(frozen=True)
class Field:
    """Complex field sampled on a Grid, in physical or frequency representation."""

    grid: Grid
    values: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self) -> None:
        if self.space not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"space must be '{PHYSICAL}' or '{FREQUENCY}'")
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.iscomplexobj(self.values):
            object.__setattr__(self, "values", self.values.astype(np.complex128))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.space)


def field_from_function(grid: Grid, fn) -> Field:
    """Sample a callable f(*coords) -> array on the grid (physical space)."""
    return Field(grid, np.asarray(fn(*grid.coordinates), dtype=np.complex128))


@dataclass(frozen=True)
class PhysicsParams:
    """Dimension, derivative order, and nonlinearity sign.

    The nonlinearity power p = 4*alpha/(N - 2*alpha) is the one for which the
    scaling symmetry leaves the homogeneous H^alpha norm invariant; mu = +1 is
    defocusing, mu = -1 focusing.
    """

    dim: int
    alpha: float
    mu: int

    def __post_init__(self) -> None:
        N, a = self.dim, self.alpha
        if self.mu not in (-1, 1):
            raise ValueError(f"mu must be +1 or -1, got {self.mu}")
        if not (2 * a < N < 6 * a):
            raise ValueError(f"need 2*alpha < N < 6*alpha; got N={N}, alpha={a}")
        if not (N / (2 * N - 1) < a < 1):
            raise ValueError(
                f"alpha must lie in (N/(2N-1), 1) = ({N/(2*N-1):.6g}, 1); got {a}"
            )

    @property
    def p(self) -> float:
        return 4 * self.alpha / (self.dim - 2 * self.alpha)

    @property
    def two_star(self) -> float:
        return 2 * self.dim / (self.dim - 2 * self.alpha)


def bump(t: np.ndarray | float) -> np.ndarray:
    """Smooth step eta(t): 0 for t <= 0, 1 for t >= 1, C-infinity in between.

    eta(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}).
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def bump_derivative(t: np.ndarray | float) -> np.ndarray:
    """d eta/dt for the smooth step; vanishes outside (0, 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = (a * b * (1.0 / tm**2 + 1.0 / (1.0 - tm) ** 2)) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class CutoffSpec:
    """Radial smooth cutoff psi_R(x) = psi(x/R): 1 on |x| < R, 0 on |x| >= 2R."""

    R: float

    def __post_init__(self) -> None:
        if self.R <= 0:
            raise ValueError(f"cutoff scale R must be positive, got {self.R}")

    def psi_profile(self, r: np.ndarray) -> np.ndarray:
        # psi(r) = eta(2 - r): identically 1 for r <= 1, 0 for r >= 2
        return bump(2.0 - np.asarray(r, dtype=float))

    def psi(self, grid: Grid) -> np.ndarray:
        return self.psi_profile(grid.radius / self.R)

    def psi_tilde(self, grid: Grid) -> np.ndarray:
        """(x/R) . grad(psi)(x/R) = s * psi'(s) at s = |x|/R; lives on R <= |x| <= 2R."""
        s = grid.radius / self.R
        return -s * bump_derivative(2.0 - s)
