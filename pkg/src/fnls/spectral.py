"""Spectral operators on periodic fields.

Transform convention: forward() approximates the continuum transform
fhat(xi) = integral f(x) e^{-i xi.x} dx, so a unit Gaussian e^{-|x|^2/2}
transforms to (2*pi)^{N/2} e^{-|xi|^2/2}.  With this normalization the
frequency-space quadrature weight for L^2 is L^{-N} per mode, which makes
the l2 norm representation-independent (discrete Parseval).

All operators are pure functions; fields are treated as immutable values.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grids import FREQUENCY, PHYSICAL, CutoffSpec, Field, Grid

_WORKERS = 1


def set_workers(n: int) -> None:
    """FFT worker threads (deterministic for any value)."""
    global _WORKERS
    _WORKERS = int(n)


# -- raw array helpers (hot paths in dynamics avoid Field wrapping) -----------


def fftn_phys(grid: Grid, values: np.ndarray) -> np.ndarray:
    return grid.transform_phase * sfft.fftn(values, workers=_WORKERS) * grid.cell_volume


def ifftn_phys(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifftn(grid.transform_phase * coeffs, workers=_WORKERS) / grid.cell_volume


def multiplier_apply(grid: Grid, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a frequency-space symbol to physical values (phase factors cancel)."""
    return sfft.ifftn(sfft.fftn(values, workers=_WORKERS) * symbol, workers=_WORKERS)


# -- transforms ----------------------------------------------------------------


def forward_transform(f: Field) -> Field:
    if f.space != PHYSICAL:
        raise ValueError("forward_transform expects a physical-space field")
    return Field(f.grid, fftn_phys(f.grid, f.values), FREQUENCY)


def inverse_transform(f: Field) -> Field:
    if f.space != FREQUENCY:
        raise ValueError("inverse_transform expects a frequency-space field")
    return Field(f.grid, ifftn_phys(f.grid, f.values), PHYSICAL)


def to_physical(f: Field) -> Field:
    return f if f.space == PHYSICAL else inverse_transform(f)


def to_frequency(f: Field) -> Field:
    return f if f.space == FREQUENCY else forward_transform(f)


# -- differential operators -----------------------------------------------------


def fractional_derivative(f: Field, s: float) -> Field:
    """|xi|^s multiplier: D^s f.  s = 0 is the identity; the zero mode is
    annihilated for s > 0.  Negative s is rejected (the inverse operator
    needs separate regularization)."""
    if s < 0:
        raise ValueError(f"fractional_derivative requires s >= 0, got {s}")
    symbol = f.grid.wavenumber_mag**s
    if f.space == PHYSICAL:
        return Field(f.grid, multiplier_apply(f.grid, f.values, symbol), PHYSICAL)
    return Field(f.grid, f.values * symbol, FREQUENCY)


def gradient(f: Field) -> tuple[Field, ...]:
    """Spectral gradient, one field per axis; Nyquist modes zeroed."""
    g = to_physical(f)
    F = sfft.fftn(g.values, workers=_WORKERS)
    return tuple(
        Field(g.grid, sfft.ifftn(1j * k * F, workers=_WORKERS), PHYSICAL)
        for k in g.grid.wavenumbers_odd
    )


def coordinate_multiply(f: Field) -> tuple[Field, ...]:
    """x_j * f with the sawtooth-free coordinate map on [-L/2, L/2)^N."""
    g = to_physical(f)
    return tuple(Field(g.grid, x * g.values, PHYSICAL) for x in g.grid.coordinates)


def x_dot_gradient(f: Field, check_boundary: bool = True) -> Field:
    """x . grad(f), pointwise coordinates times spectral gradient.

    Only meaningful for fields negligible near the box boundary; by default
    asserts sup over the outer 10% shell <= 1e-8 times the global sup.
    """
    g = to_physical(f)
    if check_boundary and not boundary_small(g):
        raise ValueError(
            "x.grad requires boundary-small data: outer-shell sup exceeds "
            "1e-8 of the global sup"
        )
    out = np.zeros_like(g.values)
    for x, d in zip(g.grid.coordinates, gradient(g)):
        out += x * d.values
    return Field(g.grid, out, PHYSICAL)


def boundary_small(f: Field, shell_fraction: float = 0.1, rel_tol: float = 1e-8) -> bool:
    g = to_physical(f)
    mag = np.abs(g.values)
    total = mag.max()
    if total == 0.0:
        return True
    shell = g.grid.boundary_shell_mask(shell_fraction)
    return mag[shell].max() <= rel_tol * total


def commutator_cutoff(f: Field, c: CutoffSpec, s: float) -> Field:
    """[D^s, psi_R] f = D^s(psi_R f) - psi_R D^s f (physical space)."""
    g = to_physical(f)
    psi = c.psi(g.grid)
    return commutator_multiplier(g, psi, s)


def commutator_multiplier(f: Field, m: np.ndarray, s: float) -> Field:
    """[D^s, m] f for an arbitrary physical-space multiplier m."""
    g = to_physical(f)
    Dm = fractional_derivative(Field(g.grid, m * g.values, PHYSICAL), s)
    Dg = fractional_derivative(g, s)
    return Field(g.grid, Dm.values - m * Dg.values, PHYSICAL)


# -- quadrature and norms --------------------------------------------------------


def integrate(f: Field) -> complex:
    """Rectangle-rule integral (spectrally accurate for smooth periodic data)."""
    g = to_physical(f)
    return np.sum(g.values) * g.grid.cell_volume


def inner(f: Field, g: Field) -> complex:
    """L^2 inner product <f, g> = integral conj(f) g dx."""
    a, b = to_physical(f), to_physical(g)
    return np.sum(np.conj(a.values) * b.values) * a.grid.cell_volume


def l2_norm(f: Field) -> float:
    if f.space == PHYSICAL:
        return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume))
    # Parseval weight: (2*pi/L)^N / (2*pi)^N = L^{-N}
    return float(
        np.sqrt(np.sum(np.abs(f.values) ** 2) / f.grid.box_length**f.grid.dim)
    )


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise ValueError(f"lp_norm requires p >= 1, got {p}")
    g = to_physical(f)
    if np.isinf(p):
        return float(np.abs(g.values).max())
    return float(
        (np.sum(np.abs(g.values) ** p) * g.grid.cell_volume) ** (1.0 / p)
    )


def sup_norm(f: Field) -> float:
    return lp_norm(f, np.inf)


def sobolev_seminorm(f: Field, s: float) -> float:
    """Homogeneous seminorm ||D^s f||_2."""
    return l2_norm(fractional_derivative(f, s))


def spacetime_norm(series: list[tuple[float, Field]], q: float, r: float) -> float:
    """Discrete L_t^q L_x^r norm over a time-sorted trajectory (trapezoid in t)."""
    if not series:
        raise ValueError("spacetime_norm requires a nonempty series")
    ts = np.array([t for t, _ in series])
    if np.any(np.diff(ts) < 0):
        raise ValueError("series must be time-sorted")
    vals = np.array([lp_norm(f, r) for _, f in series])
    if np.isinf(q):
        return float(vals.max())
    if len(series) == 1:
        return 0.0
    return float(np.trapezoid(vals**q, ts) ** (1.0 / q))


# -- symmetry -------------------------------------------------------------------


def _reflect(values: np.ndarray, axis: int) -> np.ndarray:
    M = values.shape[axis]
    idx = (-np.arange(M)) % M  # x -> -x on the half-open lattice
    return np.take(values, idx, axis=axis)


def symmetrize(f: Field) -> Field:
    """Average over axis permutations and reflections (the grid's point group)."""
    from itertools import permutations, product

    g = to_physical(f)
    dim = g.grid.dim
    acc = np.zeros_like(g.values)
    count = 0
    for perm in permutations(range(dim)):
        base = np.transpose(g.values, perm)
        for signs in product((False, True), repeat=dim):
            v = base
            for ax, flip in enumerate(signs):
                if flip:
                    v = _reflect(v, ax)
            acc += v
            count += 1
    return Field(g.grid, acc / count, PHYSICAL)


def radiality_defect(f: Field) -> float:
    """Normalized l2 distance between f and its point-group average; 0 for
    exactly symmetric data, and 0 by convention for the zero field."""
    g = to_physical(f)
    n = l2_norm(g)
    if n == 0.0:
        return 0.0
    return l2_norm(Field(g.grid, g.values - symmetrize(g).values, PHYSICAL)) / n


def boundary_mass_fraction(f: Field, shell_fraction: float = 0.1) -> float:
    g = to_physical(f)
    shell = g.grid.boundary_shell_mask(shell_fraction)
    dens = np.abs(g.values) ** 2
    total = dens.sum()
    if total == 0.0:
        return 0.0
    return float(dens[shell].sum() / total)


def spectral_magnitude_field(f: Field) -> Field:
    """g = F^{-1}(|fhat|): the companion field with nonnegative spectrum."""
    F = to_frequency(f)
    return inverse_transform(Field(F.grid, np.abs(F.values) + 0j, FREQUENCY))
