"""The explicit algebraic ground state, its calibration, and solver oracles.

The radial profile (1 + |x|^2)^{-(N-2a)/2} solves the critical fractional
elliptic equation up to one multiplicative constant kappa, fixed here by a
radial frequency-space quadrature.  The profile's Fourier transform is the
Bessel-K kernel

    fhat(rho) = (2 pi)^{N/2} 2^{1-s}/Gamma(s) * rho^{s - N/2} K_{N/2-s}(rho),

with s = (N - 2 alpha)/2, which decays exponentially, so the quadrature for
kappa = (-Delta)^alpha f(0) is free of the algebraic tails that make the
on-grid operator of this slowly decaying profile inaccurate.

The grid residual check extends the sampled profile onto an enlarged box
(carrying the true algebraic tail) before applying the spectral operator;
without that tail extension the box seam dominates the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import ndimage
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .grids import PHYSICAL, Field, Grid, PhysicsParams
from . import spectral


class QuadratureError(RuntimeError):
    """Radial quadrature failed its refinement check."""


class IterationError(RuntimeError):
    """Fixed-point iteration failed (divergence, collapse, or max_iter)."""


@dataclass(frozen=True)
class GroundStateSpec:
    """One member of the scaled/rotated ground-state family.

    The generated field is e^{i theta0} lambda0^{(N-2a)/2} * C1 *
    (1 + C2 lambda0^2 |x - x0|^2)^{-(N-2a)/2}.
    """

    params: PhysicsParams
    C1: float
    C2: float = 1.0
    lambda0: float = 1.0
    theta0: float = 0.0
    x0: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.C1 <= 0 or self.C2 <= 0 or self.lambda0 <= 0:
            raise ValueError("C1, C2, lambda0 must be positive")
        if self.x0 is not None and len(self.x0) != self.params.dim:
            raise ValueError("x0 must have one entry per dimension")

    @property
    def decay_exponent(self) -> float:
        return (self.params.dim - 2 * self.params.alpha) / 2

    def half_peak_radius(self) -> float:
        """Radius where the profile drops to half its peak (x0-centered)."""
        # (1 + C2 l0^2 r^2)^{-d} = 1/2  =>  r = sqrt((2^{1/d} - 1)/(C2 l0^2))
        d = self.decay_exponent
        return math.sqrt((2.0 ** (1.0 / d) - 1.0) / (self.C2 * self.lambda0**2))


@dataclass(frozen=True)
class GroundStateConstants:
    """Calibrated functionals of the ground state.

    grad_norm_sq is the whole-space value of int |D^a W|^2 (radial
    frequency-side quadrature: the box integral of this quantity converges
    only like L^{-(N-2a)/... } and is badly truncation-limited on any
    feasible grid), while potential_integral is the grid quadrature of
    |W|^{2*}; their agreement is the discretized form of the equation's
    Pohozaev-type identity.  grad_norm_sq_grid is the same seminorm
    evaluated on the calibration grid, kept as the anchor for membership
    and trapping predicates so that grid states are compared against a
    grid-consistent threshold.
    """

    kappa: float
    sobolev_const: float
    grad_norm_sq: float
    potential_integral: float
    energy_focusing: float
    energy_defocusing: float
    grad_norm_sq_grid: float


def kappa_quadrature(params: PhysicsParams, quad_points: int = 20000) -> float:
    """Eigenvalue kappa with (-Delta)^alpha f = kappa f^{(N+2a)/(N-2a)} for the
    unit profile f = (1+|x|^2)^{-(N-2a)/2}, by radial quadrature of the
    frequency representation at x = 0.

    Deterministic given quad_points; raises QuadratureError if halving the
    node count moves the result by more than 1e-8 relative.
    """
    if quad_points < 10**4:
        raise ValueError(f"quad_points must be >= 1e4, got {quad_points}")
    coarse = _kappa_quad_nodes(params, quad_points // 2)
    fine = _kappa_quad_nodes(params, quad_points)
    if abs(fine - coarse) > 1e-8 * abs(fine):
        raise QuadratureError(
            f"kappa quadrature not converged: {coarse!r} -> {fine!r} "
            f"at quad_points={quad_points}"
        )
    return fine


def _kappa_quad_nodes(params: PhysicsParams, n: int) -> float:
    N, a = params.dim, params.alpha
    s = (N - 2 * a) / 2
    nu = N / 2 - s  # equals alpha
    prefactor = (
        (2 * np.pi) ** (-N)
        * (2 * np.pi ** (N / 2) / gamma_fn(N / 2))  # sphere area
        * (2 * np.pi) ** (N / 2)
        * 2 ** (1 - s)
        / gamma_fn(s)
    )

    def integrand(rho: np.ndarray) -> np.ndarray:
        return rho ** (N - 1 + 2 * a + s - N / 2) * kv(nu, rho)

    # integrand ~ rho^{N-1} at 0 and ~ e^{-rho} at infinity; cut at 80
    upper = 80.0
    panels = max(16, n // 64)
    per_panel = max(4, n // panels)
    nodes, weights = leggauss(per_panel)
    edges = np.linspace(0.0, upper, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * float(np.sum(weights * integrand(mid + half * nodes)))
    return prefactor * total


def calibrated_spec(params: PhysicsParams, quad_points: int = 20000) -> GroundStateSpec:
    """Fix C2 = 1 (absorbed by lambda0) and C1 = kappa^{(N-2a)/(4a)}."""
    kap = kappa_quadrature(params, quad_points)
    C1 = kap ** ((params.dim - 2 * params.alpha) / (4 * params.alpha))
    return GroundStateSpec(params=params, C1=C1)


def grad_norm_sq_whole_space(spec: GroundStateSpec, quad_points: int = 20000) -> float:
    """int_{R^N} |D^a W|^2 by radial quadrature of |xi|^{2a} |What(xi)|^2.

    Uses the Bessel-K transform of the unit profile; invariant under
    lambda0, scales with the amplitude squared.  The integrand near 0
    behaves like rho^{N-1-2a}, flattened by the substitution rho = t^5 on
    the first panel.
    """
    params = spec.params
    N, a = params.dim, params.alpha
    s = (N - 2 * a) / 2
    amp = spec.C1 * spec.C2 ** (-(N - 2 * a) / 4)
    pref = (
        amp**2
        * (2 * np.pi ** (N / 2) / gamma_fn(N / 2))
        * 2 ** (2 - 2 * s)
        / gamma_fn(s) ** 2
    )

    def integrand(rho: np.ndarray) -> np.ndarray:
        return rho ** (N - 1) * kv(a, rho) ** 2

    nodes, weights = leggauss(max(64, quad_points // 128))
    # [0, 1] with rho = t^5 (kills the rho^{N-1-2a} endpoint singularity)
    t = 0.5 * (nodes + 1.0)
    wt = 0.5 * weights
    total = float(np.sum(wt * integrand(t**5) * 5 * t**4))
    # [1, 80] in panels; integrand decays like e^{-2 rho}
    panels = max(16, quad_points // 256)
    edges = np.linspace(1.0, 80.0, panels + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * float(np.sum(weights * integrand(mid + half * nodes)))
    return pref * total


def profile(grid: Grid, spec: GroundStateSpec) -> Field:
    """Sample the ground-state family member on the grid."""
    if grid.dim != spec.params.dim:
        raise ValueError("grid dimension does not match params")
    x0 = spec.x0 or (0.0,) * grid.dim
    r2 = sum((x - c) ** 2 for x, c in zip(grid.coordinates, x0))
    d = spec.decay_exponent
    vals = (
        np.exp(1j * spec.theta0)
        * spec.lambda0**d
        * spec.C1
        * (1.0 + spec.C2 * spec.lambda0**2 * r2) ** (-d)
    )
    return Field(grid, vals, PHYSICAL)


def elliptic_residual(
    W: Field,
    params: PhysicsParams,
    spec: GroundStateSpec | None = None,
    tail_pad: int = 8,
) -> float:
    """Relative residual ||(-Delta)^a W - |W|^p W||_2 / ||(-Delta)^a W||_2.

    With `spec` given, the operator is evaluated with the tail correction:
    the closed-form profile is sampled on a `tail_pad`-times larger box of
    the same spacing (adding the true algebraic tail beyond |x| > L/2), the
    multiplier is applied there, and the residual is measured on the
    original box.  Without `spec`, the raw periodic operator is used and the
    box seam dominates.
    """
    Wp = spectral.to_physical(W)
    mag = np.abs(Wp.values)
    if mag.max() == 0.0:
        raise ValueError("elliptic_residual: zero field")
    if np.abs(Wp.values.imag).max() > 1e-10 * mag.max():
        raise ValueError("elliptic_residual expects a real-valued field")
    w = Wp.values.real

    if spec is None:
        lhs = spectral.fractional_derivative(
            Field(Wp.grid, w + 0j, PHYSICAL), 2 * params.alpha
        ).values.real
        rhs = mag**params.p * w
        num = np.sqrt(np.sum((lhs - rhs) ** 2))
        den = np.sqrt(np.sum(lhs**2))
        return float(num / den)

    grid = Wp.grid
    if tail_pad < 1:
        raise ValueError("tail_pad must be >= 1")
    big_m = tail_pad * grid.points_per_dim
    if big_m > 4096:
        raise ValueError(
            f"tail_pad={tail_pad} needs {big_m} points per axis (> 4096); "
            "reduce the padding or the resolution"
        )
    big = Grid(grid.dim, tail_pad * grid.box_length, big_m)
    Wbig = profile(big, spec).values.real
    lhs_big = spectral.multiplier_apply(
        big, Wbig + 0j, big.wavenumber_mag ** (2 * params.alpha)
    ).real
    rhs_big = np.abs(Wbig) ** params.p * Wbig
    # restrict to the original box; the pad lattice contains it exactly
    start = (tail_pad - 1) * grid.points_per_dim // 2
    sl = (slice(start, start + grid.points_per_dim),) * grid.dim
    num = np.sqrt(np.sum((lhs_big[sl] - rhs_big[sl]) ** 2))
    den = np.sqrt(np.sum(lhs_big[sl] ** 2))
    return float(num / den)


def sobolev_constant(W: Field, params: PhysicsParams) -> float:
    """Embedding ratio ||W||_{2*} / ||D^alpha W||_2 (the profile attains the
    best constant; degree-zero homogeneous in the amplitude)."""
    if spectral.l2_norm(W) == 0.0:
        raise ValueError("sobolev_constant: zero field")
    return spectral.lp_norm(W, params.two_star) / spectral.sobolev_seminorm(
        W, params.alpha
    )


def calibrate(
    params: PhysicsParams, grid: Grid, quad_points: int = 20000
) -> tuple[GroundStateSpec, GroundStateConstants]:
    """Calibrate the family and evaluate its constants record.

    grad_norm_sq comes from the whole-space frequency-side quadrature,
    potential_integral from the grid quadrature of the sampled profile;
    the energies mix the two routes (E = grad/2 + mu * pot / (p+2)), so the
    record's internal identities are genuine two-route checks rather than
    definitional algebra.
    """
    spec = calibrated_spec(params, quad_points)
    W = profile(grid, spec)
    grad_sq = grad_norm_sq_whole_space(spec, quad_points)
    grad_sq_grid = spectral.sobolev_seminorm(W, params.alpha) ** 2
    pot = spectral.lp_norm(W, params.two_star) ** params.two_star
    kap = spec.C1 ** (4 * params.alpha / (params.dim - 2 * params.alpha))
    consts = GroundStateConstants(
        kappa=kap,
        sobolev_const=pot ** (1.0 / params.two_star) / math.sqrt(grad_sq),
        grad_norm_sq=grad_sq,
        potential_integral=pot,
        energy_focusing=0.5 * grad_sq - pot / params.two_star,
        energy_defocusing=0.5 * grad_sq + pot / params.two_star,
        grad_norm_sq_grid=grad_sq_grid,
    )
    return spec, consts


def in_subthreshold_set(
    f: Field,
    params: PhysicsParams,
    a: float,
    constants: GroundStateConstants,
) -> bool:
    """Membership in the variational set gating global behavior: below energy
    level `a`, and (focusing only) gradient strictly below the ground
    state's, with the gradient threshold anchored on the grid so that grid
    states are compared like for like."""
    from .diagnostics import energy

    e = energy(f, params)
    if params.mu == 1:
        return e < a
    grad_sq = spectral.sobolev_seminorm(f, params.alpha) ** 2
    return e < a and grad_sq < constants.grad_norm_sq_grid


@dataclass(frozen=True)
class PetviashviliResult:
    field: Field
    iterations: int
    final_change: float
    scale_factor_last: float = 1.0


def _half_peak_radius_on_grid(grid: Grid, w: np.ndarray) -> float | None:
    j0 = grid.points_per_dim // 2  # x = 0 index
    idx = (j0,) * grid.dim
    ray = w[(slice(j0, None),) + idx[1:]]
    peak = ray[0]
    if peak <= 0:
        return None
    below = np.nonzero(ray < peak / 2)[0]
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return None
    f0, f1 = ray[i - 1], ray[i]
    frac = (peak / 2 - f0) / (f1 - f0)
    return float((i - 1 + frac) * grid.spacing)


def _family_rescale(grid: Grid, w: np.ndarray, nu: float, exponent: float) -> np.ndarray:
    """w(x) -> nu^exponent w(nu x) by spline resampling on the grid."""
    h = grid.spacing
    x0 = grid.axis_coordinates[0]
    idx1 = np.clip((nu * grid.axis_coordinates - x0) / h, 0, grid.points_per_dim - 1)
    mesh = np.meshgrid(*([idx1] * grid.dim), indexing="ij")
    resampled = ndimage.map_coordinates(
        w, np.stack([m.ravel() for m in mesh]), order=5, mode="nearest"
    ).reshape(grid.shape)
    return nu**exponent * resampled


def petviashvili_solve(
    grid: Grid,
    params: PhysicsParams,
    eps: float = 1e-3,
    max_iter: int = 500,
    tol: float = 1e-11,
    init: Field | None = None,
    scale_lock: float | None = None,
) -> PetviashviliResult:
    """Fixed-point solver for (-Delta)^a w + eps w = w^{p+1} (real, positive).

    eps > 0 regularizes the zero mode of the inverse operator.  The update is
    the classical stabilized iteration with exponent gamma = (p+1)/p.  At the
    energy-critical power the scaling direction of the soliton family is
    neutral, and discretization drives the plain iteration toward a
    lattice-scale spike; `scale_lock` (a target half-peak radius) counters
    this by rescaling each iterate through the scaling family, keeping the
    converged profile at a resolved width.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    p = params.p
    gam = (p + 1) / p
    inv_symbol = 1.0 / (grid.wavenumber_sq**params.alpha + eps)
    fwd_symbol = grid.wavenumber_sq**params.alpha + eps
    cell = grid.cell_volume
    exponent = (params.dim - 2 * params.alpha) / 2

    if init is None:
        w = np.exp(-grid.radius**2 / 8.0)
    else:
        w = spectral.to_physical(init).values.real.copy()

    nu = 1.0
    for it in range(1, max_iter + 1):
        nl = np.abs(w) ** p * w
        Aw = spectral.multiplier_apply(grid, w + 0j, fwd_symbol).real
        denom = np.sum(nl * w) * cell
        if abs(denom) < 1e-300:
            raise IterationError("petviashvili: iterate collapsed to zero")
        S = (np.sum(Aw * w) * cell) / denom
        w_new = spectral.multiplier_apply(grid, nl + 0j, inv_symbol).real * S**gam
        if scale_lock is not None:
            rh = _half_peak_radius_on_grid(grid, w_new)
            if rh is None:
                raise IterationError(
                    "petviashvili: scale lock lost the profile (no half-peak "
                    "radius); eps is likely below the box's zero-mode balance"
                )
            nu = float(np.clip(rh / scale_lock, 0.5, 2.0))
            w_new = _family_rescale(grid, w_new, nu, exponent)
        norm_old = np.sqrt(np.sum(w**2) * cell)
        change = np.sqrt(np.sum((w_new - w) ** 2) * cell) / norm_old
        w = w_new
        if np.sqrt(np.sum(w**2) * cell) < 1e-12:
            raise IterationError("petviashvili: iterate collapsed to zero")
        if change <= tol:
            return PetviashviliResult(Field(grid, w + 0j, PHYSICAL), it, change, nu)
    raise IterationError(
        f"petviashvili: no convergence in {max_iter} iterations "
        f"(last relative change {change:.3e})"
    )
