"""Functionals tracked along simulations: mass, energy, virial quantities,
localized variants with their commutator expansions, and trapping predicates.

Orientation note: the dilation functional is defined here as
V(u) = Re int i conj(u) x.grad(u) dx.  With the propagator convention
e^{+i tau |xi|^{2 alpha}} used throughout this package, its exact rate is

    dV/dt = 2 alpha int |D^a u|^2 + N mu p/(p+2) int |u|^{p+2},

which is what virial_rate_rhs returns; the opposite orientation flips both
signs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .grids import PHYSICAL, CutoffSpec, Field, PhysicsParams
from .ground_state import GroundStateConstants
from . import spectral


def mass(u: Field) -> float:
    return spectral.l2_norm(u) ** 2


def potential(u: Field, params: PhysicsParams) -> float:
    """int |u|^{p+2} dx."""
    return spectral.lp_norm(u, params.p + 2) ** (params.p + 2)


def energy(u: Field, params: PhysicsParams) -> float:
    """E_mu(u) = 1/2 int |D^a u|^2 + mu/(p+2) int |u|^{p+2}."""
    grad_sq = spectral.sobolev_seminorm(u, params.alpha) ** 2
    return 0.5 * grad_sq + params.mu / (params.p + 2) * potential(u, params)


def _x_grad(u: Field) -> np.ndarray:
    up = spectral.to_physical(u)
    out = np.zeros_like(up.values)
    for x, d in zip(up.grid.coordinates, spectral.gradient(up)):
        out += x * d.values
    return out


def virial(u: Field) -> float:
    """V(u) = Re int i conj(u) x.grad(u) dx.

    Vanishes for real fields.  Pointwise x is the sawtooth-free coordinate
    map, so the value is only physically meaningful for boundary-small data;
    callers track contamination through the boundary-mass monitor.
    """
    up = spectral.to_physical(u)
    integrand = 1j * np.conj(up.values) * _x_grad(up)
    return float(np.real(np.sum(integrand)) * up.grid.cell_volume)


def virial_rate_rhs(u: Field, params: PhysicsParams) -> float:
    """Exact dV/dt: 2a int |D^a u|^2 + N mu p/(p+2) int |u|^{p+2}."""
    grad_sq = spectral.sobolev_seminorm(u, params.alpha) ** 2
    pot = potential(u, params)
    return (
        2 * params.alpha * grad_sq
        + params.dim * params.mu * params.p / (params.p + 2) * pot
    )


def localized_virial(u: Field, c: CutoffSpec) -> float:
    """I_R(u) = Re int i conj(u) psi_R x.grad(u) dx (cutoff version of V)."""
    up = spectral.to_physical(u)
    psi = c.psi(up.grid)
    integrand = 1j * np.conj(up.values) * psi * _x_grad(up)
    return float(np.real(np.sum(integrand)) * up.grid.cell_volume)


def localized_virial_rhs(
    u: Field, c: CutoffSpec, params: PhysicsParams
) -> tuple[float, dict[str, float]]:
    """Exact dI_R/dt as the six-term expansion; returns (sum, terms).

    Terms: the two cutoff-weighted main terms, the commutator against
    x.grad(conj u), the ring-weighted potential, and the two commutator
    remainders against conj(u) with psi_R and psi~_R.
    """
    up = spectral.to_physical(u)
    grid = up.grid
    N, mu, p, a = params.dim, params.mu, params.p, params.alpha
    cell = grid.cell_volume
    psi = c.psi(grid)
    psi_t = c.psi_tilde(grid)

    Dau = spectral.fractional_derivative(up, a).values
    absp2 = np.abs(up.values) ** (p + 2)
    ubar = Field(grid, np.conj(up.values), PHYSICAL)
    xg_ubar = Field(grid, np.conj(_x_grad(up)), PHYSICAL)

    def com(g: Field, m: np.ndarray) -> np.ndarray:
        return spectral.commutator_multiplier(g, m, a).values

    t1 = 2 * a * float(np.sum(np.abs(Dau) ** 2 * psi) * cell)
    t2 = p * mu * N / (p + 2) * float(np.sum(absp2 * psi) * cell)
    t3 = 2 * float(np.real(np.sum(Dau * com(xg_ubar, psi))) * cell)
    t4 = p * mu / (p + 2) * float(np.sum(absp2 * psi_t) * cell)
    t5 = N * float(np.real(np.sum(Dau * com(ubar, psi))) * cell)
    t6 = float(np.real(np.sum(Dau * com(ubar, psi_t))) * cell)
    terms = {
        "main_gradient": t1,
        "main_potential": t2,
        "commutator_xgrad": t3,
        "ring_potential": t4,
        "commutator_u": t5,
        "commutator_ring": t6,
    }
    return t1 + t2 + t3 + t4 + t5 + t6, terms


def localized_mass(u: Field, c: CutoffSpec) -> float:
    """y_R(u) = int |u|^2 psi_R dx; nondecreasing in R for fixed u."""
    up = spectral.to_physical(u)
    return float(np.sum(np.abs(up.values) ** 2 * c.psi(up.grid)) * up.grid.cell_volume)


@dataclass(frozen=True)
class TrappingReport:
    grad_below: bool
    coercive: bool
    grad_margin: float
    coercive_margin: float
    comparability_ratio: float


def trapping_check(
    u: Field, params: PhysicsParams, constants: GroundStateConstants
) -> TrappingReport:
    """Variational trapping predicates for focusing sub-threshold states.

    grad_below: int |D^a u|^2 < int |D^a W|^2, with the observed margin
    delta = 1 - ratio.  coercive: int |D^a u|^2 - int |u|^{2*} > 0, margin
    relative to int |D^a u|^2.  comparability_ratio is E_-(u) / int |D^a u|^2,
    which stays in a fixed bracket along trapped trajectories.
    """
    grad_sq = spectral.sobolev_seminorm(u, params.alpha) ** 2
    pot_star = spectral.lp_norm(u, params.two_star) ** params.two_star
    e_minus = 0.5 * grad_sq - pot_star / params.two_star
    grad_margin = 1.0 - grad_sq / constants.grad_norm_sq_grid
    coercive_margin = (grad_sq - pot_star) / grad_sq if grad_sq > 0 else 0.0
    return TrappingReport(
        grad_below=grad_sq < constants.grad_norm_sq_grid,
        coercive=(grad_sq - pot_star) > 0,
        grad_margin=grad_margin,
        coercive_margin=coercive_margin,
        comparability_ratio=e_minus / grad_sq if grad_sq > 0 else float("inf"),
    )


def commutator_norm_report(
    f: Field,
    params: PhysicsParams,
    eps: float,
    radii: list[float],
) -> list[dict[str, float]]:
    """Commutator-norm sweep against the bounding quantities of the cutoff
    estimates, using g = F^{-1}|fhat|.

    For each R: the cutoff commutator norm ||[D^a, psi_R] f||_2 with its two
    bound components (the exterior 2N/(N-2a) norm of g and R^{-eps a}
    ||D^a f||_2), the x.grad variant globally (bounded by ||D^a f||_2), and
    the x.grad variant restricted to |x| <= R^{1-eps} with its two
    components.  Constants are unspecified, so only ratios and trends are
    reported.
    """
    if not (0 < eps < params.alpha):
        raise ValueError("need 0 < eps < alpha")
    fp = spectral.to_physical(f)
    grid = fp.grid
    a = params.alpha
    two_star = params.two_star
    cell = grid.cell_volume
    Daf_norm = spectral.sobolev_seminorm(fp, a)
    g = spectral.spectral_magnitude_field(fp)
    xgf = Field(grid, _x_grad(fp), PHYSICAL)
    rows = []
    for R in radii:
        c = CutoffSpec(R=R)
        psi = c.psi(grid)
        r_split = R ** (1.0 - eps)
        exterior = grid.radius >= r_split
        interior = ~exterior
        g_ext = float(
            (np.sum(np.abs(g.values[exterior]) ** two_star) * cell) ** (1.0 / two_star)
        )
        com_f = spectral.commutator_multiplier(fp, psi, a).values
        com_xg = spectral.commutator_multiplier(xgf, psi, a).values
        lhs1 = float(np.sqrt(np.sum(np.abs(com_f) ** 2) * cell))
        lhs2 = float(np.sqrt(np.sum(np.abs(com_xg) ** 2) * cell))
        lhs3 = float(np.sqrt(np.sum(np.abs(com_xg[interior]) ** 2) * cell))
        rhs1 = g_ext + R ** (-eps * a) * Daf_norm
        rhs3 = R ** (-eps * a / 2) * Daf_norm + g_ext
        rows.append(
            {
                "R": R,
                "cutoff_lhs": lhs1,
                "cutoff_bound_exterior": g_ext,
                "cutoff_bound_decay": R ** (-eps * a) * Daf_norm,
                "cutoff_ratio": lhs1 / rhs1,
                "xgrad_lhs": lhs2,
                "xgrad_bound": Daf_norm,
                "xgrad_ratio": lhs2 / Daf_norm,
                "xgrad_interior_lhs": lhs3,
                "xgrad_interior_bound": rhs3,
                "xgrad_interior_ratio": lhs3 / rhs3,
            }
        )
    return rows


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time-sample of the tracked functionals (CSV row order)."""

    t: float
    mass: float
    energy: float
    hdot_alpha_sq: float
    potential: float
    virial: float
    virial_rate_rhs: float
    localized_virial: float
    localized_virial_rhs: float
    localized_mass: float
    trap_grad_below: bool | None
    trap_coercive: bool | None


CSV_COLUMNS = tuple(f.name for f in dc_fields(DiagnosticsRecord))


def record(
    t: float,
    u: Field,
    params: PhysicsParams,
    cutoff: CutoffSpec,
    constants: GroundStateConstants | None = None,
) -> DiagnosticsRecord:
    """Evaluate the full record on a snapshot."""
    grad_sq = spectral.sobolev_seminorm(u, params.alpha) ** 2
    pot = potential(u, params)
    e = 0.5 * grad_sq + params.mu / (params.p + 2) * pot
    lrhs, _ = localized_virial_rhs(u, cutoff, params)
    if constants is not None and params.mu == -1:
        trap = trapping_check(u, params, constants)
        grad_below, coercive = trap.grad_below, trap.coercive
    else:
        grad_below = coercive = None
    return DiagnosticsRecord(
        t=t,
        mass=mass(u),
        energy=e,
        hdot_alpha_sq=grad_sq,
        potential=pot,
        virial=virial(u),
        virial_rate_rhs=virial_rate_rhs(u, params),
        localized_virial=localized_virial(u, cutoff),
        localized_virial_rhs=lrhs,
        localized_mass=localized_mass(u, cutoff),
        trap_grad_below=grad_below,
        trap_coercive=coercive,
    )


def _format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return f"{v:.17g}"


def records_to_csv(records: list[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for rec in records:
        buf.write(",".join(_format_cell(getattr(rec, c)) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def records_from_csv(text: str) -> list[DiagnosticsRecord]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header: {header}")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        kwargs = {}
        for name, cell in zip(CSV_COLUMNS, cells):
            if name.startswith("trap_"):
                kwargs[name] = None if cell == "" else cell == "1"
            else:
                kwargs[name] = float(cell)
        out.append(DiagnosticsRecord(**kwargs))
    return out
