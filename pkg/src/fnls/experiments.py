"""Scenario orchestration: configuration ingestion, canned experiments
probing the global-behavior dichotomy, scattering proxies, exterior-decay
scans, and deterministic report emission."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grids import PHYSICAL, CutoffSpec, Field, Grid, PhysicsParams
from .dynamics import EvolveResult, IntegratorConfig, SpongeSpec, evolve
from .ground_state import (
    GroundStateConstants,
    GroundStateSpec,
    calibrate,
    profile,
    in_subthreshold_set,
)
from . import diagnostics, fieldio, spectral

SCHEMA_VERSION = 1

SCENARIOS = (
    "defocusing_scatter",
    "focusing_subthreshold",
    "focusing_superthreshold",
    "scaling_covariance",
    "stationarity",
    "virial_suite",
)


class ConfigError(ValueError):
    """Configuration failed validation."""


@dataclass(frozen=True)
class InitialCondition:
    kind: str                      # gaussian | ground_state | scaled_ground_state
    amplitude: float = 1.0
    width: float = 2.0             # gaussian only
    chirp: float = 0.0             # gaussian only: phase e^{i chirp |x|^2}
    scale: float = 1.0             # ground-state lambda0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "ground_state", "scaled_ground_state"):
            raise ConfigError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "gaussian" and self.width <= 0:
            raise ConfigError("gaussian width must be positive")
        if self.scale <= 0:
            raise ConfigError("ground-state scale must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    physics: PhysicsParams
    grid: Grid
    integrator: IntegratorConfig
    initial_condition: InitialCondition
    seed: int = 0
    snapshot_cadence: int = 100
    output_dir: str = "fnls_out"
    cutoff_radius: float = 8.0
    cauchy_threshold: float = 0.05        # scattering-proxy heuristics,
    decay_factor_threshold: float = 5.0   # overridable in the config file

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}"
            )
        if self.scenario.startswith("focusing") and self.physics.mu != -1:
            raise ConfigError(f"{self.scenario} requires mu = -1")
        if self.scenario == "defocusing_scatter" and self.physics.mu != 1:
            raise ConfigError("defocusing_scatter requires mu = +1")
        if self.snapshot_cadence < 1:
            raise ConfigError("snapshot_cadence must be >= 1")


# -- config file ingestion -------------------------------------------------------

_TOP_KEYS = {
    "schema_version", "scenario", "physics", "grid", "integrator",
    "initial_condition", "seed", "snapshot_cadence", "output_dir",
    "cutoff_radius", "cauchy_threshold", "decay_factor_threshold",
}
_PHYSICS_KEYS = {"dim", "alpha", "mu"}
_GRID_KEYS = {"box_length", "points_per_dim"}
_INTEGRATOR_KEYS = {"scheme", "dt", "t_end", "dealias", "sponge", "linear_only"}
_SPONGE_KEYS = {"width_fraction", "strength"}
_IC_KEYS = {"kind", "amplitude", "width", "chirp", "scale"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    for req in ("scenario", "physics", "grid", "integrator", "initial_condition"):
        if req not in raw:
            raise ConfigError(f"missing required key {req!r}")
    phys_raw = raw["physics"]
    _check_keys(phys_raw, _PHYSICS_KEYS, "physics")
    try:
        physics = PhysicsParams(**phys_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"physics: {exc}") from exc
    grid_raw = raw["grid"]
    _check_keys(grid_raw, _GRID_KEYS, "grid")
    try:
        grid = Grid(dim=physics.dim, **grid_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc
    integ_raw = dict(raw["integrator"])
    _check_keys(integ_raw, _INTEGRATOR_KEYS, "integrator")
    sponge_raw = integ_raw.pop("sponge", None)
    sponge = None
    if sponge_raw is not None:
        _check_keys(sponge_raw, _SPONGE_KEYS, "integrator.sponge")
        try:
            sponge = SpongeSpec(**sponge_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"integrator.sponge: {exc}") from exc
    try:
        integrator = IntegratorConfig(sponge=sponge, **integ_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from exc
    ic_raw = raw["initial_condition"]
    _check_keys(ic_raw, _IC_KEYS, "initial_condition")
    ic = InitialCondition(**ic_raw)
    return ScenarioConfig(
        scenario=raw["scenario"],
        physics=physics,
        grid=grid,
        integrator=integrator,
        initial_condition=ic,
        seed=raw.get("seed", 0),
        snapshot_cadence=raw.get("snapshot_cadence", 100),
        output_dir=raw.get("output_dir", "fnls_out"),
        cutoff_radius=raw.get("cutoff_radius", 8.0),
        cauchy_threshold=raw.get("cauchy_threshold", 0.05),
        decay_factor_threshold=raw.get("decay_factor_threshold", 5.0),
    )


def config_to_dict(cfg: ScenarioConfig) -> dict:
    integ = {
        "scheme": cfg.integrator.scheme,
        "dt": cfg.integrator.dt,
        "t_end": cfg.integrator.t_end,
        "dealias": cfg.integrator.dealias,
        "sponge": (
            None
            if cfg.integrator.sponge is None
            else {
                "width_fraction": cfg.integrator.sponge.width_fraction,
                "strength": cfg.integrator.sponge.strength,
            }
        ),
        "linear_only": cfg.integrator.linear_only,
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "physics": {
            "dim": cfg.physics.dim,
            "alpha": cfg.physics.alpha,
            "mu": cfg.physics.mu,
        },
        "grid": {
            "box_length": cfg.grid.box_length,
            "points_per_dim": cfg.grid.points_per_dim,
        },
        "integrator": integ,
        "initial_condition": {
            "kind": cfg.initial_condition.kind,
            "amplitude": cfg.initial_condition.amplitude,
            "width": cfg.initial_condition.width,
            "chirp": cfg.initial_condition.chirp,
            "scale": cfg.initial_condition.scale,
        },
        "seed": cfg.seed,
        "snapshot_cadence": cfg.snapshot_cadence,
        "output_dir": cfg.output_dir,
        "cutoff_radius": cfg.cutoff_radius,
        "cauchy_threshold": cfg.cauchy_threshold,
        "decay_factor_threshold": cfg.decay_factor_threshold,
    }


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return config_from_dict(raw)


def config_hash(cfg: ScenarioConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# -- initial data ----------------------------------------------------------------


def build_initial_condition(
    cfg: ScenarioConfig, spec: GroundStateSpec | None
) -> Field:
    ic = cfg.initial_condition
    grid = cfg.grid
    if ic.kind == "gaussian":
        r2 = grid.radius**2
        vals = ic.amplitude * np.exp(-r2 / (2 * ic.width**2))
        if ic.chirp != 0.0:
            vals = vals * np.exp(1j * ic.chirp * r2)
        return Field(grid, vals.astype(np.complex128), PHYSICAL)
    if spec is None:
        raise ConfigError("ground-state initial data requires a calibrated spec")
    base = GroundStateSpec(
        params=spec.params, C1=spec.C1, C2=spec.C2, lambda0=ic.scale
    )
    W = profile(grid, base)
    return Field(grid, ic.amplitude * W.values, PHYSICAL)


# -- scattering proxy -------------------------------------------------------------


@dataclass(frozen=True)
class ScatteringProxyReport:
    potential_decay_factor: float
    uplus_cauchy: float
    uplus_cauchy_fraction: float
    window: tuple[float, float]
    verdict: str  # scattering-consistent | not-scattering-consistent | inconclusive


def scattering_proxy(
    result: EvolveResult,
    params: PhysicsParams,
    cauchy_threshold: float = 0.05,
    decay_factor_threshold: float = 5.0,
) -> ScatteringProxyReport:
    """Free-flow pull-back test: v(t) = e^{-i t (-Delta)^a} u(t) should become
    Cauchy in the homogeneous H^a norm if the solution approaches a free wave.

    Uses the last five samples inside the clean window (up to the first
    contamination, or the whole run with a sponge); the potential decay
    factor compares int |u|^{p+2} at the window ends.
    """
    from .dynamics import propagator_symbol

    times, fields = result.times, result.fields
    clean_end = len(times)
    if result.status == "contaminated":
        clean_end = max(0, len(times) - 1)
    if clean_end < 5:
        return ScatteringProxyReport(
            potential_decay_factor=float("nan"),
            uplus_cauchy=float("nan"),
            uplus_cauchy_fraction=float("nan"),
            window=(times[0] if times else 0.0, times[clean_end - 1] if clean_end else 0.0),
            verdict="inconclusive",
        )
    grid = fields[0].grid
    window = (times[0], times[clean_end - 1])
    pot0 = diagnostics.potential(fields[0], params)
    pot1 = diagnostics.potential(fields[clean_end - 1], params)
    decay = pot0 / pot1 if pot1 > 0 else float("inf")
    pulled = []
    for t, f in zip(times[clean_end - 5 : clean_end], fields[clean_end - 5 : clean_end]):
        sym = propagator_symbol(grid, params, -t)
        pulled.append(
            Field(grid, spectral.multiplier_apply(grid, f.values, sym), PHYSICAL)
        )
    cauchy = 0.0
    for i in range(len(pulled)):
        for j in range(i + 1, len(pulled)):
            d = Field(grid, pulled[i].values - pulled[j].values, PHYSICAL)
            cauchy = max(cauchy, spectral.sobolev_seminorm(d, params.alpha))
    h0 = spectral.sobolev_seminorm(fields[0], params.alpha)
    frac = cauchy / h0 if h0 > 0 else 0.0
    ok = frac <= cauchy_threshold and decay >= decay_factor_threshold
    return ScatteringProxyReport(
        potential_decay_factor=decay,
        uplus_cauchy=cauchy,
        uplus_cauchy_fraction=frac,
        window=window,
        verdict="scattering-consistent" if ok else "not-scattering-consistent",
    )


def exterior_decay_scan(
    result: EvolveResult, radii: list[float], params: PhysicsParams
) -> list[dict[str, float]]:
    """Per-time, per-radius exterior integrals of the three compactness
    densities: |D^a u|^2, |u|^{2*}, and |u|^2 / |x|^{2a} over |x| > R."""
    rows = []
    for t, f in zip(result.times, result.fields):
        g = spectral.to_physical(f)
        grid = g.grid
        cell = grid.cell_volume
        Dau = spectral.fractional_derivative(g, params.alpha).values
        r = grid.radius
        safe_r = np.where(r > 0, r, np.inf)  # origin never exterior
        for R in radii:
            ext = r > R
            rows.append(
                {
                    "t": t,
                    "R": R,
                    "grad_density": float(np.sum(np.abs(Dau[ext]) ** 2) * cell),
                    "critical_density": float(
                        np.sum(np.abs(g.values[ext]) ** params.two_star) * cell
                    ),
                    "hardy_density": float(
                        np.sum(
                            (np.abs(g.values[ext]) ** 2)
                            / safe_r[ext] ** (2 * params.alpha)
                        )
                        * cell
                    ),
                }
            )
    return rows


# -- scenario running --------------------------------------------------------------


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def emit_report(report: dict, directory: str | os.PathLike, name: str = "report.json") -> Path:
    """Write a deterministic JSON report (sorted keys, atomic rename)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    tmp = directory / (name + ".tmp")
    tmp.write_text(
        json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n",
        encoding="utf-8",
    )
    os.replace(tmp, path)
    return path


def _emit_plot_columns(records, directory: Path) -> None:
    recs = records
    if not recs:
        return
    for col in diagnostics.CSV_COLUMNS[1:]:
        vals = [getattr(r, col) for r in recs]
        if any(v is None for v in vals):
            continue
        lines = [
            f"{r.t:.17g} {float(v):.17g}" for r, v in zip(recs, vals)
        ]
        (directory / f"t_vs_{col}.dat").write_text("\n".join(lines) + "\n", "utf-8")


def _provenance(cfg: ScenarioConfig, constants: GroundStateConstants | None) -> dict:
    prov = {
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
    }
    if constants is not None:
        prov["ground_state_constants"] = {
            "kappa": constants.kappa,
            "sobolev_const": constants.sobolev_const,
            "grad_norm_sq": constants.grad_norm_sq,
            "grad_norm_sq_grid": constants.grad_norm_sq_grid,
            "potential_integral": constants.potential_integral,
            "energy_focusing": constants.energy_focusing,
            "energy_defocusing": constants.energy_defocusing,
        }
    return prov


def run_scenario(cfg: ScenarioConfig, emit: bool = True) -> dict:
    """Run one scenario; returns the report dict and (optionally) writes the
    report JSON, diagnostics CSV, plot columns, and field snapshots."""
    needs_w = cfg.scenario in (
        "focusing_subthreshold",
        "focusing_superthreshold",
        "stationarity",
    ) or cfg.initial_condition.kind in ("ground_state", "scaled_ground_state")
    spec = constants = None
    if needs_w:
        spec, constants = calibrate(cfg.physics, cfg.grid)
    u0 = build_initial_condition(cfg, spec)
    cutoff = CutoffSpec(R=cfg.cutoff_radius)

    runner = {
        "stationarity": _run_stationarity,
        "focusing_subthreshold": _run_subthreshold,
        "focusing_superthreshold": _run_superthreshold,
        "defocusing_scatter": _run_scatter,
        "scaling_covariance": _run_scaling,
        "virial_suite": _run_virial_suite,
    }[cfg.scenario]
    report, result = runner(cfg, u0, cutoff, spec, constants)
    report["provenance"] = _provenance(cfg, constants)
    report["scenario"] = cfg.scenario

    if emit and result is not None:
        outdir = Path(cfg.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "diagnostics.csv").write_text(
            diagnostics.records_to_csv(result.records), "utf-8"
        )
        _emit_plot_columns(result.records, outdir)
        chash = config_hash(cfg)
        for t, f in zip(result.times, result.fields):
            step = int(round(t / cfg.integrator.dt))
            fieldio.write_checkpoint(outdir, f"snapshot_{step:08d}", f, t, step, chash)
        emit_report(report, outdir)
    elif emit:
        emit_report(report, Path(cfg.output_dir))
    return report


def _deviation_series(result: EvolveResult, u0: Field, alpha: float) -> list[float]:
    h0 = spectral.sobolev_seminorm(u0, alpha)
    out = []
    for f in result.fields:
        d = Field(u0.grid, f.values - u0.values, PHYSICAL)
        out.append(spectral.sobolev_seminorm(d, alpha) / h0)
    return out


def _run_stationarity(cfg, u0, cutoff, spec, constants):
    result = evolve(
        u0, cfg.integrator, cfg.physics, cfg.snapshot_cadence, cutoff, constants
    )
    devs = _deviation_series(result, u0, cfg.physics.alpha)
    report = {
        "status": result.status,
        "max_deviation_hdot_alpha": max(devs),
        "deviation_series": devs,
        "times": result.times,
    }
    return report, result


def _run_subthreshold(cfg, u0, cutoff, spec, constants):
    if not in_subthreshold_set(
        u0, cfg.physics, constants.energy_focusing, constants
    ):
        e = diagnostics.energy(u0, cfg.physics)
        g2 = spectral.sobolev_seminorm(u0, cfg.physics.alpha) ** 2
        raise ConfigError(
            "focusing_subthreshold requires initial data in the sub-threshold "
            f"set: need E(u0) < {constants.energy_focusing:.6g} (got {e:.6g}) "
            f"and ||D^a u0||^2 < {constants.grad_norm_sq_grid:.6g} (got {g2:.6g})"
        )
    result = evolve(
        u0, cfg.integrator, cfg.physics, cfg.snapshot_cadence, cutoff, constants
    )
    flags_ok = all(
        r.trap_grad_below and r.trap_coercive for r in result.records
    )
    ratios = [r.energy / r.hdot_alpha_sq for r in result.records]
    report = {
        "status": result.status,
        "trapping_flags_all_hold": bool(flags_ok),
        "comparability_ratio_initial": ratios[0],
        "comparability_ratio_range": [min(ratios), max(ratios)],
        "blow_up_flag": result.status == "blow_up",
        "times": result.times,
    }
    return report, result


def _run_superthreshold(cfg, u0, cutoff, spec, constants):
    result = evolve(
        u0, cfg.integrator, cfg.physics, cfg.snapshot_cadence, cutoff, constants
    )
    report = {
        "status": result.status,
        "indicator_activated": result.status == "blow_up",
        "indicator_time": result.flag_time,
        "indicator_message": result.message,
        "note": (
            "indicator-level observation only; activation is a reporting "
            "heuristic, not a statement about finite-time singularity"
        ),
    }
    return report, result


def _run_scatter(cfg, u0, cutoff, spec, constants):
    result = evolve(
        u0, cfg.integrator, cfg.physics, cfg.snapshot_cadence, cutoff, constants
    )
    proxy = scattering_proxy(
        result, cfg.physics, cfg.cauchy_threshold, cfg.decay_factor_threshold
    )
    report = {
        "status": result.status,
        "potential_decay_factor": proxy.potential_decay_factor,
        "uplus_cauchy": proxy.uplus_cauchy,
        "uplus_cauchy_fraction": proxy.uplus_cauchy_fraction,
        "window": list(proxy.window),
        "verdict": proxy.verdict,
    }
    return report, result


def _run_scaling(cfg, u0, cutoff, spec, constants):
    """Evolve u0 and its rescaling lam^{(N-2a)/2} u0(lam x) on the lam-scaled
    grid to time T/lam^{2a}; the two runs correspond exactly in the discrete
    system, so the mismatch isolates implementation inconsistencies."""
    lam = 2.0
    params = cfg.physics
    d = (params.dim - 2 * params.alpha) / 2
    base = evolve(u0, cfg.integrator, params, cfg.snapshot_cadence, cutoff, constants)

    grid2 = Grid(cfg.grid.dim, cfg.grid.box_length / lam, cfg.grid.points_per_dim)
    vals2 = lam**d * u0.values  # same samples: x2 = x/lam on the scaled lattice
    u02 = Field(grid2, vals2, PHYSICAL)
    integ2 = IntegratorConfig(
        scheme=cfg.integrator.scheme,
        dt=cfg.integrator.dt / lam ** (2 * params.alpha),
        t_end=cfg.integrator.t_end / lam ** (2 * params.alpha),
        dealias=cfg.integrator.dealias,
        sponge=cfg.integrator.sponge,
    )
    rescaled = evolve(u02, integ2, params, cfg.snapshot_cadence, cutoff, constants)

    n = min(len(base.fields), len(rescaled.fields))
    errs = []
    for f1, f2 in zip(base.fields[:n], rescaled.fields[:n]):
        pull = Field(grid2, f2.values - lam**d * f1.values, PHYSICAL)
        ref = Field(grid2, lam**d * f1.values, PHYSICAL)
        errs.append(
            spectral.sobolev_seminorm(pull, params.alpha)
            / spectral.sobolev_seminorm(ref, params.alpha)
        )
    report = {
        "status": base.status,
        "lambda": lam,
        "max_relative_hdot_mismatch": max(errs),
        "mismatch_series": errs,
    }
    return report, base


def _run_virial_suite(cfg, u0, cutoff, spec, constants):
    """Dense-in-time run checking the dilation-rate identities by centered
    differences, plus the cutoff-saturation reduction."""
    params = cfg.physics
    dt = cfg.integrator.dt
    dense = IntegratorConfig(
        scheme=cfg.integrator.scheme,
        dt=dt,
        t_end=cfg.integrator.t_end,
        dealias=cfg.integrator.dealias,
        sponge=None,
    )
    result = evolve(u0, dense, params, cadence=1, cutoff=cutoff, constants=constants)
    recs = result.records
    v_errs, i_errs = [], []
    for k in range(1, len(recs) - 1):
        fd_v = (recs[k + 1].virial - recs[k - 1].virial) / (2 * dt)
        v_errs.append(abs(fd_v - recs[k].virial_rate_rhs) / abs(recs[k].virial_rate_rhs))
        fd_i = (recs[k + 1].localized_virial - recs[k - 1].localized_virial) / (2 * dt)
        i_errs.append(
            abs(fd_i - recs[k].localized_virial_rhs)
            / abs(recs[k].localized_virial_rhs)
        )
    # saturation: moment-free field, cutoff covering its support
    grid = cfg.grid
    r2 = grid.radius**2
    sat_field = Field(grid, ((r2 - params.dim) * np.exp(-r2 / 2)).astype(complex))
    sat_cut = CutoffSpec(R=2 * cfg.cutoff_radius)
    total, terms = diagnostics.localized_virial_rhs(sat_field, sat_cut, params)
    main = abs(terms["main_gradient"])
    sat = max(
        abs(terms["commutator_xgrad"]),
        abs(terms["commutator_u"]),
        abs(terms["commutator_ring"]),
    ) / main
    glob = diagnostics.virial_rate_rhs(sat_field, params)
    report = {
        "status": result.status,
        "samples": len(recs),
        "max_virial_fd_error": max(v_errs) if v_errs else float("nan"),
        "max_localized_fd_error": max(i_errs) if i_errs else float("nan"),
        "saturation_commutator_over_main": sat,
        "saturation_sum_vs_global": abs(total - glob) / abs(glob),
    }
    return report, result
