"""Acceptance suite: one test per criterion at the reference configuration
N = 2, alpha = 0.8, L = 100, M = 256, dt = 1e-3 (unless a criterion states
otherwise).  Each test prints a single PASS/FAIL line (run with -s to see
them live).

Criteria 6 and 8a are implemented literally and FAIL on this implementation;
the blocking analysis lives in the project notes: the whole-space ground
state has critical algebraic tails, so its box truncation is not a small
perturbation at L = 100 (no positive steady state exists on the torus at
all: the zero mode of the fractional Laplacian annihilates constants while
the nonlinear term has positive mean).  The adjacent passing tests in
test_dynamics (shifted-soliton orbit) and the collapsing-Gaussian control in
criterion 8a demonstrate that the integrator and the indicator machinery are
sound.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from fnls import (
    CutoffSpec,
    ExponentPair,
    Field,
    Grid,
    IntegratorConfig,
    PhysicsParams,
    SpongeSpec,
    calibrate,
    elliptic_residual,
    evolve,
    field_from_function,
    is_alpha_admissible,
    is_radial_admissible,
    petviashvili_solve,
    profile,
    strichartz_exponents,
)
from fnls import diagnostics as dg
from fnls import experiments as xp
from fnls import spectral as sp
from fnls.dynamics import StrangStepper
from fnls.ground_state import calibrated_spec

FOC = PhysicsParams(2, 0.8, -1)
DEFOC = PhysicsParams(2, 0.8, 1)
ALPHA = 0.8
DT = 1e-3


def report(num: str, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'} ({detail})",
          flush=True)


@pytest.fixture(scope="module")
def ref_grid():
    return Grid(2, 100.0, 256)


@pytest.fixture(scope="module")
def calibration(ref_grid):
    return calibrate(FOC, ref_grid)


@pytest.fixture(scope="module")
def subthreshold_run(ref_grid, calibration):
    # shared by criteria 7 and 8b: u0 = 0.9 W, mu = -1, T = 5
    spec, consts = calibration
    W = profile(ref_grid, spec)
    u0 = Field(ref_grid, 0.9 * W.values)
    cfg = IntegratorConfig(dt=DT, t_end=5.0)
    return evolve(u0, cfg, FOC, cadence=250, constants=consts)


def test_criterion_01_ground_state_residual(ref_grid, calibration):
    t0 = time.time()
    spec, _ = calibration
    W = profile(ref_grid, spec)
    res256 = elliptic_residual(W, FOC, spec=spec, tail_pad=8)
    fine = Grid(2, 100.0, 512)
    W512 = profile(fine, spec)
    res512 = elliptic_residual(W512, FOC, spec=spec, tail_pad=8)
    elapsed = time.time() - t0
    ratio = res512 / res256
    ok = res256 <= 2e-3 and 0.35 <= ratio <= 0.65 and elapsed <= 30.0
    report("01", "ground-state residual",
           ok, f"res256={res256:.3e} <= 2e-3, M-doubling ratio={ratio:.2f}, "
               f"{elapsed:.1f}s")
    assert res256 <= 2e-3
    assert 0.35 <= ratio <= 0.65
    assert elapsed <= 30.0


def test_criterion_02_variational_identities(calibration):
    _, c = calibration
    g = c.grad_norm_sq
    e1 = abs(g - c.potential_integral) / g
    e2 = abs(c.sobolev_const ** (-FOC.dim / ALPHA) - g) / g
    e3 = abs(c.energy_focusing - (ALPHA / FOC.dim) * g) / abs(c.energy_focusing)
    ok = e1 <= 0.01 and e2 <= 0.01 and e3 <= 0.01
    report("02", "ground-state identities",
           ok, f"|G-P|/G={e1:.2e}, |C^(-N/a)-G|/G={e2:.2e}, energy={e3:.2e}")
    assert e1 <= 0.01 and e2 <= 0.01 and e3 <= 0.01


def test_criterion_03_dilation_commutator(ref_grid):
    errs = []
    for sigma in (0.8, 1.0, 1.25, 1.5, 2.0):
        r2 = ref_grid.radius**2 / sigma**2
        f = Field(ref_grid, ((r2**2 - 8 * r2 + 8) * np.exp(-r2 / 2)).astype(complex))
        xg = sp.x_dot_gradient(f, check_boundary=False)
        lhs = Field(
            ref_grid,
            sp.fractional_derivative(xg, ALPHA).values
            - sp.x_dot_gradient(
                sp.fractional_derivative(f, ALPHA), check_boundary=False
            ).values,
        )
        rhs = sp.fractional_derivative(f, ALPHA)
        errs.append(
            sp.l2_norm(Field(ref_grid, lhs.values - ALPHA * rhs.values))
            / sp.l2_norm(rhs)
        )
    ok = max(errs) <= 1e-6
    report("03", "dilation commutator identity",
           ok, f"max rel err over 5 fields = {max(errs):.2e} <= 1e-6")
    assert max(errs) <= 1e-6


def test_criterion_04_conservation(ref_grid):
    t0 = time.time()
    u0 = field_from_function(
        ref_grid, lambda x, y: 0.8 * np.exp(-(x**2 + y**2) / 4)
    )
    worst_mass = worst_energy = 0.0
    for params in (DEFOC, FOC):
        cfg = IntegratorConfig(dt=DT, t_end=10.0)
        result = evolve(u0, cfg, params, cadence=500, full_records=False)
        assert result.status == "completed"
        m0 = dg.mass(u0)
        e0 = dg.energy(u0, params)
        for f in result.fields:
            worst_mass = max(worst_mass, abs(dg.mass(f) - m0) / m0)
            worst_energy = max(
                worst_energy, abs(dg.energy(f, params) - e0) / abs(e0)
            )
    elapsed = time.time() - t0
    ok = worst_mass <= 1e-8 and worst_energy <= 1e-5 and elapsed <= 300.0
    report("04", "conservation over T=10 (both signs)",
           ok, f"mass drift={worst_mass:.2e} <= 1e-8, "
               f"energy drift={worst_energy:.2e} <= 1e-5, {elapsed:.0f}s")
    assert worst_mass <= 1e-8
    assert worst_energy <= 1e-5
    assert elapsed <= 300.0


def test_criterion_05_virial_identities(ref_grid):
    u0 = field_from_function(
        ref_grid,
        lambda x, y: 0.8 * np.exp(-(x**2 + y**2) / 4) * np.exp(1j * (x**2 + y**2) / 8),
    )
    cut = CutoffSpec(R=8.0)
    stepper = StrangStepper(ref_grid, DEFOC, DT, dealias=True)
    u = u0.values.copy()
    vs, ivals, fields = [], [], []
    for n in range(23):
        f = Field(ref_grid, u.copy())
        vs.append(dg.virial(f))
        ivals.append(dg.localized_virial(f, cut))
        fields.append(f)
        u = stepper.step(u)
    v_errs, i_errs = [], []
    for k in range(1, 22):
        fd_v = (vs[k + 1] - vs[k - 1]) / (2 * DT)
        v_errs.append(abs(fd_v - dg.virial_rate_rhs(fields[k], DEFOC))
                      / abs(dg.virial_rate_rhs(fields[k], DEFOC)))
        fd_i = (ivals[k + 1] - ivals[k - 1]) / (2 * DT)
        rhs, _ = dg.localized_virial_rhs(fields[k], cut, DEFOC)
        i_errs.append(abs(fd_i - rhs) / abs(rhs))
    # saturation: cutoff covering the data, commutator terms negligible
    r2 = ref_grid.radius**2
    sat = Field(ref_grid, ((r2 - 2) * np.exp(-r2 / 2)).astype(complex))
    _, terms = dg.localized_virial_rhs(sat, CutoffSpec(R=16.0), DEFOC)
    main = abs(terms["main_gradient"])
    sat_ratio = max(
        abs(terms["commutator_xgrad"]),
        abs(terms["commutator_u"]),
        abs(terms["commutator_ring"]),
    ) / main
    ok = (len(v_errs) >= 20 and max(v_errs) <= 1e-3 and max(i_errs) <= 1e-3
          and sat_ratio <= 1e-8)
    report("05", "virial rate identities",
           ok, f"{len(v_errs)} samples, V err={max(v_errs):.2e}, "
               f"I_R err={max(i_errs):.2e} <= 1e-3, saturation={sat_ratio:.1e}")
    assert len(v_errs) >= 20
    assert max(v_errs) <= 1e-3
    assert max(i_errs) <= 1e-3
    assert sat_ratio <= 1e-8


def test_criterion_06_stationarity(ref_grid, calibration):
    # literal criterion: the closed-form profile sampled at L=100 and evolved
    # with the grid operators.  EXPECTED FAIL: the profile's critical tails
    # make it a quasi-stationary state only; the zero-mode obstruction alone
    # forces a deviation of order 1e-2 per unit time at this box size (see
    # the project decisions ledger).
    spec, consts = calibration
    W = profile(ref_grid, spec)
    cfg = IntegratorConfig(dt=DT, t_end=1.0)
    result = evolve(W, cfg, FOC, cadence=100, constants=consts,
                    full_records=False)
    h0 = sp.sobolev_seminorm(W, ALPHA)
    devs = [
        sp.sobolev_seminorm(Field(ref_grid, f.values - W.values), ALPHA) / h0
        for f in result.fields
    ]
    ok = max(devs) <= 1e-3
    report("06", "stationarity of the sampled profile",
           ok, f"max Hdot-alpha deviation={max(devs):.2e} vs 1e-3; "
               "truncation-limited, see decisions ledger")
    assert max(devs) <= 1e-3, (
        "sampled whole-space profile is not a torus steady state at L=100; "
        "see decisions ledger"
    )


def test_criterion_07_trapping(subthreshold_run, calibration):
    result = subthreshold_run
    recs = result.records
    flags_ok = all(r.trap_grad_below and r.trap_coercive for r in recs)
    ratios = [r.energy / r.hdot_alpha_sq for r in recs]
    r0 = ratios[0]
    bracket_ok = all(0.5 * r0 <= r <= 2.0 * r0 for r in ratios)
    ok = result.status == "completed" and flags_ok and bracket_ok
    report("07", "trapping along sub-threshold run",
           ok, f"status={result.status}, flags hold={flags_ok}, "
               f"ratio in [{min(ratios):.3f}, {max(ratios):.3f}] vs r0={r0:.3f}")
    assert result.status == "completed"
    assert flags_ok
    assert bracket_ok


def test_criterion_08a_superthreshold_indicator(ref_grid, calibration):
    # literal criterion: u0 = 1.2 W should trigger the blow-up indicator
    # before T = 1.  EXPECTED FAIL: on the reference box the truncated
    # amplified profile settles into a bounded quasi-periodic oscillation
    # (growth ~10x, far from the 1e3 threshold; top-octave fraction ~1e-2).
    # The collapsing-Gaussian control below shows the indicator works.
    spec, consts = calibration
    W = profile(ref_grid, spec)
    u0 = Field(ref_grid, 1.2 * W.values)
    cfg = IntegratorConfig(dt=DT, t_end=1.0)
    result = evolve(u0, cfg, FOC, cadence=50, constants=consts,
                    full_records=False)
    control = field_from_function(
        ref_grid, lambda x, y: 1.5 * np.exp(-(x**2 + y**2) / 4)
    )
    control_result = evolve(control, IntegratorConfig(dt=DT, t_end=1.0), FOC,
                            cadence=20, full_records=False)
    ok = result.status == "blow_up" and result.flag_time is not None
    report("08a", "super-threshold indicator before T=1",
           ok, f"1.2W status={result.status} (no trigger; see ledger); "
               f"collapsing-Gaussian control triggers at "
               f"t={control_result.flag_time}")
    assert control_result.status == "blow_up"  # machinery control
    assert result.status == "blow_up", (
        "1.2W does not reach the stated thresholds on the reference grid; "
        "see decisions ledger"
    )


def test_criterion_08b_subthreshold_never_triggers(subthreshold_run):
    result = subthreshold_run
    ok = result.status == "completed"
    report("08b", "sub-threshold run never triggers over T=5",
           ok, f"status={result.status}, t_end reached={result.times[-1]:.1f}")
    assert result.status == "completed"
    assert result.times[-1] == pytest.approx(5.0)


def test_criterion_09_scattering_proxy(ref_grid):
    u0 = field_from_function(
        ref_grid, lambda x, y: np.exp(-(x**2 + y**2) / 4)
    )
    cfg = IntegratorConfig(
        dt=DT, t_end=6.0, sponge=SpongeSpec(width_fraction=0.2, strength=10.0)
    )
    result = evolve(u0, cfg, DEFOC, cadence=1000, full_records=False)
    prox = xp.scattering_proxy(result, DEFOC)
    lin_cfg = IntegratorConfig(dt=DT, t_end=0.5, dealias=False, linear_only=True)
    lin_result = evolve(u0, lin_cfg, DEFOC, cadence=100, full_records=False)
    lin_prox = xp.scattering_proxy(lin_result, DEFOC)
    ok = (prox.potential_decay_factor >= 5.0
          and prox.uplus_cauchy_fraction <= 0.05
          and lin_prox.uplus_cauchy_fraction <= 1e-10)
    report("09", "scattering proxy",
           ok, f"decay={prox.potential_decay_factor:.2e} >= 5, "
               f"cauchy={prox.uplus_cauchy_fraction:.2e} <= 0.05, "
               f"linear control={lin_prox.uplus_cauchy_fraction:.1e} <= 1e-10")
    assert prox.potential_decay_factor >= 5.0
    assert prox.uplus_cauchy_fraction <= 0.05
    assert prox.verdict == "scattering-consistent"
    assert lin_prox.uplus_cauchy_fraction <= 1e-10


def test_criterion_10_admissibility_sweep():
    count = 0
    for dim in (2, 3):
        for num in range(1, 140):
            a = Fraction(num, 140)
            if not (Fraction(dim, 2 * dim - 1) < a < 1 and 2 * a < dim < 6 * a):
                continue
            sw = strichartz_exponents(dim, a)
            assert is_alpha_admissible(ExponentPair(sw.q_w, sw.r_w), dim, a)
            count += 1
    excluded_ok = all(
        not is_radial_admissible(
            ExponentPair(Fraction(2), Fraction(4 * dim - 2, 2 * dim - 3)),
            dim, boundary=True,
        )
        for dim in (2, 3)
    )
    ok = count >= 100 and excluded_ok
    report("10", "admissibility",
           ok, f"{count} exact rational sweep points, excluded endpoint "
               f"rejected={excluded_ok}")
    assert count >= 100
    assert excluded_ok


def test_criterion_11_self_convergence_and_cross_oracle(ref_grid):
    T = 0.2
    u0 = field_from_function(
        ref_grid, lambda x, y: 0.8 * np.exp(-(x**2 + y**2) / 4)
    )

    def run(dt):
        stepper = StrangStepper(ref_grid, FOC, dt, dealias=False)
        u = u0.values.copy()
        for _ in range(int(round(T / dt))):
            u = stepper.step(u)
        return u

    ref = run(T / 512)
    e1 = np.linalg.norm(run(T / 64) - ref)
    e2 = np.linalg.norm(run(T / 128) - ref)
    ratio = e1 / e2

    # cross oracle: shift-regularized fixed-point solve vs closed form, with
    # eps at the larger box's zero-mode balance and the scale locked
    grid2 = Grid(2, 200.0, 512)
    spec = calibrated_spec(FOC)
    W2 = profile(grid2, spec)
    sol = petviashvili_solve(
        grid2, FOC, eps=3e-4, tol=1e-11, init=W2,
        scale_lock=spec.half_peak_radius(),
    )
    core = grid2.radius <= 10.0
    Wn = W2.values.real / W2.values.real.max()
    vn = sol.field.values.real / sol.field.values.real.max()
    mismatch = float(
        np.sqrt(np.sum((vn[core] - Wn[core]) ** 2) / np.sum(Wn[core] ** 2))
    )
    ok = 3.6 <= ratio <= 4.4 and mismatch <= 0.01
    report("11", "self-convergence and cross-oracle",
           ok, f"order ratio={ratio:.2f} in [3.6, 4.4], "
               f"solver vs closed form core l2={mismatch:.2e} <= 1%")
    assert 3.6 <= ratio <= 4.4
    assert mismatch <= 0.01
