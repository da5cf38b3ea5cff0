"""Steady-state solver tests.

Closed-form limits are asserted exactly; everything else is cross-checked
against brute-force residual scans, an independent RK4 integration of the
equations of motion, and hand-worked onset algebra.
"""

import dataclasses
import math

import numpy as np
import pytest

import oracles
from cqed import params
from cqed import steadystate as ss

SQRT3 = math.sqrt(3.0)


@pytest.fixture(scope="module")
def strong_derived():
    # strong coupling, weak cavity decay: the qubit pull exceeds the
    # linewidth and the response folds at modest photon number
    cfg = params.PhysicalConfig(
        omega_c=41.0,
        omega_Delta=8.0,
        g=0.3,
        gamma_c1=0.001,
        gamma_c2=0.001,
        temperature=0.023,
        gamma_q1=0.020,
        gamma_q2=0.010,
    )
    return params.derive(cfg, math.sqrt(41.0**2 - 8.0**2))


# three roots of the folded cell used by the bistable tests below,
# frozen from a fine residual scan of the same device
FOLD_PUMP = 41.0 - 0.015
FOLD_SP = 1.324e-4
FOLD_ROOTS = (0.013394379, 0.11821038, 0.75928974)


# ---------------------------------------------------------------------------
# weak-drive quadratic coefficients


def test_coeffs_match_response_at_zero_photons(crossing_derived, detuned_derived, fast_derived):
    # Gamma0 + i*Omega0 must reproduce the full response denominator at E=0
    for derived in (crossing_derived, detuned_derived, fast_derived):
        drive = params.make_drive(derived, derived.omega_c - 3.0 * derived.gamma_c, 0.0)
        co = ss.response_coeffs(derived, drive)
        m, _ = ss._make_model(derived, drive, "ground")
        re0, im0 = ss._d_terms(0.0, m)
        assert co.Gamma0 == pytest.approx(re0, rel=1e-12)
        assert co.Omega0 == pytest.approx(im0, rel=1e-12)


def test_coeffs_match_response_slope_at_zero_photons(fast_derived):
    # Gamma2/Omega2 are the first-order photon coefficients; compare with a
    # Richardson-extrapolated central difference of the full denominator
    drive = params.make_drive(fast_derived, fast_derived.omega_c - 0.06, 0.0)
    co = ss.response_coeffs(fast_derived, drive)
    m, _ = ss._make_model(fast_derived, drive, "ground")

    def slopes(h):
        rp, ip = ss._d_terms(h, m)
        rm, im = ss._d_terms(-h, m)
        return (rp - rm) / (2.0 * h), (ip - im) / (2.0 * h)

    g1, o1 = slopes(1e-3)
    g2, o2 = slopes(5e-4)
    dre = (4.0 * g2 - g1) / 3.0
    dim = (4.0 * o2 - o1) / 3.0
    assert co.Gamma2 == pytest.approx(dre, rel=1e-6)
    assert co.Omega2 == pytest.approx(dim, rel=1e-6)


def test_coeffs_decoupled_qubit_reduce_to_bare_cavity(fast_derived):
    bare = dataclasses.replace(fast_derived, g1=0.0)
    drive = params.make_drive(bare, bare.omega_c - 0.04, 0.0)
    co = ss.response_coeffs(bare, drive)
    assert co.Omega0 == -drive.Delta_pc
    assert co.Omega2 == bare.K_c
    assert co.Gamma0 == bare.gamma_c
    assert co.Gamma2 == bare.gamma_c4


def test_coeffs_long_coherence_limit(fast_derived):
    # T2 -> inf: the qubit only shifts the resonance dispersively
    long_t2 = dataclasses.replace(fast_derived, T2=1e12)
    drive = params.make_drive(long_t2, long_t2.omega_c - 0.05, 0.0)
    co = ss.response_coeffs(long_t2, drive)
    shift = -long_t2.g1**2 * long_t2.P0 / drive.Delta_1
    assert co.Omega0 == pytest.approx(-drive.Delta_pc + shift, rel=1e-9)
    assert co.Gamma0 == pytest.approx(long_t2.gamma_c, rel=1e-9)
    assert co.Omega2 == pytest.approx(long_t2.K_c, abs=1e-9 * abs(shift))
    assert co.Gamma2 == pytest.approx(long_t2.gamma_c4, abs=1e-9 * abs(shift))


def test_coeffs_branch_flip_mirrors_qubit_terms(fast_derived):
    drive = params.make_drive(fast_derived, fast_derived.omega_c - 0.06, 0.0)
    g = ss.response_coeffs(fast_derived, drive, branch="ground")
    e = ss.response_coeffs(fast_derived, drive, branch="excited")
    gc, kc, gc4 = fast_derived.gamma_c, fast_derived.K_c, fast_derived.gamma_c4
    assert e.Omega0 + drive.Delta_pc == pytest.approx(-(g.Omega0 + drive.Delta_pc), rel=1e-12)
    assert e.Gamma0 - gc == pytest.approx(-(g.Gamma0 - gc), rel=1e-12)
    assert e.Omega2 - kc == pytest.approx(-(g.Omega2 - kc), rel=1e-12)
    assert e.Gamma2 - gc4 == pytest.approx(-(g.Gamma2 - gc4), rel=1e-12)


def test_ground_branch_damping_exceeds_bare(fast_derived):
    # a qubit below saturation always absorbs: Gamma0 > gamma_c
    rng = np.random.default_rng(11)
    for _ in range(50):
        det = float(rng.uniform(0.01, 0.5)) * float(rng.choice([-1.0, 1.0]))
        drive = params.make_drive(fast_derived, fast_derived.omega_a + det, 0.0)
        co = ss.response_coeffs(fast_derived, drive)
        assert co.Gamma0 > fast_derived.gamma_c


def test_coeffs_reject_vanishing_detuning(fast_derived):
    drive = params.make_drive(fast_derived, fast_derived.omega_a + 1e-9, 0.0)
    with pytest.raises(ss.DetuningSingularityError):
        ss.response_coeffs(fast_derived, drive)


# ---------------------------------------------------------------------------
# cubic photon-number balance


def test_cubic_zero_drive():
    co = ss.ResponseCoeffs(Omega0=-3.0, Omega2=1.0, Gamma0=1.0, Gamma2=0.0)
    assert ss.solve_cubic(co, 0.0) == [0.0]


def test_cubic_linear_case():
    co = ss.ResponseCoeffs(Omega0=-0.4, Omega2=0.0, Gamma0=0.25, Gamma2=0.0)
    (root,) = ss.solve_cubic(co, 2.0e-3)
    assert root == pytest.approx(2.0e-3 / (0.4**2 + 0.25**2), rel=1e-12)


def test_cubic_three_roots_against_scan():
    # E*(1 + (E-3)^2) = S folds for S between the local extrema 2.911, 5.088
    co = ss.ResponseCoeffs(Omega0=-3.0, Omega2=1.0, Gamma0=1.0, Gamma2=0.0)

    for S, expect in ((1.0, 1), (4.0, 3), (6.0, 1)):
        roots = ss.solve_cubic(co, S)
        ref = oracles.brute_roots(
            lambda E: E * (1.0 + (E - 3.0) ** 2) - S, np.linspace(0.0, 10.0, 4001)
        )
        assert len(roots) == expect
        assert len(ref) == expect
        for a, b in zip(roots, ref):
            assert a == pytest.approx(b, rel=1e-9)


def test_cubic_roots_sorted_polished():
    rng = np.random.default_rng(3)
    for _ in range(200):
        co = ss.ResponseCoeffs(
            Omega0=float(rng.uniform(-5.0, 5.0)),
            Omega2=float(rng.uniform(-2.0, 2.0)),
            Gamma0=float(rng.uniform(0.05, 2.0)),
            Gamma2=float(rng.uniform(-0.5, 0.5)),
        )
        S = float(10.0 ** rng.uniform(-3, 1))
        roots = ss.solve_cubic(co, S)
        assert len(roots) in (1, 3)
        assert all(r >= 0.0 for r in roots)
        assert roots == sorted(roots)
        for r in roots:
            f = r * ((co.Gamma0 + co.Gamma2 * r) ** 2 + (co.Omega0 + co.Omega2 * r) ** 2) - S
            assert abs(f) <= 1e-9 * S


def test_cubic_negative_drive_raises():
    co = ss.ResponseCoeffs(Omega0=-3.0, Omega2=1.0, Gamma0=1.0, Gamma2=0.0)
    with pytest.raises(ValueError):
        ss.solve_cubic(co, -1e-6)


# ---------------------------------------------------------------------------
# bistability onset


def test_onset_pure_reactive_reduction():
    # Gamma2 = 0 has hand-checkable closed numbers
    co = ss.ResponseCoeffs(Omega0=0.0, Omega2=1.0, Gamma0=1.0, Gamma2=0.0)
    onset = ss.onset_of_bistability(co)
    assert onset.possible
    assert onset.E_onset == pytest.approx(2.0 / SQRT3, rel=1e-14)
    assert onset.Omega0_onset == pytest.approx(-SQRT3, rel=1e-14)
    assert onset.S_p_onset == pytest.approx(8.0 / (3.0 * SQRT3), rel=1e-14)

    flipped = ss.onset_of_bistability(dataclasses.replace(co, Omega2=-1.0))
    assert flipped.Omega0_onset == pytest.approx(SQRT3, rel=1e-14)
    assert flipped.E_onset == pytest.approx(onset.E_onset, rel=1e-14)


def test_onset_feasibility_boundary():
    limit = 1.0 / SQRT3
    assert not ss.onset_of_bistability(
        ss.ResponseCoeffs(Omega0=0.0, Omega2=1.0, Gamma0=1.0, Gamma2=limit)
    ).possible
    assert not ss.onset_of_bistability(
        ss.ResponseCoeffs(Omega0=0.0, Omega2=1.0, Gamma0=1.0, Gamma2=limit + 1e-3)
    ).possible
    assert not ss.onset_of_bistability(
        ss.ResponseCoeffs(Omega0=0.0, Omega2=0.0, Gamma0=1.0, Gamma2=0.1)
    ).possible
    assert ss.onset_of_bistability(
        ss.ResponseCoeffs(Omega0=0.0, Omega2=1.0, Gamma0=1.0, Gamma2=limit - 1e-3)
    ).possible


def _random_feasible_coeffs(rng):
    omega2 = float(rng.uniform(0.1, 3.0)) * float(rng.choice([-1.0, 1.0]))
    gamma2 = float(rng.uniform(-1.0, 0.95)) * abs(omega2) / SQRT3
    gamma0 = float(rng.uniform(0.01, 1.0))
    return ss.ResponseCoeffs(Omega0=0.0, Omega2=omega2, Gamma0=gamma0, Gamma2=gamma2)


def test_onset_is_cusp_of_balance_cubic():
    # at the onset detuning the balance cubic has a triple root: its
    # coefficients a3 E^3 + a2 E^2 + a1 E - S must factor as a3 (E - E_o)^3
    rng = np.random.default_rng(23)
    for _ in range(100):
        co = _random_feasible_coeffs(rng)
        onset = ss.onset_of_bistability(co)
        assert onset.possible
        a3 = co.Omega2**2 + co.Gamma2**2
        a2 = 2.0 * (co.Gamma0 * co.Gamma2 + onset.Omega0_onset * co.Omega2)
        a1 = co.Gamma0**2 + onset.Omega0_onset**2
        assert a2 == pytest.approx(-3.0 * a3 * onset.E_onset, rel=1e-10)
        assert a1 == pytest.approx(3.0 * a3 * onset.E_onset**2, rel=1e-10)
        assert onset.S_p_onset == pytest.approx(a3 * onset.E_onset**3, rel=1e-10)


def test_cube_root_deviation_law_at_onset_detuning():
    # a triple root responds to a drive offset dS as E_o * (dS/S_o)^(1/3)
    rng = np.random.default_rng(31)
    for _ in range(25):
        co = _random_feasible_coeffs(rng)
        onset = ss.onset_of_bistability(co)
        at_onset = dataclasses.replace(co, Omega0=onset.Omega0_onset)
        for sign in (-1.0, 1.0):
            roots = ss.solve_cubic(at_onset, onset.S_p_onset * (1.0 + sign * 0.01))
            assert len(roots) == 1
            dev = roots[0] / onset.E_onset - 1.0
            assert math.copysign(1.0, dev) == sign
            assert abs(dev) == pytest.approx(0.01 ** (1.0 / 3.0), rel=1e-10)


def test_roots_collapse_at_exact_onset():
    rng = np.random.default_rng(37)
    for _ in range(25):
        co = _random_feasible_coeffs(rng)
        onset = ss.onset_of_bistability(co)
        at_onset = dataclasses.replace(co, Omega0=onset.Omega0_onset)
        roots = ss.solve_cubic(at_onset, onset.S_p_onset)
        assert len(roots) % 2 == 1
        for r in roots:
            assert r == pytest.approx(onset.E_onset, rel=1e-4)


def test_fold_window_past_onset():
    # deeper detuning opens a genuine fold; bracket it from the critical
    # points of the balance cubic (independent quadratic) and count roots
    rng = np.random.default_rng(41)
    for _ in range(25):
        co = _random_feasible_coeffs(rng)
        onset = ss.onset_of_bistability(co)
        deep = dataclasses.replace(co, Omega0=1.2 * onset.Omega0_onset)
        a3 = deep.Omega2**2 + deep.Gamma2**2
        a2 = 2.0 * (deep.Gamma0 * deep.Gamma2 + deep.Omega0 * deep.Omega2)
        a1 = deep.Gamma0**2 + deep.Omega0**2
        crit = np.roots([3.0 * a3, 2.0 * a2, a1])
        assert np.isrealobj(crit) or np.all(np.abs(crit.imag) < 1e-12 * np.abs(crit.real))
        crit = np.sort(crit.real)
        assert crit[0] > 0.0
        s_vals = crit**3 * a3 + crit**2 * a2 + crit * a1
        s_lo, s_hi = float(np.min(s_vals)), float(np.max(s_vals))
        assert s_lo > 0.0
        assert len(ss.solve_cubic(deep, 0.9 * s_lo)) == 1
        assert len(ss.solve_cubic(deep, math.sqrt(s_lo * s_hi))) == 3
        assert len(ss.solve_cubic(deep, 1.1 * s_hi)) == 1


# ---------------------------------------------------------------------------
# self-consistent fixed points


def test_undriven_equilibrium(fast_derived):
    drive = params.make_drive(fast_derived, fast_derived.omega_c - 0.02, 0.0)
    (fp,) = ss.solve_selfconsistent(fast_derived, drive)
    assert fp.E == 0.0
    assert fp.alpha == 0.0
    assert fp.P_z == fast_derived.P0
    assert fp.P_plus == 0.0
    assert fp.stable is True
    assert fp.marginal is False


def test_solver_matches_weak_drive_cubic(fast_derived):
    pump = fast_derived.omega_c - 0.05
    for S, tol in ((1e-8, 1e-9), (1e-12, 1e-12)):
        drive = params.make_drive(fast_derived, pump, S)
        (fp,) = ss.solve_selfconsistent(fast_derived, drive, classify=False)
        co = ss.response_coeffs(fast_derived, drive)
        (cub,) = ss.solve_cubic(co, S)
        assert fp.E == pytest.approx(cub, rel=tol)


def test_solver_roots_satisfy_field_balance(device):
    rng = np.random.default_rng(7)
    for _ in range(60):
        omega_f = params.ghz_to_angular(float(rng.uniform(5.0, 8.0)))
        derived = params.derive(device, omega_f)
        pump = derived.omega_c + float(rng.uniform(-5.0, 5.0)) * derived.gamma_c
        if abs((pump - derived.omega_a) * derived.T2) < 1e-5:
            continue
        S = float(10.0 ** rng.uniform(-8.0, 0.0))
        drive = params.make_drive(derived, pump, S)
        m, _ = ss._make_model(derived, drive, "ground")
        bound = 1e-10 * ss.residual_scale(S, derived.gamma_c)
        for fp in ss.solve_selfconsistent(derived, drive, classify=False):
            assert abs(float(ss._residual(fp.E, m))) <= bound
            assert abs(fp.alpha) ** 2 == pytest.approx(fp.E, rel=1e-12)
            ratio = fp.P_z / derived.P0
            assert 0.0 < ratio <= 1.0
            assert abs(fp.P_plus) <= 0.5


def test_fixed_point_from_cubic_coeffs(fast_derived):
    drive = params.make_drive(fast_derived, fast_derived.omega_c - 0.05, 1e-6)
    co = ss.response_coeffs(fast_derived, drive)
    for root in ss.solve_cubic(co, drive.S_p):
        fp = ss.fixed_point_from_E(root, fast_derived, drive, coeffs=co)
        assert abs(fp.alpha) ** 2 == pytest.approx(root, rel=1e-10)


def test_bistable_cell_root_structure(strong_derived):
    drive = params.make_drive(strong_derived, FOLD_PUMP, FOLD_SP)
    fps = ss.solve_selfconsistent(strong_derived, drive)
    assert len(fps) == 3
    for fp, ref in zip(fps, FOLD_ROOTS):
        assert fp.E == pytest.approx(ref, rel=1e-6)
    assert [fp.stable for fp in fps] == [True, False, True]
    assert [fp.marginal for fp in fps] == [False, False, False]


def test_unstable_root_has_negative_rate(strong_derived):
    drive = params.make_drive(strong_derived, FOLD_PUMP, FOLD_SP)
    low, mid, high = ss.solve_selfconsistent(strong_derived, drive, classify=False)
    st_mid = ss.classify_stability(mid, strong_derived, drive)
    st_high = ss.classify_stability(high, strong_derived, drive)
    assert st_mid.min_real < 0.0
    assert not st_mid.stable
    assert st_high.min_real > 0.0
    assert st_high.stable
    assert len(st_mid.eigenvalues) == 5


def test_middle_root_repels_flow(strong_derived):
    # independent check of the stability flags: integrate the equations of
    # motion from a nudged middle root and watch it fall to an outer root
    drive = params.make_drive(strong_derived, FOLD_PUMP, FOLD_SP)
    low, mid, high = ss.solve_selfconsistent(strong_derived, drive, classify=False)
    p = oracles.model_params(strong_derived, drive, "ground")

    def settle(fp, factor):
        state = oracles.fixed_point_state(fp).copy()
        state[0] *= factor
        state[1] *= factor
        out = oracles.rk4_integrate(state, p, 2.0, 6000)
        return out[0] ** 2 + out[1] ** 2

    assert settle(mid, 1.05) == pytest.approx(high.E, rel=1e-4)
    assert settle(mid, 0.95) == pytest.approx(low.E, rel=1e-6)
    assert settle(low, 1.02) == pytest.approx(low.E, rel=1e-6)


def test_fixed_points_are_stationary(strong_derived, crossing_derived):
    # every reported fixed point must zero the equations of motion
    cells = [
        (strong_derived, params.make_drive(strong_derived, FOLD_PUMP, FOLD_SP), "ground"),
        (
            crossing_derived,
            params.make_drive(crossing_derived, crossing_derived.omega_c - 0.001, 5.98e-4),
            "ground",
        ),
        (
            crossing_derived,
            params.make_drive(crossing_derived, crossing_derived.omega_c - 0.001, 5.98e-4),
            "excited",
        ),
    ]
    for derived, drive, branch in cells:
        p = oracles.model_params(derived, drive, branch)
        fps = ss.solve_selfconsistent(derived, drive, branch=branch, classify=False)
        assert fps
        for fp in fps:
            rhs = oracles.meanfield_rhs(oracles.fixed_point_state(fp), p)
            assert float(np.max(np.abs(rhs))) <= 1e-12 * max(1.0, math.sqrt(fp.E))


def test_branch_flip_mirror(strong_derived):
    # flipping the polarization sign relabels the branches but keeps the set
    drive = params.make_drive(strong_derived, FOLD_PUMP, FOLD_SP)
    mirrored = dataclasses.replace(strong_derived, P0=-strong_derived.P0)
    ground = ss.solve_selfconsistent(mirrored, drive, branch="ground", classify=False)
    excited = ss.solve_selfconsistent(strong_derived, drive, branch="excited", classify=False)
    assert [fp.E for fp in ground] == [fp.E for fp in excited]


def test_excited_branch_population_positive(crossing_derived):
    drive = params.make_drive(crossing_derived, crossing_derived.omega_c - 0.001, 1e-5)
    (ground,) = ss.solve_selfconsistent(crossing_derived, drive, classify=False)
    (excited,) = ss.solve_selfconsistent(
        crossing_derived, drive, branch="excited", classify=False
    )
    assert ground.P_z < 0.0
    assert excited.P_z > 0.0


def test_saturation_restores_bare_cavity(fast_derived):
    # a saturated qubit stops responding: the root approaches the bare
    # cavity Lorentzian, with deviation falling off as 1/S_p
    pump = fast_derived.omega_c - 0.05
    bare = lambda S, drv: S / (fast_derived.gamma_c**2 + drv.Delta_pc**2)
    devs = []
    for S in (1e3, 1e5):
        drive = params.make_drive(fast_derived, pump, S)
        top = ss.solve_selfconsistent(fast_derived, drive, classify=False)[-1]
        devs.append(abs(top.E / bare(S, drive) - 1.0))
    assert devs[1] < 1e-7
    assert 30.0 < devs[0] / devs[1] < 300.0


def test_scan_bounds_error(fast_derived):
    drive = params.make_drive(fast_derived, fast_derived.omega_c - 0.05, 1e12)
    with pytest.raises(ss.ScanBoundsError):
        ss.solve_selfconsistent(fast_derived, drive)


def test_grazing_fold_reports_marginal_pair(strong_derived):
    # manufacture an exact tangency: steer the pump until the local minimum
    # of E|D(E)|^2 sits on a scan grid point, then drive just below it
    e_star = float(ss.E_SCAN[296])

    def slope(dpc):
        drv = params.make_drive(strong_derived, 41.0 + dpc, 0.0)
        m, _ = ss._make_model(strong_derived, drv, "ground")
        h = 1e-6 * e_star
        return float(ss._residual(e_star + h, m) - ss._residual(e_star - h, m))

    lo, hi = -0.02, -0.01
    assert slope(lo) * slope(hi) < 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slope(mid) * slope(lo) <= 0.0:
            hi = mid
        else:
            lo = mid
    pump = 41.0 + 0.5 * (lo + hi)

    m0, _ = ss._make_model(strong_derived, params.make_drive(strong_derived, pump, 0.0), "ground")
    graze_sp = float(ss._residual(e_star, m0))
    graze_sp -= 0.3e-11 * ss.residual_scale(graze_sp, strong_derived.gamma_c)

    drive = params.make_drive(strong_derived, pump, graze_sp)
    fps = ss.solve_selfconsistent(strong_derived, drive, classify=False)
    assert len(fps) == 3
    assert [fp.marginal is True for fp in fps] == [False, True, True]
    assert fps[1].E == e_star
    assert fps[2].E == e_star
    assert fps[0].E < e_star


def test_decoupled_slow_qubit_flags_marginal(fast_derived):
    # with the qubit decoupled and T1 pushed out, one relaxation eigenvalue
    # sits at the margin while everything else still decays
    slow = dataclasses.replace(fast_derived, g1=0.0, T1=1e12)
    drive = params.make_drive(slow, slow.omega_c - 0.02, 0.0)
    (fp,) = ss.solve_selfconsistent(slow, drive)
    assert fp.stable is True
    assert fp.marginal is True
