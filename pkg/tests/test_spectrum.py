"""Dressed-level tests against exact diagonalization in a Fock basis.

The rotating-wave ladder must match the number-conserving Hamiltonian to
machine precision; the counter-rotating corrections must converge onto the
full Hamiltonian at fourth order in the coupling.
"""

import dataclasses
import math

import numpy as np
import pytest

import oracles
from cqed import params
from cqed import spectrum as sp

N_FOCK = 25


def _fock_lines(derived, device):
    # cavity line with the qubit parked in either eigenstate, from the
    # exact spectrum; level order pinned for omega_a > omega_c
    cot = math.sqrt(derived.omega_a**2 - device.omega_Delta**2) / device.omega_Delta
    H = oracles.fock_hamiltonian(
        derived.omega_c, derived.omega_a, derived.g1, N_FOCK,
        counter_rotating=True, cot_theta=cot,
    )
    ev = oracles.jacobi_eigvals_sym(H)
    return ev[1] - ev[0], ev[4] - ev[2]


def _bs_lines(derived):
    lv = {l.label: l.energy for l in sp.bs_levels(derived, n_max=2)}
    return lv["0-"] - lv["g"], lv["1+"] - lv["0+"]


def test_ladder_structure(detuned_derived):
    levels = sp.jc_levels(detuned_derived, n_max=3)
    assert [l.label for l in levels] == ["g", "0-", "0+", "1-", "1+", "2-", "2+", "3-", "3+"]
    assert levels[0].n is None and levels[0].sign == 0
    assert [l.n for l in levels[1:]] == [0, 0, 1, 1, 2, 2, 3, 3]
    assert [l.sign for l in levels[1:]] == [-1, 1] * 4
    assert len(sp.bs_levels(detuned_derived, n_max=1)) == 5


def test_rotating_ladder_matches_number_conserving_hamiltonian(detuned_derived):
    # identical spectra up to the common origin shift of omega_c/2
    levels = sp.jc_levels(detuned_derived, n_max=2)
    H = oracles.fock_hamiltonian(
        detuned_derived.omega_c, detuned_derived.omega_a, detuned_derived.g1,
        N_FOCK, counter_rotating=False,
    )
    ev = oracles.jacobi_eigvals_sym(H)
    for level in levels:
        target = level.energy - 0.5 * detuned_derived.omega_c
        assert float(np.min(np.abs(ev - target))) < 1e-11


def test_doublet_splitting_formula(detuned_derived, crossing_derived):
    for derived in (detuned_derived, crossing_derived):
        delta = derived.omega_c - derived.omega_a
        by_label = {l.label: l.energy for l in sp.jc_levels(derived, n_max=3)}
        for n in range(4):
            split = by_label[f"{n}+"] - by_label[f"{n}-"]
            expect = math.sqrt(delta**2 + 4.0 * derived.g1**2 * (n + 1))
            assert split == pytest.approx(expect, rel=1e-14)


def test_resonant_splitting_is_twice_coupling(crossing_derived):
    # at zero detuning the lowest doublet splits by exactly 2 g1 sqrt(n+1)
    assert abs(crossing_derived.omega_c - crossing_derived.omega_a) < 1e-9
    by_label = {l.label: l.energy for l in sp.jc_levels(crossing_derived, n_max=1)}
    split0 = by_label["0+"] - by_label["0-"]
    assert split0 == pytest.approx(2.0 * crossing_derived.g1, rel=1e-9)


def test_splittings_grow_with_photon_number(detuned_derived):
    for maker in (sp.jc_levels, sp.bs_levels):
        by_label = {l.label: l.energy for l in maker(detuned_derived, n_max=3)}
        splits = [by_label[f"{n}+"] - by_label[f"{n}-"] for n in range(4)]
        assert splits == sorted(splits)
        assert splits[0] < splits[3]


def test_decoupled_ladders_coincide(detuned_derived):
    bare = dataclasses.replace(detuned_derived, g1=0.0)
    jc = sp.jc_levels(bare, n_max=3)
    bs = sp.bs_levels(bare, n_max=3)
    assert [l.energy for l in jc] == [l.energy for l in bs]
    delta = bare.omega_c - bare.omega_a
    by_label = {l.label: l.energy for l in jc}
    assert by_label["g"] == 0.5 * delta
    assert by_label["1-"] == pytest.approx(2.0 * bare.omega_c - 0.5 * abs(delta), rel=1e-14)


def test_counter_rotating_ladder_matches_exact_spectrum(detuned_derived, device):
    # absolute accuracy at the device coupling, then fourth-order shrinkage
    # of the error as the coupling is halved twice
    errors = []
    for factor in (1.0, 0.5, 0.25):
        scaled = dataclasses.replace(detuned_derived, g1=detuned_derived.g1 * factor)
        bs_g, bs_e = _bs_lines(scaled)
        ex_g, ex_e = _fock_lines(scaled, device)
        errors.append((abs(bs_g - ex_g), abs(bs_e - ex_e)))
    assert errors[0][0] < 3e-4
    assert errors[0][1] < 3e-4
    for k in (0, 1):
        assert 8.0 < errors[0][k] / errors[1][k] < 32.0
        assert 8.0 < errors[1][k] / errors[2][k] < 32.0


def test_linear_lines_match_ladder_differences(device):
    # the closed-form dispersive lines agree with the ladder spacings to
    # fourth order in the coupling
    for wf_ghz in (8.1, 7.5):
        derived = params.derive(device, params.ghz_to_angular(wf_ghz))
        lin_g, lin_e = sp.linear_resonances(derived)
        bs_g, bs_e = _bs_lines(derived)
        bound = 4.0 * derived.g1**4 / abs(derived.omega_c - derived.omega_a) ** 3
        assert abs(lin_g - bs_g) <= bound
        assert abs(lin_e - bs_e) <= bound


def test_ground_line_sits_below_excited_for_high_qubit(detuned_derived):
    # qubit above the cavity pushes the ground-state line down
    lin_g, lin_e = sp.linear_resonances(detuned_derived)
    assert detuned_derived.omega_a > detuned_derived.omega_c
    assert lin_g < detuned_derived.omega_c < lin_e


def test_longitudinal_shift_at_symmetry_point(device):
    # at zero flux bias the longitudinal coupling vanishes and the global
    # shift collapses onto the counter-rotating one
    derived = params.derive(device, 0.0)
    assert derived.cos_theta == 0.0
    w_bs = derived.g1**2 / (derived.omega_c + derived.omega_a)
    ground = sp.bs_levels(derived, n_max=0)[0]
    delta = derived.omega_c - derived.omega_a
    assert ground.energy == pytest.approx(0.5 * delta - w_bs, rel=1e-14)


def test_domain_warning(detuned_derived):
    huge = dataclasses.replace(
        detuned_derived, g1=0.25 * (detuned_derived.omega_c + detuned_derived.omega_a)
    )
    with pytest.warns(UserWarning, match="domain"):
        sp.bs_levels(huge, n_max=0)


def test_dispersive_refusal(crossing_derived, detuned_derived):
    with pytest.raises(ValueError, match="dispersive"):
        sp.linear_resonances(crossing_derived)
    strong = dataclasses.replace(
        detuned_derived,
        g1=0.4 * abs(detuned_derived.omega_c - detuned_derived.omega_a),
    )
    with pytest.raises(ValueError, match="dispersive"):
        sp.linear_resonances(strong)
