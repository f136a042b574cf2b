import numpy as np
import pytest
import reference_circuits as rc
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import rotated_pair_spectrum

from fluxstoq import HamiltonianParams, solve_spectrum, thermal_average_energy
from fluxstoq.spectral import (
    FluxGrid,
    SpectralError,
    computational_basis,
    kinetic_expectation,
    load_spectrum,
    matrix_element,
    operator_element,
    parity_defect,
    save_spectrum,
    virial_expectation,
)


def harmonic_params(ec, el):
    return HamiltonianParams(ec_matrix=np.atleast_2d(ec), el_matrix=np.atleast_2d(el),
                             ej_eff=np.zeros(np.atleast_2d(ec).shape[0]), phi_q=np.zeros(np.atleast_2d(ec).shape[0]))


def test_default_grids():
    assert FluxGrid.default(1) == FluxGrid(3.0, 401)
    assert FluxGrid.default(2) == FluxGrid(2.5, 201)
    with pytest.raises(ValueError):
        FluxGrid(1.0, 8)
    with pytest.raises(ValueError):
        FluxGrid(-1.0, 100)


def test_harmonic_single_mode_spacing():
    # [DERIVED] E_J = 0 gives levels sqrt(8 E_C E_L) (n + 1/2)
    ec, el = 0.124, 704.0
    res = solve_spectrum(harmonic_params(ec, el), FluxGrid(1.5, 801), n_states=6)
    omega = np.sqrt(8 * ec * el)
    assert res.energies == pytest.approx(omega * (np.arange(6) + 0.5), rel=1e-3)


def test_harmonic_two_mode_frequencies():
    # [DERIVED] coupled oscillator: frequencies are sqrt of the eigenvalues of 8 E_C E_L
    ec = np.array([[0.124, 0.03], [0.03, 0.124]])
    el = np.array([[704.0, 20.0], [20.0, 650.0]])
    omega = np.sort(np.sqrt(np.linalg.eigvals(8 * ec @ el).real))
    res = solve_spectrum(harmonic_params(ec, el), FluxGrid(1.2, 121), n_states=3)
    expected = np.sort([0.5 * omega.sum(), 0.5 * omega.sum() + omega[0], 0.5 * omega.sum() + omega[1]])
    assert res.energies == pytest.approx(expected, rel=2e-3)


def test_tunnel_coupling_table1(table1_spectrum):
    # [PAPER] Table I caption: Delta/h = 1.36 GHz
    assert table1_spectrum.gap == pytest.approx(1.36, rel=1e-2)


def test_single_qubit_grid_convergence(table1_spectrum):
    fine = solve_spectrum(rc.single_qubit(), FluxGrid(3.5, 1201), n_states=4)
    assert table1_spectrum.energies[:4] == pytest.approx(fine.energies, rel=5e-4)
    assert table1_spectrum.gap == pytest.approx(fine.gap, rel=1e-3)


@pytest.mark.parametrize("which", ["figure3", "figure4_untilted"])
def test_two_qubit_spectrum_matches_rotated_solver(which):
    params = rc.figure3() if which == "figure3" else rc.qubit_pair(rc.FIG4_COUPLING_FF)
    ours = solve_spectrum(params, n_states=4)
    assert ours.energies == pytest.approx(rotated_pair_spectrum(params), abs=5e-3)


def test_tilted_pair_against_rotated_solver(figure4_spectrum):
    # the tilts break the exchange symmetry but not the diagonal form of E_C in rotated coordinates
    assert figure4_spectrum.energies[:4] == pytest.approx(rotated_pair_spectrum(rc.figure4()), abs=5e-3)


def test_normalization_and_orthogonality(table1_spectrum):
    res = table1_spectrum
    h = res.grid.spacing
    overlap = np.einsum("ix,jx->ij", res.states[:6], res.states[:6]) * h
    assert overlap == pytest.approx(np.eye(6), abs=1e-10)
    assert res.normalization(0) == pytest.approx(1.0)


def test_parity_alternates_for_symmetric_qubit(table1_spectrum):
    for i in range(6):
        parity, defect = parity_defect(table1_spectrum, i)
        assert parity == (1 if i % 2 == 0 else -1)
        assert defect < 1e-8


def test_virial_identity_on_eigenstates(table1_spectrum, figure3_spectrum):
    # [DERIVED] <T> = 1/2 <phi . grad U> for every bound eigenstate
    for res in (table1_spectrum, figure3_spectrum):
        for i in range(4):
            assert kinetic_expectation(res, i) == pytest.approx(virial_expectation(res, i), rel=5e-3)


def test_charge_and_flux_matrix_elements_obey_commutator(table1_spectrum):
    # [DERIVED] [H, phi] = -8 i E_C q  =>  <g|q|e> = -i (E_e - E_g) <g|phi|e> / (8 E_C)
    res = table1_spectrum
    flux = matrix_element(res, "flux", 0, 1)
    charge = matrix_element(res, "charge", 0, 1)
    assert abs(flux.imag) < 1e-12 and abs(charge.real) < 1e-12
    assert charge == pytest.approx(-1j * res.gap * flux / (8 * rc.QUBIT_EC), rel=1e-2)
    assert abs(matrix_element(res, "flux", 0, 0)) < 1e-10
    with pytest.raises(IndexError):
        matrix_element(res, "flux", 0, 99)
    with pytest.raises(ValueError):
        operator_element(res.grid, res.states[0], res.states[1], "momentum")


def test_computational_basis_is_well_localized(table1_spectrum):
    left, right = computational_basis(table1_spectrum)
    x = table1_spectrum.grid.axis
    h = table1_spectrum.grid.spacing
    assert np.sum(x * left**2) * h < -0.5
    assert np.sum(x * right**2) * h > 0.5
    assert np.sum(left * right) * h == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(SpectralError):
        computational_basis(solve_spectrum(rc.single_qubit(0.05), n_states=2))


def test_thermal_average_limits(table1_spectrum):
    e = table1_spectrum.energies
    assert thermal_average_energy(table1_spectrum, 1e3) == pytest.approx(e[0], abs=1e-6)
    # [DERIVED] Boltzmann average over the retained levels
    b = 2.0
    w = np.exp(-b * (e - e[0]))
    assert thermal_average_energy(table1_spectrum, b) == pytest.approx(np.sum(e * w) / np.sum(w), rel=1e-12)


def test_thermal_average_refuses_truncated_spectrum():
    res = solve_spectrum(rc.single_qubit(), n_states=2)
    with pytest.raises(SpectralError, match="insufficient"):
        thermal_average_energy(res, 0.1)


def test_grid_must_cover_minima():
    with pytest.raises(SpectralError, match="does not cover"):
        solve_spectrum(rc.single_qubit(), FluxGrid(1.0, 101))


def test_solver_limits():
    with pytest.raises(SpectralError):
        solve_spectrum(rc.single_qubit(), n_states=0)
    three = HamiltonianParams(ec_matrix=np.eye(3), el_matrix=np.eye(3), ej_eff=[0, 0, 0], phi_q=[0, 0, 0])
    with pytest.raises(SpectralError, match="at most 2"):
        solve_spectrum(three)


@pytest.mark.parametrize("suffix", [".npz", ".json"])
def test_save_load_round_trip(tmp_path, suffix):
    res = solve_spectrum(rc.single_qubit(0.01), FluxGrid(3.0, 101), n_states=3)
    loaded = load_spectrum(save_spectrum(res, tmp_path / f"s{suffix}"))
    assert loaded.energies == pytest.approx(res.energies, rel=1e-14)
    assert loaded.states == pytest.approx(res.states, rel=1e-12)
    assert loaded.grid == res.grid and loaded.u_min == res.u_min
    assert loaded.params.to_dict() == res.params.to_dict()
    bare = load_spectrum(save_spectrum(res, tmp_path / f"e{suffix}", include_states=False))
    assert bare.states.size == 0


@settings(max_examples=25, deadline=None)
@given(el=st.floats(300, 900), ec=st.floats(0.05, 0.5))
def test_harmonic_ground_energy_property(el, ec):
    omega = np.sqrt(8 * ec * el)
    width = (8 * ec / el) ** 0.25
    res = solve_spectrum(harmonic_params(ec, el), FluxGrid(12 * width, 601), n_states=2)
    assert res.energies == pytest.approx([omega / 2, 1.5 * omega], rel=1e-3)
