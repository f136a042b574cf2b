import numpy as np
import pytest
import reference_circuits as rc
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxstoq import (
    CircuitError,
    CircuitSpec,
    HamiltonianParams,
    Junction,
    build_params,
    canonical_transform,
    potential_energy,
    potential_minimum,
    solve_spectrum,
    two_qubit_capacitance,
)
from fluxstoq.circuit import local_minima, potential_gradient, potential_hessian
from fluxstoq.spectral import FluxGrid
from fluxstoq.units import EC_GHZ_FF, EL_GHZ_NH, beta_tilde, charging_energy_matrix

# CODATA 2018 exact values, typed in rather than taken from scipy
E_CHARGE = 1.602176634e-19
PLANCK = 6.62607015e-34


def test_charging_energy_constant():
    # [DERIVED] e^2 / 2h for C = 1 fF, in GHz
    assert EC_GHZ_FF == pytest.approx(E_CHARGE**2 / (2 * PLANCK) / 1e-15 / 1e9, rel=1e-12)
    assert EC_GHZ_FF == pytest.approx(19.3702, abs=1e-4)


def test_inductive_energy_constant():
    # [DERIVED] (Phi_0 / 2 pi)^2 / h for L = 1 nH, in GHz
    phi0 = PLANCK / (2 * E_CHARGE)
    assert EL_GHZ_NH == pytest.approx((phi0 / (2 * np.pi)) ** 2 / PLANCK / 1e-9 / 1e9, rel=1e-12)


def test_beta_tilde():
    assert beta_tilde(0.5) == 2.0
    with pytest.raises(ValueError):
        beta_tilde(0.0)


def test_effective_josephson_energy_matches_table():
    params = rc.single_qubit()
    # [PAPER] Table I: E_J^eff = 760 GHz and E_J^eff / E_L = 1.08 (both rounded)
    assert params.ej_eff[0] == pytest.approx(760, rel=5e-3)
    assert params.ej_eff[0] / params.el_matrix[0, 0] == pytest.approx(1.08, abs=5e-3)
    # [DERIVED] E_J cos(phi_cjj / 2)
    assert params.ej_eff[0] == pytest.approx(1600 * np.cos(0.68555 * np.pi / 2), rel=1e-14)


@pytest.mark.parametrize("coupling_ff, paper_ec12", [(10.0, 0.008), (104.0, 0.062)])
def test_loaded_convention_reproduces_quoted_couplings(coupling_ff, paper_ec12):
    ec = charging_energy_matrix(two_qubit_capacitance(rc.QUBIT_EC, coupling_ff))
    assert np.diag(ec) == pytest.approx([rc.QUBIT_EC] * 2, rel=1e-12)
    # [PAPER] Fig. 3 and Fig. 4 captions, quoted to the last digit shown
    assert ec[0, 1] == pytest.approx(paper_ec12, abs=5e-4)


def test_bare_convention():
    cap = two_qubit_capacitance(rc.QUBIT_EC, 10.0, "bare")
    assert cap[0, 0] - 10.0 == pytest.approx(EC_GHZ_FF / rc.QUBIT_EC)
    assert cap[0, 1] == -10.0
    with pytest.raises(CircuitError):
        two_qubit_capacitance(rc.QUBIT_EC, 10.0, "other")


def test_two_qubit_charging_matrix_closed_form():
    # [DERIVED] inverse of [[a, -c], [-c, a]] is [[a, c], [c, a]] / (a^2 - c^2)
    cap = two_qubit_capacitance(0.2, 30.0, "bare")
    a, c = cap[0, 0], 30.0
    ec = charging_energy_matrix(cap)
    assert ec[0, 0] == pytest.approx(EC_GHZ_FF * a / (a * a - c * c))
    assert ec[0, 1] == pytest.approx(EC_GHZ_FF * c / (a * a - c * c))


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        ({"capacitance_ff": [[50.0, 1.0], [1.0, 50.0]]}, "positive off-diagonal"),
        ({"capacitance_ff": [[50.0, -1.0], [-2.0, 50.0]]}, "not symmetric"),
        ({"capacitance_ff": [[-5.0, 0.0], [0.0, 50.0]]}, "non-positive diagonal"),
        ({"capacitance_ff": [[1.0, -2.0], [-2.0, 1.0]]}, "not positive definite"),
        ({"inductance_nh": np.eye(2)}, "exactly one"),
        ({"inductive_energy_ghz": None}, "exactly one"),
        ({"junctions": [Junction(-1.0, 0.5), Junction(10.0, 0.5)]}, "ej_ghz"),
        ({"junctions": [Junction(10.0, 4.0), Junction(10.0, 0.5)]}, "phi_cjj"),
        ({"capacitance_ff": np.eye(3)}, "expected shape"),
    ],
)
def test_circuit_spec_rejects_invalid_input(kwargs, fragment):
    base = {
        "capacitance_ff": [[50.0, -1.0], [-1.0, 50.0]],
        "junctions": [Junction(100.0, 0.5), Junction(100.0, 0.5)],
        "inductive_energy_ghz": np.eye(2) * 500,
    }
    base.update(kwargs)
    with pytest.raises(CircuitError, match=fragment):
        CircuitSpec(**base)


def test_inductance_in_nanohenry():
    spec = CircuitSpec([[150.0]], [Junction(100.0, 0.0)], inductance_nh=[[0.5]])
    assert build_params(spec).el_matrix[0, 0] == pytest.approx(EL_GHZ_NH / 0.5)


def test_params_reject_non_positive_definite():
    with pytest.raises(CircuitError):
        HamiltonianParams(ec_matrix=[[1.0, 2.0], [2.0, 1.0]], el_matrix=np.eye(2), ej_eff=[1, 1], phi_q=[0, 0])
    with pytest.raises(CircuitError):
        HamiltonianParams(ec_matrix=[[1.0]], el_matrix=[[1.0]], ej_eff=[1, 2], phi_q=[0])


def test_params_are_immutable():
    params = rc.single_qubit()
    with pytest.raises(ValueError):
        params.el_matrix[0, 0] = 1.0


def test_single_qubit_minima_are_symmetric():
    params = rc.single_qubit()
    minima = local_minima(params)
    assert len(minima) == 2
    (a, ua), (b, ub) = minima
    assert a[0] == pytest.approx(-b[0], abs=1e-8)
    assert ua == pytest.approx(ub, abs=1e-9)
    # [DERIVED] stationarity: E_L phi = E_J sin(phi + pi) at the minimum
    phi = abs(a[0])
    assert rc.QUBIT_EL * phi == pytest.approx(-params.ej_eff[0] * np.sin(phi + np.pi), rel=1e-9)


def test_tilt_selects_one_well():
    params = rc.single_qubit(detuning=0.01)
    phi, _ = potential_minimum(params)
    others = [u for p, u in local_minima(params)[1:]]
    assert others and all(u > potential_energy(params, phi) for u in others)


@settings(max_examples=200, deadline=None)
@given(
    phi=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    coupling=st.floats(0, 120),
    detuning=st.floats(-0.1, 0.1),
    transform=st.booleans(),
)
def test_gradient_and_hessian_match_finite_differences(phi, coupling, detuning, transform):
    params = rc.qubit_pair(coupling, (detuning, -detuning), el12=3.0)
    if transform:
        params = canonical_transform(params)
    phi = np.array(phi)
    h = 1e-5
    eye = np.eye(2)
    num_grad = [(potential_energy(params, phi + h * e) - potential_energy(params, phi - h * e)) / (2 * h) for e in eye]
    assert potential_gradient(params, phi) == pytest.approx(num_grad, rel=1e-6, abs=1e-4)
    num_hess = np.array([
        (potential_gradient(params, phi + h * e) - potential_gradient(params, phi - h * e)) / (2 * h) for e in eye
    ])
    assert potential_hessian(params, phi) == pytest.approx(num_hess, rel=1e-6, abs=1e-3)


def test_canonical_transform_structure():
    params = rc.figure4()
    t = canonical_transform(params)
    assert t.s_applied and t.ec0 == pytest.approx(rc.QUBIT_EC)
    assert t.ec_matrix == pytest.approx(rc.QUBIT_EC * np.eye(2))
    # [DERIVED] S^2 = E_C / E_C0 and E_L' = S E_L S
    assert t.s_scale @ t.s_scale == pytest.approx(params.ec_matrix / rc.QUBIT_EC, rel=1e-12)
    assert t.el_matrix == pytest.approx(t.s_scale @ params.el_matrix @ t.s_scale, rel=1e-12)
    with pytest.raises(CircuitError):
        canonical_transform(t)


def test_canonical_transform_preserves_potential_values():
    params = rc.figure4()
    t = canonical_transform(params)
    rng = np.random.default_rng(3)
    phi_new = rng.uniform(-2, 2, size=(50, 2))
    assert potential_energy(t, phi_new) == pytest.approx(potential_energy(params, phi_new @ t.s_scale.T), rel=1e-12)


def test_canonical_transform_preserves_spectrum():
    # [DERIVED] the transformation is exact, so both frames share one spectrum
    params = rc.figure3()
    grid = FluxGrid(2.5, 121)
    a = solve_spectrum(params, grid, n_states=4)
    b = solve_spectrum(canonical_transform(params), grid, n_states=4)
    assert a.u_min == pytest.approx(b.u_min, abs=1e-8)
    assert a.energies == pytest.approx(b.energies, abs=2e-3)


def test_single_qubit_view():
    t = canonical_transform(rc.figure3())
    one = t.single_qubit(1)
    assert one.n == 1 and one.s_applied
    assert one.s_scale[0, 0] == pytest.approx(t.s_scale[1, 1])
    assert t.with_phi_q(np.pi).parity_symmetric
    assert not rc.figure4().parity_symmetric
    assert rc.figure4().delta_q == pytest.approx(rc.FIG4_DETUNINGS)
