from functools import reduce

import numpy as np
import pytest
import reference_circuits as rc
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxstoq import canonical_transform, solve_spectrum, thermal_average_energy
from fluxstoq.qubits import (
    ENERGY_BASIS,
    PAULI,
    WELL_BASIS,
    ProjectionError,
    QubitModel,
    beta_rank,
    build_tim,
    pauli_coefficients,
    project_symmetric_energy_basis,
    project_two_qubit,
    thermal_energy_dense,
    tim_from_params,
    well_to_energy_basis,
)
from fluxstoq.spectral import computational_basis, operator_element

X, Y, Z, I2 = (PAULI[p] for p in "XYZI")


def kron(*ops):
    return reduce(np.kron, ops)


def singles(params):
    return [solve_spectrum(params.single_qubit(k), n_states=4) for k in range(2)]


@pytest.fixture(scope="module")
def symmetric_singles():
    return singles(rc.figure3())


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_pauli_coefficients_reconstruct_operator(c):
    op = c[0] * I2 + c[1] * X + c[2] * Y + c[3] * Z
    assert pauli_coefficients(op) == pytest.approx(np.array(c, dtype=complex), abs=1e-12)


def test_dense_matrix_against_explicit_kron():
    # [DERIVED] H = c - D1/2 X1 - D2/2 X2 - e1/2 Z1 + J Z1 Z2 + K Y1 X2
    beta = np.zeros((3, 3))
    beta[2, 2], beta[1, 0] = 0.3, -0.2
    m = QubitModel(2, [1.0, 1.5], [0.4, 0.0], (((0, 1), beta),), offset=2.0)
    expected = (2.0 * np.eye(4) - 0.5 * kron(X, I2) - 0.75 * kron(I2, X) - 0.2 * kron(Z, I2)
                + 0.3 * kron(Z, Z) - 0.2 * kron(Y, X))
    assert m.dense_matrix() == pytest.approx(expected, abs=1e-14)
    assert m.coupling(0, 1) == pytest.approx(beta)
    assert not m.is_tim


def test_model_validation_and_serialization():
    with pytest.raises(ProjectionError):
        QubitModel(1, [-1.0], [0.0])
    with pytest.raises(ProjectionError):
        QubitModel(2, [1, 1], [0, 0], (((1, 0), np.eye(3)),))
    with pytest.raises(ProjectionError):
        QubitModel(2, [1, 1], [0, 0], basis_tag="other")
    beta = np.diag([0.0, 0.1, -0.2])
    m = QubitModel(2, [1.0, 2.0], [0.1, -0.1], (((0, 1), beta),), ENERGY_BASIS, 3.5, np.ones((2, 3)) * 0.01)
    back = QubitModel.from_json(m.to_json())
    assert back.to_dict() == m.to_dict()
    assert back.dense_matrix() == pytest.approx(m.dense_matrix())


def test_beta_rank():
    assert beta_rank(np.zeros((3, 3))) == 0
    assert beta_rank(np.outer([1, 2, 0], [0, 1, 1])) == 1
    assert beta_rank(np.diag([1.0, 1.0, 0.0])) == 2


def _well_elements(result, op):
    left, right = computational_basis(result)
    return operator_element(result.grid, left, right, op), operator_element(result.grid, left, left, op), \
        operator_element(result.grid, right, right, op)


def test_well_basis_couplings_from_matrix_elements(symmetric_singles):
    q1, q2 = symmetric_singles
    ec12, el12 = 0.05, 0.7
    model = project_two_qubit(q1, q2, ec12, el12)
    beta = model.coupling(0, 1)
    q01 = [_well_elements(q, "charge")[0] for q in (q1, q2)]
    f = [_well_elements(q, "flux") for q in (q1, q2)]
    # [DERIVED] Y coefficient of the charge operator is -Im<0|q|1>, so J_YY = -8 E_C12 <0|q1|1><0|q2|1>
    assert beta[1, 1] == pytest.approx((-8 * ec12 * q01[0] * q01[1]).real, rel=1e-9)
    # [DERIVED] Z coefficient of the flux operator is (<0|phi|0> - <1|phi|1>) / 2
    cz = [(a[1] - a[2]).real / 2 for a in f]
    assert beta[2, 2] == pytest.approx(el12 * cz[0] * cz[1], rel=1e-9)
    assert beta[0, 0] == 0 and beta[0, 2] == 0
    assert model.delta == pytest.approx([q1.gap, q2.gap])
    assert model.epsilon == pytest.approx([0, 0])


def test_energy_basis_couplings_from_matrix_elements(symmetric_singles):
    q1, q2 = symmetric_singles
    ec12, el12 = 0.05, 0.7
    beta = project_symmetric_energy_basis(q1, q2, ec12, el12).coupling(0, 1)
    qge = [operator_element(q.grid, q.states[0], q.states[1], "charge") for q in (q1, q2)]
    fge = [operator_element(q.grid, q.states[0], q.states[1], "flux") for q in (q1, q2)]
    assert beta[1, 1] == pytest.approx((-8 * ec12 * qge[0] * qge[1]).real, rel=1e-9)
    assert beta[0, 0] == pytest.approx((el12 * fge[0] * fge[1]).real, rel=1e-9)
    assert np.count_nonzero(beta) == 2


def test_energy_and_well_basis_are_unitarily_equivalent(symmetric_singles):
    well = project_two_qubit(*symmetric_singles, 0.06, 0.1)
    energy = project_symmetric_energy_basis(*symmetric_singles, 0.06, 0.1)
    assert well_to_energy_basis(well).dense_matrix() == pytest.approx(energy.dense_matrix(), abs=1e-12)
    assert np.linalg.eigvalsh(well.dense_matrix()) == pytest.approx(np.linalg.eigvalsh(energy.dense_matrix()))
    with pytest.raises(ProjectionError):
        well_to_energy_basis(energy)


@pytest.mark.parametrize("el12, tolerance", [(0.0, [0.03] * 4), (2.0, [0.03, 0.03, 0.03, 0.15])])
def test_projected_levels_track_circuit_spectrum(figure3_spectrum, el12, tolerance):
    # lowest-order projection; the top level of the strongly coupled case carries a second-order shift
    params = rc.qubit_pair(rc.FIG3_COUPLING_FF, el12=el12)
    exact = figure3_spectrum if el12 == 0 else solve_spectrum(params, n_states=4)
    model = project_two_qubit(*singles(params), params.ec_matrix[0, 1], el12)
    levels = np.linalg.eigvalsh(model.dense_matrix())
    assert np.all(np.abs(levels - exact.energies[:4]) < tolerance)


def test_figure4_projection_has_mixed_couplings():
    params = rc.figure4()
    model = project_two_qubit(*singles(params), params.ec_matrix[0, 1], 0.1)
    beta = model.coupling(0, 1)
    assert abs(beta[1, 1]) > abs(beta[2, 2]) > 0
    assert np.all(model.epsilon != 0)
    # [DERIVED] tilt field: eps = 2 E_J delta <0|sin phi|0>, opposite signs of tilt and well position
    assert model.epsilon[1] == pytest.approx(2 * model.epsilon[0], rel=1e-3)


def test_energy_basis_requires_symmetric_qubits():
    params = rc.figure4()
    with pytest.raises(ProjectionError):
        project_symmetric_energy_basis(*singles(params), 0.06, 0.0)


def test_tim_without_capacitive_coupling_equals_well_projection():
    # [DERIVED] with C_c = 0 the transformation is trivial and only E_L12 couples the qubits
    detunings = (0.002, -0.001)
    params = rc.qubit_pair(0.0, detunings, el12=1.5)
    tim = tim_from_params(canonical_transform(params))
    proj = project_two_qubit(*singles(params), 0.0, 1.5)
    assert tim.is_tim
    assert tim.dense_matrix() == pytest.approx(proj.dense_matrix(), abs=1e-6)


def test_tim_weak_coupling(figure3_spectrum):
    tim = tim_from_params(canonical_transform(rc.figure3()))
    assert tim.is_tim
    j = tim.coupling(0, 1)[2, 2]
    assert 0 < j < 0.1
    # transformed single-qubit tunneling stays close to the bare value
    assert tim.delta == pytest.approx([1.36] * 2, rel=0.05)
    levels = np.linalg.eigvalsh(tim.dense_matrix())
    assert levels[0] == pytest.approx(figure3_spectrum.ground_energy, rel=0.02)
    exact = thermal_average_energy(figure3_spectrum, 1 / 0.93)
    assert thermal_energy_dense(tim, 1 / 0.93) == pytest.approx(exact, rel=0.02)


def test_build_tim_input_checks(symmetric_singles):
    with pytest.raises(ProjectionError):
        build_tim(symmetric_singles, rc.figure3())
    with pytest.raises(ProjectionError):
        build_tim(symmetric_singles[:1], canonical_transform(rc.figure3()))


def test_thermal_energy_dense_two_level():
    m = QubitModel(1, [2.0], [0.0], offset=1.0)
    b = 0.7
    # [DERIVED] levels 1 -+ 1
    assert thermal_energy_dense(m, b) == pytest.approx(1.0 - np.tanh(b), rel=1e-12)
    assert m.basis_tag == WELL_BASIS
