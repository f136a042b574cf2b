"""Effective qubit Hamiltonians from lowest-order projection onto the two lowest
states of each flux qubit.

Models are stored as Pauli coefficients in GHz:

    H/h = offset + sum_k h_k . sigma_k + sum_(k,l) sigma_k^T beta_kl sigma_l

with sigma = (X, Y, Z). In the well basis the local fields are
``(-delta/2, 0, -epsilon/2)``; in the energy basis they are ``(-epsilon/2, 0, -delta/2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.optimize import minimize

from .circuit import HamiltonianParams, local_minima, potential_minimum
from .spectral import SpectralError, SpectralResult, computational_basis, operator_element, solve_spectrum

WELL_BASIS = "well_basis"
ENERGY_BASIS = "energy_basis"
PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
XYZ = ("X", "Y", "Z")


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QubitModel:
    n_qubits: int
    delta: np.ndarray
    epsilon: np.ndarray
    couplings: tuple = ()
    basis_tag: str = WELL_BASIS
    offset: float = 0.0
    extra_fields: np.ndarray | None = field(default=None)

    def __post_init__(self):
        n = self.n_qubits
        delta = np.asarray(self.delta, dtype=float).reshape(n)
        eps = np.asarray(self.epsilon, dtype=float).reshape(n)
        if np.any(delta < 0):
            raise ProjectionError("tunnel couplings must be non-negative")
        if self.basis_tag not in (WELL_BASIS, ENERGY_BASIS):
            raise ProjectionError(f"unknown basis tag {self.basis_tag!r}")
        pairs = []
        for pair, beta in self.couplings:
            k, l = (int(i) for i in pair)
            beta = np.asarray(beta, dtype=float)
            if not (0 <= k < l < n) or beta.shape != (3, 3):
                raise ProjectionError(f"invalid coupling record for pair {pair}")
            pairs.append(((k, l), beta))
        extra = np.zeros((n, 3)) if self.extra_fields is None else np.asarray(self.extra_fields, dtype=float)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "couplings", tuple(pairs))
        object.__setattr__(self, "extra_fields", extra.reshape(n, 3))

    def local_fields(self) -> np.ndarray:
        """(N, 3) array of X, Y, Z coefficients."""
        f = np.zeros((self.n_qubits, 3))
        if self.basis_tag == WELL_BASIS:
            f[:, 0], f[:, 2] = -self.delta / 2, -self.epsilon / 2
        else:
            f[:, 0], f[:, 2] = -self.epsilon / 2, -self.delta / 2
        return f + self.extra_fields

    def coupling(self, k: int, l: int) -> np.ndarray:
        total = np.zeros((3, 3))
        for (a, b), beta in self.couplings:
            if (a, b) == (k, l):
                total += beta
        return total

    @property
    def is_tim(self) -> bool:
        """Only Z-Z couplings and no Y fields (well-basis TIM form)."""
        zz_only = all(np.all(np.delete(beta.ravel(), 8) == 0) for _, beta in self.couplings)
        return self.basis_tag == WELL_BASIS and zz_only and not np.any(self.extra_fields)

    def dense_matrix(self) -> np.ndarray:
        return dense_pauli_matrix(self.local_fields(), self.couplings, self.offset)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "basis_tag": self.basis_tag,
            "delta_ghz": self.delta.tolist(),
            "epsilon_ghz": self.epsilon.tolist(),
            "offset_ghz": self.offset,
            "extra_fields_ghz": self.extra_fields.tolist(),
            "couplings": [{"pair": list(p), "beta_ghz": b.tolist()} for p, b in self.couplings],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> QubitModel:
        return cls(
            n_qubits=d["n_qubits"],
            delta=d["delta_ghz"],
            epsilon=d["epsilon_ghz"],
            couplings=tuple((tuple(c["pair"]), c["beta_ghz"]) for c in d.get("couplings", [])),
            basis_tag=d.get("basis_tag", WELL_BASIS),
            offset=d.get("offset_ghz", 0.0),
            extra_fields=d.get("extra_fields_ghz"),
        )

    @classmethod
    def from_json(cls, text: str) -> QubitModel:
        return cls.from_dict(json.loads(text))


def site_operator(op: np.ndarray, k: int, n: int) -> np.ndarray:
    """Embed a 2x2 operator on qubit ``k`` (qubit 0 is the most significant bit)."""
    mats = [PAULI["I"]] * n
    mats[k] = op
    return reduce(np.kron, mats)


def dense_pauli_matrix(fields, couplings, offset=0.0) -> np.ndarray:
    fields = np.asarray(fields, dtype=float)
    n = fields.shape[0]
    ops = [[site_operator(PAULI[p], k, n) for p in XYZ] for k in range(n)]
    h = offset * np.eye(2**n, dtype=complex)
    for k in range(n):
        for a in range(3):
            h += fields[k, a] * ops[k][a]
    for (k, l), beta in couplings:
        for a in range(3):
            for b in range(3):
                if beta[a, b]:
                    h += beta[a, b] * ops[k][a] @ ops[l][b]
    return h


def pauli_coefficients(op2: np.ndarray) -> np.ndarray:
    """(I, X, Y, Z) coefficients c_P = Tr(P O)/2 of a 2x2 operator."""
    return np.array([np.trace(PAULI[p] @ op2) / 2 for p in ("I",) + XYZ])


def _restricted(grid, basis, op_kind, s_kk=1.0):
    return np.array([[operator_element(grid, a, b, op_kind, 0, s_kk) for b in basis] for a in basis])


def _symmetric_result(result: SpectralResult) -> SpectralResult:
    """Spectrum of the same qubit at the symmetry point phi_q = pi."""
    if result.n != 1:
        raise ProjectionError("projection expects single-qubit spectra")
    if result.params.parity_symmetric:
        return result
    return solve_spectrum(result.params.with_phi_q(np.pi), result.grid, n_states=max(2, len(result.energies)))


@dataclass(frozen=True)
class _QubitData:
    """Two-level restriction of one flux qubit in a chosen basis."""

    tunnel: float
    level_mean: float
    u_min: float
    flux: np.ndarray
    charge: np.ndarray
    sin_flux: np.ndarray
    detuning: float
    ej: float


def _qubit_data(result: SpectralResult, basis_tag: str) -> _QubitData:
    sym = _symmetric_result(result)
    try:
        if basis_tag == WELL_BASIS:
            basis = computational_basis(sym)
        else:
            basis = (sym.states[0], sym.states[1])
            computational_basis(sym)  # parity check
    except SpectralError as exc:
        raise ProjectionError(f"computational basis unavailable: {exc}") from None
    s_kk = sym.params.s_scale[0, 0]
    return _QubitData(
        tunnel=sym.gap,
        level_mean=0.5 * float(sym.energies[0] + sym.energies[1]),
        u_min=float(sym.u_min),
        flux=_restricted(sym.grid, basis, "flux"),
        charge=_restricted(sym.grid, basis, "charge"),
        sin_flux=_restricted(sym.grid, basis, "sin_scaled_flux", s_kk),
        detuning=float(result.params.delta_q[0]),
        ej=float(result.params.ej_eff[0]),
    )


def _pair_params(q1: SpectralResult, q2: SpectralResult, ec12: float, el12: float) -> HamiltonianParams:
    """Two-qubit circuit Hamiltonian assembled from the single-qubit parameters and the couplings."""
    a, b = q1.params, q2.params
    return HamiltonianParams(
        ec_matrix=[[a.ec_matrix[0, 0], ec12], [ec12, b.ec_matrix[0, 0]]],
        el_matrix=[[a.el_matrix[0, 0], el12], [el12, b.el_matrix[0, 0]]],
        ej_eff=[a.ej_eff[0], b.ej_eff[0]],
        phi_q=[a.phi_q[0], b.phi_q[0]],
    )


def _zero_shift(data, u_ref: float) -> float:
    """Offset that moves the energy zero from the single-qubit minima to ``u_ref``."""
    return float(sum(d.u_min for d in data) - u_ref)


def _linearized_potential(params: HamiltonianParams, phi) -> float:
    """Potential kept by the TIM: single-qubit terms, E'_L cross terms and Josephson cross terms to first order."""
    s, el, ej = params.s_scale, params.el_matrix, params.ej_eff
    own = np.diag(s) * phi + params.phi_q
    cross = s @ phi - np.diag(s) * phi
    return float(0.5 * phi @ el @ phi - ej @ np.cos(own) + (ej * np.sin(own)) @ cross)


def _linearized_minimum(params: HamiltonianParams) -> float:
    starts = [np.asarray(phi) for phi, _ in local_minima(params)]
    best = min((minimize(lambda x: _linearized_potential(params, x), x0, method="BFGS", options={"gtol": 1e-10})
                for x0 in starts), key=lambda r: r.fun)
    return float(best.fun)


def _project_pair(d1: _QubitData, d2: _QubitData, ec12: float, el12: float, basis_tag: str,
                  u_min_full: float) -> QubitModel:
    c = {name: (pauli_coefficients(getattr(d1, name)), pauli_coefficients(getattr(d2, name))) for name in ("flux", "charge")}
    full = 8 * ec12 * np.outer(*c["charge"]) + el12 * np.outer(*c["flux"])
    if np.max(np.abs(full.imag)) > 1e-9 * max(1.0, np.max(np.abs(full))):
        raise ProjectionError("projected coupling has complex Pauli coefficients")
    full = full.real
    beta = _clean(full[1:, 1:])
    extra = np.zeros((2, 3))
    extra[0] += full[1:, 0]
    extra[1] += full[0, 1:]
    fields_eps = np.zeros(2)
    for i, d in enumerate((d1, d2)):
        # -E_J delta sin(phi) restricted to the two levels: Z coefficient in the well basis
        sin_c = pauli_coefficients(d.sin_flux).real
        tilt = -d.ej * d.detuning * sin_c
        if basis_tag == WELL_BASIS:
            fields_eps[i] = -2 * tilt[3]
            extra[i] += [tilt[1], tilt[2], 0.0]
        else:
            extra[i] += tilt[1:]
    return QubitModel(
        n_qubits=2,
        delta=[d1.tunnel, d2.tunnel],
        epsilon=fields_eps,
        couplings=(((0, 1), beta),),
        basis_tag=basis_tag,
        offset=d1.level_mean + d2.level_mean + float(full[0, 0]) + _zero_shift((d1, d2), u_min_full),
        extra_fields=_clean(extra),
    )


def _clean(a, tol=1e-12):
    a = np.array(a, dtype=float)
    a[np.abs(a) < tol] = 0.0
    return a


def project_two_qubit(q1: SpectralResult, q2: SpectralResult, ec12: float, el12: float) -> QubitModel:
    """Well-basis model of two coupled flux qubits.

    The coupling ``8 E_C12 q1 q2 + E_L12 phi1 phi2`` is projected term by term onto
    the well states, so J_YY = 8 E_C12 c_Y(q1) c_Y(q2) with c_Y the Pauli-Y
    coefficient of each charge operator. Tilts come from each result's ``phi_q``;
    the well states are always taken at the symmetry point. The offset places the
    energy zero at the minimum of the coupled two-qubit potential.
    """
    u_min = potential_minimum(_pair_params(q1, q2, ec12, el12))[1]
    return _project_pair(_qubit_data(q1, WELL_BASIS), _qubit_data(q2, WELL_BASIS), ec12, el12, WELL_BASIS, u_min)


def project_symmetric_energy_basis(q1: SpectralResult, q2: SpectralResult, ec12: float, el12: float) -> QubitModel:
    """Energy-basis projection for two symmetric qubits: local Z fields plus XX and YY couplings."""
    for q in (q1, q2):
        if not q.params.parity_symmetric:
            raise ProjectionError("energy-basis projection requires phi_q = pi for both qubits")
    u_min = potential_minimum(_pair_params(q1, q2, ec12, el12))[1]
    return _project_pair(_qubit_data(q1, ENERGY_BASIS), _qubit_data(q2, ENERGY_BASIS), ec12, el12, ENERGY_BASIS, u_min)


def well_to_energy_basis(model: QubitModel) -> QubitModel:
    """Relabel a well-basis model in the energy basis (Hadamard on every qubit)."""
    if model.basis_tag != WELL_BASIS:
        raise ProjectionError("model is not in the well basis")
    flip = np.array([[0, 0, 1], [0, -1, 0], [1, 0, 0]], dtype=float)
    return QubitModel(
        n_qubits=model.n_qubits,
        delta=model.delta,
        epsilon=model.epsilon,
        couplings=tuple((p, flip @ b @ flip.T) for p, b in model.couplings),
        basis_tag=ENERGY_BASIS,
        offset=model.offset,
        extra_fields=model.extra_fields @ flip.T,
    )


def build_tim(single_qubit_results, params: HamiltonianParams) -> QubitModel:
    """Transverse-field Ising model from canonically transformed parameters.

    ``single_qubit_results[k]`` is the spectrum of ``params.single_qubit(k)``.
    Z-Z couplings collect the inductive term and both Josephson cross terms,
    each evaluated in the well basis:

        J_kl = E'_Lkl <phi_k><phi_l> - E_Jk S_kl <sin_k><phi_l> - E_Jl S_lk <sin_l><phi_k>

    The offset places the energy zero at the minimum of the potential the TIM
    keeps, i.e. with the Josephson cross terms linearized in S_kl.
    """
    if not params.s_applied:
        raise ProjectionError("build_tim requires canonically transformed parameters")
    n = params.n
    if len(single_qubit_results) != n:
        raise ProjectionError("need one single-qubit spectrum per qubit")
    data = [_qubit_data(r, WELL_BASIS) for r in single_qubit_results]
    phi0 = np.array([d.flux[0, 0].real for d in data])
    sin0 = np.array([d.sin_flux[0, 0].real for d in data])
    ej = params.ej_eff
    s, el = params.s_scale, params.el_matrix
    couplings = []
    for k in range(n):
        for l in range(k + 1, n):
            j = el[k, l] * phi0[k] * phi0[l] - ej[k] * s[k, l] * sin0[k] * phi0[l] - ej[l] * s[l, k] * sin0[l] * phi0[k]
            beta = np.zeros((3, 3))
            beta[2, 2] = j
            couplings.append(((k, l), beta))
    return QubitModel(
        n_qubits=n,
        delta=[d.tunnel for d in data],
        epsilon=2 * ej * params.delta_q * sin0,
        couplings=tuple(couplings),
        basis_tag=WELL_BASIS,
        offset=float(sum(d.level_mean for d in data)) + _zero_shift(data, _linearized_minimum(params)),
    )


def tim_from_params(params: HamiltonianParams, grid=None) -> QubitModel:
    """Solve each effective single-qubit Hamiltonian and assemble the TIM."""
    results = [solve_spectrum(params.single_qubit(k), grid, n_states=4) for k in range(params.n)]
    return build_tim(results, params)


def thermal_energy_dense(model: QubitModel, beta_tilde: float) -> float:
    w = np.linalg.eigvalsh(model.dense_matrix())
    x = -beta_tilde * (w - w[0])
    p = np.exp(x)
    return float(np.sum(w * p) / np.sum(p))


def beta_rank(beta: np.ndarray, rtol=1e-9) -> int:
    sv = np.linalg.svd(np.asarray(beta, dtype=float), compute_uv=False)
    return int(np.sum(sv > rtol * max(sv[0], 1e-300))) if sv[0] > 0 else 0
