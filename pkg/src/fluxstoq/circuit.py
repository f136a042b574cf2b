"""Circuit descriptions, dimensionless Hamiltonian parameters and the
capacitive canonical transformation.

The circuit Hamiltonian in dimensionless flux/charge variables is

    H/h = 4 q^T E_C q + 1/2 phi^T E_L phi - sum_k E_Jk cos((S phi)_k + phi_qk)

with all energies in GHz. ``S`` is the identity unless
:func:`canonical_transform` has been applied.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .units import EC_GHZ_FF, charging_energy_matrix, inductive_energy_matrix


class CircuitError(ValueError):
    """Invalid circuit or Hamiltonian parameters."""


class MinimizationError(RuntimeError):
    """Raised when the potential minimum search does not converge."""

    def __init__(self, message, best_phi=None, best_value=None):
        super().__init__(message)
        self.best_phi = best_phi
        self.best_value = best_value


@dataclass(frozen=True)
class Junction:
    """Compound Josephson junction of one flux qubit (energies in GHz, fluxes in rad)."""

    ej_ghz: float
    phi_cjj: float
    phi_q: float = np.pi


def _matrix_problems(name, m, n, *, offdiag_nonpositive=False):
    problems = []
    if m is None:
        return problems
    m = np.asarray(m, dtype=float)
    if m.shape != (n, n):
        return [f"{name}: expected shape ({n}, {n}), got {m.shape}"]
    if not np.all(np.isfinite(m)):
        return [f"{name}: non-finite entries"]
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-12):
        problems.append(f"{name}: not symmetric")
    if offdiag_nonpositive and np.any(m[~np.eye(n, dtype=bool)] > 0):
        problems.append(f"{name}: positive off-diagonal entry (mutual capacitances enter as -C_c)")
    if np.any(np.diag(m) <= 0):
        problems.append(f"{name}: non-positive diagonal entry")
    if not problems:
        w = np.linalg.eigvalsh(0.5 * (m + m.T))
        if w[0] <= 1e-12 * abs(w[-1]):
            problems.append(f"{name}: not positive definite (smallest eigenvalue {w[0]:.3g})")
    return problems


@dataclass(frozen=True)
class CircuitSpec:
    """Physical description of N coupled rf-SQUID flux qubits.

    Exactly one of ``inductance_nh`` and ``inductive_energy_ghz`` must be given.
    """

    capacitance_ff: np.ndarray
    junctions: tuple
    inductance_nh: np.ndarray | None = None
    inductive_energy_ghz: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "capacitance_ff", np.atleast_2d(np.asarray(self.capacitance_ff, dtype=float)))
        object.__setattr__(self, "junctions", tuple(self.junctions))
        for name in ("inductance_nh", "inductive_energy_ghz"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.atleast_2d(np.asarray(value, dtype=float)))
        problems = self.violations()
        if problems:
            raise CircuitError("; ".join(problems))

    @property
    def n_qubits(self) -> int:
        return len(self.junctions)

    def violations(self) -> list[str]:
        n = self.n_qubits
        problems = []
        if n < 1:
            problems.append("junctions: at least one junction record is required")
            return problems
        problems += _matrix_problems("capacitance_ff", self.capacitance_ff, n, offdiag_nonpositive=True)
        if (self.inductance_nh is None) == (self.inductive_energy_ghz is None):
            problems.append("inductance: give exactly one of inductance_nh or inductive_energy_ghz")
        problems += _matrix_problems("inductance_nh", self.inductance_nh, n)
        problems += _matrix_problems("inductive_energy_ghz", self.inductive_energy_ghz, n)
        for k, j in enumerate(self.junctions):
            if not np.isfinite(j.ej_ghz) or j.ej_ghz < 0:
                problems.append(f"junction {k + 1}: ej_ghz must be a non-negative number")
            if not -np.pi <= j.phi_cjj <= np.pi:
                problems.append(f"junction {k + 1}: phi_cjj must lie in [-pi, pi]")
            if not np.isfinite(j.phi_q):
                problems.append(f"junction {k + 1}: phi_q must be finite")
        return problems


def two_qubit_capacitance(ec_ghz, coupling_ff, convention="loaded"):
    """Capacitance matrix [[C1+Cc, -Cc], [-Cc, C1+Cc]] in fF for two identical qubits.

    ``convention`` fixes what the quoted single-qubit charging energy means:

    * ``"loaded"``: ``ec_ghz`` is the diagonal entry of the full E_C matrix,
      i.e. it already includes the loading by the coupling capacitor.
    * ``"bare"``: ``ec_ghz = e^2 / (2 h C1)``, the uncoupled qubit value.
    """
    cc = float(coupling_ff)
    if ec_ghz <= 0 or cc < 0:
        raise CircuitError("charging energy must be positive and coupling capacitance non-negative")
    if convention == "bare":
        c1 = EC_GHZ_FF / ec_ghz
    elif convention == "loaded":
        # E_C11 = k (C1 + Cc) / (C1 (C1 + 2 Cc)) with k = e^2/2h; solve the quadratic for C1.
        k = EC_GHZ_FF
        a, b, c = ec_ghz, 2 * ec_ghz * cc - k, -k * cc
        c1 = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
    else:
        raise CircuitError(f"unknown capacitance convention {convention!r}")
    return np.array([[c1 + cc, -cc], [-cc, c1 + cc]])


def _check_spd(name, m, *, eig_floor=1e-12):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise CircuitError(f"{name}: must be a square matrix")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-14):
        raise CircuitError(f"{name}: not symmetric")
    w = np.linalg.eigvalsh(m)
    if w[0] <= eig_floor * abs(w[-1]):
        raise CircuitError(f"{name}: not positive definite (eigenvalues {w})")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class HamiltonianParams:
    """Dimensionless circuit Hamiltonian; energies in GHz, fluxes in radians."""

    ec_matrix: np.ndarray
    el_matrix: np.ndarray
    ej_eff: np.ndarray
    phi_q: np.ndarray
    s_scale: np.ndarray | None = None
    s_applied: bool = False
    ec0: float | None = None

    def __post_init__(self):
        ec = _check_spd("ec_matrix", np.atleast_2d(self.ec_matrix))
        el = _check_spd("el_matrix", np.atleast_2d(self.el_matrix))
        n = ec.shape[0]
        if el.shape != (n, n):
            raise CircuitError("el_matrix shape does not match ec_matrix")
        if not self.s_applied and np.any(ec[~np.eye(n, dtype=bool)] < -1e-14):
            raise CircuitError("ec_matrix: negative off-diagonal entry (C^-1 is entrywise non-negative)")
        ej = np.atleast_1d(np.asarray(self.ej_eff, dtype=float))
        phq = np.atleast_1d(np.asarray(self.phi_q, dtype=float))
        if ej.shape != (n,) or phq.shape != (n,):
            raise CircuitError("ej_eff and phi_q must have one entry per qubit")
        s = np.eye(n) if self.s_scale is None else np.atleast_2d(np.asarray(self.s_scale, dtype=float))
        if s.shape != (n, n) or not np.allclose(s, s.T):
            raise CircuitError("s_scale must be a symmetric N x N matrix")
        for name, value in (("ec_matrix", ec), ("el_matrix", el), ("ej_eff", ej), ("phi_q", phq), ("s_scale", s)):
            value = np.array(value, dtype=float)
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.ec_matrix.shape[0]

    @property
    def delta_q(self) -> np.ndarray:
        """Flux detuning phi_q - pi of each qubit."""
        return self.phi_q - np.pi

    @property
    def parity_symmetric(self) -> bool:
        return bool(np.allclose(self.phi_q, np.pi, rtol=0, atol=1e-15))

    def with_phi_q(self, phi_q) -> HamiltonianParams:
        return replace(self, phi_q=np.broadcast_to(np.asarray(phi_q, dtype=float), (self.n,)).copy())

    def single_qubit(self, k: int) -> HamiltonianParams:
        """Uncoupled Hamiltonian of qubit ``k``: diagonal E_C, E_L and S entries only."""
        return HamiltonianParams(
            ec_matrix=[[self.ec_matrix[k, k]]],
            el_matrix=[[self.el_matrix[k, k]]],
            ej_eff=[self.ej_eff[k]],
            phi_q=[self.phi_q[k]],
            s_scale=[[self.s_scale[k, k]]],
            s_applied=self.s_applied,
            ec0=self.ec0,
        )

    def to_dict(self) -> dict:
        return {
            "ec_matrix": self.ec_matrix.tolist(),
            "el_matrix": self.el_matrix.tolist(),
            "ej_eff": self.ej_eff.tolist(),
            "phi_q": self.phi_q.tolist(),
            "s_scale": self.s_scale.tolist(),
            "s_applied": self.s_applied,
            "ec0": self.ec0,
        }


def build_params(spec: CircuitSpec) -> HamiltonianParams:
    """Convert a physical circuit into GHz-valued Hamiltonian parameters."""
    try:
        ec = charging_energy_matrix(spec.capacitance_ff)
    except np.linalg.LinAlgError as exc:
        raise CircuitError(f"capacitance_ff: singular matrix ({exc})") from None
    if spec.inductive_energy_ghz is not None:
        el = spec.inductive_energy_ghz
    else:
        try:
            el = inductive_energy_matrix(spec.inductance_nh)
        except np.linalg.LinAlgError as exc:
            raise CircuitError(f"inductance_nh: singular matrix ({exc})") from None
    ej = np.array([j.ej_ghz * np.cos(j.phi_cjj / 2) for j in spec.junctions])
    phi_q = np.array([j.phi_q for j in spec.junctions])
    return HamiltonianParams(ec_matrix=ec, el_matrix=el, ej_eff=ej, phi_q=phi_q)


def _spd_sqrt(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(w)) @ v.T


def canonical_transform(params: HamiltonianParams, ec0: float | None = None) -> HamiltonianParams:
    """Apply q' = S q, phi' = S^-1 phi with S = (E_C / E_C0)^(1/2).

    The kinetic term becomes 4 E_C0 q'^T q', the inductive matrix becomes
    S E_L S, and the Josephson arguments become (S phi')_k + phi_qk.
    ``ec0`` defaults to the mean of the diagonal of E_C.
    """
    if params.s_applied:
        raise CircuitError("canonical transformation already applied")
    if ec0 is None:
        ec0 = float(np.mean(np.diag(params.ec_matrix)))
    if not ec0 > 0:
        raise CircuitError("ec0 must be positive")
    ec = _check_spd("ec_matrix", params.ec_matrix)
    s = _spd_sqrt(ec / ec0)
    s = 0.5 * (s + s.T)
    el = s.T @ params.el_matrix @ s
    return HamiltonianParams(
        ec_matrix=ec0 * np.eye(params.n),
        el_matrix=0.5 * (el + el.T),
        ej_eff=params.ej_eff,
        phi_q=params.phi_q,
        s_scale=s,
        s_applied=True,
        ec0=ec0,
    )


def potential_energy(params: HamiltonianParams, phi):
    """U(phi)/h in GHz; ``phi`` has shape (..., N)."""
    phi = np.asarray(phi, dtype=float)
    arg = phi @ params.s_scale.T + params.phi_q
    quad = 0.5 * np.einsum("...i,ij,...j->...", phi, params.el_matrix, phi)
    return quad - np.cos(arg) @ params.ej_eff


def potential_gradient(params: HamiltonianParams, phi):
    """dU/dphi in GHz per radian, same leading shape as ``phi``."""
    phi = np.asarray(phi, dtype=float)
    arg = phi @ params.s_scale.T + params.phi_q
    return phi @ params.el_matrix + (params.ej_eff * np.sin(arg)) @ params.s_scale


def potential_hessian(params: HamiltonianParams, phi):
    phi = np.asarray(phi, dtype=float)
    arg = params.s_scale @ phi + params.phi_q
    s = params.s_scale
    return params.el_matrix + s.T @ np.diag(params.ej_eff * np.cos(arg)) @ s


def _descend(params, x, tol, max_iter):
    """Damped Newton (steepest descent when the Hessian is indefinite) with backtracking."""
    u = float(potential_energy(params, x))
    for _ in range(max_iter):
        g = potential_gradient(params, x)
        h = potential_hessian(params, x)
        try:
            np.linalg.cholesky(h)
            step = -np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = -g / max(np.linalg.norm(h, 2), 1.0)
        t = 1.0
        slope = float(g @ step)
        while t > 1e-12:
            x_new = x + t * step
            u_new = float(potential_energy(params, x_new))
            if u_new <= u + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            return x, u, np.linalg.norm(g) < 1e-6
        converged = u - u_new < tol and np.linalg.norm(t * step) < 1e-9
        x, u = x_new, u_new
        if converged:
            return x, u, True
    return x, u, False


def _well_seeds(params, max_seeds):
    per_qubit = []
    grid = np.linspace(-2 * np.pi, 2 * np.pi, 4001)
    for k in range(params.n):
        ukk = 0.5 * params.el_matrix[k, k] * grid**2 - params.ej_eff[k] * np.cos(params.s_scale[k, k] * grid + params.phi_q[k])
        idx = np.where((ukk[1:-1] < ukk[:-2]) & (ukk[1:-1] <= ukk[2:]))[0] + 1
        wells = grid[idx] if idx.size else np.array([0.0])
        wells = wells[np.argsort(ukk[idx])] if idx.size else wells
        per_qubit.append(wells[:4])
    seeds = [np.array(p) for p in itertools.product(*per_qubit)]
    return seeds[:max_seeds]


def local_minima(params: HamiltonianParams, *, n_starts=32, tol=1e-10, max_iter=500, seed=0):
    """Distinct local minima of U found by multi-start descent, sorted by value."""
    seeds = _well_seeds(params, n_starts)
    rng = np.random.default_rng(seed)
    scale = max(1.0, max((np.max(np.abs(s)) for s in seeds), default=1.0))
    while len(seeds) < n_starts:
        seeds.append(rng.uniform(-scale, scale, params.n))
    found = []
    best = None
    for x0 in seeds:
        x, u, ok = _descend(params, np.asarray(x0, dtype=float), tol, max_iter)
        if best is None or u < best[1]:
            best = (x, u)
        if not ok:
            continue
        if all(np.linalg.norm(x - y) > 1e-5 for y, _ in found):
            found.append((x, u))
    if not found:
        raise MinimizationError("potential minimum search did not converge", *best)
    found.sort(key=lambda t: t[1])
    return found


def potential_minimum(params: HamiltonianParams, **kwargs):
    """Global minimizer ``(phi_min, u_min)`` of the potential."""
    phi, u = local_minima(params, **kwargs)[0]
    return phi, u
