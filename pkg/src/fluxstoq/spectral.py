"""Grid exact diagonalization of the flux-basis Hamiltonian for one or two qubits."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal
from scipy.special import logsumexp

from .circuit import HamiltonianParams, local_minima, potential_energy, potential_gradient

MAX_ED_QUBITS = 2
GRID_MARGIN = 1.0


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class FluxGrid:
    """Uniform grid on [-half_width, half_width] in every flux coordinate."""

    half_width: float
    points: int

    def __post_init__(self):
        if self.points < 16:
            raise ValueError("points_per_dim must be >= 16")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / (self.points - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    def mesh(self, n: int) -> np.ndarray:
        """Grid coordinates with shape (points,)*n + (n,)."""
        return np.stack(np.meshgrid(*([self.axis] * n), indexing="ij"), axis=-1)

    @classmethod
    def default(cls, n_qubits: int) -> FluxGrid:
        if n_qubits == 1:
            return cls(3.0, 401)
        return cls(2.5, 201)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Lowest eigenpairs; energies in GHz measured from the potential minimum."""

    energies: np.ndarray
    states: np.ndarray  # (n_states,) + (points,)*N, L2-normalized on the grid
    grid: FluxGrid
    n_converged: int
    params: HamiltonianParams
    u_min: float

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def gap(self) -> float:
        """E_1 - E_0, the tunnel coupling for a symmetric double well."""
        return float(self.energies[1] - self.energies[0])

    def normalization(self, i: int) -> float:
        return float(np.sum(np.abs(self.states[i]) ** 2) * self.grid.spacing**self.n)


def _first_derivative(n, h):
    return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], format="csr") / (2 * h)


def _second_derivative(n, h):
    return sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csr") / h**2


def _axis_operator(op1d, k, n, points):
    mats = [sp.identity(points, format="csr")] * n
    mats[k] = op1d
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def kinetic_matrix(params: HamiltonianParams, grid: FluxGrid):
    """Finite-difference 4 q^T E_C q with q_k = -i d/dphi_k; real symmetric sparse matrix."""
    n, pts, h = params.n, grid.points, grid.spacing
    d1 = _first_derivative(pts, h)
    d2 = _second_derivative(pts, h)
    ec = params.ec_matrix
    kin = sp.csr_matrix((pts**n, pts**n))
    for k in range(n):
        kin = kin - 4 * ec[k, k] * _axis_operator(d2, k, n, pts)
        for l in range(k + 1, n):
            # 8 E_Ckl q_k q_l = -8 E_Ckl d_k d_l
            kin = kin - 8 * ec[k, l] * (_axis_operator(d1, k, n, pts) @ _axis_operator(d1, l, n, pts))
    return kin.tocsr()


def hamiltonian_matrix(params: HamiltonianParams, grid: FluxGrid):
    u = potential_energy(params, grid.mesh(params.n)).ravel()
    return (kinetic_matrix(params, grid) + sp.diags(u)).tocsr()


def check_grid(params: HamiltonianParams, grid: FluxGrid, minima=None):
    minima = local_minima(params) if minima is None else minima
    for phi, _ in minima:
        if np.max(np.abs(phi)) + GRID_MARGIN > grid.half_width:
            raise SpectralError(
                f"grid half-width {grid.half_width} does not cover minimum at {np.round(phi, 4).tolist()} "
                f"with margin {GRID_MARGIN}"
            )
    return minima


def _fix_sign(psi):
    flat = psi.ravel()
    idx = np.argmax(np.abs(flat) > 1e-3 * np.max(np.abs(flat)))
    return psi if flat[idx] > 0 else -psi


def solve_spectrum(params: HamiltonianParams, grid: FluxGrid | None = None, n_states: int = 8) -> SpectralResult:
    """Lowest ``n_states`` eigenpairs of the discretized circuit Hamiltonian."""
    if params.n > MAX_ED_QUBITS:
        raise SpectralError(f"grid diagonalization supports at most {MAX_ED_QUBITS} qubits")
    if not 1 <= n_states <= 64:
        raise SpectralError("n_states must be between 1 and 64")
    grid = FluxGrid.default(params.n) if grid is None else grid
    minima = check_grid(params, grid)
    u_min = float(minima[0][1])
    pts, h = grid.points, grid.spacing

    if params.n == 1:
        u = potential_energy(params, grid.axis[:, None])
        ec = params.ec_matrix[0, 0]
        w, v = eigh_tridiagonal(u + 8 * ec / h**2, np.full(pts - 1, -4 * ec / h**2),
                                select="i", select_range=(0, n_states - 1))
        vecs = v.T
    else:
        ham = hamiltonian_matrix(params, grid).tocsc()
        try:
            w, v = spla.eigsh(ham, k=n_states, sigma=u_min - 1.0, which="LM", tol=1e-12)
        except spla.ArpackNoConvergence as exc:
            raise SpectralError(f"eigensolver converged only {len(exc.eigenvalues)} of {n_states} states") from None
        order = np.argsort(w)
        w, vecs = w[order], v[:, order].T

    states = vecs.reshape((len(w),) + (pts,) * params.n) / np.sqrt(h**params.n)
    states = np.array([_fix_sign(s) for s in states])
    return SpectralResult(
        energies=np.asarray(w) - u_min,
        states=states,
        grid=grid,
        n_converged=len(w),
        params=params,
        u_min=u_min,
    )


def thermal_average_energy(result: SpectralResult, beta_tilde: float, *, truncation=1e-10) -> float:
    """Boltzmann average of the retained levels; beta_tilde = h*beta in ns."""
    e = np.asarray(result.energies)
    logw = -beta_tilde * (e - e[0])
    log_z = logsumexp(logw)
    if logw[-1] - log_z > np.log(truncation):
        needed = e[0] + np.log(1 / truncation) / beta_tilde
        raise SpectralError(
            f"{len(e)} levels insufficient at beta_tilde={beta_tilde:g}: "
            f"need all levels up to about {needed:.2f} GHz (highest retained {e[-1]:.2f} GHz)"
        )
    return float(np.sum(e * np.exp(logw - log_z)))


OP_KINDS = ("flux", "charge", "sin_scaled_flux")


def apply_operator(grid: FluxGrid, psi, op_kind: str, k: int = 0, s_kk: float = 1.0):
    """Apply a flux, charge or sin(s_kk phi_k) operator to a grid wavefunction."""
    n = psi.ndim
    phi_k = grid.mesh(n)[..., k] if n > 1 else grid.axis
    if op_kind == "flux":
        return phi_k * psi
    if op_kind == "sin_scaled_flux":
        return np.sin(s_kk * phi_k) * psi
    if op_kind == "charge":
        pad = [(0, 0)] * n
        pad[k] = (1, 1)
        padded = np.pad(psi, pad)
        sl_hi = [slice(None)] * n
        sl_lo = [slice(None)] * n
        sl_hi[k] = slice(2, None)
        sl_lo[k] = slice(None, -2)
        d = (padded[tuple(sl_hi)] - padded[tuple(sl_lo)]) / (2 * grid.spacing)
        return -1j * d
    raise ValueError(f"unknown operator kind {op_kind!r}; expected one of {OP_KINDS}")


def operator_element(grid: FluxGrid, bra, ket, op_kind: str, k: int = 0, s_kk: float = 1.0) -> complex:
    out = np.sum(np.conj(bra) * apply_operator(grid, ket, op_kind, k, s_kk)) * grid.spacing**bra.ndim
    return complex(out)


def matrix_element(result: SpectralResult, op_kind: str, i: int, j: int, k: int = 0) -> complex:
    """<i|O|j> for O in {flux, charge, sin_scaled_flux} acting on coordinate ``k``."""
    if not (0 <= i < result.n_converged and 0 <= j < result.n_converged):
        raise IndexError("state index beyond converged states")
    s_kk = result.params.s_scale[k, k]
    return operator_element(result.grid, result.states[i], result.states[j], op_kind, k, s_kk)


def parity_defect(result: SpectralResult, i: int) -> tuple[int, float]:
    """(parity, ||psi(phi) - parity * psi(-phi)||) of state ``i`` on the symmetric grid."""
    psi = result.states[i]
    flipped = psi[(slice(None, None, -1),) * psi.ndim]
    h = result.grid.spacing**psi.ndim
    even = np.sqrt(np.sum((psi - flipped) ** 2) * h)
    odd = np.sqrt(np.sum((psi + flipped) ** 2) * h)
    return (1, float(even)) if even <= odd else (-1, float(odd))


def computational_basis(result: SpectralResult, *, tol=1e-6):
    """Well-localized states |0> = (|g>+|e>)/sqrt2 (left well), |1> = (|g>-|e>)/sqrt2."""
    if result.n != 1:
        raise SpectralError("computational basis is defined for single-qubit spectra")
    pg, dg = parity_defect(result, 0)
    pe, de = parity_defect(result, 1)
    if not (pg == 1 and pe == -1 and dg < tol and de < tol):
        raise SpectralError("lowest two states are not an even/odd parity pair; potential is not symmetric")
    g, e = result.states[0], result.states[1]
    s0 = (g + e) / np.sqrt(2)
    if np.sum(result.grid.axis * s0**2) > 0:
        e = -e
    return (g + e) / np.sqrt(2), (g - e) / np.sqrt(2)


def kinetic_expectation(result: SpectralResult, i: int) -> float:
    psi = result.states[i].ravel()
    kin = kinetic_matrix(result.params, result.grid)
    return float(psi @ (kin @ psi) * result.grid.spacing**result.n)


def virial_expectation(result: SpectralResult, i: int) -> float:
    """1/2 <i| phi . dU/dphi |i>."""
    mesh = result.grid.mesh(result.n)
    term = 0.5 * np.sum(mesh * potential_gradient(result.params, mesh), axis=-1)
    psi = result.states[i]
    return float(np.sum(term * psi**2) * result.grid.spacing**result.n)


def save_spectrum(result: SpectralResult, path, *, include_states=True):
    """Write energies (and optionally wavefunctions) to ``.npz`` or ``.json``."""
    path = Path(path)
    meta = {
        "energies_ghz": result.energies.tolist(),
        "u_min_ghz": result.u_min,
        "n_converged": result.n_converged,
        "grid": {"half_width": result.grid.half_width, "points": result.grid.points},
        "params": result.params.to_dict(),
    }
    if path.suffix == ".json":
        if include_states:
            meta["states"] = result.states.tolist()
        path.write_text(json.dumps(meta, indent=2))
    else:
        arrays = {"states": result.states} if include_states else {}
        np.savez_compressed(path, meta=json.dumps(meta), **arrays)
    return path


def load_spectrum(path) -> SpectralResult:
    path = Path(path)
    if path.suffix == ".json":
        meta = json.loads(path.read_text())
        states = np.asarray(meta.get("states", []), dtype=float)
    else:
        with np.load(path) as data:
            meta = json.loads(str(data["meta"]))
            states = data["states"] if "states" in data else np.empty(0)
    p = meta["params"]
    params = HamiltonianParams(
        ec_matrix=p["ec_matrix"], el_matrix=p["el_matrix"], ej_eff=p["ej_eff"], phi_q=p["phi_q"],
        s_scale=p["s_scale"], s_applied=p["s_applied"], ec0=p["ec0"],
    )
    return SpectralResult(
        energies=np.asarray(meta["energies_ghz"]),
        states=states,
        grid=FluxGrid(**meta["grid"]),
        n_converged=meta["n_converged"],
        params=params,
        u_min=meta["u_min_ghz"],
    )
