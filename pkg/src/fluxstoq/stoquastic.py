"""Stoquasticity test and exhaustive search over products of single-qubit Cliffords.

A single-qubit Clifford C acts on Pauli coefficients as a signed permutation
matrix R with det R = +1: C sigma_a C^dag = sum_b R[b, a] sigma_b, so local
fields transform as h -> R h and couplings as beta_kl -> R_k beta_kl R_l^T.
Names like ``"+Y-X+Z"`` list the images of X, Y and Z.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .qubits import PAULI, XYZ, QubitModel, beta_rank, dense_pauli_matrix, site_operator

STOQUASTIC = "stoquastic_as_given"
CURABLE = "curable_by_listed_transform"
NO_CURE = "no_single_qubit_clifford_cure"
MAX_QUBITS = 3
_CHUNK = 4096


def _rotation_from_unitary(u):
    r = np.zeros((3, 3))
    for a, pa in enumerate(XYZ):
        img = u @ PAULI[pa] @ u.conj().T
        for b, pb in enumerate(XYZ):
            r[b, a] = np.real(np.trace(PAULI[pb] @ img)) / 2
    return np.rint(r)


def _clifford_group():
    """The 24 single-qubit Cliffords modulo phase, identity first."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    found = {}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        nxt = []
        for u in frontier:
            key = tuple(_rotation_from_unitary(u).ravel())
            if key in found:
                continue
            found[key] = u
            nxt += [h @ u, s @ u]
        frontier = nxt
    items = sorted(found.items(), key=lambda kv: (kv[0] != tuple(np.eye(3).ravel()), kv[0]))
    rots = np.array([np.reshape(k, (3, 3)) for k, _ in items])
    unitaries = [u for _, u in items]
    return rots, unitaries


CLIFFORD_ROTATIONS, CLIFFORD_UNITARIES = _clifford_group()


def clifford_name(index: int) -> str:
    r = CLIFFORD_ROTATIONS[index]
    parts = []
    for a in range(3):
        b = int(np.flatnonzero(r[:, a])[0])
        parts.append(("+" if r[b, a] > 0 else "-") + XYZ[b])
    return "".join(parts)


CLIFFORD_NAMES = [clifford_name(i) for i in range(len(CLIFFORD_ROTATIONS))]


def clifford_unitary(name: str) -> np.ndarray:
    return CLIFFORD_UNITARIES[CLIFFORD_NAMES.index(name)]


def max_positive_offdiagonal(matrix) -> tuple[float, float]:
    """(largest off-diagonal real part, largest imaginary magnitude) of a dense matrix."""
    m = np.asarray(matrix)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    return float(np.max(off.real, initial=-np.inf)), float(np.max(np.abs(m.imag), initial=0.0))


def is_stoquastic_matrix(matrix, tol=1e-9) -> bool:
    pos, imag = max_positive_offdiagonal(matrix)
    return pos <= tol and imag <= tol


def transform_model(fields, couplings, names):
    """Apply per-qubit Cliffords (by name) to Pauli coefficients."""
    rots = [CLIFFORD_ROTATIONS[CLIFFORD_NAMES.index(nm)] for nm in names]
    new_fields = np.array([rots[k] @ f for k, f in enumerate(np.asarray(fields, dtype=float))])
    new_couplings = tuple(((k, l), rots[k] @ b @ rots[l].T) for (k, l), b in couplings)
    return new_fields, new_couplings


def product_unitary(names) -> np.ndarray:
    n = len(names)
    u = np.eye(2**n, dtype=complex)
    for k, nm in enumerate(names):
        u = u @ site_operator(clifford_unitary(nm), k, n)
    return u


def _search(fields, couplings, tol):
    n = fields.shape[0]
    singles = np.array([[site_operator(PAULI[p], k, n) for p in XYZ] for k in range(n)])
    pair_ops = {(k, l): np.einsum("aij,bjk->abik", singles[k], singles[l]) for (k, l), _ in couplings}
    n_cliff = len(CLIFFORD_ROTATIONS)
    combos = np.array(list(itertools.product(range(n_cliff), repeat=n)), dtype=np.int64)
    for start in range(0, len(combos), _CHUNK):
        idx = combos[start:start + _CHUNK]
        r = CLIFFORD_ROTATIONS[idx]  # (c, n, 3, 3)
        h = np.einsum("cnab,nb->cna", r, fields)
        mats = np.einsum("cna,naij->cij", h.astype(complex), singles)
        for (k, l), beta in couplings:
            b2 = np.einsum("cab,bd,ced->cae", r[:, k], beta, r[:, l])
            mats += np.einsum("cab,abij->cij", b2.astype(complex), pair_ops[(k, l)])
        off = ~np.eye(2**n, dtype=bool)
        pos = np.max(mats.real[:, off], axis=1)
        imag = np.max(np.abs(mats.imag).reshape(len(idx), -1), axis=1)
        good = np.flatnonzero((pos <= tol) & (imag <= tol))
        if good.size:
            return [CLIFFORD_NAMES[i] for i in idx[good[0]]]
    return None


@dataclass
class StoquasticityVerdict:
    verdict: str
    transform: list | None
    max_offdiagonal_before: float
    max_imaginary_before: float
    transformed_fields: np.ndarray | None = None
    transformed_couplings: tuple | None = None
    analytic: dict = field(default_factory=dict)

    @property
    def curable(self) -> bool:
        return self.verdict != NO_CURE

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "transform": self.transform,
            "max_offdiagonal_before_ghz": self.max_offdiagonal_before,
            "max_imaginary_before_ghz": self.max_imaginary_before,
            "transformed_fields_ghz": None if self.transformed_fields is None else self.transformed_fields.tolist(),
            "transformed_couplings": None if self.transformed_couplings is None else [
                {"pair": list(p), "beta_ghz": b.tolist()} for p, b in self.transformed_couplings
            ],
            "analytic": self.analytic,
        }


def _xy_condition(model: QubitModel, fields, tol):
    """Appendix recipe for a symmetric energy-basis pair: Z flips plus optional X<->Y exchange."""
    if model.n_qubits != 2 or len(model.couplings) != 1:
        return {"applicable": False}
    beta = model.coupling(0, 1)
    only_z_fields = np.all(np.abs(fields[:, :2]) <= tol)
    allowed = np.zeros((3, 3), dtype=bool)
    allowed[0, 0] = allowed[1, 1] = True
    only_xx_yy = np.all(np.abs(beta[~allowed]) <= tol)
    if not (only_z_fields and only_xx_yy):
        return {"applicable": False}
    jxx, jyy = beta[0, 0], beta[1, 1]
    exchanged = abs(jyy) > abs(jxx)
    if exchanged:
        jxx, jyy = jyy, jxx
    flipped = jxx > 0
    if flipped:
        jxx, jyy = -jxx, -jyy
    return {
        "applicable": True,
        "rule": "J_XX <= -|J_YY|",
        "xy_exchanged": bool(exchanged),
        "z_flip_on_one_qubit": bool(flipped),
        "j_xx_after_ghz": float(jxx),
        "j_yy_after_ghz": float(jyy),
        "cured": bool(jxx <= -abs(jyy) + tol),
    }


def _rank_one_condition(model: QubitModel):
    """A rank-1 coupling can always be rotated onto Z-Z; the remaining fields are then TIM-like."""
    if model.n_qubits != 2 or len(model.couplings) != 1:
        return {"applicable": False}
    rank = beta_rank(model.coupling(0, 1))
    return {
        "applicable": rank <= 1,
        "beta_rank": rank,
        "cured_by_continuous_rotation": rank <= 1,
    }


def check_stoquastic(model: QubitModel, tol: float = 1e-9) -> StoquasticityVerdict:
    """Test the dense matrix, then search all per-qubit Clifford products for a cure."""
    if model.n_qubits > MAX_QUBITS:
        raise ValueError(f"check_stoquastic supports at most {MAX_QUBITS} qubits")
    fields = model.local_fields()
    dense = model.dense_matrix()
    pos, imag = max_positive_offdiagonal(dense)
    analytic = {"xy_sign_rule": _xy_condition(model, fields, tol), "rank_one": _rank_one_condition(model)}
    if pos <= tol and imag <= tol:
        return StoquasticityVerdict(STOQUASTIC, ["+X+Y+Z"] * model.n_qubits, pos, imag, fields, model.couplings, analytic)
    names = _search(fields, model.couplings, tol)
    if names is None:
        return StoquasticityVerdict(NO_CURE, None, pos, imag, analytic=analytic)
    new_fields, new_couplings = transform_model(fields, model.couplings, names)
    return StoquasticityVerdict(CURABLE, names, pos, imag, new_fields, new_couplings, analytic)


def transformed_matrix(verdict: StoquasticityVerdict, offset: float = 0.0) -> np.ndarray:
    return dense_pauli_matrix(verdict.transformed_fields, verdict.transformed_couplings, offset)


__all__ = [
    "CLIFFORD_NAMES",
    "CURABLE",
    "NO_CURE",
    "STOQUASTIC",
    "StoquasticityVerdict",
    "check_stoquastic",
    "clifford_unitary",
    "is_stoquastic_matrix",
    "product_unitary",
    "transform_model",
    "transformed_matrix",
]
