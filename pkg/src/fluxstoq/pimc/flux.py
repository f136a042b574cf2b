"""Flux-basis path-integral Monte Carlo for the full circuit Hamiltonian.

In dimensionless fluxes the primitive action of a closed path of M slices is

    S = M / (16 bt) sum_s dphi_s^T E_C^-1 dphi_s + (bt / M) sum_s U(phi_s)

with bt = h*beta in ns and energies in GHz. The kinetic coefficient follows
from the Gaussian integral over the charge of the short-time propagator
<phi'| exp(-(bt/M) 4 E_C q^2) |phi>.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np

from ..circuit import HamiltonianParams, potential_energy, potential_minimum
from .stats import PimcConfig, PimcError, aggregate_chains, chain_generators


def kinetic_coefficient(beta_tilde: float, m: int) -> float:
    return m / (16.0 * beta_tilde)


def kinetic_kernel(dphi, ec: float, beta_tilde: float, m: int) -> np.ndarray:
    """Normalized single-qubit propagator <phi + dphi| exp(-(bt/M) 4 E_C q^2) |phi>."""
    tau = beta_tilde / m
    width = 16.0 * tau * ec
    dphi = np.asarray(dphi, dtype=float)
    return np.exp(-dphi**2 / width) / np.sqrt(np.pi * width)


def classical_action(params: HamiltonianParams, path, config: PimcConfig) -> float:
    """Dimensionless action of a closed path with shape (M, N)."""
    path = np.asarray(path, dtype=float)
    m = config.trotter_m
    if path.shape != (m, params.n) or not np.all(np.isfinite(path)):
        raise ValueError(f"path must be a finite ({m}, {params.n}) array")
    try:
        ec_inv = np.linalg.inv(params.ec_matrix)
    except np.linalg.LinAlgError:
        raise ValueError("ec_matrix is singular") from None
    d = np.roll(path, -1, axis=0) - path
    kin = kinetic_coefficient(config.beta_tilde, m) * float(np.einsum("si,ij,sj->", d, ec_inv, d))
    pot = config.beta_tilde / m * float(np.sum(potential_energy(params, path)))
    return kin + pot


@numba.njit(nogil=True, cache=True)
def _potential(phi, el, ej, phiq, s):
    n = phi.shape[0]
    u = 0.0
    for i in range(n):
        for j in range(n):
            u += 0.5 * phi[i] * el[i, j] * phi[j]
    for k in range(n):
        arg = phiq[k]
        for j in range(n):
            arg += s[k, j] * phi[j]
        u -= ej[k] * np.cos(arg)
    return u


@numba.njit(nogil=True, cache=True)
def _virial_energy(phi, el, ej, phiq, s):
    """U + 1/2 phi . grad U."""
    n = phi.shape[0]
    u = 0.0
    for i in range(n):
        for j in range(n):
            u += phi[i] * el[i, j] * phi[j]  # quadratic: U + 1/2 phi.grad = 2 * (1/2 phi E_L phi)
    for k in range(n):
        arg = phiq[k]
        proj = 0.0
        for j in range(n):
            arg += s[k, j] * phi[j]
            proj += s[k, j] * phi[j]
        u += ej[k] * (-np.cos(arg) + 0.5 * proj * np.sin(arg))
    return u


@numba.njit(nogil=True, cache=True)
def _link(a, b, ec_inv):
    n = a.shape[0]
    out = 0.0
    for i in range(n):
        di = a[i] - b[i]
        for j in range(n):
            out += di * ec_inv[i, j] * (a[j] - b[j])
    return out


@numba.njit(nogil=True, cache=True)
def _local_delta(path, t, trial, u_trial, u_old, ec_inv, kin, pot):
    """Action change from moving slice t to ``trial``: two kinetic links and one potential term."""
    m = path.shape[0]
    prev = path[(t - 1) % m]
    nxt = path[(t + 1) % m]
    dk = (_link(trial, prev, ec_inv) + _link(nxt, trial, ec_inv)
          - _link(path[t], prev, ec_inv) - _link(nxt, path[t], ec_inv))
    return kin * dk + pot * (u_trial - u_old)


@numba.njit(nogil=True, cache=True)
def _shift(rng, halfwidth, step, out):
    n = out.shape[0]
    if step > 0.0:
        k = int(halfwidth / step + 1e-9)
        for i in range(n):
            out[i] = step * (int(rng.random() * (2 * k + 1)) - k)
    else:
        for i in range(n):
            out[i] = rng.uniform(-halfwidth, halfwidth)


@numba.njit(nogil=True, cache=True)
def _flux_chain(rng, path, ec_inv, el, ej, phiq, s, beta_t, total, equil, stride, p_local, halfwidth,
                step, bound, u_min, record_paths):
    m, n = path.shape
    kin = m / (16.0 * beta_t)
    pot = beta_t / m
    u = np.empty(m)
    for t in range(m):
        u[t] = _potential(path[t], el, ej, phiq, s)
    u_new = np.empty(m)
    delta = np.empty(n)
    trial = np.empty(n)
    n_samples = (total - equil) // stride
    samples = np.empty(n_samples)
    paths = np.empty((n_samples if record_paths else 0, m, n))
    acc = np.zeros(4, dtype=np.int64)  # local accepted, local tried, global accepted, global tried
    acc_equil = 0
    k = 0
    for it in range(total):
        _shift(rng, halfwidth, step, delta)
        if rng.random() < p_local:
            t = int(rng.random() * m)
            inside = True
            for i in range(n):
                trial[i] = path[t, i] + delta[i]
                if abs(trial[i]) > bound:
                    inside = False
            acc[1] += 1
            if inside:
                u_trial = _potential(trial, el, ej, phiq, s)
                ds = _local_delta(path, t, trial, u_trial, u[t], ec_inv, kin, pot)
                if ds <= 0.0 or rng.random() < np.exp(-ds):
                    for i in range(n):
                        path[t, i] = trial[i]
                    u[t] = u_trial
                    acc[0] += 1
                    if it < equil:
                        acc_equil += 1
        else:
            acc[3] += 1
            inside = True
            ds = 0.0
            for t in range(m):
                for i in range(n):
                    trial[i] = path[t, i] + delta[i]
                    if abs(trial[i]) > bound:
                        inside = False
                u_new[t] = _potential(trial, el, ej, phiq, s)
                ds += u_new[t] - u[t]
            ds *= pot
            if inside and (ds <= 0.0 or rng.random() < np.exp(-ds)):
                for t in range(m):
                    u[t] = u_new[t]
                    for i in range(n):
                        path[t, i] += delta[i]
                acc[2] += 1
                if it < equil:
                    acc_equil += 1
        if it >= equil and (it - equil) % stride == stride - 1 and k < n_samples:
            e = 0.0
            for t in range(m):
                e += _virial_energy(path[t], el, ej, phiq, s)
            samples[k] = e / m - u_min
            if record_paths:
                paths[k] = path
            k += 1
    return samples, paths, acc, acc_equil


def local_move_delta_action(params: HamiltonianParams, path, config: PimcConfig, slice_index: int, shift) -> float:
    """Incremental action change used by the sampler for a single-slice move."""
    path = np.ascontiguousarray(path, dtype=float)
    trial = path[slice_index] + np.asarray(shift, dtype=float)
    args = (np.array(params.el_matrix), np.array(params.ej_eff), np.array(params.phi_q), np.array(params.s_scale))
    m = config.trotter_m
    return float(_local_delta(
        path, slice_index, trial, _potential(trial, *args), _potential(path[slice_index], *args),
        np.linalg.inv(params.ec_matrix), kinetic_coefficient(config.beta_tilde, m), config.beta_tilde / m,
    ))


def virial_energy_estimate(params: HamiltonianParams, path, u_min: float = 0.0) -> float:
    """(1/M) sum_s [U + 1/2 phi . grad U] - u_min for one path."""
    args = (np.array(params.el_matrix), np.array(params.ej_eff), np.array(params.phi_q), np.array(params.s_scale))
    path = np.asarray(path, dtype=float)
    return float(np.mean([_virial_energy(np.ascontiguousarray(p), *args) for p in path]) - u_min)


def _run_chain(rng, start, params, config, u_min, record_paths):
    path = np.array(np.broadcast_to(start, (config.trotter_m, params.n)), dtype=float)
    return _flux_chain(
        rng, path, np.linalg.inv(params.ec_matrix), np.array(params.el_matrix), np.array(params.ej_eff),
        np.array(params.phi_q), np.array(params.s_scale), float(config.beta_tilde), int(config.total_iterations),
        int(config.equilibration_iterations), int(config.sample_stride), float(config.local_update_prob),
        float(config.shift_halfwidth), float(config.proposal_step), float(config.flux_bound), float(u_min),
        bool(record_paths),
    )


def run_pimc_flux(params: HamiltonianParams, config: PimcConfig, *, threads: int = 1, start=None,
                  u_min: float | None = None, record_paths: bool = False):
    """Metropolis-Hastings sampling of closed flux paths; returns :class:`PathEnsembleStats`.

    Every chain starts with all slices at ``start`` (the global potential minimum by default).
    With ``record_paths`` the sampled configurations are returned as a second value.
    """
    if start is None or u_min is None:
        phi_min, found_u = potential_minimum(params)
        start = phi_min if start is None else start
        u_min = found_u if u_min is None else u_min
    gens = chain_generators(config.rng_seed, config.n_chains)
    with ThreadPoolExecutor(max_workers=max(1, min(threads, config.n_chains))) as pool:
        outs = list(pool.map(lambda g: _run_chain(g, start, params, config, u_min, record_paths), gens))
    for _, _, acc, acc_equil in outs:
        if config.equilibration_iterations > 0 and acc_equil == 0:
            raise PimcError("mixing failure: no move accepted during equilibration")
    stats = aggregate_chains(
        [o[0] for o in outs], config.sample_stride,
        [(o[2][0], o[2][1]) for o in outs], [(o[2][2], o[2][3]) for o in outs],
    )
    if record_paths:
        return stats, np.concatenate([o[1] for o in outs])
    return stats
