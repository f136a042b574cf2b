"""Classical-spin path integral for a transverse-field Ising model.

For H = offset - sum Delta_k/2 X_k - sum eps_k/2 Z_k + sum J_kl Z_k Z_l the
Trotterized partition function is a sum over M x N spins with weight

    exp(-(bt/M) sum_s [H_Z(sigma_s) - sum_k Jperp_k sigma_s,k sigma_s+1,k])

and Jperp_k = -(M / 2 bt) ln tanh(bt Delta_k / 2M). Differentiating ln Z with
respect to Delta_k gives an exact finite-M estimator of <X_k>: the slice
average of tanh(a_k) on unbroken links and coth(a_k) on broken ones, with
a_k = bt Delta_k / 2M.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np

from ..qubits import QubitModel
from .stats import PimcConfig, PimcError, aggregate_chains, chain_generators


def transverse_coupling(delta, beta_tilde: float, m: int):
    """Jperp in GHz for tunnel couplings ``delta``."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise ValueError("tunnel couplings must be positive (Jperp diverges at Delta = 0)")
    return -(m / (2.0 * beta_tilde)) * np.log(np.tanh(beta_tilde * delta / (2.0 * m)))


def tim_arrays(model: QubitModel):
    """(delta, epsilon, symmetric J matrix) of a well-basis TIM."""
    if not model.is_tim:
        raise ValueError("run_pimc_tim needs a well-basis model with Z-Z couplings only")
    n = model.n_qubits
    j = np.zeros((n, n))
    for (k, l), beta in model.couplings:
        j[k, l] += beta[2, 2]
        j[l, k] += beta[2, 2]
    return model.delta.copy(), model.epsilon.copy(), j


@numba.njit(nogil=True, cache=True)
def _spin_chain(rng, spins, delta, eps, jmat, beta_t, total, equil, stride, p_local, offset):
    m, n = spins.shape
    tau = beta_t / m
    a = np.empty(n)
    gamma = np.empty(n)
    for k in range(n):
        a[k] = beta_t * delta[k] / (2.0 * m)
        gamma[k] = -0.5 * np.log(np.tanh(a[k]))
    n_samples = (total - equil) // stride
    samples = np.empty(n_samples)
    acc = np.zeros(4, dtype=np.int64)
    acc_equil = 0
    idx = 0
    for it in range(total):
        k = int(rng.random() * n)
        if rng.random() < p_local:
            t = int(rng.random() * m)
            sk = spins[t, k]
            field = 0.0
            for l in range(n):
                if l != k:
                    field += jmat[k, l] * spins[t, l]
            dh = eps[k] * sk - 2.0 * sk * field
            links = spins[(t - 1) % m, k] + spins[(t + 1) % m, k]
            ds = tau * dh + 2.0 * gamma[k] * sk * links
            acc[1] += 1
            if ds <= 0.0 or rng.random() < np.exp(-ds):
                spins[t, k] = -sk
                acc[0] += 1
                if it < equil:
                    acc_equil += 1
        else:
            ds = 0.0
            for t in range(m):
                sk = spins[t, k]
                field = 0.0
                for l in range(n):
                    if l != k:
                        field += jmat[k, l] * spins[t, l]
                ds += eps[k] * sk - 2.0 * sk * field
            ds *= tau
            acc[3] += 1
            if ds <= 0.0 or rng.random() < np.exp(-ds):
                for t in range(m):
                    spins[t, k] = -spins[t, k]
                acc[2] += 1
                if it < equil:
                    acc_equil += 1
        if it >= equil and (it - equil) % stride == stride - 1 and idx < n_samples:
            e = 0.0
            for t in range(m):
                nxt = (t + 1) % m
                for q in range(n):
                    if spins[t, q] == spins[nxt, q]:
                        xq = np.tanh(a[q])
                    else:
                        xq = 1.0 / np.tanh(a[q])
                    e -= 0.5 * delta[q] * xq + 0.5 * eps[q] * spins[t, q]
                    for r in range(q + 1, n):
                        e += jmat[q, r] * spins[t, q] * spins[t, r]
            samples[idx] = offset + e / m
            idx += 1
    return samples, acc, acc_equil


def run_pimc_tim(model: QubitModel, config: PimcConfig, *, threads: int = 1):
    """Metropolis sampling of the spin path; energies include ``model.offset``."""
    delta, eps, jmat = tim_arrays(model)
    transverse_coupling(delta, config.beta_tilde, config.trotter_m)
    gens = chain_generators(config.rng_seed, config.n_chains)

    def one(rng):
        spins = np.ones((config.trotter_m, model.n_qubits), dtype=np.int64)
        return _spin_chain(
            rng, spins, delta, eps, jmat, float(config.beta_tilde), int(config.total_iterations),
            int(config.equilibration_iterations), int(config.sample_stride), float(config.local_update_prob),
            float(model.offset),
        )

    with ThreadPoolExecutor(max_workers=max(1, min(threads, config.n_chains))) as pool:
        outs = list(pool.map(one, gens))
    for _, _, acc_equil in outs:
        if config.equilibration_iterations > 0 and acc_equil == 0:
            raise PimcError("mixing failure: no spin flip accepted during equilibration")
    return aggregate_chains(
        [o[0] for o in outs], config.sample_stride,
        [(o[1][0], o[1][1]) for o in outs], [(o[1][2], o[1][3]) for o in outs],
    )
