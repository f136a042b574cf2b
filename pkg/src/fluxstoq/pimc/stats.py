"""Run configuration, result container and autocorrelation analysis."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

WINDOW_FACTOR = 6.0
MIN_SAMPLES = 100


class PimcError(RuntimeError):
    """Numerical failure of a Monte Carlo run (for example a chain that never moves)."""


@dataclass(frozen=True)
class PimcConfig:
    """Sampler settings. ``beta_tilde`` is h*beta in ns."""

    beta_tilde: float
    trotter_m: int
    total_iterations: int = 30_000_000
    equilibration_iterations: int = 5_000_000
    sample_stride: int = 1000
    local_update_prob: float = 0.9
    shift_halfwidth: float = 0.75
    rng_seed: int = 0
    n_chains: int = 1
    # lattice proposals for enumerable test chains: shifts are multiples of proposal_step
    proposal_step: float = 0.0
    flux_bound: float = float("inf")

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        p = []
        if not self.beta_tilde > 0:
            p.append("beta_tilde must be positive")
        if self.trotter_m < 2:
            p.append("trotter_m must be >= 2")
        if not 0 <= self.equilibration_iterations < self.total_iterations:
            p.append("equilibration_iterations must be >= 0 and < total_iterations")
        if self.sample_stride < 1:
            p.append("sample_stride must be >= 1")
        if not 0 <= self.local_update_prob <= 1:
            p.append("local_update_prob must lie in [0, 1]")
        if not self.shift_halfwidth > 0:
            p.append("shift_halfwidth must be positive")
        if self.n_chains < 1:
            p.append("n_chains must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            p.append("rng_seed must be a 64-bit unsigned integer")
        if self.proposal_step < 0:
            p.append("proposal_step must be >= 0")
        return p

    @property
    def n_samples_per_chain(self) -> int:
        return (self.total_iterations - self.equilibration_iterations) // self.sample_stride

    def to_dict(self) -> dict:
        d = asdict(self)
        if not np.isfinite(d["flux_bound"]):
            d["flux_bound"] = None
        return d

    @classmethod
    def scaled(cls, factor: float, **kwargs) -> PimcConfig:
        """Default iteration budget divided by ``factor``."""
        base = cls(beta_tilde=1.0, trotter_m=2)
        return cls(
            total_iterations=int(base.total_iterations / factor),
            equilibration_iterations=int(base.equilibration_iterations / factor),
            **kwargs,
        )


@dataclass(frozen=True)
class AutocorrelationResult:
    tau: float
    window: int
    std_error: float
    mean: float
    std: float
    n: int
    degenerate: bool = False


def autocorrelation_time(samples, c: float = WINDOW_FACTOR) -> AutocorrelationResult:
    """Integrated autocorrelation time tau = 1 + 2 sum_t rho(t) with a self-consistent window.

    The window is the smallest W with W >= c * tau(W). The standard error of the
    mean is std * sqrt(tau / n). A constant series is flagged as degenerate with tau = 1.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    if std == 0 or not np.isfinite(std):
        return AutocorrelationResult(1.0, 0, 0.0, mean, 0.0, n, degenerate=True)
    y = x - mean
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(y, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n]
    rho = acf / acf[0]
    tau = 1.0
    window = n - 1
    for t in range(1, n):
        tau += 2 * rho[t]
        if t >= c * tau:
            window = t
            break
    tau = max(tau, 1.0)
    return AutocorrelationResult(tau, window, std * np.sqrt(tau / n), mean, std, n)


@dataclass
class PathEnsembleStats:
    """Energy estimate in GHz with autocorrelation-corrected error.

    ``autocorrelation_time`` is in Monte Carlo iterations (sample tau times stride).
    """

    mean_energy: float
    std_error: float
    autocorrelation_time: float
    n_samples: int
    acceptance_local: float
    acceptance_global: float
    chain_means: list = field(default_factory=list)
    chain_errors: list = field(default_factory=list)
    degenerate: bool = False
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, *, include_samples=False) -> dict:
        d = {
            "mean_energy_ghz": self.mean_energy,
            "std_error_ghz": self.std_error,
            "autocorrelation_time_iterations": self.autocorrelation_time,
            "n_samples": self.n_samples,
            "acceptance_local": self.acceptance_local,
            "acceptance_global": self.acceptance_global,
            "chain_means_ghz": list(self.chain_means),
            "chain_errors_ghz": list(self.chain_errors),
            "degenerate": self.degenerate,
        }
        if include_samples and self.samples is not None:
            d["samples_ghz"] = np.asarray(self.samples).tolist()
        return d


def aggregate_chains(series, stride, acc_local, acc_global) -> PathEnsembleStats:
    """Combine independent chains: mean of chain means, errors added in quadrature."""
    results = [autocorrelation_time(s) for s in series]
    k = len(results)
    mean = float(np.mean([r.mean for r in results]))
    err = float(np.sqrt(sum(r.std_error**2 for r in results)) / k)
    tau = float(np.mean([r.tau for r in results])) * stride
    tried_l = sum(a[1] for a in acc_local)
    tried_g = sum(a[1] for a in acc_global)
    return PathEnsembleStats(
        mean_energy=mean,
        std_error=err,
        autocorrelation_time=tau,
        n_samples=int(sum(r.n for r in results)),
        acceptance_local=sum(a[0] for a in acc_local) / tried_l if tried_l else float("nan"),
        acceptance_global=sum(a[0] for a in acc_global) / tried_g if tried_g else float("nan"),
        chain_means=[r.mean for r in results],
        chain_errors=[r.std_error for r in results],
        degenerate=all(r.degenerate for r in results),
        samples=np.concatenate([np.asarray(s) for s in series]),
    )


def chain_generators(seed: int, n_chains: int):
    """Independent counter-based generators, one per chain."""
    children = np.random.SeedSequence(seed).spawn(n_chains)
    return [np.random.Generator(np.random.Philox(c)) for c in children]
