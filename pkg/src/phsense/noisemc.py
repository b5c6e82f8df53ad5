"""Monte Carlo model of fluorescence readout and the linear population estimator.

Each experiment run of the postselected protocol succeeds with probability
``gamma``. A kept run ends in |0>_s with probability S and then yields a
photon number

    n_j = Normal(m_state, sigma^2) + xi_j

where ``xi_j`` is background noise: i.i.d. Normal(0, xi^2) per run, or one
Normal(0, xi^2) draw shared by every run of a repetition (fully correlated,
so <xi_i xi_j> = xi^2 for all i, j). The estimator averages
``(n_j - m1) / (m0 - m1)`` over the M kept runs. The Ramsey protocol keeps
every run and uses d(lambda) in place of S.

Random streams
--------------
Repetition ``r`` of protocol ``p`` draws from
``Generator(PCG64(SeedSequence(seed, spawn_key=(p, r))))`` with p = 0 for the
postselected sensor and p = 1 for Ramsey. Streams are therefore independent of
scheduling and of the worker count.

Two samplers produce the same estimator distribution. ``"per_run"`` draws
every run explicitly (cost O(N)). ``"aggregate"`` draws the sufficient
statistics directly: M ~ Binomial(N, gamma), K ~ Binomial(M, S), the Gaussian
readout sum ~ Normal(0, M sigma^2) and the background sum (M xi_shared, or
Normal(0, M xi^2)). It is exact, O(1) per repetition, and the default.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import metrology, signal
from .dilation import SensorConfig
from .errors import InsufficientStatisticsError, InvalidArgument

PER_RUN_CHUNK = 1 << 20


class Correlation(str, enum.Enum):
    UNCORRELATED = "uncorrelated"
    FULLY_CORRELATED = "fully_correlated"


class Protocol(str, enum.Enum):
    PSEUDO_HERMITIAN = "pseudo_hermitian"
    RAMSEY = "ramsey"


_STREAM_ID = {Protocol.PSEUDO_HERMITIAN: 0, Protocol.RAMSEY: 1}


@dataclass(frozen=True)
class ReadoutModel:
    m0: float
    m1: float
    sigma: float = 0.0
    xi: float = 0.0
    correlation: Correlation = Correlation.FULLY_CORRELATED

    def __post_init__(self):
        object.__setattr__(self, "correlation", Correlation(self.correlation))
        if not self.m0 > self.m1:
            raise InvalidArgument(f"readout contrast must be positive (m0={self.m0!r}, m1={self.m1!r})")
        if self.sigma < 0 or self.xi < 0:
            raise InvalidArgument("sigma and xi must be >= 0")

    @property
    def m(self) -> float:
        return self.m0 - self.m1


@dataclass(frozen=True)
class Campaign:
    N: int
    R: int
    seed: int
    protocol: Protocol = Protocol.PSEUDO_HERMITIAN

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        object.__setattr__(self, "N", int(self.N))
        if self.N < 1:
            raise InvalidArgument(f"N must be >= 1, got {self.N}")
        if self.R < 2:
            raise InvalidArgument(f"R must be >= 2, got {self.R}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class CampaignResult:
    protocol: Protocol
    lam: float
    N: int
    R: int
    seed: int
    signal: float
    keep_probability: float
    S_hat_mean: float
    S_hat_var: float
    kept_mean: float
    predicted_var: float
    estimates: np.ndarray = field(repr=False, compare=False)

    @property
    def S_hat_std(self) -> float:
        return math.sqrt(self.S_hat_var)

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.S_hat_var / self.R)


def variance_model(S: float, gamma: float, readout: ReadoutModel, N: float) -> float:
    """Shot + Gaussian readout + background variance of the estimator.

    (1 - S) S / (gamma N) + sigma^2 / (gamma N m^2) + (1 / (gamma N m)^2) sum_ij <xi_i xi_j>.
    The last term is xi^2 / m^2 for fully correlated noise and
    xi^2 / (gamma N m^2) for uncorrelated noise. For Ramsey pass gamma = 1 and S = d.
    """
    kept = gamma * N
    if kept < 1.0:
        raise InsufficientStatisticsError(f"expected kept runs gamma*N = {kept:.3g} < 1")
    m2 = readout.m ** 2
    background = readout.xi ** 2 / m2
    if readout.correlation is Correlation.UNCORRELATED:
        background /= kept
    return (1.0 - S) * S / kept + readout.sigma ** 2 / (kept * m2) + background


def _rng(seed: int, protocol: Protocol, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(_STREAM_ID[protocol], rep))
    return np.random.Generator(np.random.PCG64(ss))


def _aggregate_rep(rng, N, p_keep, p0, readout):
    M = int(rng.binomial(N, p_keep)) if p_keep < 1.0 else N
    if M == 0:
        return 0, math.nan
    K = int(rng.binomial(M, p0))
    readout_sum = readout.sigma * math.sqrt(M) * rng.standard_normal()
    z = rng.standard_normal()
    if readout.correlation is Correlation.FULLY_CORRELATED:
        background_sum = M * readout.xi * z
    else:
        background_sum = readout.xi * math.sqrt(M) * z
    return M, (K * readout.m + readout_sum + background_sum) / (M * readout.m)


def _per_run_rep(rng, N, p_keep, p0, readout):
    shared = readout.xi * rng.standard_normal()
    M = 0
    total = 0.0
    remaining = N
    while remaining > 0:
        n = min(remaining, PER_RUN_CHUNK)
        remaining -= n
        kept = int(np.count_nonzero(rng.random(n) < p_keep)) if p_keep < 1.0 else n
        if kept == 0:
            continue
        in_zero = rng.random(kept) < p0
        counts = np.where(in_zero, readout.m0, readout.m1) + readout.sigma * rng.standard_normal(kept)
        if readout.correlation is Correlation.FULLY_CORRELATED:
            counts = counts + shared
        else:
            counts = counts + readout.xi * rng.standard_normal(kept)
        total += float(np.sum((counts - readout.m1) / readout.m))
        M += kept
    if M == 0:
        return 0, math.nan
    return M, total / M


_SAMPLERS = {"aggregate": _aggregate_rep, "per_run": _per_run_rep}


def protocol_probabilities(config: SensorConfig, lam: float, protocol: Protocol) -> tuple[float, float]:
    """(keep probability, probability of reading |0>) at the protocol time tau."""
    protocol = Protocol(protocol)
    if protocol is Protocol.PSEUDO_HERMITIAN:
        return signal.gamma(config, lam), signal.population(config, lam)
    return 1.0, metrology.ramsey_signal(lam, config.tau)


def simulate_campaign(config: SensorConfig, lam: float, readout: ReadoutModel, campaign: Campaign,
                      method: Literal["aggregate", "per_run"] = "aggregate", workers: int = 1) -> CampaignResult:
    """Run R independent repetitions of an N-run experiment and collect estimator statistics."""
    try:
        sampler = _SAMPLERS[method]
    except KeyError:
        raise InvalidArgument(f"unknown sampling method {method!r}") from None
    p_keep, p0 = protocol_probabilities(config, lam, campaign.protocol)

    def one(rep: int):
        return sampler(_rng(campaign.seed, campaign.protocol, rep), campaign.N, p_keep, p0, readout)

    reps = range(campaign.R)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, reps))
    else:
        out = [one(r) for r in reps]

    kept = np.array([o[0] for o in out], dtype=float)
    est = np.array([o[1] for o in out], dtype=float)
    empty = np.flatnonzero(kept == 0)
    if empty.size:
        raise InsufficientStatisticsError(
            f"repetition {int(empty[0])} kept no runs (N={campaign.N}, keep probability={p_keep:.3g})",
            repetition=int(empty[0]),
        )
    est.setflags(write=False)
    try:
        predicted = variance_model(p0, p_keep, readout, campaign.N)
    except InsufficientStatisticsError:
        predicted = math.nan
    return CampaignResult(
        protocol=campaign.protocol,
        lam=float(lam),
        N=campaign.N,
        R=campaign.R,
        seed=campaign.seed,
        signal=float(p0),
        keep_probability=float(p_keep),
        S_hat_mean=float(np.mean(est)),
        S_hat_var=float(np.var(est, ddof=1)),
        kept_mean=float(np.mean(kept)),
        predicted_var=predicted,
        estimates=est,
    )


@dataclass(frozen=True)
class ProtocolComparison:
    sensor: CampaignResult
    ramsey: CampaignResult
    chi_max: float
    report: metrology.SensitivityReport


def compare_protocols(config: SensorConfig, readout: ReadoutModel, campaign: Campaign,
                      method: Literal["aggregate", "per_run"] = "aggregate", workers: int = 1) -> ProtocolComparison:
    """Simulate both protocols at their working points with a shared readout and tau."""
    peak = signal.optimal_working_point(config)
    sensor = simulate_campaign(
        config, peak.lambda_o, readout,
        Campaign(campaign.N, campaign.R, campaign.seed, Protocol.PSEUDO_HERMITIAN), method, workers,
    )
    ramsey = simulate_campaign(
        config, metrology.ramsey_working_point(config.tau), readout,
        Campaign(campaign.N, campaign.R, campaign.seed, Protocol.RAMSEY), method, workers,
    )
    report = metrology.sensitivity(config, sensor.S_hat_std, ramsey.S_hat_std, chi_max=peak.chi_max)
    return ProtocolComparison(sensor=sensor, ramsey=ramsey, chi_max=peak.chi_max, report=report)


def min_detectable(config: SensorConfig, readout: ReadoutModel, campaign: Campaign,
                   method: Literal["aggregate", "per_run"] = "aggregate", workers: int = 1) -> metrology.SensitivityReport:
    """Empirical minimum detectable change for both protocols (std of the estimator over slope)."""
    return compare_protocols(config, readout, campaign, method, workers).report
