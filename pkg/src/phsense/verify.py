"""Numerical checks of the dilation: equivalence, metric condition, bookkeeping."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import dilation, signal
from .dilation import SensorConfig

EQUIVALENCE_TOL = 1e-9
METRIC_TOL = 1e-10
NORM_TOL = 1e-10
SPECTRUM_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    epsilon: float
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def probe_lambdas(config: SensorConfig) -> list[float]:
    """0, the peak, the working point and +-eps omega."""
    lo = signal.optimal_working_point(config).lambda_o
    s = config.lambda_scale
    return [0.0, signal.lambda_peak(config), lo, s, -s]


def _away_from_peak(config: SensorConfig, lambdas: Iterable[float]) -> list[float]:
    lm = signal.lambda_peak(config)
    return [lam for lam in lambdas if abs(lam - lm) > 1e-6 * config.lambda_scale]


def check_config(config: SensorConfig, n_times: int = 50, lambdas: Sequence[float] | None = None,
                 probe_config: SensorConfig | None = None) -> list[CheckResult]:
    """Run every check for one parameter set.

    ``probe_config`` (defaults to ``config``) only chooses the probe points,
    so a deliberately inconsistent ``config`` is still probed at sane lambdas.
    """
    probe_config = probe_config or config
    if lambdas is None:
        lambdas = probe_lambdas(probe_config)
    eps = config.epsilon
    times = np.linspace(0.0, 2.0 * probe_config.tau, n_times)

    dil = [dilation.check_dilation(config, lam, times) for lam in lambdas]
    equivalence = max(d.max_deviation for d in dil)
    norm = max(d.norm_defect for d in dil)

    sig = 0.0
    gam = 0.0
    for lam in lambdas:
        s_sim, g_sim = signal.simulated_curve(config, lam, times)
        sig = max(sig, float(np.max(np.abs(signal.population(config, lam, times) - s_sim))))
        gam = max(gam, float(np.max(np.abs(signal.gamma(config, lam, times) - g_sim))))

    grid = _away_from_peak(config, np.linspace(-4.0, 4.0, 41) * probe_config.lambda_scale)
    metric = max(dilation.pseudo_hermiticity_residual(config, lam) for lam in grid)

    spectrum = 0.0
    for lam in _away_from_peak(config, lambdas):
        spec = dilation.effective_spec(config, lam)
        h = dilation.reconstruct_effective_hamiltonian(config, lam)
        ev = np.sort(np.linalg.eigvals(h).real)
        spectrum = max(spectrum, float(np.max(np.abs(ev - [-spec.E_lambda, spec.E_lambda]))) / spec.E_lambda)
        # H|0> = E delta |1> fixes delta through the first column.
        ratio = (h[1, 0] / spec.E_lambda).real
        spectrum = max(spectrum, float(abs(ratio - spec.delta_lambda) / max(abs(spec.delta_lambda), 1e-300)))

    return [
        CheckResult("dilation_equivalence", eps, equivalence, EQUIVALENCE_TOL),
        CheckResult("signal_equivalence", eps, sig, EQUIVALENCE_TOL),
        CheckResult("gamma_identity", eps, gam, EQUIVALENCE_TOL),
        CheckResult("metric_condition", eps, metric, METRIC_TOL),
        CheckResult("norm_bookkeeping", eps, norm, NORM_TOL),
        CheckResult("effective_spectrum", eps, spectrum, SPECTRUM_TOL),
    ]


def run_suite(omega: float = 1.0, epsilons: Sequence[float] = (0.1, 0.01), kappa: float | None = None,
              corrupt_c: float | None = None) -> list[CheckResult]:
    """All checks over a list of epsilon values.

    ``corrupt_c`` rescales the coupling c after the derived constants are
    fixed; it exists so callers can confirm the checks catch an inconsistent model.
    """
    results: list[CheckResult] = []
    for eps in epsilons:
        cfg = dilation.derive_config(omega, eps, kappa)
        probe = cfg
        if corrupt_c is not None:
            cfg = dataclasses.replace(cfg, c=cfg.c * corrupt_c)
        results.extend(check_config(cfg, probe_config=probe))
    return results
