"""Fisher-information accounting and minimum-detectable-change figures.

The Ramsey baseline is evaluated at the same interrogation time ``tau`` as the
postselected sensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import signal
from .dilation import SensorConfig
from .errors import DegenerateSignalError, InvalidArgument


@dataclass(frozen=True)
class FisherReport:
    lam: float
    N: float
    gamma: float
    chi: float
    S: float
    I: float
    K: float

    @property
    def ratio(self) -> float:
        return self.I / self.K


@dataclass(frozen=True)
class SensitivityReport:
    delta_S: float
    delta_d: float
    delta_lambda_sensor: float
    delta_lambda_ramsey: float

    @property
    def ratio(self) -> float:
        return self.delta_lambda_sensor / self.delta_lambda_ramsey


def normalized_sensor_state(S: float) -> np.ndarray:
    """sqrt(S)|0> - i sqrt(1 - S)|1>."""
    S = float(S)
    if not 0.0 <= S <= 1.0:
        raise InvalidArgument(f"S must lie in [0, 1], got {S!r}")
    return np.array([math.sqrt(S), -1j * math.sqrt(1.0 - S)], dtype=complex)


def qfi_bound(config: SensorConfig, N: float, t: float | None = None) -> float:
    """Upper bound 4 N t^2 on the QFI of the dilated two-qubit system."""
    t = config.tau if t is None else t
    return 4.0 * N * t * t


def fisher_info(config: SensorConfig, lam: float, N: float, t: float | None = None) -> FisherReport:
    """Information gamma N chi^2 / [S (1 - S)] carried by the postselected runs."""
    if N < 1:
        raise InvalidArgument(f"N must be >= 1, got {N!r}")
    t = config.tau if t is None else t
    S = signal.population(config, lam, t)
    if S <= 0.0 or S >= 1.0:
        raise DegenerateSignalError(f"S = {S!r} at lambda={lam!r}; binary-outcome information is singular")
    g = signal.gamma(config, lam, t)
    x = signal.chi(config, lam, t)
    return FisherReport(
        lam=float(lam), N=float(N), gamma=g, chi=x, S=S,
        I=g * N * x * x / (S * (1.0 - S)),
        K=qfi_bound(config, N, t),
    )


def ramsey_signal(lam, tau):
    """d = (1 + cos(2 lambda tau)) / 2."""
    out = 0.5 * (1.0 + np.cos(2.0 * np.asarray(lam, dtype=float) * tau))
    return out if np.ndim(out) else float(out)


def ramsey_slope(lam, tau):
    out = -tau * np.sin(2.0 * np.asarray(lam, dtype=float) * tau)
    return out if np.ndim(out) else float(out)


def ramsey_working_point(tau: float) -> float:
    """Smallest positive lambda with the steepest Ramsey slope (2 lambda tau = pi/2)."""
    return math.pi / (4.0 * tau)


def sensitivity(config: SensorConfig, delta_S: float, delta_d: float,
                chi_max: float | None = None) -> SensitivityReport:
    """delta_S / |chi|_max for the sensor against delta_d / tau for Ramsey."""
    if not (delta_S > 0.0 and delta_d > 0.0):
        raise InvalidArgument("noise levels must be positive")
    if chi_max is None:
        chi_max = signal.optimal_working_point(config).chi_max
    return SensitivityReport(
        delta_S=delta_S,
        delta_d=delta_d,
        delta_lambda_sensor=delta_S / chi_max,
        delta_lambda_ramsey=delta_d / config.tau,
    )
