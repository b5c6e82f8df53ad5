"""Model objects for the dilated two-qubit sensor.

The sensor qubit follows the pseudo-Hermitian generator

    H_s(E, delta) = E [[0, 1/delta], [delta, 0]]

which is realized by postselecting an ancilla qubit out of the Hermitian
two-qubit Hamiltonian

    H_tot = b_lambda (I (x) sigma_x) - c (sigma_y (x) sigma_y)

with ``b_lambda = b0 + lambda``. The ancilla-|1> sector is tied to the sensor
state by the diagonal metric ``zeta``: |chi> = zeta |psi>.

For a general initial-condition parameter ``kappa`` the effective coupling is
``delta_lambda = (b_lambda - kappa c) / E_lambda``. With the default
``kappa = delta`` this collapses to ``(lambda + 2 eps omega) / E_lambda``
because ``b0 - delta c = 2 eps omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import qcore
from .errors import (
    InvalidArgument,
    MetricPositivityError,
    SingularMetricError,
    SingularParameterError,
)


@dataclass(frozen=True)
class SensorConfig:
    """Physical parameters (omega, epsilon, kappa) and their derived constants.

    Build instances with :func:`derive_config`; constructing one by hand (or
    via ``dataclasses.replace``) skips the consistency of derived constants,
    which is only useful for negative-control checks.
    """

    omega: float
    epsilon: float
    kappa: float
    delta: float
    E: float
    b0: float
    c: float
    tau: float
    theta: float

    @property
    def lambda_peak(self) -> float:
        """Field value where the eigenvectors coalesce (delta_lambda = 0) for kappa = delta."""
        return -2.0 * self.epsilon * self.omega

    @property
    def lambda_scale(self) -> float:
        """Natural field unit eps * omega."""
        return self.epsilon * self.omega

    def as_dict(self) -> dict[str, float]:
        return {
            "omega": self.omega,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "delta": self.delta,
            "E": self.E,
            "b0": self.b0,
            "c": self.c,
            "tau": self.tau,
            "theta": self.theta,
        }


@dataclass(frozen=True)
class EffectiveSpec:
    lam: float
    b_lambda: float
    E_lambda: float
    delta_lambda: float
    D_lambda: float

    def eigenvectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Unnormalized eigenvectors |0> +- delta_lambda |1> for eigenvalues +-E_lambda."""
        return qcore.ket(1.0, self.delta_lambda), qcore.ket(1.0, -self.delta_lambda)


@dataclass(frozen=True)
class MetricOperator:
    zeta: np.ndarray  # 2x2 real diagonal

    @property
    def diagonal(self) -> tuple[float, float]:
        return float(self.zeta[0, 0].real), float(self.zeta[1, 1].real)

    def is_positive(self) -> bool:
        return min(self.diagonal) > 0.0


@dataclass(frozen=True)
class DilatedModel:
    hamiltonian: np.ndarray
    initial_state: np.ndarray
    config: SensorConfig
    spec: EffectiveSpec


def _require_finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidArgument(f"{name} must be finite and > 0, got {value!r}")
    return value


def derive_config(omega: float, epsilon: float, kappa: float | None = None) -> SensorConfig:
    """Populate every derived constant of the sensor from (omega, epsilon, kappa).

    ``kappa`` defaults to ``delta = sqrt(eps / (1 + eps))``.
    """
    omega = _require_finite_positive("omega", omega)
    epsilon = _require_finite_positive("epsilon", epsilon)
    delta = math.sqrt(epsilon / (1.0 + epsilon))
    if kappa is None:
        kappa = delta
    kappa = _require_finite_positive("kappa", kappa)

    root = math.sqrt(epsilon * (1.0 + epsilon))
    E = 2.0 * omega * root
    b0 = 4.0 * omega * epsilon * (1.0 + epsilon) / (1.0 + 2.0 * epsilon)
    c = 2.0 * omega * root / (1.0 + 2.0 * epsilon)
    tau = math.pi / (2.0 * E)
    theta = 2.0 * math.asin(kappa / math.sqrt(1.0 + kappa * kappa))
    return SensorConfig(
        omega=omega, epsilon=epsilon, kappa=kappa, delta=delta, E=E, b0=b0, c=c, tau=tau, theta=theta
    )


def pseudo_hamiltonian(E: float, delta: float) -> np.ndarray:
    """The two-level pseudo-Hermitian generator E [[0, 1/delta], [delta, 0]]."""
    if delta == 0.0:
        raise SingularParameterError("delta = 0 is the coalescent limit; H_s has no finite matrix there")
    return np.array([[0.0, E / delta], [E * delta, 0.0]], dtype=complex)


def coupling_numerator(config: SensorConfig, lam):
    """b_lambda - kappa c, written so that kappa = delta gives exactly lambda + 2 eps omega."""
    return (lam + 2.0 * config.epsilon * config.omega) + (config.delta - config.kappa) * config.c


def effective_spec(config: SensorConfig, lam: float) -> EffectiveSpec:
    lam = float(lam)
    b = config.b0 + lam
    E_l = math.hypot(b, config.c)
    d = coupling_numerator(config, lam) / E_l
    return EffectiveSpec(lam=lam, b_lambda=b, E_lambda=E_l, delta_lambda=d, D_lambda=d * d)


def effective_hamiltonian(config: SensorConfig, lam: float) -> np.ndarray:
    spec = effective_spec(config, lam)
    return pseudo_hamiltonian(spec.E_lambda, spec.delta_lambda)


def metric_operator(config: SensorConfig, lam: float, check_positive: bool = True) -> MetricOperator:
    """zeta = diag(kappa, (c + kappa b_lambda) / (b_lambda - kappa c)).

    Raises :class:`SingularMetricError` when the denominator vanishes and, with
    ``check_positive``, :class:`MetricPositivityError` on a non-positive entry.
    For the default kappa this happens for every lambda <= -2 eps omega.
    """
    b = config.b0 + float(lam)
    k = config.kappa
    den = b - k * config.c
    if abs(den) <= 4.0 * np.finfo(float).eps * (abs(b) + abs(k * config.c)):
        raise SingularMetricError(f"b_lambda == kappa c at lambda={lam!r}; metric diverges")
    z2 = (config.c + k * b) / den
    if check_positive and not (k > 0.0 and z2 > 0.0):
        raise MetricPositivityError(f"metric loses positivity at lambda={lam!r} (zeta = diag({k:.6g}, {z2:.6g}))")
    return MetricOperator(zeta=np.diag([k, z2]).astype(complex))


def pseudo_hermiticity_residual(config: SensorConfig, lam: float) -> float:
    """Relative residual of (zeta^2 + 1) H_s = H_s^dagger (zeta^2 + 1).

    Positivity is not required here; the condition only involves zeta^2.
    """
    zeta = metric_operator(config, lam, check_positive=False).zeta
    h = effective_hamiltonian(config, lam)
    g = zeta @ zeta + qcore.I2
    lhs = g @ h
    rhs = h.conj().T @ g
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))


def dilated_hamiltonian(config: SensorConfig, lam: float) -> np.ndarray:
    b = config.b0 + float(lam)
    return b * qcore.tensor(qcore.I2, qcore.SIGMA_X) - config.c * qcore.tensor(qcore.SIGMA_Y, qcore.SIGMA_Y)


def prepared_state(config: SensorConfig) -> np.ndarray:
    """(|0>_a + kappa |1>_a) (x) |0>_s / sqrt(1 + kappa^2).

    This is Y(theta) applied to the ancilla of |0>_a|0>_s; the closed form is
    used so that the t = 0 state matches the sensor reference bit for bit.
    """
    norm = math.sqrt(1.0 + config.kappa ** 2)
    return qcore.ket(1.0 / norm, 0.0, config.kappa / norm, 0.0)


def build_dilated(config: SensorConfig, lam: float) -> DilatedModel:
    return DilatedModel(
        hamiltonian=dilated_hamiltonian(config, lam),
        initial_state=prepared_state(config),
        config=config,
        spec=effective_spec(config, lam),
    )


def closed_form_sensor_state(config: SensorConfig, lam: float, t):
    """Unnormalized sensor amplitudes exp(-i H_s t) |0> / sqrt(1 + kappa^2).

    Uses H_s^2 = E_lambda^2, so exp(-i H_s t) = cos(E t) - i sin(E t) H_s / E.
    Accepts an array of times; the trailing axis holds the two amplitudes.
    """
    spec = effective_spec(config, lam)
    phi = spec.E_lambda * np.asarray(t, dtype=float)
    norm = math.sqrt(1.0 + config.kappa ** 2)
    return np.stack([np.cos(phi) + 0j, -1j * spec.delta_lambda * np.sin(phi)], axis=-1) / norm


def closed_form_ancilla_state(config: SensorConfig, lam: float, t):
    """Ancilla-|1> amplitudes zeta |psi(t)>, in a form that stays finite where zeta diverges."""
    spec = effective_spec(config, lam)
    phi = spec.E_lambda * np.asarray(t, dtype=float)
    norm = math.sqrt(1.0 + config.kappa ** 2)
    upper = config.kappa * np.cos(phi) + 0j
    lower = -1j * np.sin(phi) * (config.c + config.kappa * spec.b_lambda) / spec.E_lambda
    return np.stack([upper, lower], axis=-1) / norm


def _relative_deviation(got: np.ndarray, ref: np.ndarray) -> np.ndarray:
    err = np.linalg.norm(got - ref, axis=-1)
    scale = np.linalg.norm(ref, axis=-1)
    # Where the reference vanishes, fall back to the absolute error.
    return np.where(scale > 0.0, err / np.where(scale > 0.0, scale, 1.0), err)


@dataclass(frozen=True)
class DilationCheck:
    sensor_deviation: float
    ancilla_deviation: float
    norm_defect: float

    @property
    def max_deviation(self) -> float:
        return max(self.sensor_deviation, self.ancilla_deviation)


def check_dilation(config: SensorConfig, lam: float, t_grid: Iterable[float]) -> DilationCheck:
    """Compare postselected dilated evolution against the closed-form sensor evolution."""
    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if ts.size == 0:
        raise InvalidArgument("t_grid must be nonempty")
    if not np.all(np.isfinite(ts)):
        raise InvalidArgument("t_grid must be finite")
    model = build_dilated(config, lam)
    states = qcore.propagate_many(model.hamiltonian, model.initial_state, ts)
    sensor_ref = closed_form_sensor_state(config, lam, ts)
    ancilla_ref = closed_form_ancilla_state(config, lam, ts)
    sensor_dev = _relative_deviation(states[:, :2], sensor_ref)
    ancilla_dev = _relative_deviation(states[:, 2:], ancilla_ref)
    total = np.sum(np.abs(sensor_ref) ** 2, axis=-1) + np.sum(np.abs(ancilla_ref) ** 2, axis=-1)
    return DilationCheck(
        sensor_deviation=float(np.max(sensor_dev)),
        ancilla_deviation=float(np.max(ancilla_dev)),
        norm_defect=float(np.max(np.abs(total - 1.0))),
    )


def verify_dilation(config: SensorConfig, lam: float, t_grid: Iterable[float]) -> float:
    """Max relative deviation between the two evolution paths over ``t_grid``.

    Covers both the postselected sensor amplitudes and the ancilla-|1> relation
    |chi> = zeta |psi>.
    """
    return check_dilation(config, lam, t_grid).max_deviation


def reconstruct_effective_hamiltonian(config: SensorConfig, lam: float, times=(0.0, None)) -> np.ndarray:
    """Recover the 2x2 generator of the postselected dynamics from the simulation alone.

    Uses i d psi/dt = H_eff psi with the exact time derivative
    (H_tot Psi)[:2] at two times where psi(t) spans the sensor space.
    """
    t1, t2 = times
    if t2 is None:
        t2 = 0.5 * config.tau
    model = build_dilated(config, lam)
    states = qcore.propagate_many(model.hamiltonian, model.initial_state, [t1, t2])
    x = states[:, :2].T
    y = (model.hamiltonian @ states.T)[:2]
    return y @ np.linalg.inv(x)
