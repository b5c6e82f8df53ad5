"""The postselected sensor signal and its analytics.

The observable is the normalized population of the sensor in |0>,

    S(lambda, t) = 1 / (1 + D_lambda tan^2(E_lambda t)),

evaluated here in the pole-free form cos^2 / (cos^2 + D sin^2). The fixed
protocol time is ``tau = pi / (2E)``, where S(0, tau) = 0 and the peak at
``lambda_m = -2 eps omega`` has S = 1.

Array inputs broadcast in the ``population``/``gamma``/``chi`` helpers; the
spec-level operations return small frozen records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import qcore
from ._search import bisect, expand_bracket, golden_max, golden_min
from .dilation import SensorConfig, build_dilated, coupling_numerator, effective_spec
from .errors import DomainError, InvalidArgument, NoDipError, NumericalError

SIM_AMPLITUDE_FLOOR = 1e-150


@dataclass(frozen=True)
class SignalPoint:
    lam: float
    t: float
    S: float
    gamma: float
    phi: float


@dataclass(frozen=True)
class DipDescriptor:
    j: int
    t_j: float
    delta_t: float


@dataclass(frozen=True)
class PeakDescriptor:
    lambda_m: float
    delta_lambda_plus: float | None = None
    delta_lambda_minus: float | None = None
    lambda_o: float | None = None
    chi_max: float | None = None

    @property
    def delta_lambda(self) -> float | None:
        if self.delta_lambda_plus is None or self.delta_lambda_minus is None:
            return None
        return self.delta_lambda_plus + self.delta_lambda_minus


def _effective_arrays(config: SensorConfig, lam):
    lam = np.asarray(lam, dtype=float)
    b = config.b0 + lam
    E_l = np.hypot(b, config.c)
    n = coupling_numerator(config, lam)
    return b, E_l, n / E_l, n


def _time(config: SensorConfig, t):
    return config.tau if t is None else t


def population(config: SensorConfig, lam, t=None):
    """S(lambda, t); broadcasts over array ``lam`` and ``t``. ``t`` defaults to tau."""
    t = np.asarray(_time(config, t), dtype=float)
    _, E_l, d, _ = _effective_arrays(config, lam)
    phi = E_l * t
    c2 = np.cos(phi) ** 2
    s2 = np.sin(phi) ** 2
    den = c2 + d * d * s2
    # den == 0 needs cos = 0 and D = 0 together; S is 1 on the D = 0 line.
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(den > 0.0, c2 / np.where(den > 0.0, den, 1.0), 1.0)
    return s if s.ndim else float(s)


def gamma(config: SensorConfig, lam, t=None):
    """Postselection success probability (cos^2 + D sin^2) / (1 + kappa^2)."""
    t = np.asarray(_time(config, t), dtype=float)
    _, E_l, d, _ = _effective_arrays(config, lam)
    phi = E_l * t
    g = (np.cos(phi) ** 2 + d * d * np.sin(phi) ** 2) / (1.0 + config.kappa ** 2)
    return g if np.ndim(g) else float(g)


def chi(config: SensorConfig, lam, t=None):
    """Analytic dS/dlambda by the chain rule through E_lambda and delta_lambda."""
    t = np.asarray(_time(config, t), dtype=float)
    b, E_l, d, n = _effective_arrays(config, lam)
    phi = E_l * t
    co, si = np.cos(phi), np.sin(phi)
    D = d * d
    den = (co * co + D * si * si) ** 2
    dS_dphi = -2.0 * D * si * co / den
    dS_dD = -(co * co) * (si * si) / den
    dE = b / E_l
    dd = (E_l * E_l - n * b) / E_l ** 3
    out = dS_dphi * t * dE + dS_dD * 2.0 * d * dd
    return out if np.ndim(out) else float(out)


def success_probability(config: SensorConfig, lam: float, t: float | None = None) -> float:
    return float(gamma(config, lam, t))


def signal_exact(config: SensorConfig, lam: float, t: float | None = None) -> SignalPoint:
    t = float(_time(config, t))
    spec = effective_spec(config, lam)
    return SignalPoint(
        lam=float(lam),
        t=t,
        S=float(population(config, lam, t)),
        gamma=float(gamma(config, lam, t)),
        phi=spec.E_lambda * t,
    )


def simulated_curve(config: SensorConfig, lam: float, times) -> tuple[np.ndarray, np.ndarray]:
    """(S, gamma) from postselected 4x4 evolution at every time in ``times``."""
    model = build_dilated(config, lam)
    states = qcore.propagate_many(model.hamiltonian, model.initial_state, times)
    p0 = np.abs(states[:, 0]) ** 2
    p1 = np.abs(states[:, 1]) ** 2
    amp = np.maximum(np.abs(states[:, 0]), np.abs(states[:, 1]))
    if np.any(amp < SIM_AMPLITUDE_FLOOR):
        bad = np.asarray(times, dtype=float).ravel()[np.argmax(amp < SIM_AMPLITUDE_FLOOR)]
        raise NumericalError(f"postselection probability vanishes at t={bad!r}")
    g = p0 + p1
    return p0 / g, g


def signal_simulated(config: SensorConfig, lam: float, t: float | None = None) -> SignalPoint:
    t = float(_time(config, t))
    S, g = simulated_curve(config, lam, [t])
    return SignalPoint(
        lam=float(lam), t=t, S=float(S[0]), gamma=float(g[0]), phi=effective_spec(config, lam).E_lambda * t
    )


# -- dips in time -----------------------------------------------------------


def dip_profile(config: SensorConfig, lam: float, j_max: int) -> list[DipDescriptor]:
    if j_max < 1:
        raise InvalidArgument(f"j_max must be >= 1, got {j_max}")
    spec = effective_spec(config, lam)
    if spec.delta_lambda == 0.0:
        raise NoDipError(f"delta_lambda = 0 at lambda={lam!r}: S(t) is identically 1")
    width = 2.0 * math.sqrt(spec.D_lambda) / spec.E_lambda
    return [
        DipDescriptor(j=j, t_j=(j - 0.5) * math.pi / spec.E_lambda, delta_t=width)
        for j in range(1, j_max + 1)
    ]


def locate_dip(config: SensorConfig, lam: float, j: int = 1, xtol: float | None = None) -> float:
    """Numerically minimize S(t) around the j-th predicted dip."""
    (dip,) = dip_profile(config, lam, j)[-1:]
    half_period = 0.5 * math.pi / effective_spec(config, lam).E_lambda
    if xtol is None:
        xtol = 1e-6 * dip.delta_t
    return golden_min(lambda t: population(config, lam, t), dip.t_j - half_period, dip.t_j + half_period, xtol)


def dip_fwhm(config: SensorConfig, lam: float, j: int = 1) -> float:
    """Full width of the j-th dip where S(t) = 1/2, found by bisection on each side."""
    t_min = locate_dip(config, lam, j)
    half_period = 0.5 * math.pi / effective_spec(config, lam).E_lambda
    f = lambda t: population(config, lam, t) - 0.5  # noqa: E731
    right = bisect(f, t_min, t_min + half_period, ftol=1e-14)
    left = bisect(f, t_min - half_period, t_min, ftol=1e-14)
    return right - left


def _dip_center_and_width(config: SensorConfig, lam: float) -> tuple[float, float]:
    spec = effective_spec(config, lam)
    return 0.5 * math.pi / spec.E_lambda, 2.0 * abs(spec.delta_lambda) / spec.E_lambda


def dip_parameter_sensitivities(config: SensorConfig, lam: float, step: float | None = None) -> tuple[float, float]:
    """Signed (dt_1/dlambda, d(Delta t)/dlambda), each divided by the dip width Delta t.

    Central differences; the default step is a thousandth of the distance to
    the coalescence point so the |delta_lambda| kink stays outside the stencil.
    """
    n = float(coupling_numerator(config, lam))
    if n == 0.0:
        raise NoDipError(f"delta_lambda = 0 at lambda={lam!r}: no dip to track")
    h = 1e-3 * abs(n) if step is None else float(step)
    if not (h > 0.0) or lam + h == lam or lam - h == lam:
        raise InvalidArgument(f"finite-difference step {h!r} underflows at lambda={lam!r}")
    t_hi, w_hi = _dip_center_and_width(config, lam + h)
    t_lo, w_lo = _dip_center_and_width(config, lam - h)
    _, width = _dip_center_and_width(config, lam)
    return (t_hi - t_lo) / (2.0 * h) / width, (w_hi - w_lo) / (2.0 * h) / width


# -- peak in lambda ------------------------------------------------------------


def signal_approx(config: SensorConfig, lam, form: Literal["printed", "variant"] = "printed"):
    """Second-order peak approximation pi^2 a^2 eps / (pi^2 a^2 eps + (x + 2)^2), x = lambda/(eps omega).

    ``form="printed"`` uses a = x^2/8 - x. ``form="variant"`` uses
    a = -(x + x^2/8), the coefficient obtained by expanding the exact signal
    to second order around the peak; the two differ away from x = -2.
    Valid for |x + 2| <= 2.
    """
    x = np.asarray(lam, dtype=float) / config.lambda_scale
    if np.any(np.abs(x + 2.0) > 2.0):
        raise DomainError("approximation is only defined for |lambda/(eps omega) + 2| <= 2")
    if form == "printed":
        a = x * x / 8.0 - x
    elif form == "variant":
        a = -(x + x * x / 8.0)
    else:
        raise InvalidArgument(f"unknown form {form!r}")
    num = math.pi ** 2 * a * a * config.epsilon
    out = num / (num + (x + 2.0) ** 2)
    return out if np.ndim(out) else float(out)


def approx_peak_width(config: SensorConfig, form: Literal["printed", "variant"] = "printed") -> float:
    """Full width of the approximate peak where ``signal_approx`` = 1/2 on each side."""
    lm = -2.0 * config.lambda_scale
    f = lambda lam: signal_approx(config, lam, form) - 0.5  # noqa: E731
    edge = 2.0 * config.lambda_scale
    width = 0.0
    for direction in (+1.0, -1.0):
        far = lm + direction * edge
        if f(far) > 0.0:
            raise NumericalError("approximate peak does not fall to 1/2 inside its validity range")
        width += abs(bisect(f, *sorted((lm, far)), ftol=1e-14) - lm)
    return width


def lambda_peak(config: SensorConfig) -> float:
    """Zero of delta_lambda; equals -2 eps omega exactly for the default kappa."""
    return -2.0 * config.epsilon * config.omega - (config.delta - config.kappa) * config.c


def _half_max_offset(config: SensorConfig, t: float, direction: float) -> float:
    lm = lambda_peak(config)
    f = lambda lam: population(config, lam, t) - 0.5  # noqa: E731
    step = 1e-3 * config.epsilon ** 1.5 * config.omega
    lo, hi = expand_bracket(f, lm, step, direction)
    root = bisect(f, lo, hi, ftol=1e-12)
    if abs(f(root)) > 1e-10:
        raise NumericalError(f"half-maximum bisection did not converge (|S - 1/2| = {abs(f(root)):.3e})")
    return abs(root - lm)


def peak_width(config: SensorConfig, t: float | None = None) -> PeakDescriptor:
    """Half-widths of the coalescence peak where S(lambda, t) = 1/2 on either side."""
    t = float(_time(config, t))
    return PeakDescriptor(
        lambda_m=lambda_peak(config),
        delta_lambda_plus=_half_max_offset(config, t, +1.0),
        delta_lambda_minus=_half_max_offset(config, t, -1.0),
    )


def fd_step(config: SensorConfig) -> float:
    return max(1e-9, 1e-6 * config.lambda_scale)


def susceptibility(config: SensorConfig, lam: float, t: float | None = None,
                   mode: Literal["analytic", "finite_difference"] = "analytic") -> float:
    if mode == "analytic":
        return float(chi(config, lam, t))
    if mode == "finite_difference":
        h = fd_step(config)
        return (population(config, lam + h, t) - population(config, lam - h, t)) / (2.0 * h)
    raise InvalidArgument(f"unknown susceptibility mode {mode!r}")


def _flank(config: SensorConfig, branch: str, t: float) -> tuple[float, float]:
    lm = lambda_peak(config)
    spread = 3.0 * peak_width(config, t).delta_lambda
    # The dips nearest the peak sit where E_lambda t = pi/2; at t = tau that is
    # b_lambda = +-b0, i.e. lambda = 0 and lambda = -2 b0.
    phase_edge = math.pi / (2.0 * t)
    b_edge = math.sqrt(max(phase_edge ** 2 - config.c ** 2, 0.0))
    if branch == "right":
        return lm, min(lm + spread, b_edge - config.b0)
    if branch == "left":
        return max(lm - spread, -b_edge - config.b0), lm
    raise InvalidArgument(f"branch must be 'right' or 'left', got {branch!r}")


def optimal_working_point(config: SensorConfig, t: float | None = None,
                          branch: Literal["right", "left"] = "right") -> PeakDescriptor:
    """Golden-section maximization of |chi| on one flank of the peak."""
    t = float(_time(config, t))
    a, b = _flank(config, branch, t)
    scale = config.lambda_scale
    f = lambda lam: abs(chi(config, lam, t))  # noqa: E731
    rough = golden_max(f, a, b, xtol=1e-9 * scale)
    # A flat maximum only fixes its location to ~sqrt(machine eps) by value,
    # so finish on the sign change of d|chi|/dlambda.
    h = 1e-7 * scale
    slope = lambda lam: f(lam + h) - f(lam - h)  # noqa: E731
    lo, hi = max(a, rough - 1e-7 * scale), min(b, rough + 1e-7 * scale)
    if slope(lo) > 0.0 > slope(hi):
        lam_o = bisect(slope, lo, hi, xtol=1e-12 * scale)
    else:
        lam_o = rough
    return PeakDescriptor(lambda_m=lambda_peak(config), lambda_o=lam_o, chi_max=abs(float(chi(config, lam_o, t))))


def peak_analysis(config: SensorConfig, t: float | None = None) -> PeakDescriptor:
    w = peak_width(config, t)
    o = optimal_working_point(config, t)
    return PeakDescriptor(
        lambda_m=w.lambda_m,
        delta_lambda_plus=w.delta_lambda_plus,
        delta_lambda_minus=w.delta_lambda_minus,
        lambda_o=o.lambda_o,
        chi_max=o.chi_max,
    )
