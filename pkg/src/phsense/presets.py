"""Laboratory-unit presets.

The model is dimensionless in omega. A preset pins one model coupling to a
physical rate, which fixes the conversion of times and fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

from .dilation import SensorConfig
from .errors import InvalidArgument


@dataclass(frozen=True)
class UnitsPreset:
    name: str
    coupling_hz: float  # J / 2pi, identified with the sigma_y sigma_y coupling c
    field_limit_hz: float  # largest achievable B / 2pi, identified with b_lambda
    nominal_tau_s: float
    notes: str

    def rate_scale(self, config: SensorConfig) -> float:
        """Physical angular frequency (rad/s) per model frequency unit."""
        return 2.0 * math.pi * self.coupling_hz / config.c

    def to_seconds(self, config: SensorConfig, t: float) -> float:
        return t / self.rate_scale(config)

    def to_hz(self, config: SensorConfig, lam: float) -> float:
        return lam * self.rate_scale(config) / (2.0 * math.pi)

    def describe(self, config: SensorConfig) -> dict:
        scale = self.rate_scale(config)
        b_hz = config.b0 * scale / (2.0 * math.pi)
        return {
            "preset": self.name,
            "coupling_hz": self.coupling_hz,
            "field_limit_hz": self.field_limit_hz,
            "nominal_tau_s": self.nominal_tau_s,
            "rate_scale_rad_per_s": scale,
            "tau_s": config.tau / scale,
            "b0_hz": b_hz,
            "b0_within_limit": b_hz <= self.field_limit_hz,
            "notes": self.notes,
        }


PRESETS = MappingProxyType({
    "ytterbium-ion": UnitsPreset(
        name="ytterbium-ion",
        coupling_hz=10e3,
        field_limit_hz=1e3,
        nominal_tau_s=25e-6,
        notes=(
            "171Yb+ hyperfine qubits in a linear Paul trap with phonon-mediated "
            "spin-spin coupling: J/2pi = 10 kHz, B/2pi <= 1 kHz, interrogation "
            "time pi/(2J) ~ 25 us"
        ),
    ),
})


def get_preset(name: str) -> UnitsPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidArgument(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
