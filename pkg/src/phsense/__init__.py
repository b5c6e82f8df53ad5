"""Single-qubit pseudo-Hermitian sensing through a two-qubit Naimark dilation."""

__version__ = "0.1.0"

from .dilation import SensorConfig, derive_config  # noqa: E402,F401
