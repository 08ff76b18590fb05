"""alids: human-in-the-loop active learning for network intrusion detection."""

from ._accel import BACKEND, available_backends

__version__ = "0.1.0"
__all__ = ["BACKEND", "available_backends", "__version__"]
