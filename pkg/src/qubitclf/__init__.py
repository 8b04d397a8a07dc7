"""Single-qubit binary classifier trained by gradient-free coordinate descent."""

__version__ = "0.1.0"

from .qsim import NO_NOISE, NoiseChannel, NoiseKind

__all__ = ["NO_NOISE", "NoiseChannel", "NoiseKind", "__version__"]
