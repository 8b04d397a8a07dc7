"""Exact density-matrix simulation of one noisy qubit.

The only circuit this package ever runs is a single ``RX`` rotation applied
to ``|0><0|``, optionally followed by a noise channel acting on the rotated
state. States and observables are plain 2x2 complex numpy arrays, channels
are described by their Kraus operators, and every function here is pure:
the shot sampler takes an explicit random generator instead of hiding one.

Supported channels (``p`` is the channel probability):

    bitflip            {sqrt(1-p) I,  sqrt(p) X}
    phaseflip          {sqrt(1-p) I,  sqrt(p) Z}
    depolarizing       {sqrt(1-p) I,  sqrt(p/3) X,  sqrt(p/3) Y,  sqrt(p/3) Z}
    amplitudedamping   {[[1,0],[0,sqrt(1-p)]],  [[0,sqrt(p)],[0,0]]}
    phasedamping       {[[1,0],[0,sqrt(1-p)]],  [[0,0],[0,sqrt(p)]]}

The depolarizing convention keeps weight 1-p on the identity and splits p
evenly over the three Pauli flips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIGENVALUE_ATOL = 1e-12
COMPLETENESS_ATOL = 1e-12
EXPECTATION_IMAG_ATOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJ0 = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ1 = np.array([[0, 0], [0, 1]], dtype=complex)

for _m in (IDENTITY, PAULI_X, PAULI_Y, PAULI_Z, PROJ0, PROJ1):
    _m.setflags(write=False)


class NoiseKind(Enum):
    NONE = "none"
    BIT_FLIP = "bitflip"
    DEPOLARIZING = "depolarizing"
    PHASE_DAMPING = "phasedamping"
    PHASE_FLIP = "phaseflip"
    AMPLITUDE_DAMPING = "amplitudedamping"


@dataclass(frozen=True)
class NoiseChannel:
    """A named single-qubit noise channel with probability parameter ``probability``."""

    kind: NoiseKind
    probability: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.kind, NoiseKind):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        p = self.probability
        if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
            raise ValueError(f"noise probability must lie in [0, 1], got {p!r}")


NO_NOISE = NoiseChannel(NoiseKind.NONE, 0.0)


@lru_cache(maxsize=None)
def kraus_operators(channel: NoiseChannel) -> np.ndarray:
    """Kraus operators of ``channel``, stacked into a read-only (k, 2, 2) array."""
    p = float(channel.probability)
    q = math.sqrt(1.0 - p)
    r = math.sqrt(p)
    kind = channel.kind
    if kind is NoiseKind.NONE:
        ops = [IDENTITY]
    elif kind is NoiseKind.BIT_FLIP:
        ops = [q * IDENTITY, r * PAULI_X]
    elif kind is NoiseKind.PHASE_FLIP:
        ops = [q * IDENTITY, r * PAULI_Z]
    elif kind is NoiseKind.DEPOLARIZING:
        w = math.sqrt(p / 3.0)
        ops = [q * IDENTITY, w * PAULI_X, w * PAULI_Y, w * PAULI_Z]
    elif kind is NoiseKind.AMPLITUDE_DAMPING:
        ops = [np.array([[1, 0], [0, q]], dtype=complex),
               np.array([[0, r], [0, 0]], dtype=complex)]
    elif kind is NoiseKind.PHASE_DAMPING:
        ops = [np.array([[1, 0], [0, q]], dtype=complex),
               np.array([[0, 0], [0, r]], dtype=complex)]
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown noise kind {kind!r}")
    stacked = np.stack(ops)
    stacked.setflags(write=False)
    return stacked


def validate_density_matrix(rho: np.ndarray) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, trace-1 and PSD."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError(f"density matrix must be 2x2, got shape {rho.shape}")
    if not np.all(np.isfinite(rho.real)) or not np.all(np.isfinite(rho.imag)):
        raise ValueError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_ATOL:
        raise ValueError("density matrix is not Hermitian")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > TRACE_ATOL:
        raise ValueError(f"density matrix trace must be 1, got {trace}")
    eigenvalues = np.linalg.eigvalsh(rho)
    if np.min(eigenvalues) < -EIGENVALUE_ATOL:
        raise ValueError(f"density matrix is not positive semidefinite, eigenvalues {eigenvalues}")


def validate_observable(obs: np.ndarray) -> None:
    """Raise ``ValueError`` unless ``obs`` is a Hermitian 2x2 matrix."""
    obs = np.asarray(obs)
    if obs.shape != (2, 2):
        raise ValueError(f"observable must be 2x2, got shape {obs.shape}")
    if np.max(np.abs(obs - obs.conj().T)) > HERMITICITY_ATOL:
        raise ValueError("observable is not Hermitian")


def rx_matrix(phi: float) -> np.ndarray:
    """The rotation ``exp(-i phi/2 X)`` as a 2x2 unitary."""
    half = 0.5 * phi
    c = math.cos(half)
    s = math.sin(half)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rx_density(phi: float, rho: np.ndarray) -> np.ndarray:
    """Conjugate ``rho`` by the X rotation of angle ``phi``."""
    if not (isinstance(phi, (int, float)) and math.isfinite(phi)):
        raise ValueError(f"rotation angle must be a finite real number, got {phi!r}")
    gate = rx_matrix(float(phi))
    return gate @ np.asarray(rho, dtype=complex) @ gate.conj().T


def rx_density_batch(phis: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Vectorized :func:`rx_density`: one output state per angle in ``phis``."""
    phis = np.asarray(phis, dtype=float)
    if not np.all(np.isfinite(phis)):
        raise ValueError("rotation angles must be finite")
    half = 0.5 * phis
    c = np.cos(half)
    s = np.sin(half)
    gates = np.empty(phis.shape + (2, 2), dtype=complex)
    gates[..., 0, 0] = c
    gates[..., 0, 1] = -1j * s
    gates[..., 1, 0] = -1j * s
    gates[..., 1, 1] = c
    return np.einsum("...ij,jl,...ml->...im", gates, np.asarray(rho, dtype=complex), gates.conj())


def apply_channel(channel: NoiseChannel, rho: np.ndarray) -> np.ndarray:
    """Apply ``channel`` to ``rho``: sum_k K_k rho K_k^dagger."""
    ops = kraus_operators(channel)
    return np.einsum("kij,jl,kml->im", ops, np.asarray(rho, dtype=complex), ops.conj())


def apply_channel_batch(channel: NoiseChannel, rhos: np.ndarray) -> np.ndarray:
    """Vectorized :func:`apply_channel` over a stack of states ``(..., 2, 2)``."""
    ops = kraus_operators(channel)
    return np.einsum("kij,...jl,kml->...im", ops, np.asarray(rhos, dtype=complex), ops.conj())


def expectation(obs: np.ndarray, rho: np.ndarray) -> float:
    """Tr(obs rho) as a real number.

    The trace of a Hermitian observable against a valid state is real up to
    roundoff; a residual imaginary part above ``EXPECTATION_IMAG_ATOL``
    signals invalid inputs and is rejected.
    """
    value = complex(np.einsum("ij,ji->", np.asarray(obs, dtype=complex), np.asarray(rho, dtype=complex)))
    if abs(value.imag) >= EXPECTATION_IMAG_ATOL:
        raise ValueError(f"expectation value has imaginary part {value.imag:g}; inputs are not Hermitian")
    return float(value.real)


def expectation_batch(obs: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """Vectorized :func:`expectation` over a stack of states."""
    values = np.einsum("ij,...ji->...", np.asarray(obs, dtype=complex), np.asarray(rhos, dtype=complex))
    if np.max(np.abs(values.imag), initial=0.0) >= EXPECTATION_IMAG_ATOL:
        raise ValueError("expectation values have non-negligible imaginary parts")
    return values.real


def sample_basis(rho: np.ndarray, shots: int, rng: np.random.Generator) -> dict[int, int]:
    """Sample computational-basis outcomes from the diagonal of ``rho``.

    Outcome 0 is drawn with probability ``real(rho[0, 0])``. Deterministic
    for a given generator state.
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    p0 = float(np.real(np.asarray(rho)[0, 0]))
    p0 = min(max(p0, 0.0), 1.0)
    zeros = int(rng.binomial(shots, p0))
    return {0: zeros, 1: shots - zeros}
