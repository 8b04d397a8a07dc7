"""The single-qubit classifier: encoding, forward pass, cost, prediction.

A sample ``x`` is encoded as the single rotation angle ``phi = theta . x``
applied to ``|0><0|``, the configured noise channel acts once after the
rotation, and the label-``y`` observable is the projector ``|y><y|``. The
batched ``*_xy`` variants evaluate whole feature matrices in one einsum
pass; the per-sample operations defer to them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .features import Dataset, Sample
from .qsim import NO_NOISE, NoiseChannel

RHO0 = np.array([[1, 0], [0, 0]], dtype=complex)
RHO0.setflags(write=False)


@dataclass(frozen=True)
class ShotMode:
    """Finite-shot execution: estimate probabilities from sampled counts."""

    shots: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError(f"shots must be at least 1, got {self.shots}")


@dataclass(frozen=True)
class ModelConfig:
    """Model dimension plus the noise channel and execution mode to evaluate under."""

    dimension: int
    noise: NoiseChannel = NO_NOISE
    execution: ShotMode | None = None

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be at least 1, got {self.dimension}")


def angle(theta: np.ndarray, x: np.ndarray) -> float:
    """Dot-product encoding angle ``sum_i theta_i x_i`` (not wrapped)."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.shape != x.shape or theta.ndim != 1:
        raise ValueError(f"theta and x must be same-length vectors, got shapes {theta.shape} and {x.shape}")
    return float(theta @ x)


def target_observable(label: int) -> np.ndarray:
    """The projector ``|label><label|`` measured for a sample of that label."""
    if label == 0:
        return qsim.PROJ0
    if label == 1:
        return qsim.PROJ1
    raise ValueError(f"label must be 0 or 1, got {label!r}")


def forward(theta: np.ndarray, x: np.ndarray, config: ModelConfig) -> np.ndarray:
    """State after encoding ``x``: noise applied to the rotated ``|0><0|``."""
    return qsim.apply_channel(config.noise, qsim.rx_density(angle(theta, x), RHO0))


def _p_zero_phi(phis: np.ndarray, noise: NoiseChannel) -> np.ndarray:
    states = qsim.apply_channel_batch(noise, qsim.rx_density_batch(phis, RHO0))
    return states[..., 0, 0].real


def _p_zero(theta: np.ndarray, features: np.ndarray, noise: NoiseChannel) -> np.ndarray:
    phis = np.asarray(features, dtype=float) @ np.asarray(theta, dtype=float)
    return _p_zero_phi(phis, noise)


def _shot_rng(execution: ShotMode, rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(execution.seed)


def target_expectations_phi(
    phis: np.ndarray,
    labels: np.ndarray,
    noise: NoiseChannel = NO_NOISE,
    execution: ShotMode | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Per-sample ``<|y><y|>`` at given total rotation angles."""
    p0 = _p_zero_phi(np.asarray(phis, dtype=float), noise)
    if execution is not None:
        counts0 = _shot_rng(execution, rng).binomial(execution.shots, np.clip(p0, 0.0, 1.0))
        p0 = counts0 / execution.shots
    return np.where(np.asarray(labels) == 0, p0, 1.0 - p0)


def target_expectations_xy(
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    noise: NoiseChannel = NO_NOISE,
    execution: ShotMode | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Per-sample ``<|y><y|>`` for a feature matrix and label vector."""
    phis = np.asarray(features, dtype=float) @ np.asarray(theta, dtype=float)
    return target_expectations_phi(phis, labels, noise, execution, rng)


def cost_xy(
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    noise: NoiseChannel = NO_NOISE,
    execution: ShotMode | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Mean ``1 - <M>^2`` over rows of a feature matrix."""
    if len(np.asarray(labels)) == 0:
        raise ValueError("cost requires a non-empty batch")
    m = target_expectations_xy(theta, features, labels, noise, execution, rng)
    return float(np.mean(1.0 - m * m))


def cost(
    theta: np.ndarray,
    batch: list[Sample],
    config: ModelConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Mean ``1 - <M_m>^2`` over the batch, where ``M_m = |label_m><label_m|``."""
    if not batch:
        raise ValueError("cost requires a non-empty batch")
    features = np.stack([s.features for s in batch])
    labels = np.array([s.label for s in batch])
    return cost_xy(theta, features, labels, config.noise, config.execution, rng)


def predict(
    theta: np.ndarray,
    x: np.ndarray,
    config: ModelConfig,
    rng: np.random.Generator | None = None,
) -> int:
    """Predicted label: 0 when outcome 0 is at least as probable as 1."""
    rho = forward(theta, x, config)
    if config.execution is None:
        return 0 if float(rho[0, 0].real) >= 0.5 else 1
    counts = qsim.sample_basis(rho, config.execution.shots, _shot_rng(config.execution, rng))
    return 0 if counts[0] >= counts[1] else 1


def accuracy_xy(
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    noise: NoiseChannel = NO_NOISE,
    execution: ShotMode | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Fraction of rows whose prediction matches the label vector."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("accuracy requires a non-empty dataset")
    p0 = _p_zero(theta, features, noise)
    if execution is None:
        predictions = np.where(p0 >= 0.5, 0, 1)
    else:
        counts0 = _shot_rng(execution, rng).binomial(execution.shots, np.clip(p0, 0.0, 1.0))
        predictions = np.where(2 * counts0 >= execution.shots, 0, 1)
    return float(np.mean(predictions == labels))


def accuracy(
    theta: np.ndarray,
    dataset: Dataset,
    config: ModelConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Fraction of dataset samples whose prediction matches their label."""
    if not dataset.samples:
        raise ValueError("accuracy requires a non-empty dataset")
    return accuracy_xy(theta, dataset.features_matrix, dataset.labels, config.noise, config.execution, rng)
