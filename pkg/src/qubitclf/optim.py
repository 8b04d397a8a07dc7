"""Training: gradient-free coordinate descent and an Adam baseline.

The gradient-free optimizer (GFO) exploits the fact that the expectation
of any observable after a noisy X rotation is ``A cos(phi) + B sin(phi) + C``
in the total angle ``phi``. Freezing all but one coordinate of theta turns
the per-sample expectation into the same sinusoid in ``u = theta_i x_i``,
whose maximizer has the closed form ``u* = pi/2 - atan2(a, b)``. Candidates
are averaged over a batch and accepted only when they strictly lower the
cost on a fixed reference set.

The Adam baseline consumes the same per-loop budget (one batch per
coordinate visit, n visits per loop) using parameter-shift gradients, so
the two trainers are comparable record-for-record.

Both trainers record cumulative optimizer wall seconds per completed loop;
metric instrumentation (accuracy sweeps, Adam's end-of-loop reference cost)
is kept off that clock. A run that completes zero loops emits a single
loop-0 record describing the initial state, so reports are never empty.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import features as features_mod
from . import model
from .features import Dataset, Sample
from .model import ShotMode
from .qsim import NO_NOISE, NoiseChannel

ZERO_FEATURE_EPSILON = 1e-6

# Cost and accuracy are mathematically confined to [0,1]; roundoff from the
# channel einsum may poke a few ulp outside, so record validation allows it.
BOUND_SLACK = 1e-9

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi


class SinusoidCoefficients(NamedTuple):
    """Coefficients of ``<M>(u) = a*cos(u) + b*sin(u) + c``."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class GfoConfig:
    """Hyperparameters of the gradient-free coordinate-descent trainer."""

    loops: int = 15
    batch_size: int = 10
    reference_set_size: int = 100
    zero_feature_epsilon: float = ZERO_FEATURE_EPSILON
    stop_cost: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.loops < 0:
            raise ValueError(f"loops must be non-negative, got {self.loops}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.reference_set_size < 1:
            raise ValueError(f"reference_set_size must be at least 1, got {self.reference_set_size}")
        if not self.zero_feature_epsilon > 0:
            raise ValueError(f"zero_feature_epsilon must be positive, got {self.zero_feature_epsilon}")
        if not math.isfinite(self.stop_cost):
            raise ValueError(f"stop_cost must be finite, got {self.stop_cost}")


@dataclass(frozen=True)
class AdamConfig:
    """Hyperparameters of the Adam baseline (standard published defaults)."""

    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_hat: float = 1e-8
    loops: int = 15
    batch_size: int = 10
    reference_set_size: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not 0 <= self.beta1 < 1:
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0 <= self.beta2 < 1:
            raise ValueError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if not self.epsilon_hat > 0:
            raise ValueError(f"epsilon_hat must be positive, got {self.epsilon_hat}")
        if self.loops < 0:
            raise ValueError(f"loops must be non-negative, got {self.loops}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.reference_set_size < 1:
            raise ValueError(f"reference_set_size must be at least 1, got {self.reference_set_size}")


@dataclass(frozen=True)
class TrainRecord:
    """Metrics captured after one training loop (loop 0 is the initial state)."""

    loop_index: int
    elapsed_seconds: float
    cost_reference: float
    train_accuracy: float
    test_accuracy: float
    accepted_updates: int
    skipped_components: int

    def __post_init__(self) -> None:
        if self.loop_index < 0:
            raise ValueError(f"loop_index must be non-negative, got {self.loop_index}")
        if self.elapsed_seconds < 0:
            raise ValueError(f"elapsed_seconds must be non-negative, got {self.elapsed_seconds}")
        for name in ("cost_reference", "train_accuracy", "test_accuracy"):
            value = getattr(self, name)
            if not -BOUND_SLACK <= value <= 1.0 + BOUND_SLACK:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.accepted_updates < 0 or self.skipped_components < 0:
            raise ValueError("update counts must be non-negative")


@lru_cache(maxsize=None)
def probe_sinusoid(label: int, noise: NoiseChannel) -> SinusoidCoefficients:
    """Fit ``<M>(phi) = A cos(phi) + B sin(phi) + C`` from four probe angles.

    Probes the label's projector expectation at total angle
    phi in {0, pi, pi/2, -pi/2} under the given channel:
    A = (<M>_0 - <M>_pi)/2, B = (<M>_{pi/2} - <M>_{-pi/2})/2,
    C = (<M>_0 + <M>_pi)/2. Cached per (label, channel) pair.
    """
    labels = np.full(4, label)
    probes = model.target_expectations_phi(np.array([0.0, math.pi, _HALF_PI, -_HALF_PI]), labels, noise)
    at_zero, at_pi, at_plus, at_minus = (float(v) for v in probes)
    return SinusoidCoefficients(
        a=0.5 * (at_zero - at_pi),
        b=0.5 * (at_plus - at_minus),
        c=0.5 * (at_zero + at_pi),
    )


def shift_coefficients(cos_amp: float, sin_amp: float, offset_angle: float) -> tuple[float, float]:
    """Rotate sinusoid coefficients by a fixed phase offset.

    If ``<M>(phi) = A cos(phi) + B sin(phi) + C`` and ``phi = s + u`` with
    ``s`` fixed, then ``<M>(u) = a cos(u) + b sin(u) + C`` where
    ``a = A cos(s) + B sin(s)`` and ``b = B cos(s) - A sin(s)``.
    """
    cos_s = math.cos(offset_angle)
    sin_s = math.sin(offset_angle)
    return cos_amp * cos_s + sin_amp * sin_s, sin_amp * cos_s - cos_amp * sin_s


def _wrap_angle(u: np.ndarray) -> np.ndarray:
    # Wrap into (-pi, pi]; the modulo form maps pi to pi exactly.
    u = np.mod(u, _TWO_PI)
    return np.where(u > math.pi, u - _TWO_PI, u)


def _candidate_angles(
    theta: np.ndarray,
    i: int,
    feats: np.ndarray,
    labels: np.ndarray,
    noise: NoiseChannel,
    zero_feature_epsilon: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample maximizing values for theta_i plus a kept-sample mask."""
    theta = np.asarray(theta, dtype=float)
    if not 0 <= i < theta.size:
        raise ValueError(f"coordinate index {i} out of range for {theta.size} parameters")
    x_i = feats[:, i]
    kept = np.abs(x_i) >= zero_feature_epsilon
    partial = feats @ theta - x_i * theta[i]
    coeff0 = probe_sinusoid(0, noise)
    coeff1 = probe_sinusoid(1, noise)
    cos_amp = np.where(labels == 0, coeff0.a, coeff1.a)
    sin_amp = np.where(labels == 0, coeff0.b, coeff1.b)
    cos_s = np.cos(partial)
    sin_s = np.sin(partial)
    a = cos_amp * cos_s + sin_amp * sin_s
    b = sin_amp * cos_s - cos_amp * sin_s
    best_u = _wrap_angle(_HALF_PI - np.arctan2(a, b))
    candidates = np.divide(best_u, x_i, out=np.zeros_like(best_u), where=kept)
    return candidates, kept


def gfo_update_single(
    theta: np.ndarray,
    i: int,
    sample: Sample,
    noise: NoiseChannel = NO_NOISE,
    zero_feature_epsilon: float = ZERO_FEATURE_EPSILON,
) -> float | None:
    """Closed-form maximizer of one sample's ``<M>`` over theta_i.

    Returns None (skip) when ``|x_i|`` is below ``zero_feature_epsilon``:
    the coordinate does not influence this sample's angle and the division
    by ``x_i`` would be singular.
    """
    candidates, kept = _candidate_angles(
        theta, i, sample.features[np.newaxis, :], np.array([sample.label]), noise, zero_feature_epsilon
    )
    return float(candidates[0]) if kept[0] else None


def gfo_update_batch(
    theta: np.ndarray,
    i: int,
    batch: list[Sample],
    noise: NoiseChannel = NO_NOISE,
    zero_feature_epsilon: float = ZERO_FEATURE_EPSILON,
) -> float | None:
    """Mean of the per-sample candidates; None when every sample is skipped."""
    if not batch:
        raise ValueError("gfo_update_batch requires a non-empty batch")
    feats = np.stack([s.features for s in batch])
    labels = np.array([s.label for s in batch])
    candidates, kept = _candidate_angles(theta, i, feats, labels, noise, zero_feature_epsilon)
    if not kept.any():
        return None
    return float(candidates[kept].mean())


def init_theta(dimension: int, rng: np.random.Generator) -> np.ndarray:
    """Initial parameters drawn uniformly from (-pi, pi] per component."""
    if dimension < 1:
        raise ValueError(f"dimension must be at least 1, got {dimension}")
    return math.pi - rng.uniform(0.0, _TWO_PI, size=dimension)


def _gradient_xy(
    theta: np.ndarray,
    feats: np.ndarray,
    labels: np.ndarray,
    noise: NoiseChannel,
    execution: ShotMode | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    feats = np.asarray(feats, dtype=float)
    phis = feats @ np.asarray(theta, dtype=float)
    base = model.target_expectations_phi(phis, labels, noise, execution, rng)
    plus = model.target_expectations_phi(phis + _HALF_PI, labels, noise, execution, rng)
    minus = model.target_expectations_phi(phis - _HALF_PI, labels, noise, execution, rng)
    slope = 0.5 * (plus - minus)
    return (-2.0 / labels.size) * (feats.T @ (base * slope))


def parameter_shift_gradient(theta: np.ndarray, batch: list[Sample], noise: NoiseChannel = NO_NOISE) -> np.ndarray:
    """Exact cost gradient from the two-point shift rule.

    ``dC/dtheta_i = -(2/B) sum_m <M_m>(phi_m) x_im (<M_m>(phi_m + pi/2)
    - <M_m>(phi_m - pi/2)) / 2``; exact because every ``<M_m>`` is a
    sinusoid in its total angle.
    """
    if not batch:
        raise ValueError("parameter_shift_gradient requires a non-empty batch")
    feats = np.stack([s.features for s in batch])
    labels = np.array([s.label for s in batch])
    return _gradient_xy(theta, feats, labels, noise)


def _check_training_inputs(theta: np.ndarray, train_set: Dataset, test_set: Dataset) -> None:
    if theta.ndim != 1:
        raise ValueError(f"theta must be a 1-D vector, got shape {theta.shape}")
    for name, dataset in (("train", train_set), ("test", test_set)):
        if dataset.dimension != theta.size:
            raise ValueError(
                f"{name} set dimension {dataset.dimension} does not match parameter count {theta.size}"
            )
        if not dataset.samples:
            raise ValueError(f"{name} set must be non-empty")


def _snapshot(
    loop_index: int,
    clock: float,
    cost_now: float,
    theta: np.ndarray,
    train_set: Dataset,
    test_set: Dataset,
    noise: NoiseChannel,
    execution: ShotMode | None,
    shot_rng: np.random.Generator | None,
    accepted: int,
    skipped: int,
) -> TrainRecord:
    train_acc = model.accuracy_xy(theta, train_set.features_matrix, train_set.labels, noise, execution, shot_rng)
    test_acc = model.accuracy_xy(theta, test_set.features_matrix, test_set.labels, noise, execution, shot_rng)
    return TrainRecord(
        loop_index=loop_index,
        elapsed_seconds=clock,
        cost_reference=cost_now,
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        accepted_updates=accepted,
        skipped_components=skipped,
    )


def gfo_train(
    initial_theta: np.ndarray,
    train_set: Dataset,
    test_set: Dataset,
    config: GfoConfig,
    noise: NoiseChannel = NO_NOISE,
    *,
    execution: ShotMode | None = None,
    cost_trace: list[float] | None = None,
) -> tuple[np.ndarray, list[TrainRecord]]:
    """Coordinate-descent training with accept/revert on a fixed reference set.

    Per loop, each coordinate in turn gets a fresh batch, a closed-form
    candidate, and a reference-cost comparison; the candidate is kept only
    if the cost strictly decreases. The reference set (``reference_set_size``
    samples) is drawn from the training set once, before any batch, and
    never changes. Stops after ``loops`` full cycles or as soon as the
    reference cost is at or below ``stop_cost`` at a loop boundary.

    When ``cost_trace`` is given, the initial reference cost and every
    accepted cost are appended to it in order.
    """
    theta = np.array(initial_theta, dtype=float)
    _check_training_inputs(theta, train_set, test_set)
    rng = np.random.default_rng(config.seed)
    shot_rng = np.random.default_rng(execution.seed) if execution is not None else None
    reference = features_mod.draw_batch(train_set, config.reference_set_size, rng)
    ref_feats = np.stack([s.features for s in reference])
    ref_labels = np.array([s.label for s in reference])

    clock = 0.0
    tick = time.perf_counter()
    cost_now = model.cost_xy(theta, ref_feats, ref_labels, noise, execution, shot_rng)
    clock += time.perf_counter() - tick
    if cost_trace is not None:
        cost_trace.append(cost_now)

    records: list[TrainRecord] = []
    for loop_index in range(1, config.loops + 1):
        if cost_now <= config.stop_cost:
            break
        accepted = 0
        skipped = 0
        tick = time.perf_counter()
        for i in range(theta.size):
            batch = features_mod.draw_batch(train_set, config.batch_size, rng)
            candidate = gfo_update_batch(theta, i, batch, noise, config.zero_feature_epsilon)
            if candidate is None:
                skipped += 1
                continue
            previous = theta[i]
            theta[i] = candidate
            cost_new = model.cost_xy(theta, ref_feats, ref_labels, noise, execution, shot_rng)
            if cost_new < cost_now:
                cost_now = cost_new
                accepted += 1
                if cost_trace is not None:
                    cost_trace.append(cost_now)
            else:
                theta[i] = previous
        clock += time.perf_counter() - tick
        records.append(
            _snapshot(loop_index, clock, cost_now, theta, train_set, test_set, noise, execution, shot_rng, accepted, skipped)
        )
    if not records:
        records.append(_snapshot(0, clock, cost_now, theta, train_set, test_set, noise, execution, shot_rng, 0, 0))
    return theta, records


def adam_train(
    initial_theta: np.ndarray,
    train_set: Dataset,
    test_set: Dataset,
    config: AdamConfig,
    noise: NoiseChannel = NO_NOISE,
    *,
    execution: ShotMode | None = None,
) -> tuple[np.ndarray, list[TrainRecord]]:
    """Adam baseline matched loop-for-loop to :func:`gfo_train`.

    Each loop performs n parameter-shift gradient steps (n = dimension),
    one fresh batch per step, so the batch draws per loop equal the
    coordinate visits of GFO. Uses the same fixed-reference-set and
    record conventions; every step updates the full vector, so
    ``accepted_updates`` is n and ``skipped_components`` is 0.
    """
    theta = np.array(initial_theta, dtype=float)
    _check_training_inputs(theta, train_set, test_set)
    rng = np.random.default_rng(config.seed)
    shot_rng = np.random.default_rng(execution.seed) if execution is not None else None
    reference = features_mod.draw_batch(train_set, config.reference_set_size, rng)
    ref_feats = np.stack([s.features for s in reference])
    ref_labels = np.array([s.label for s in reference])

    clock = 0.0
    tick = time.perf_counter()
    cost_now = model.cost_xy(theta, ref_feats, ref_labels, noise, execution, shot_rng)
    clock += time.perf_counter() - tick

    first_moment = np.zeros_like(theta)
    second_moment = np.zeros_like(theta)
    step = 0
    records: list[TrainRecord] = []
    for loop_index in range(1, config.loops + 1):
        tick = time.perf_counter()
        for _ in range(theta.size):
            batch = features_mod.draw_batch(train_set, config.batch_size, rng)
            feats = np.stack([s.features for s in batch])
            labels = np.array([s.label for s in batch])
            gradient = _gradient_xy(theta, feats, labels, noise, execution, shot_rng)
            step += 1
            first_moment = config.beta1 * first_moment + (1.0 - config.beta1) * gradient
            second_moment = config.beta2 * second_moment + (1.0 - config.beta2) * gradient * gradient
            corrected_first = first_moment / (1.0 - config.beta1**step)
            corrected_second = second_moment / (1.0 - config.beta2**step)
            theta -= config.learning_rate * corrected_first / (np.sqrt(corrected_second) + config.epsilon_hat)
        clock += time.perf_counter() - tick
        cost_now = model.cost_xy(theta, ref_feats, ref_labels, noise, execution, shot_rng)
        records.append(
            _snapshot(
                loop_index, clock, cost_now, theta, train_set, test_set, noise, execution, shot_rng, theta.size, 0
            )
        )
    if not records:
        records.append(_snapshot(0, clock, cost_now, theta, train_set, test_set, noise, execution, shot_rng, 0, 0))
    return theta, records
