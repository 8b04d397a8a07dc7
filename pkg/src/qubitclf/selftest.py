"""Built-in oracle suites: fast independent checks of the core math.

Each suite re-derives an expected value by a route independent of the
implementation under test (explicit Kraus sums, dense grid search, finite
differences, repeated runs) and reports pass/fail with a short detail
line. The whole battery is sized to finish in a few seconds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import features, model, optim, qsim
from .harness import ExperimentConfig, SyntheticSource, run_experiment
from .optim import GfoConfig
from .qsim import NoiseChannel, NoiseKind, kraus_operators

_ALL_KINDS = tuple(NoiseKind)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_density(rng: np.random.Generator) -> np.ndarray:
    raw = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = raw @ raw.conj().T
    return rho / np.trace(rho).real


def _check_kraus_completeness() -> str:
    worst = 0.0
    for kind in _ALL_KINDS:
        for p in (0.0, 0.05, 0.3, 1.0):
            ops = kraus_operators(NoiseChannel(kind, p))
            completeness = np.einsum("kji,kjl->il", ops.conj(), ops)
            worst = max(worst, float(np.max(np.abs(completeness - np.eye(2)))))
    if worst > 1e-12:
        raise AssertionError(f"completeness defect {worst:.3e} exceeds 1e-12")
    return f"24 channel settings, worst defect {worst:.1e}"


def _check_trace_preservation() -> str:
    rng = np.random.default_rng(101)
    worst = 0.0
    for kind in _ALL_KINDS:
        channel = NoiseChannel(kind, 0.3)
        for _ in range(100):
            rho = _random_density(rng)
            out = qsim.apply_channel(channel, rho)
            worst = max(worst, abs(float(np.trace(out).real) - 1.0), float(np.max(np.abs(out - out.conj().T))))
    if worst > 1e-12:
        raise AssertionError(f"trace/hermiticity defect {worst:.3e} exceeds 1e-12")
    return f"600 random states, worst defect {worst:.1e}"


def _check_sinusoid_reconstruction() -> str:
    rng = np.random.default_rng(102)
    worst = 0.0
    for kind in _ALL_KINDS:
        for p in (0.0, 0.05, 0.5):
            channel = NoiseChannel(kind, p)
            for label in (0, 1):
                coeff = optim.probe_sinusoid(label, channel)
                phis = rng.uniform(-2 * np.pi, 2 * np.pi, size=50)
                direct = model.target_expectations_phi(phis, np.full(50, label), channel)
                fitted = coeff.a * np.cos(phis) + coeff.b * np.sin(phis) + coeff.c
                worst = max(worst, float(np.max(np.abs(direct - fitted))))
    if worst > 1e-10:
        raise AssertionError(f"reconstruction error {worst:.3e} exceeds 1e-10")
    return f"36 channel/label settings x 50 angles, worst error {worst:.1e}"


def _check_argmax_exactness() -> str:
    rng = np.random.default_rng(103)
    grid = np.linspace(-np.pi, np.pi, 10_001)
    worst = 0.0
    checked = 0
    while checked < 50:
        n = int(rng.integers(1, 9))
        theta = rng.uniform(-np.pi, np.pi, size=n)
        x = rng.uniform(0.0, 1.0, size=n)
        i = int(rng.integers(0, n))
        if abs(x[i]) < optim.ZERO_FEATURE_EPSILON:
            continue
        label = int(rng.integers(0, 2))
        channel = NoiseChannel(_ALL_KINDS[rng.integers(0, len(_ALL_KINDS))], float(rng.choice([0.0, 0.05, 0.5])))
        candidate = optim.gfo_update_single(theta, i, features.Sample(x, label), channel)
        partial = float(x @ theta - x[i] * theta[i])
        achieved = float(
            model.target_expectations_phi(np.array([partial + candidate * x[i]]), np.array([label]), channel)[0]
        )
        best = float(np.max(model.target_expectations_phi(partial + grid, np.full(grid.size, label), channel)))
        worst = max(worst, best - achieved)
        checked += 1
    if worst > 1e-9:
        raise AssertionError(f"argmax gap {worst:.3e} exceeds 1e-9")
    return f"50 random configurations, worst gap {worst:.1e}"


def _check_gradient() -> str:
    rng = np.random.default_rng(104)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        theta = rng.uniform(-np.pi, np.pi, size=n)
        channel = NoiseChannel(_ALL_KINDS[rng.integers(0, len(_ALL_KINDS))], float(rng.choice([0.0, 0.05])))
        batch = [features.Sample(rng.uniform(0.0, 1.0, size=n), int(rng.integers(0, 2))) for _ in range(5)]
        gradient = optim.parameter_shift_gradient(theta, batch, channel)
        config = model.ModelConfig(n, channel)
        for i in range(n):
            plus = theta.copy()
            plus[i] += h
            minus = theta.copy()
            minus[i] -= h
            difference = (model.cost(plus, batch, config) - model.cost(minus, batch, config)) / (2 * h)
            worst = max(worst, abs(difference - gradient[i]))
    if worst > 1e-5:
        raise AssertionError(f"gradient mismatch {worst:.3e} exceeds 1e-5")
    return f"20 random batches, worst component mismatch {worst:.1e}"


def _check_training_determinism() -> str:
    config = ExperimentConfig(
        source=SyntheticSource(dimension=8, train_per_class=40, test_per_class=20),
        optimizer=GfoConfig(loops=3),
        seed=11,
    )
    first = run_experiment(config)
    second = run_experiment(config)
    for record_a, record_b in zip(first.records, second.records, strict=True):
        if (
            record_a.loop_index != record_b.loop_index
            or record_a.cost_reference != record_b.cost_reference
            or record_a.train_accuracy != record_b.train_accuracy
            or record_a.test_accuracy != record_b.test_accuracy
            or record_a.accepted_updates != record_b.accepted_updates
            or record_a.skipped_components != record_b.skipped_components
        ):
            raise AssertionError(f"records diverge at loop {record_a.loop_index}")
    if not np.array_equal(first.final_theta, second.final_theta):
        raise AssertionError("final parameters diverge between identical-seed runs")
    return f"two seed-11 runs, {len(first.records)} records each, bit-identical"


_SUITES: tuple[tuple[str, Callable[[], str]], ...] = (
    ("kraus_completeness", _check_kraus_completeness),
    ("channel_trace_preservation", _check_trace_preservation),
    ("sinusoid_reconstruction", _check_sinusoid_reconstruction),
    ("argmax_exactness", _check_argmax_exactness),
    ("gradient_check", _check_gradient),
    ("training_determinism", _check_training_determinism),
)


def run_all() -> list[SuiteResult]:
    """Run every suite; failures are captured, not raised."""
    results = []
    for name, check in _SUITES:
        started = time.perf_counter()
        try:
            detail = check()
            passed = True
        except AssertionError as err:
            detail = str(err)
            passed = False
        results.append(SuiteResult(name, passed, detail, time.perf_counter() - started))
    return results
