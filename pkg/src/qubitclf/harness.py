"""Experiment orchestration: configuration, runs, metrics files, comparisons.

Configuration is a flat key-value document (``key = value`` lines, ``#``
comments). A run derives four independent child seeds from the single
global seed (data, initialization, training, shots), executes the selected
optimizer, and yields a RunReport that serializes to ``summary.json`` plus
a ``metrics.csv`` of per-loop curves. Reports from two runs on identical
data/noise/seed settings can be compared threshold-by-threshold.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import features, optim
from .model import ShotMode
from .optim import AdamConfig, GfoConfig, TrainRecord
from .qsim import NO_NOISE, NoiseChannel, NoiseKind

METRICS_HEADER = "loop,elapsed_seconds,cost,train_accuracy,test_accuracy,accepted_updates,skipped_components"
SUMMARY_FILENAME = "summary.json"
METRICS_FILENAME = "metrics.csv"
ACCURACY_THRESHOLDS = (0.8, 0.9, 0.95)
TIMING_CONVENTION = (
    "elapsed_seconds is cumulative optimizer wall time at the end of each loop; "
    "accuracy instrumentation is excluded"
)

# Echo keys with these prefixes (plus "seed") must agree for two runs to be comparable.
_COMPARE_PREFIXES = ("data.", "noise.", "execution.")


class ConfigError(ValueError):
    """Raised when a configuration document is malformed or out of range."""


class ComparisonError(ValueError):
    """Raised when two run reports are not comparable."""


@dataclass(frozen=True)
class SyntheticSource:
    """Two synthetic uniform blobs, one per class."""

    dimension: int = 32
    train_per_class: int = 200
    test_per_class: int = 100
    separation: float = 1.0


@dataclass(frozen=True)
class IdxSource:
    """Two digit classes drawn from IDX image/label files."""

    images: str
    labels: str
    class_a: int = 0
    class_b: int = 1
    train_per_class: int = 10000
    test_per_class: int = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment: data, optimizer, noise, execution, seed."""

    source: SyntheticSource | IdxSource = SyntheticSource()
    optimizer: GfoConfig | AdamConfig = GfoConfig()
    noise: NoiseChannel = NO_NOISE
    execution: ShotMode | None = None
    seed: int = 0


@dataclass(frozen=True)
class RunReport:
    """Everything one training run produced."""

    config_echo: dict[str, object]
    records: tuple[TrainRecord, ...]
    final_theta: np.ndarray
    total_seconds: float


@dataclass(frozen=True)
class RunDigest:
    """One run's side of a comparison."""

    optimizer: str
    crossings: dict[float, float | None]
    final_cost: float
    final_accuracy: float


@dataclass(frozen=True)
class ComparisonSummary:
    """Threshold-crossing times and final numbers for two comparable runs."""

    run_a: RunDigest
    run_b: RunDigest


def parse_config_text(text: str) -> dict[str, str]:
    """Split a ``key = value`` document into a mapping (no value validation)."""
    mapping: dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {number}: empty key")
        if key in mapping:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat key-value document into a validated ExperimentConfig."""
    return config_from_mapping(parse_config_text(text))


def _take(mapping: dict[str, str], key: str) -> str | None:
    return mapping.pop(key, None)


def _parse_int(key: str, value: str, minimum: int | None = None) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None
    if minimum is not None and parsed < minimum:
        raise ConfigError(f"{key} must be at least {minimum}, got {parsed}")
    return parsed


def _parse_float(key: str, value: str, low: float | None = None, high: float | None = None) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if low is not None and parsed < low:
        raise ConfigError(f"{key} must be at least {low}, got {parsed}")
    if high is not None and parsed > high:
        raise ConfigError(f"{key} must lie in [{low}, {high}], got {parsed}")
    return parsed


def _reject(mapping: dict[str, str], keys: tuple[str, ...], reason: str) -> None:
    for key in keys:
        if key in mapping:
            raise ConfigError(f"{key} only applies {reason}")


def _build_source(mapping: dict[str, str]) -> SyntheticSource | IdxSource:
    kind = _take(mapping, "data.source") or "synthetic"
    if kind == "synthetic":
        _reject(
            mapping,
            ("data.images", "data.labels", "data.class_a", "data.class_b"),
            "to data.source = idx",
        )
        defaults = SyntheticSource()
        dimension = _take(mapping, "data.dimension")
        separation = _take(mapping, "data.separation")
        train_n = _take(mapping, "data.train_per_class")
        test_n = _take(mapping, "data.test_per_class")
        return SyntheticSource(
            dimension=defaults.dimension if dimension is None else _parse_int("data.dimension", dimension, 1),
            train_per_class=defaults.train_per_class if train_n is None else _parse_int("data.train_per_class", train_n, 1),
            test_per_class=defaults.test_per_class if test_n is None else _parse_int("data.test_per_class", test_n, 1),
            separation=defaults.separation if separation is None else _parse_float("data.separation", separation, 0.0),
        )
    if kind == "idx":
        _reject(mapping, ("data.dimension", "data.separation"), "to data.source = synthetic")
        images = _take(mapping, "data.images")
        labels = _take(mapping, "data.labels")
        if images is None or labels is None:
            raise ConfigError("data.source = idx requires data.images and data.labels paths")
        for key, path in (("data.images", images), ("data.labels", labels)):
            if not os.path.isfile(path):
                raise ConfigError(f"{key}: no such file {path!r}")
        defaults = IdxSource(images, labels)
        class_a = _take(mapping, "data.class_a")
        class_b = _take(mapping, "data.class_b")
        train_n = _take(mapping, "data.train_per_class")
        test_n = _take(mapping, "data.test_per_class")
        source = IdxSource(
            images=images,
            labels=labels,
            class_a=defaults.class_a if class_a is None else _parse_int("data.class_a", class_a, 0),
            class_b=defaults.class_b if class_b is None else _parse_int("data.class_b", class_b, 0),
            train_per_class=defaults.train_per_class if train_n is None else _parse_int("data.train_per_class", train_n, 1),
            test_per_class=defaults.test_per_class if test_n is None else _parse_int("data.test_per_class", test_n, 1),
        )
        if source.class_a == source.class_b:
            raise ConfigError(f"data.class_a and data.class_b must differ, both are {source.class_a}")
        return source
    raise ConfigError(f"data.source must be 'synthetic' or 'idx', got {kind!r}")


def _build_optimizer(mapping: dict[str, str]) -> GfoConfig | AdamConfig:
    kind = _take(mapping, "optimizer.kind") or "gfo"
    if kind not in ("gfo", "adam"):
        raise ConfigError(f"optimizer.kind must be 'gfo' or 'adam', got {kind!r}")
    common = {}
    for key, attr in (
        ("optimizer.loops", "loops"),
        ("optimizer.batch_size", "batch_size"),
        ("optimizer.reference_set_size", "reference_set_size"),
    ):
        value = _take(mapping, key)
        if value is not None:
            common[attr] = _parse_int(key, value, 0 if attr == "loops" else 1)
    if kind == "gfo":
        _reject(
            mapping,
            ("optimizer.learning_rate", "optimizer.beta1", "optimizer.beta2", "optimizer.epsilon_hat"),
            "to optimizer.kind = adam",
        )
        stop_cost = _take(mapping, "optimizer.stop_cost")
        epsilon = _take(mapping, "optimizer.zero_feature_epsilon")
        if stop_cost is not None:
            common["stop_cost"] = _parse_float("optimizer.stop_cost", stop_cost)
        if epsilon is not None:
            common["zero_feature_epsilon"] = _parse_float("optimizer.zero_feature_epsilon", epsilon)
            if not common["zero_feature_epsilon"] > 0:
                raise ConfigError(
                    f"optimizer.zero_feature_epsilon must be positive, got {common['zero_feature_epsilon']}"
                )
        try:
            return GfoConfig(**common)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    _reject(
        mapping,
        ("optimizer.stop_cost", "optimizer.zero_feature_epsilon"),
        "to optimizer.kind = gfo",
    )
    for key, attr in (
        ("optimizer.learning_rate", "learning_rate"),
        ("optimizer.beta1", "beta1"),
        ("optimizer.beta2", "beta2"),
        ("optimizer.epsilon_hat", "epsilon_hat"),
    ):
        value = _take(mapping, key)
        if value is not None:
            common[attr] = _parse_float(key, value)
    try:
        return AdamConfig(**common)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _build_noise(mapping: dict[str, str]) -> NoiseChannel:
    kind_text = _take(mapping, "noise.kind") or "none"
    try:
        kind = NoiseKind(kind_text)
    except ValueError:
        names = ", ".join(k.value for k in NoiseKind)
        raise ConfigError(f"noise.kind must be one of {{{names}}}, got {kind_text!r}") from None
    probability = _take(mapping, "noise.probability")
    if kind is NoiseKind.NONE:
        if probability is not None:
            raise ConfigError("noise.probability only applies when noise.kind is not 'none'")
        return NO_NOISE
    p = 0.05 if probability is None else _parse_float("noise.probability", probability, 0.0, 1.0)
    return NoiseChannel(kind, p)


def _build_execution(mapping: dict[str, str]) -> ShotMode | None:
    mode = _take(mapping, "execution.mode") or "analytic"
    shots = _take(mapping, "execution.shots")
    if mode == "analytic":
        if shots is not None:
            raise ConfigError("execution.shots only applies when execution.mode = shots")
        return None
    if mode == "shots":
        count = 1024 if shots is None else _parse_int("execution.shots", shots, 1)
        return ShotMode(count)
    raise ConfigError(f"execution.mode must be 'analytic' or 'shots', got {mode!r}")


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Validate a flat key-value mapping and apply defaults."""
    remaining = {str(k): str(v) for k, v in mapping.items()}
    source = _build_source(remaining)
    optimizer = _build_optimizer(remaining)
    noise = _build_noise(remaining)
    execution = _build_execution(remaining)
    seed_text = _take(remaining, "seed")
    seed = 0 if seed_text is None else _parse_int("seed", seed_text, 0)
    if remaining:
        unknown = ", ".join(sorted(remaining))
        raise ConfigError(f"unknown configuration key(s): {unknown}")
    return ExperimentConfig(source=source, optimizer=optimizer, noise=noise, execution=execution, seed=seed)


def config_to_mapping(config: ExperimentConfig) -> dict[str, object]:
    """Flatten a config back to its canonical key-value form."""
    echo: dict[str, object] = {}
    source = config.source
    if isinstance(source, SyntheticSource):
        echo["data.source"] = "synthetic"
        echo["data.dimension"] = source.dimension
        echo["data.separation"] = source.separation
    else:
        echo["data.source"] = "idx"
        echo["data.images"] = source.images
        echo["data.labels"] = source.labels
        echo["data.class_a"] = source.class_a
        echo["data.class_b"] = source.class_b
    echo["data.train_per_class"] = source.train_per_class
    echo["data.test_per_class"] = source.test_per_class
    optimizer = config.optimizer
    echo["optimizer.kind"] = "gfo" if isinstance(optimizer, GfoConfig) else "adam"
    echo["optimizer.loops"] = optimizer.loops
    echo["optimizer.batch_size"] = optimizer.batch_size
    echo["optimizer.reference_set_size"] = optimizer.reference_set_size
    if isinstance(optimizer, GfoConfig):
        echo["optimizer.stop_cost"] = optimizer.stop_cost
        echo["optimizer.zero_feature_epsilon"] = optimizer.zero_feature_epsilon
    else:
        echo["optimizer.learning_rate"] = optimizer.learning_rate
        echo["optimizer.beta1"] = optimizer.beta1
        echo["optimizer.beta2"] = optimizer.beta2
        echo["optimizer.epsilon_hat"] = optimizer.epsilon_hat
    echo["noise.kind"] = config.noise.kind.value
    if config.noise.kind is not NoiseKind.NONE:
        echo["noise.probability"] = config.noise.probability
    echo["execution.mode"] = "analytic" if config.execution is None else "shots"
    if config.execution is not None:
        echo["execution.shots"] = config.execution.shots
    echo["seed"] = config.seed
    return echo


def _load_datasets(config: ExperimentConfig, rng: np.random.Generator) -> tuple[features.Dataset, features.Dataset]:
    source = config.source
    if isinstance(source, SyntheticSource):
        train = features.synth_blobs(source.dimension, source.train_per_class, source.separation, rng)
        test = features.synth_blobs(source.dimension, source.test_per_class, source.separation, rng)
        return train, test
    images = features.load_idx_images(source.images)
    labels = features.load_idx_labels(source.labels)
    return features.build_binary_dataset(
        images, labels, source.class_a, source.class_b, source.train_per_class, source.test_per_class, rng
    )


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run one training experiment end to end.

    The global seed fans out into four independent child seeds (data,
    parameter initialization, training, shot sampling), so runs with the
    same seed are reproducible in every stage while the stages stay
    decorrelated.
    """
    started = time.perf_counter()
    data_seed, theta_seed, train_seed, shot_seed = (
        int(s) for s in np.random.SeedSequence(config.seed).generate_state(4)
    )
    train_set, test_set = _load_datasets(config, np.random.default_rng(data_seed))
    theta0 = optim.init_theta(train_set.dimension, np.random.default_rng(theta_seed))
    optimizer = dataclasses.replace(config.optimizer, seed=train_seed)
    execution = None if config.execution is None else dataclasses.replace(config.execution, seed=shot_seed)
    if isinstance(optimizer, GfoConfig):
        final_theta, records = optim.gfo_train(theta0, train_set, test_set, optimizer, config.noise, execution=execution)
    else:
        final_theta, records = optim.adam_train(theta0, train_set, test_set, optimizer, config.noise, execution=execution)
    return RunReport(
        config_echo=config_to_mapping(config),
        records=tuple(records),
        final_theta=np.asarray(final_theta, dtype=float),
        total_seconds=time.perf_counter() - started,
    )


def _format_value(value: float) -> str:
    return format(float(value), ".10g")


def report_to_dict(report: RunReport) -> dict[str, object]:
    """The JSON-ready form of a report (content of ``summary.json``)."""
    final = report.records[-1]
    return {
        "config": dict(report.config_echo),
        "timing_convention": TIMING_CONVENTION,
        "final": {
            "loop_index": final.loop_index,
            "cost": final.cost_reference,
            "train_accuracy": final.train_accuracy,
            "test_accuracy": final.test_accuracy,
            "total_seconds": report.total_seconds,
        },
        "records": [dataclasses.asdict(record) for record in report.records],
        "final_theta": [float(v) for v in report.final_theta],
    }


def report_from_dict(data: dict[str, object]) -> RunReport:
    """Rebuild a RunReport from its JSON form."""
    try:
        records = tuple(TrainRecord(**record) for record in data["records"])
        return RunReport(
            config_echo=dict(data["config"]),
            records=records,
            final_theta=np.asarray(data["final_theta"], dtype=float),
            total_seconds=float(data["final"]["total_seconds"]),
        )
    except (KeyError, TypeError) as err:
        raise ComparisonError(f"malformed report document: {err}") from err


def write_metrics(report: RunReport, directory: str) -> tuple[str, str]:
    """Write ``metrics.csv`` and ``summary.json`` into ``directory``.

    CSV floats carry 10 significant digits; one row per record.
    Returns the two file paths.
    """
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, METRICS_FILENAME)
    lines = [METRICS_HEADER]
    for record in report.records:
        lines.append(
            ",".join(
                (
                    str(record.loop_index),
                    _format_value(record.elapsed_seconds),
                    _format_value(record.cost_reference),
                    _format_value(record.train_accuracy),
                    _format_value(record.test_accuracy),
                    str(record.accepted_updates),
                    str(record.skipped_components),
                )
            )
        )
    try:
        with open(csv_path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
        summary_path = os.path.join(directory, SUMMARY_FILENAME)
        with open(summary_path, "w", encoding="utf-8") as handle:
            json.dump(report_to_dict(report), handle, indent=2)
            handle.write("\n")
    except OSError as err:
        raise OSError(f"cannot write metrics under {directory!r}: {err}") from err
    return csv_path, summary_path


def load_report(path: str) -> RunReport:
    """Load a report from a ``summary.json`` file or a run directory."""
    if os.path.isdir(path):
        path = os.path.join(path, SUMMARY_FILENAME)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise OSError(f"cannot read report {path!r}: {err}") from err
    except json.JSONDecodeError as err:
        raise ComparisonError(f"{path}: not a valid report document: {err}") from err
    return report_from_dict(data)


def _digest(report: RunReport) -> RunDigest:
    crossings: dict[float, float | None] = {}
    for threshold in ACCURACY_THRESHOLDS:
        crossings[threshold] = None
        for record in report.records:
            if record.test_accuracy >= threshold:
                crossings[threshold] = record.elapsed_seconds
                break
    final = report.records[-1]
    return RunDigest(
        optimizer=str(report.config_echo.get("optimizer.kind", "?")),
        crossings=crossings,
        final_cost=final.cost_reference,
        final_accuracy=final.test_accuracy,
    )


def compare_runs(report_a: RunReport, report_b: RunReport) -> ComparisonSummary:
    """Compare two runs on the same data/noise/seed settings.

    For each accuracy threshold in ACCURACY_THRESHOLDS, reports the first
    elapsed seconds at which each run's test accuracy crosses it (None for
    never), plus final cost and accuracy per run.
    """
    for key in sorted(set(report_a.config_echo) | set(report_b.config_echo)):
        if key != "seed" and not key.startswith(_COMPARE_PREFIXES):
            continue
        value_a = report_a.config_echo.get(key)
        value_b = report_b.config_echo.get(key)
        if value_a != value_b:
            raise ComparisonError(f"runs are not comparable: {key} differs ({value_a!r} vs {value_b!r})")
    return ComparisonSummary(run_a=_digest(report_a), run_b=_digest(report_b))


def comparison_to_dict(summary: ComparisonSummary) -> dict[str, object]:
    """The JSON-ready form of a comparison."""
    return {
        "thresholds": [
            {
                "accuracy": threshold,
                "a_seconds": summary.run_a.crossings[threshold],
                "b_seconds": summary.run_b.crossings[threshold],
            }
            for threshold in ACCURACY_THRESHOLDS
        ],
        "a": {
            "optimizer": summary.run_a.optimizer,
            "final_cost": summary.run_a.final_cost,
            "final_accuracy": summary.run_a.final_accuracy,
        },
        "b": {
            "optimizer": summary.run_b.optimizer,
            "final_cost": summary.run_b.final_cost,
            "final_accuracy": summary.run_b.final_accuracy,
        },
    }


def format_comparison(summary: ComparisonSummary) -> str:
    """Human-readable comparison table with 'never' markers."""
    def cell(value: float | None) -> str:
        return "never" if value is None else f"{value:.6g} s"

    lines = [
        f"{'threshold':<12}{'run_a (' + summary.run_a.optimizer + ')':<24}run_b ({summary.run_b.optimizer})",
    ]
    for threshold in ACCURACY_THRESHOLDS:
        lines.append(
            f"{threshold:<12}{cell(summary.run_a.crossings[threshold]):<24}{cell(summary.run_b.crossings[threshold])}"
        )
    lines.append(f"{'final cost':<12}{summary.run_a.final_cost:<24.6g}{summary.run_b.final_cost:.6g}")
    lines.append(f"{'final acc':<12}{summary.run_a.final_accuracy:<24.6g}{summary.run_b.final_accuracy:.6g}")
    return "\n".join(lines)
