"""Experiment stages, the hyperparameter sweep and the metrics log.

The three stages mirror the study's narrative: imbalanced FedAvg baseline,
client-side SMOTETomek with FedAvg, then SMOTETomek with FedProx. The sweep
walks the full mu x sigma x clip x seed product, each cell an independent
seeded training run, and appends one row per cell in deterministic order.

Desk-scale defaults (30 rounds) keep a full stage comparison under a few
minutes; the study-scale 100 rounds stay available through the configs.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import (
    ClientPartition,
    FeatureMatrix,
    PreprocessStats,
    RawRecord,
    drop_other_gender,
    fit_preprocessor,
    partition_clients,
    stratified_split,
    transform,
)
from .dp import DEFAULT_DELTA, DpConfig
from .federation import ClientConfig, FederationConfig, run_training
from .metrics import evaluate
from .nn import TrainingConfig
from .resampling import smote_tomek

THREADS_ENV_VAR = "FEDFRONT_THREADS"

STAGE_BASELINE = "baseline"
STAGE_FEDAVG = "smotetomek_fedavg"
STAGE_FEDPROX = "smotetomek_fedprox"
STAGES = (STAGE_BASELINE, STAGE_FEDAVG, STAGE_FEDPROX)
ERROR_STAGE = "error"

FEDPROX_DEFAULT_MU = 0.01

CSV_HEADER = (
    "stage",
    "mu",
    "sigma",
    "clip",
    "seed",
    "epsilon",
    "accuracy",
    "recall",
    "precision",
    "f1",
)

# rng tag for per-client resampling streams.
_TAG_RESAMPLE = 3


@dataclass(frozen=True)
class SweepGrid:
    mu_values: tuple[float, ...] = (1.0, 0.1, 0.01)
    sigma_values: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    clip_values: tuple[float, ...] = (0.8, 1.0, 1.5)
    seeds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self) -> None:
        if not (self.mu_values and self.sigma_values and self.clip_values and self.seeds):
            raise ValueError("all sweep grid axes must be nonempty")
        if any(s < 0 for s in self.sigma_values):
            raise ValueError("sigma values must be nonnegative")
        if any(c <= 0 for c in self.clip_values):
            raise ValueError("clip values must be positive")

    def cells(self) -> list[tuple[float, float, float, int]]:
        return list(
            product(self.mu_values, self.sigma_values, self.clip_values, self.seeds)
        )


@dataclass(frozen=True)
class MetricsRow:
    stage: str
    mu: float
    sigma: float
    clip: float
    seed: int
    epsilon: float
    accuracy: float
    recall: float
    precision: float
    f1: float


@dataclass(frozen=True)
class RunConfig:
    """Everything about a training run except the DP knobs under sweep."""

    training: TrainingConfig = TrainingConfig()
    rounds: int = 30
    delta: float = DEFAULT_DELTA
    resample: bool = True
    threshold: float = 0.5


@dataclass
class ExperimentData:
    """Split, fitted and partitioned dataset, ready for repeated runs."""

    partitions: list[ClientPartition]
    test_features: FeatureMatrix
    test_labels: np.ndarray
    stats: PreprocessStats
    train_features: FeatureMatrix
    train_labels: np.ndarray


def prepare_experiment(
    records: Sequence[RawRecord],
    num_clients: int,
    test_fraction: float = 0.2,
    split_seed: int = 0,
    pre_shuffle: bool = False,
) -> ExperimentData:
    """Run the full preprocessing pipeline once, shared by all sweep cells."""
    kept = drop_other_gender(records)
    train, test = stratified_split(kept, test_fraction, split_seed)
    stats = fit_preprocessor(train)
    train_x, train_y = transform(train, stats)
    test_x, test_y = transform(test, stats)
    partitions = partition_clients(
        train_x, train_y, num_clients, pre_shuffle=pre_shuffle, seed=split_seed
    )
    return ExperimentData(
        partitions=partitions,
        test_features=test_x,
        test_labels=test_y,
        stats=stats,
        train_features=train_x,
        train_labels=train_y,
    )


def resample_partitions(
    partitions: Sequence[ClientPartition], seed: int
) -> list[ClientPartition]:
    """Apply SMOTETomek to each client with its own derived rng stream."""
    out = []
    for part in partitions:
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, _TAG_RESAMPLE, part.client_id])
        )
        x, y, _ = smote_tomek(part.features.rows, part.labels, rng)
        out.append(
            ClientPartition(
                client_id=part.client_id,
                features=FeatureMatrix(rows=x, column_names=part.features.column_names),
                labels=y,
                n_samples=y.shape[0],
            )
        )
    return out


def stage_settings(stage: str) -> tuple[bool, float]:
    """(resample?, proximal mu) for a named experimental stage."""
    if stage == STAGE_BASELINE:
        return False, 0.0
    if stage == STAGE_FEDAVG:
        return True, 0.0
    if stage == STAGE_FEDPROX:
        return True, FEDPROX_DEFAULT_MU
    raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")


def label_for(resample: bool, mu: float) -> str:
    if not resample:
        return STAGE_BASELINE
    return STAGE_FEDPROX if mu > 0 else STAGE_FEDAVG


def run_cell(
    data: ExperimentData,
    cfg: RunConfig,
    dp: DpConfig,
    mu: float,
    seed: int,
    stage: str | None = None,
) -> MetricsRow:
    """One independent training run: resample, train, evaluate, account."""
    partitions = (
        resample_partitions(data.partitions, seed) if cfg.resample else data.partitions
    )
    fed_cfg = FederationConfig(num_clients=len(partitions), rounds=cfg.rounds)
    client_cfg = ClientConfig(training=cfg.training, dp=dp, proximal_mu=mu)
    params, _, spend = run_training(partitions, fed_cfg, client_cfg, seed)
    _, scores = evaluate(
        params, data.test_features.rows, data.test_labels, cfg.threshold
    )
    return MetricsRow(
        stage=stage if stage is not None else label_for(cfg.resample, mu),
        mu=mu,
        sigma=dp.noise_multiplier,
        clip=dp.max_grad_norm,
        seed=seed,
        epsilon=spend.epsilon,
        accuracy=scores.accuracy,
        recall=scores.recall,
        precision=scores.precision,
        f1=scores.f1,
    )


def run_stage(
    stage: str,
    data: ExperimentData,
    dp: DpConfig,
    seed: int,
    cfg: RunConfig = RunConfig(),
) -> MetricsRow:
    """Train and score one named stage on the untouched imbalanced test set."""
    resample, mu = stage_settings(stage)
    stage_cfg = replace(cfg, resample=resample)
    return run_cell(data, stage_cfg, dp, mu, seed, stage=stage)


def _sweep_workers() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
    if value < 0:
        raise ValueError(f"{THREADS_ENV_VAR} must be nonnegative")
    if value == 0:
        return os.cpu_count() or 1
    return value


def _run_cell_guarded(args: tuple) -> MetricsRow:
    data, cfg, delta, mu, sigma, clip, seed = args
    try:
        dp = DpConfig(noise_multiplier=sigma, max_grad_norm=clip, delta=delta)
        return run_cell(data, cfg, dp, mu, seed)
    except Exception:
        return MetricsRow(
            stage=ERROR_STAGE,
            mu=mu,
            sigma=sigma,
            clip=clip,
            seed=seed,
            epsilon=math.nan,
            accuracy=math.nan,
            recall=math.nan,
            precision=math.nan,
            f1=math.nan,
        )


def run_sweep(
    grid: SweepGrid, data: ExperimentData, cfg: RunConfig = RunConfig()
) -> list[MetricsRow]:
    """Cartesian sweep (mu outer, then sigma, clip, seed), one row per cell.

    Cell failures become rows labeled ``error`` with NaN metrics and the
    sweep continues. FEDFRONT_THREADS caps parallel cell execution (0 =
    one worker per CPU, unset = serial); results keep grid order either way.
    """
    tasks = [
        (data, cfg, cfg.delta, mu, sigma, clip, seed)
        for mu, sigma, clip, seed in grid.cells()
    ]
    workers = _sweep_workers()
    if workers == 1 or len(tasks) == 1:
        return [_run_cell_guarded(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_cell_guarded, tasks))


def format_value(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "nan" if math.isnan(x) else "-inf"
    return f"{x:.6f}"


def emit_metrics_csv(rows: Sequence[MetricsRow], path: str | Path) -> None:
    """Write the metrics log: fixed header, reals at 6 decimal places."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.stage,
                    format_value(row.mu),
                    format_value(row.sigma),
                    format_value(row.clip),
                    row.seed,
                    format_value(row.epsilon),
                    format_value(row.accuracy),
                    format_value(row.recall),
                    format_value(row.precision),
                    format_value(row.f1),
                ]
            )


def parse_metrics_csv(path: str | Path) -> list[MetricsRow]:
    path = Path(path)
    rows: list[MetricsRow] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: not a metrics CSV (bad header)")
        for rec in reader:
            if not rec:
                continue
            rows.append(
                MetricsRow(
                    stage=rec[0],
                    mu=float(rec[1]),
                    sigma=float(rec[2]),
                    clip=float(rec[3]),
                    seed=int(rec[4]),
                    epsilon=float(rec[5]),
                    accuracy=float(rec[6]),
                    recall=float(rec[7]),
                    precision=float(rec[8]),
                    f1=float(rec[9]),
                )
            )
    return rows
