"""
Sensitivity sweeps emitted as plot data:
- beta_sweep.csv        : beta, seed, avg_acc, avg_during, avg_forgetting
- compression_sweep.csv : model, chunk_size, compression_ratio, seed, avg_acc
"""

import os
from typing import Sequence

import pandas as pd

from config.experiment_config import ExperimentConfig
from experiments.experiment_runner import run_cell
from experiments.report import regularization_checks
from utils.logger import get_logger

logger = get_logger(__name__)


def _sweep(config: ExperimentConfig, key: str, values: Sequence, columns: list[str]) -> pd.DataFrame:
    rows = []
    for value in values:
        swept = config.with_overrides(**{key: value, "out": os.path.join(config.out, f"{key}_{value}")})
        for seed in swept.seeds:
            run = run_cell(swept, seed)
            if run is None:
                logger.warning(f"[RUN] {key}={value} seed={seed} failed; left out of the sweep")
                continue
            rows.append({**run, key: value})
    return pd.DataFrame(rows, columns=columns) if rows else pd.DataFrame(columns=columns)


def beta_sweep(config: ExperimentConfig, betas: Sequence[float]) -> pd.DataFrame:
    columns = ["beta", "seed", "avg_acc", "avg_during", "avg_forgetting"]
    table = _sweep(config, "beta", [float(b) for b in betas], columns)
    os.makedirs(config.out, exist_ok=True)
    table.to_csv(os.path.join(config.out, "beta_sweep.csv"), index=False)
    regularization_checks(table)
    return table


def compression_sweep(config: ExperimentConfig, chunk_sizes: Sequence[int]) -> pd.DataFrame:
    columns = ["model", "chunk_size", "compression_ratio", "seed", "avg_acc"]
    table = _sweep(config, "chunk_size", [int(c) for c in chunk_sizes], columns)
    os.makedirs(config.out, exist_ok=True)
    table.to_csv(os.path.join(config.out, "compression_sweep.csv"), index=False)
    return table
