"""
Results Tracker - on-disk artifacts of a run

- training_log.tsv : one row per epoch (task, epoch, L_task, R, L_total)
- metrics.csv      : accuracy matrix rows (model, scenario, stage, eval_task, accuracy)
- run.csv          : one summary row per run
- summary.csv      : aggregated rows over seeds (written by experiments.report)
"""

import csv
import glob
import os

import pandas as pd

from core.trainer import EpochStats
from utils.logger import get_logger

logger = get_logger(__name__)

TRAINING_LOG_FIELDS = ["task", "epoch", "L_task", "R", "L_total"]
METRICS_FIELDS = ["model", "scenario", "stage", "eval_task", "accuracy"]
RUN_FIELDS = ["model", "scenario", "dataset", "seed", "n_tasks", "avg_acc", "avg_during", "avg_forgetting",
              "compression_ratio", "hypernet_params", "main_params"]


class TrainingLog:
    """Appends epoch rows to a tab-separated file, writing the header once."""

    def __init__(self, path: str):
        self.path = path
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, mode="w", newline="") as f:
            csv.writer(f, delimiter="\t").writerow(TRAINING_LOG_FIELDS)

    def __call__(self, stats: EpochStats):
        self.append(stats)

    def append(self, stats: EpochStats):
        row = [stats.task, stats.epoch, repr(stats.l_task), repr(stats.reg), repr(stats.l_total)]
        with open(self.path, mode="a", newline="") as f:
            csv.writer(f, delimiter="\t").writerow(row)


def read_training_log(path: str) -> pd.DataFrame:
    return pd.read_csv(path, sep="\t")


def write_metrics(path: str, rows: list[dict]):
    pd.DataFrame(rows, columns=METRICS_FIELDS).to_csv(path, index=False)
    logger.debug(f"[RUN] {len(rows)} accuracy rows -> {path}")


def write_run(path: str, row: dict):
    missing = [k for k in RUN_FIELDS if k not in row]
    if missing:
        raise KeyError(f"run row lacks {missing}")
    pd.DataFrame([row], columns=RUN_FIELDS).to_csv(path, index=False)


def collect_runs(in_dir: str) -> pd.DataFrame:
    """Every run.csv below `in_dir`, in sorted path order."""
    paths = sorted(glob.glob(os.path.join(in_dir, "**", "run.csv"), recursive=True))
    if not paths:
        return pd.DataFrame(columns=RUN_FIELDS)
    return pd.concat([pd.read_csv(p) for p in paths], ignore_index=True)
