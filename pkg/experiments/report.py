"""
Aggregation of per-run rows into summary.csv (mean and sample std over seeds),
plus soft sanity checks on the resulting table.
"""

import os

import pandas as pd

from data.results_tracker import RUN_FIELDS, collect_runs
from utils.logger import get_logger

logger = get_logger(__name__)

SUMMARY_FIELDS = ["model", "scenario", "dataset", "n_runs", "avg_acc", "avg_acc_std", "avg_during",
                  "avg_forgetting", "avg_forgetting_std", "compression_ratio"]
GROUP_KEYS = ["model", "scenario", "dataset"]


def aggregate_runs(runs: pd.DataFrame) -> pd.DataFrame:
    """One row per (model, scenario, dataset); std is the sample std (NaN for a single run)."""
    if runs.empty:
        return pd.DataFrame(columns=SUMMARY_FIELDS)
    runs = runs[RUN_FIELDS].sort_values(GROUP_KEYS + ["seed"], kind="mergesort")
    summary = runs.groupby(GROUP_KEYS, sort=True).agg(
        n_runs=("seed", "count"),
        avg_acc=("avg_acc", "mean"),
        avg_acc_std=("avg_acc", "std"),
        avg_during=("avg_during", "mean"),
        avg_forgetting=("avg_forgetting", "mean"),
        avg_forgetting_std=("avg_forgetting", "std"),
        compression_ratio=("compression_ratio", "mean"),
    ).reset_index()
    return summary[SUMMARY_FIELDS]


def ordering_checks(summary: pd.DataFrame, min_runs: int = 3) -> list[str]:
    """
    CL1 (task id given) should not trail CL3 (task id inferred) for the same model.

    Violations are logged as warnings and returned; they never fail a run.
    """
    flagged = []
    for (model, dataset), group in summary.groupby(["model", "dataset"], sort=True):
        by_scenario = group.set_index("scenario")
        if not {"cl1", "cl3"} <= set(by_scenario.index):
            continue
        cl1, cl3 = by_scenario.loc["cl1"], by_scenario.loc["cl3"]
        if min(cl1["n_runs"], cl3["n_runs"]) < min_runs:
            continue
        if cl1["avg_acc"] < cl3["avg_acc"]:
            msg = f"{model}/{dataset}: CL1 mean {cl1['avg_acc']:.4f} below CL3 mean {cl3['avg_acc']:.4f}"
            logger.warning(f"[RUN] Ordering check: {msg}")
            flagged.append(msg)
    return flagged


def regularization_checks(sweep: pd.DataFrame) -> list[str]:
    """
    Mean forgetting per beta from a beta sweep; some beta > 0 should forget
    less than beta = 0. Logged per beta, flagged as a warning otherwise.
    """
    if sweep.empty or "avg_forgetting" not in sweep:
        return []
    by_beta = sweep.groupby("beta", sort=True)["avg_forgetting"].mean()
    for beta, forgetting in by_beta.items():
        logger.info(f"[RUN] beta={beta:g} | mean forgetting={forgetting:.4f}")
    if 0.0 not in by_beta.index or len(by_beta) < 2:
        return []
    unregularized = by_beta.loc[0.0]
    best = by_beta.drop(index=0.0).min()
    if best < unregularized:
        return []
    msg = f"no beta > 0 forgets less than beta=0 ({best:.4f} vs {unregularized:.4f})"
    logger.warning(f"[RUN] Regularization check: {msg}")
    return [msg]


def report(in_dir: str) -> pd.DataFrame:
    """Rebuilds <in_dir>/summary.csv from every run.csv found below it."""
    summary = aggregate_runs(collect_runs(in_dir))
    os.makedirs(in_dir, exist_ok=True)
    summary.to_csv(os.path.join(in_dir, "summary.csv"), index=False)
    logger.info(f"[RUN] summary.csv with {len(summary)} row(s) written to {in_dir}")
    ordering_checks(summary)
    return summary
