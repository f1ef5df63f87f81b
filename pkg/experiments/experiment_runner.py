"""
Grid driver: every (config, seed) cell runs in isolation, failures are marked
on disk and never stop the other cells; summaries are rebuilt at the end.
"""

import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from config.experiment_config import ExperimentConfig
from experiments.experiment_executor import cell_dir, run_seed
from experiments.report import report
from utils.logger import get_logger

logger = get_logger(__name__)

FAILED_MARKER = "FAILED"


def run_cell(config: ExperimentConfig, seed: int) -> dict | None:
    """run_seed with crash capture: the traceback lands in a FAILED marker next to partial artifacts."""
    marker = os.path.join(cell_dir(config, seed), FAILED_MARKER)
    try:
        if os.path.exists(marker):
            os.remove(marker)
        return run_seed(config, seed)
    except Exception:
        logger.exception(f"[RUN] {config.cell_name} seed={seed} failed")
        os.makedirs(os.path.dirname(marker), exist_ok=True)
        with open(marker, "w") as f:
            f.write(traceback.format_exc())
        return None


def run_experiment(configs: ExperimentConfig | Sequence[ExperimentConfig]) -> int:
    """
    Runs every seed of every config and writes summary.csv per output directory.

    Args:
        configs: One config or a grid of them.

    Returns:
        int: 0 when every cell succeeded, 1 otherwise.
    """
    if isinstance(configs, ExperimentConfig):
        configs = [configs]
    for config in configs:
        config.check_paths()
    cells = [(config, seed) for config in configs for seed in config.seeds]
    workers = max(config.workers for config in configs)
    logger.info(f"[RUN] {len(cells)} cell(s) | workers={workers}")

    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_cell, config, seed) for config, seed in cells]
            results = [f.result() for f in futures]
    else:
        results = [run_cell(config, seed) for config, seed in cells]

    for out_dir in sorted({config.out for config in configs}):
        report(out_dir)

    failed = sum(r is None for r in results)
    if failed:
        logger.error(f"[RUN] {failed}/{len(cells)} cell(s) failed; see {FAILED_MARKER} markers")
        return 1
    logger.info(f"[RUN] All {len(cells)} cell(s) finished")
    return 0
