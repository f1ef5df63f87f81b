"""
Runs one (model, scenario, dataset, seed) cell end to end:
data -> generator -> train task by task -> evaluate after every task -> artifacts.
"""

import functools
import os

from config.experiment_config import ExperimentConfig
from config.settings import SPLIT_MNIST_PAIRING
from core.evaluation import MetricsRecord, compression_ratio, evaluate
from core.hypernet.grow import grow_begin_task
from core.hypernet.layout import build_layout
from core.hypernet.state import HypernetDims, HypernetState, count_hypernet_params, init_state
from core.state_manager import save_checkpoint
from core.target_network import ClassifierSpec
from core.trainer import train_task, train_task_grow
from data.idx_loader import load_mnist
from data.results_tracker import TrainingLog, write_metrics, write_run
from data.task_sequences import TaskSequence, permute_tasks, split_tasks, synth_blobs
from utils.logger import get_logger

logger = get_logger(__name__)


@functools.lru_cache(maxsize=2)
def _mnist(data_root: str):
    return load_mnist(data_root)


def build_task_sequence(config: ExperimentConfig, seed: int) -> TaskSequence:
    if config.dataset == "synth":
        seq = synth_blobs(config.synth_tasks, config.synth_classes, config.synth_dim, config.synth_separation,
                          seed, config.synth_samples)
    else:
        train, test = _mnist(config.data_root)
        if config.dataset == "split_mnist":
            seq = split_tasks(train, test, SPLIT_MNIST_PAIRING, seed)
        else:
            seq = permute_tasks(train, test, config.permuted_tasks, seed)
    return seq.capped(config.max_train_samples, config.max_test_samples)


def build_model(config: ExperimentConfig, seq: TaskSequence, seed: int) -> tuple[ClassifierSpec, HypernetState]:
    scenario = config.scenario_enum
    spec = ClassifierSpec.for_scenario(seq.input_dim, config.main_hidden, seq.n_classes, scenario, len(seq))
    layout = build_layout(spec, scenario, len(seq), config.chunk_size)
    dims = HypernetDims(
        embedding_dim=config.embedding_dim,
        chunk_embedding_dim=config.embedding_dim,
        hidden_size=config.hidden_size,
        gate_bias=config.lstm_gate_bias,
        share_output=config.grow_share_output,
    )
    state = init_state(config.train_config(seed).generator, layout, dims, seed)
    return spec, state


def cell_dir(config: ExperimentConfig, seed: int) -> str:
    return os.path.join(config.out, config.cell_name, f"seed_{seed}")


def run_seed(config: ExperimentConfig, seed: int) -> dict:
    """
    Trains and evaluates one seed, writing config.env, training_log.tsv,
    metrics.csv, checkpoint.npz and run.csv under the cell directory.

    Returns:
        dict: The run.csv row.
    """
    out_dir = cell_dir(config, seed)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.env"), "w") as f:
        f.write(config.with_overrides(seeds=(seed,)).to_env())

    seq = build_task_sequence(config, seed)
    spec, state = build_model(config, seq, seed)
    train_cfg = config.train_config(seed)
    scenario = config.scenario_enum
    training_log = TrainingLog(os.path.join(out_dir, "training_log.tsv"))
    record = MetricsRecord(config.model, config.scenario)
    test_sets = {task.task_id: task.test for task in seq}

    logger.info(f"[RUN] {config.cell_name} seed={seed} | tasks={len(seq)} | main params={state.layout.total_params} "
                f"| n_c={state.layout.n_chunks} | hypernet params={count_hypernet_params(state)}")
    for task in seq:
        if state.generator == "grow":
            grow_begin_task(state, task.task_id)
            train_task_grow(task.task_id, task.train, train_cfg, state, spec, scenario, on_epoch=training_log)
        else:
            train_task(task.task_id, task.train, train_cfg, state, spec, scenario, on_epoch=training_log)
        record.record(evaluate(scenario, state, test_sets, task.task_id))

    record.compression_ratio = compression_ratio(state)
    write_metrics(os.path.join(out_dir, "metrics.csv"), record.rows())
    save_checkpoint(os.path.join(out_dir, "checkpoint.npz"), state)

    row = {
        "model": config.model,
        "scenario": config.scenario,
        "dataset": config.dataset,
        "seed": seed,
        "n_tasks": len(seq),
        "avg_acc": record.avg_final(),
        "avg_during": record.avg_during(),
        "avg_forgetting": record.avg_forgetting(),
        "compression_ratio": record.compression_ratio,
        "hypernet_params": count_hypernet_params(state),
        "main_params": state.layout.total_params,
    }
    write_run(os.path.join(out_dir, "run.csv"), row)
    logger.info(f"[RUN] {config.cell_name} seed={seed} done | avg_acc={row['avg_acc']:.4f} "
                f"| during={row['avg_during']:.4f} | forgetting={row['avg_forgetting']:.4f} "
                f"| compression={row['compression_ratio']:.3f}")
    return row
