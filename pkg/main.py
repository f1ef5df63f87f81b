"""
main.py - Continual-learning hypernetwork experiments

Commands:
    run     train and evaluate a (model x scenario x dataset x seeds) grid
    report  rebuild summary.csv from the run.csv files under a directory
    ablate  beta or chunk-size sweeps written as plot data

Examples:
    python main.py run --config configs/split_mnist.env --seeds 1,2,3
    python main.py run --model lstm_net --scenario cl1 --dataset synth --epochs 1 --out results/smoke
    python main.py report --in results
    python main.py ablate --config configs/split_mnist.env --sweep beta --values 0.001,0.01,0.1
"""

import sys

import click

from config.experiment_config import parse_config, parse_grid
from core.errors import ConfigError
from experiments.ablations import beta_sweep, compression_sweep
from experiments.experiment_runner import run_experiment
from experiments.report import report as build_report
from utils.logger import get_logger

logger = get_logger(__name__)


def _overrides(**flags) -> dict:
    return {k: v for k, v in flags.items() if v is not None}


@click.group()
def cli():
    """Dependency-preserving hypernetworks for continual learning."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="key=value config file")
@click.option("--model", help="hnet, hnet_iwr, lstm_net, lstm_net_iwr, lstm_net_grow (comma list for a grid)")
@click.option("--scenario", help="cl1, cl2, cl3 (comma list for a grid)")
@click.option("--dataset", help="split_mnist, permuted_mnist, synth (comma list for a grid)")
@click.option("--beta", type=float)
@click.option("--seeds", help="comma-separated seeds")
@click.option("--epochs", type=int)
@click.option("--chunk-size", "chunk_size", type=int)
@click.option("--out", help="output directory")
@click.option("--workers", type=int)
def run(config_path, model, scenario, dataset, beta, seeds, epochs, chunk_size, out, workers):
    """Train, evaluate and summarise."""
    try:
        configs = parse_grid(config_path, _overrides(model=model, scenario=scenario, dataset=dataset, beta=beta,
                                                     seeds=seeds, epochs=epochs, chunk_size=chunk_size, out=out,
                                                     workers=workers))
        code = run_experiment(configs)
    except ConfigError as e:
        logger.error(f"[CONFIG] {e}")
        sys.exit(2)
    sys.exit(code)


@cli.command()
@click.option("--in", "in_dir", required=True, type=click.Path(file_okay=False), help="results directory")
def report(in_dir):
    """Regenerate summary.csv."""
    summary = build_report(in_dir)
    click.echo(summary.to_string(index=False) if not summary.empty else "No runs found.")


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--model")
@click.option("--scenario")
@click.option("--dataset")
@click.option("--seeds")
@click.option("--epochs", type=int)
@click.option("--out")
@click.option("--sweep", type=click.Choice(["beta", "chunk_size"]), required=True)
@click.option("--values", required=True, help="comma-separated sweep values")
def ablate(config_path, model, scenario, dataset, seeds, epochs, out, sweep, values):
    """Sweep beta or chunk_size for one config."""
    try:
        config = parse_config(config_path, _overrides(model=model, scenario=scenario, dataset=dataset,
                                                      seeds=seeds, epochs=epochs, out=out))
        config.check_paths()
        points = [v.strip() for v in values.split(",") if v.strip()]
        if sweep == "beta":
            table = beta_sweep(config, [float(v) for v in points])
        else:
            table = compression_sweep(config, [int(v) for v in points])
    except (ConfigError, ValueError) as e:
        logger.error(f"[CONFIG] {e}")
        sys.exit(2)
    click.echo(table.to_string(index=False))


if __name__ == "__main__":
    cli()
