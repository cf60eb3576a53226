"""
Benchmark harness: generate, train, forecast, evaluate, events, plot.

Every command reads config/config.yaml (or --config / $MORDRED_CONFIG),
applies command-line overrides and writes under experiment.output_dir.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from evaluation.metrics import sample_truth
from experiments.dataset import PreparedDataset, load_prepared, stage_rng, write_generated
from experiments.runners import analyse_events, evaluate_artifacts, forecast_dir, forecast_model, \
    metrics_frame, train_model
from reporting.fan_chart import fan_chart
from storage.artifacts import TIMING, list_forecasts, read_forecast, write_forecast, write_json, write_table
from storage.database import DatabaseManager
from utils.config import MODEL_IDS, Config, tuned_overrides
from utils.errors import ArtifactError, ConfigError, NumericalError
from utils.logger import describe_settings, setup_logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

# command-line flag -> dotted config key
OVERRIDES = {
    "seed": "experiment.seed",
    "output_dir": "experiment.output_dir",
    "workers": "experiment.workers",
    "model": "model.model_id",
    "system": "data.system",
    "n": "data.length",
    "lookback": "model.lookback",
    "horizon": "model.horizon",
    "bin_count": "model.bin_count",
    "hidden_units": "model.hidden_units",
    "dropout": "model.dropout",
    "l2": "model.l2",
    "max_epochs": "model.max_epochs",
    "decoder_length": "model.decoder_length",
    "mc_samples": "forecast.mc_samples",
    "gp_trajectories": "forecast.gp_trajectories",
    "threshold": "events.threshold",
    "min_distance": "events.min_distance",
    "bandwidth": "events.bandwidth",
    "trajectories": "events.trajectories",
    "log_level": "logging.level",
}


def _bandwidth(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def build_config(args: argparse.Namespace) -> Config:
    config = Config.load(args.config)
    return config.apply_overrides({key: getattr(args, flag, None) for flag, key in OVERRIDES.items()})


def open_database(config: Config) -> Optional[DatabaseManager]:
    if not config.storage.database_path:
        return None
    return DatabaseManager(config.storage.database_path)


def resolve_dataset(args: argparse.Namespace, config: Config, logger) -> PreparedDataset:
    """
    Dataset named by --dataset, else data.csv_path, else the configured
    generator's series under <output_dir>/datasets (generated on first use).
    """
    path = getattr(args, "dataset", None) or config.data.csv_path
    if path is None:
        path = Path(config.experiment.output_dir) / "datasets" / f"{config.data.system}.csv"
        if not path.exists():
            logger.info(f"Dataset {path} not found, generating it")
            write_generated(config, config.experiment.seed, path)
    return load_prepared(path, config.data.seasonal_period)


def _forecast_folders(paths: Optional[List[str]], config: Config) -> List[Path]:
    roots = [Path(p) for p in paths] if paths else [Path(config.experiment.output_dir) / "forecasts"]
    folders = []
    for root in roots:
        found = list_forecasts(root)
        if not found:
            raise FileNotFoundError(f"No forecast artifacts under {root}")
        folders.extend(found)
    return folders


def cmd_generate(args, config: Config, logger) -> int:
    out = Path(args.output) if args.output else \
        Path(config.experiment.output_dir) / "datasets" / f"{config.data.system}.csv"
    path = write_generated(config, config.experiment.seed, out)
    logger.info(f"Dataset written: {path}")
    return EXIT_OK


def cmd_train(args, config: Config, logger) -> int:
    if args.tuned:
        config = config.apply_overrides(tuned_overrides(config.model.model_id, config.data.system))
    ds = resolve_dataset(args, config, logger)
    db = open_database(config)
    try:
        outcome = train_model(config.model.model_id, ds, config, db)
    finally:
        if db is not None:
            db.close()
    logger.info(f"Trained '{outcome.model_id}': {len(outcome.grid)} run(s), best val_loss {outcome.val_loss:.6g}")
    return EXIT_OK


def cmd_forecast(args, config: Config, logger) -> int:
    ds = resolve_dataset(args, config, logger)
    model_id = config.model.model_id
    artifact = forecast_model(model_id, ds, config, checkpoint=args.checkpoint, horizon=args.horizon,
                              samples=args.samples)
    folder = Path(args.output) if args.output else forecast_dir(config.experiment.output_dir, ds.name, model_id)
    write_forecast(folder, artifact)
    return EXIT_OK


def cmd_evaluate(args, config: Config, logger) -> int:
    artifacts = [read_forecast(f) for f in _forecast_folders(args.forecasts, config)]
    if args.self_truth:
        rng = stage_rng(config.experiment.seed, "evaluate")
        for art in artifacts:
            art.truth = sample_truth(art.distribution, rng)
    reports, ranks = evaluate_artifacts(artifacts, args.qq_horizon)
    out = Path(args.output) if args.output else Path(config.experiment.output_dir) / "reports"
    write_table(metrics_frame(reports), out / "metrics.csv")
    write_json(ranks.to_dict(), out / "rank_tables.json")
    db = open_database(config)
    if db is not None:
        db.add_metrics(reports)
        db.close()
    for rep in reports:
        logger.info(f"{rep.model}/{rep.dataset}: " + ", ".join(f"{k}={v:.4g}" for k, v in rep.metrics().items()))
    logger.info(f"Metrics and rank tables written to {out}")
    return EXIT_OK


def cmd_events(args, config: Config, logger) -> int:
    folders = _forecast_folders(args.forecasts, config)
    artifacts = [read_forecast(f) for f in folders]
    analysis = analyse_events(artifacts, config)
    for folder, art in zip(folders, artifacts):
        density = analysis.densities[(art.dataset, art.model)]
        write_table(density.to_frame(density.grid(art.horizon)), folder / TIMING)
    out = Path(args.output) if args.output else Path(config.experiment.output_dir) / "reports"
    path = write_table(analysis.table.reset_index(), out / "timing_nll.csv")
    logger.info(f"Timing NLL table written: {path}")
    return EXIT_OK


def cmd_plot(args, config: Config, logger) -> int:
    art = read_forecast(args.forecast)
    timing, truths = None, None
    if args.timing:
        analysis = analyse_events([art], config)
        timing = {art.model: analysis.densities[(art.dataset, art.model)]}
        truths = analysis.true_timings[art.dataset]
    out = Path(args.output) if args.output else Path(args.forecast) / "fan_chart.svg"
    fan_chart(art.distribution, out, truth=art.truth, title=f"{art.model} on {art.dataset}",
              timing=timing, true_timings=truths)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "events": cmd_events,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON config file (default: config/config.yaml)")
    common.add_argument("--seed", type=int)
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dataset", help="Dataset CSV (default: the configured source)")
    data.add_argument("--model", choices=MODEL_IDS)
    data.add_argument("--lookback", type=int)

    parser = argparse.ArgumentParser(prog="mordred", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="Write a synthetic dataset")
    p.add_argument("--system", help="System id from config/systems.yaml")
    p.add_argument("--n", type=int, help="Series length")
    p.add_argument("--output", help="CSV path (default: <output_dir>/datasets/<system>.csv)")

    p = sub.add_parser("train", parents=[common, data], help="Grid-search and checkpoint a model")
    p.add_argument("--bin-count", dest="bin_count", type=int)
    p.add_argument("--hidden-units", dest="hidden_units", type=int, nargs="+")
    p.add_argument("--dropout", type=float, nargs="+")
    p.add_argument("--l2", type=float, nargs="+")
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--decoder-length", dest="decoder_length", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--tuned", action="store_true", help="Use the shipped grid-search winners for the system")

    p = sub.add_parser("forecast", parents=[common, data], help="Forecast the test split from a checkpoint")
    p.add_argument("--checkpoint", help="Checkpoint directory (default: the trained one)")
    p.add_argument("--horizon", type=int)
    p.add_argument("--samples", type=int, help="MC-dropout samples or GP trajectories")
    p.add_argument("--trajectories", type=int, help="AR sample paths")
    p.add_argument("--output", help="Artifact directory")

    p = sub.add_parser("evaluate", parents=[common], help="Metrics and rank tables")
    p.add_argument("--forecasts", nargs="+", help="Forecast directories or roots")
    p.add_argument("--qq-horizon", dest="qq_horizon", type=int, default=250)
    p.add_argument("--self-truth", dest="self_truth", action="store_true",
                   help="Score against truth sampled from each forecast's own densities")
    p.add_argument("--output", help="Report directory")

    p = sub.add_parser("events", parents=[common], help="Event-timing densities and NLL table")
    p.add_argument("--forecasts", nargs="+", help="Forecast directories or roots")
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-distance", dest="min_distance", type=int)
    p.add_argument("--bandwidth", type=_bandwidth, help="'silverman' or a width in samples")
    p.add_argument("--trajectories", type=int, help="Samples drawn for density-only forecasts")
    p.add_argument("--output", help="Report directory")

    p = sub.add_parser("plot", parents=[common], help="SVG fan chart of a forecast")
    p.add_argument("forecast", help="Forecast directory")
    p.add_argument("--timing", action="store_true", help="Add the event-timing density subplot")
    p.add_argument("--output", help="SVG path (default: <forecast>/fan_chart.svg)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)

    try:
        config = build_config(args)
    except (ConfigError, FileNotFoundError) as e:
        setup_logger().error(str(e))
        return EXIT_USAGE

    logger = setup_logger(config)
    logger.debug(f"{args.command}: {describe_settings(config)}")
    try:
        return COMMANDS[args.command](args, config, logger)
    except NumericalError as e:
        logger.error(f"Numerical failure in '{args.command}': {e}")
        return EXIT_NUMERICAL
    except (ConfigError, ArtifactError, ValueError, FileNotFoundError) as e:
        logger.error(f"'{args.command}' failed: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
