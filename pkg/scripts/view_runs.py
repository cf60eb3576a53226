"""View the run ledger: trained models, selected grid cells and stored metrics."""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from storage.database import DatabaseManager
from utils.config import Config


def print_statistics(limit: int = 10):
    """Print ledger summary, selected runs and the latest metrics."""
    config = Config.load()
    if not config.storage.database_path or not Path(config.storage.database_path).exists():
        raise FileNotFoundError(config.storage.database_path)
    db = DatabaseManager(config.storage.database_path)

    print("=" * 60)
    print("RUN LEDGER")
    print("=" * 60)
    print()

    summary = db.get_statistics_summary()
    print("SUMMARY")
    print("-" * 60)
    print(f"Total runs:           {summary['total_runs']}")
    print(f"Metric rows:          {summary['metric_rows']}")
    print(f"Datasets:             {', '.join(summary['datasets']) or '-'}")
    if summary['first_run']:
        print(f"First run:            {summary['first_run']}")
    if summary['last_run']:
        print(f"Last run:             {summary['last_run']}")
    print()

    print("RUNS PER MODEL")
    print("-" * 60)
    for model_id, count in sorted(summary['runs_per_model'].items()):
        print(f"{model_id:<14} {count:4d}  {'#' * min(count, 40)}")
    print()

    print("SELECTED MODELS")
    print("-" * 60)
    for model_id in sorted(summary['runs_per_model']):
        for dataset in summary['datasets']:
            best = db.get_best_run(model_id, dataset)
            if best is not None:
                print(f"{model_id:<14} {dataset:<20} val_loss={best.val_loss:.6g}  {best.hyperparameters}")
    print()

    print(f"RECENT RUNS (Last {limit})")
    print("-" * 60)
    recent = db.get_recent_runs(limit=limit)
    if recent:
        for run in recent:
            timestamp = run.timestamp.strftime("%Y-%m-%d %H:%M:%S")
            flag = "*" if run.selected else " "
            loss = "-" if run.val_loss is None else f"{run.val_loss:.6g}"
            print(f"{timestamp} {flag} {run.model_id:<12} {run.dataset:<16} cell={run.cell_index} val_loss={loss}")
    else:
        print("No runs recorded yet.")
    print()

    metrics = db.get_metrics_frame()
    if not metrics.empty:
        print("LATEST METRICS")
        print("-" * 60)
        table = metrics.pivot_table(index=["dataset", "model"], columns="metric", values="value", sort=False)
        print(table.to_string(float_format=lambda v: f"{v:.4g}"))
        print()

    print("=" * 60)
    db.close()


def main():
    """Entry point."""
    try:
        print_statistics()
    except FileNotFoundError:
        print("Database not found. Train a model first to populate the run ledger.")
    except Exception as e:
        print(f"Error: {e}")


if __name__ == "__main__":
    main()
