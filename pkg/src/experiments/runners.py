"""
Per-model training, forecasting, evaluation and event analysis used by the CLI.

Model ids: mordred (ordinal seq2seq), seq2seq-reg (regression seq2seq), ar
(AR(p) with Kalman prediction), gp-mc and gp-gmm (one shared GP checkpoint,
moment-corrected or mixture-fitted trajectories).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from baselines.autoregressive import kalman_forecast, select_ar_order, simulate_ar_trajectories
from baselines.gaussian_process import fit_gp, gp_mc_trajectories, gp_predict_batch
from baselines.mixture import fit_stepwise_gmm
from baselines.trajectories import TrajectoryEnsemble, correct_moments
from core.ordinal import fit_partition
from core.seq2seq import ORDINAL, REGRESSION, Seq2SeqModel, forecast_regression, make_windows, \
    mc_dropout_forecast
from core.trainer import TrainingConfig, grid_search
from datagen.preprocessing import add_regularizing_noise
from evaluation.metrics import MetricsReport, evaluate_forecast
from evaluation.ranking import RankTables, rank_tables, reports_to_frame
from events.timing import kde_fit, sample_trajectories, timing_nll, trajectory_timings, true_timings, \
    uniform_timing_nll
from experiments.dataset import PreparedDataset, forecast_origin, stage_rng
from reporting.tables import timing_table
from storage.artifacts import ForecastArtifact, write_table
from storage.checkpoint import load_ar, load_gp, load_seq2seq, save_ar, save_gp, save_seq2seq
from storage.database import DatabaseManager
from utils.config import MODEL_IDS
from utils.errors import ArtifactError, ConfigError
from utils.logger import get_logger

logger = get_logger("experiments")

GP_MODELS = ("gp-mc", "gp-gmm")
UNIFORM = "uniform"


def checkpoint_name(model_id: str) -> str:
    if model_id not in MODEL_IDS:
        raise ConfigError(f"Unknown model id '{model_id}'; valid ids: {list(MODEL_IDS)}")
    return "gp" if model_id in GP_MODELS else model_id


def checkpoint_dir(output_dir, dataset: str, model_id: str) -> Path:
    return Path(output_dir) / "checkpoints" / dataset / checkpoint_name(model_id)


def forecast_dir(output_dir, dataset: str, model_id: str) -> Path:
    return Path(output_dir) / "forecasts" / dataset / model_id


@dataclass
class TrainOutcome:
    """Where the winning model went and how the candidates scored."""
    model_id: str
    checkpoint: Path
    grid: pd.DataFrame
    val_loss: float


def _regression_series(ds: PreparedDataset, config, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    sigma = config.data.noise_sigma
    return add_regularizing_noise(ds.split.train, sigma, rng), add_regularizing_noise(ds.split.validation, sigma, rng)


def _record_runs(db: Optional[DatabaseManager], model_id: str, dataset: str, grid: pd.DataFrame,
                 seed: int, checkpoint: Path):
    if db is None:
        return
    for row in grid.to_dict(orient="records"):
        selected = bool(row.pop("selected", False))
        val_loss = row.pop("val_loss", None)
        epochs = row.pop("epochs", None)
        cell = row.pop("cell", None)
        db.add_run(model_id, dataset, row, val_loss=val_loss,
                   epochs=None if epochs is None else int(epochs),
                   cell_index=None if cell is None else int(cell), selected=selected, seed=seed,
                   checkpoint_path=str(checkpoint) if selected else None)


def train_seq2seq(model_id: str, ds: PreparedDataset, config, out: Path, rng: np.random.Generator) -> TrainOutcome:
    m = config.model
    mode = ORDINAL if model_id == "mordred" else REGRESSION
    if mode == ORDINAL:
        train, val = ds.split.train, ds.split.validation
        partition = fit_partition(train, m.bin_count, config.data.pad_fraction)
    else:
        train, val = _regression_series(ds, config, rng)
        partition = None

    def build(n_u: int, p_drop: float, init_rng: np.random.Generator) -> Seq2SeqModel:
        return Seq2SeqModel.build(mode, n_u, init_rng, p_drop, partition, m.lookback, m.handoff_dropout)

    base = TrainingConfig.from_config(config, m.hidden_units[0], m.dropout[0], m.l2[0])
    result = grid_search(build, train, val, base, m.hidden_units, m.dropout, m.l2, config.experiment.workers)
    best = result.best
    save_seq2seq(out, best.model, seed=config.experiment.seed,
                 extra={"dataset": ds.name, "l2": float(best.l2), "val_loss": float(best.val_loss)})
    write_table(best.log.to_frame(), out / "training_log.csv")
    grid = result.to_frame()
    write_table(grid, out / "grid_log.csv")
    return TrainOutcome(model_id, out, grid, best.val_loss)


def train_ar(ds: PreparedDataset, config, out: Path, rng: np.random.Generator) -> TrainOutcome:
    train, val = _regression_series(ds, config, rng)
    model, scores = select_ar_order(train, val, config.baselines.ar_orders, config.baselines.ar_obs_variance)
    save_ar(out, model, extra={"dataset": ds.name, "val_loss": float(scores[model.order])})
    grid = pd.DataFrame({
        "cell": range(len(scores)),
        "order": list(scores),
        "val_loss": list(scores.values()),
        "selected": [p == model.order for p in scores],
    })
    write_table(grid, out / "grid_log.csv")
    return TrainOutcome("ar", out, grid, scores[model.order])


def train_gp(ds: PreparedDataset, config, out: Path, rng: np.random.Generator) -> TrainOutcome:
    b, P = config.baselines, config.model.lookback
    train, val = _regression_series(ds, config, rng)
    w = make_windows(train, P)
    m = fit_gp(w.encoder, w.targets[:, 0], restarts=b.gp_restarts, rng=rng, max_iter=b.gp_max_iter,
               max_windows=b.gp_max_windows)
    vw = make_windows(val, P)
    mu, _ = gp_predict_batch(m, vw.encoder)
    val_loss = float(np.mean((vw.targets[:, 0] - mu) ** 2))
    save_gp(out, m, extra={"dataset": ds.name, "val_loss": val_loss})
    grid = pd.DataFrame([{
        "cell": 0, "lookback": P, "log_marginal_likelihood": m.log_marginal_likelihood,
        "val_loss": val_loss, "selected": True,
    }])
    write_table(grid, out / "grid_log.csv")
    return TrainOutcome("gp", out, grid, val_loss)


def train_model(model_id: str, ds: PreparedDataset, config, db: Optional[DatabaseManager] = None) -> TrainOutcome:
    """Train (with grid search where the model has a grid) and checkpoint the winner."""
    out = checkpoint_dir(config.experiment.output_dir, ds.name, model_id)
    rng = stage_rng(config.experiment.seed, "train")
    logger.info(f"Training '{model_id}' on '{ds.name}'")
    if model_id in ("mordred", "seq2seq-reg"):
        outcome = train_seq2seq(model_id, ds, config, out, rng)
    elif model_id == "ar":
        outcome = train_ar(ds, config, out, rng)
    elif model_id in GP_MODELS:
        outcome = train_gp(ds, config, out, rng)
    else:
        raise ConfigError(f"Unknown model id '{model_id}'; valid ids: {list(MODEL_IDS)}")
    _record_runs(db, checkpoint_name(model_id), ds.name, outcome.grid, config.experiment.seed, out)
    logger.info(f"Checkpoint for '{model_id}' at {out} (val_loss={outcome.val_loss:.6g})")
    return outcome


def forecast_model(model_id: str, ds: PreparedDataset, config, checkpoint: Optional[Path] = None,
                   horizon: Optional[int] = None, samples: Optional[int] = None) -> ForecastArtifact:
    """
    Forecast the first `horizon` test samples from the window preceding the test split.
    """
    checkpoint = Path(checkpoint) if checkpoint else checkpoint_dir(config.experiment.output_dir, ds.name, model_id)
    P_h = int(horizon or config.model.horizon)
    rng = stage_rng(config.experiment.seed, "forecast")
    f, b = config.forecast, config.baselines
    meta = {"checkpoint": str(checkpoint)}

    if model_id in ("mordred", "seq2seq-reg"):
        model, _ = load_seq2seq(checkpoint)
        expected = ORDINAL if model_id == "mordred" else REGRESSION
        if model.mode != expected:
            raise ConfigError(f"Checkpoint at {checkpoint} is a {model.mode} model, not '{model_id}'")
        seed, truth = forecast_origin(ds, model.lookback, P_h)
        N_s = int(samples or f.mc_samples)
        if model.mode == ORDINAL:
            dist, paths = mc_dropout_forecast(model, seed, P_h, N_s, rng, with_trajectories=True)
        else:
            dist, paths = forecast_regression(model, seed, P_h, N_s, rng, with_trajectories=True)
        ens = TrajectoryEnsemble(paths, origin="model")
        meta["mc_samples"] = N_s
    elif model_id == "ar":
        m, _ = load_ar(checkpoint)
        _, truth = forecast_origin(ds, m.order, P_h)
        dist = kalman_forecast(m, ds.history, P_h)
        ens = TrajectoryEnsemble(simulate_ar_trajectories(m, ds.history, P_h, config.events.trajectories, rng))
        meta["order"] = m.order
    elif model_id in GP_MODELS:
        m, _ = load_gp(checkpoint)
        seed, truth = forecast_origin(ds, m.lookback, P_h)
        S = int(samples or f.gp_trajectories)
        ens = gp_mc_trajectories(m, seed, P_h, S, rng)
        if model_id == "gp-mc":
            dist = correct_moments(ens)
        else:
            dist = fit_stepwise_gmm(ens, b.gmm_components, b.gmm_max_iter, b.gmm_tol, b.gmm_prune)
        meta["gp_trajectories"] = S
    else:
        raise ConfigError(f"Unknown model id '{model_id}'; valid ids: {list(MODEL_IDS)}")

    return ForecastArtifact(model_id, ds.name, dist, truth=truth, trajectories=ens,
                            quantile_levels=tuple(f.quantiles), seed=config.experiment.seed, metadata=meta)


def evaluate_artifacts(artifacts: Iterable[ForecastArtifact], qq_horizon: int = 250
                       ) -> Tuple[List[MetricsReport], Optional[RankTables]]:
    """Score each artifact against its stored truth; rank when more than one model is present."""
    reports = []
    for art in artifacts:
        if art.truth is None:
            raise ValueError(f"Forecast '{art.model}' on '{art.dataset}' has no ground truth")
        reports.append(evaluate_forecast(art.truth, art.distribution, art.model, art.dataset, qq_horizon))
    if not reports:
        raise ValueError("No forecasts to evaluate")
    return reports, rank_tables(reports)


def metrics_frame(reports: Iterable[MetricsReport]) -> pd.DataFrame:
    """One row per model, dataset and metric."""
    return reports_to_frame(reports)


@dataclass
class EventAnalysis:
    table: pd.DataFrame
    densities: Dict[Tuple[str, str], object]
    true_timings: Dict[str, np.ndarray]


def analyse_events(artifacts: Iterable[ForecastArtifact], config) -> EventAnalysis:
    """
    Timing NLL of every forecast's predicted peak timings, plus the uniform
    baseline, tabulated per dataset.

    Raises:
        ArtifactError: two forecasts for the same (dataset, model) pair.
    """
    e = config.events
    rng = stage_rng(config.experiment.seed, "events")
    results: Dict[str, Dict[str, float]] = {}
    densities = {}
    truths: Dict[str, np.ndarray] = {}
    for art in artifacts:
        if (art.dataset, art.model) in densities:
            raise ArtifactError(f"More than one forecast for '{art.model}' on '{art.dataset}'; "
                                f"pass one forecast folder per model and dataset")
        if art.truth is None:
            raise ValueError(f"Forecast '{art.model}' on '{art.dataset}' has no ground truth")
        if art.dataset not in truths:
            peaks = true_timings(art.truth, e.imf_selector, e.threshold, e.min_distance, e.max_imfs)
            if len(peaks) == 0:
                raise ValueError(f"No ground-truth events found in '{art.dataset}'")
            truths[art.dataset] = peaks.as_float()
            results[art.dataset] = {UNIFORM: uniform_timing_nll(len(peaks), art.horizon)}
        ens = art.trajectories
        if ens is None:
            ens = sample_trajectories(art.distribution, e.trajectories, rng)
        density = kde_fit(trajectory_timings(ens, e.threshold, e.min_distance), e.bandwidth)
        densities[(art.dataset, art.model)] = density
        results[art.dataset][art.model] = timing_nll(truths[art.dataset], density)
        logger.info(f"Timing NLL {art.model}/{art.dataset}: {results[art.dataset][art.model]:.4f}")
    if not results:
        raise ValueError("No forecasts to analyse")
    return EventAnalysis(timing_table(results), densities, truths)
