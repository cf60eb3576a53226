"""Teacher-forced training with early stopping, and hyperparameter grid search."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from itertools import product
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from core.nnet import OptimizerState, clip_by_global_norm, nadam_update, sample_dropout_masks
from core.seq2seq import Seq2SeqModel, batch_loss, loss_and_gradients, make_windows
from utils.errors import ConfigError, NumericalError
from utils.logger import get_logger

logger = get_logger("trainer")


@dataclass
class TrainingConfig:
    """Hyperparameters of one training run."""
    lookback: int = 100
    horizon: int = 1000
    n_u: int = 64
    p_drop: float = 0.25
    l2: float = 1e-6
    max_epochs: int = 50
    batch_size: int = 256
    patience: int = 5
    seed: int = 7
    decoder_length: Optional[int] = None
    clip_norm: float = 5.0
    handoff_dropout: bool = False
    stride: int = 1
    learning_rate: float = 0.002
    beta_1: float = 0.9
    beta_2: float = 0.999
    schedule_decay: float = 0.004
    epsilon: float = 1e-7

    def __post_init__(self):
        if self.lookback < 1 or self.horizon < 1:
            raise ConfigError("lookback and horizon must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 <= self.p_drop < 1.0:
            raise ConfigError(f"p_drop must lie in [0, 1), got {self.p_drop}")

    @property
    def teacher_forcing_length(self) -> int:
        return self.decoder_length or self.lookback

    @classmethod
    def from_config(cls, config, n_u: int, p_drop: float, l2: float) -> 'TrainingConfig':
        """One grid cell of an experiment `Config`."""
        m, o = config.model, config.optimizer
        return cls(
            lookback=m.lookback, horizon=m.horizon, n_u=n_u, p_drop=p_drop, l2=l2,
            max_epochs=m.max_epochs, batch_size=m.batch_size, patience=m.patience,
            seed=config.experiment.seed, decoder_length=m.decoder_length,
            clip_norm=m.clip_norm, handoff_dropout=m.handoff_dropout, stride=m.stride,
            learning_rate=o.learning_rate, beta_1=o.beta_1, beta_2=o.beta_2,
            schedule_decay=o.schedule_decay, epsilon=o.epsilon,
        )


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainingLog:
    """Per-epoch losses and the restored (best) epoch."""
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    stopped_early: bool = False

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(e) for e in self.epochs], columns=["epoch", "train_loss", "val_loss"])


def _check_finite(value: float, what: str):
    if not np.isfinite(value):
        raise NumericalError(f"Training diverged: {what} is {value}")


def train(model: Seq2SeqModel, train_series, validation_series, cfg: TrainingConfig,
          rng: Optional[np.random.Generator] = None):
    """
    Fit a model by minibatch Nadam with early stopping.

    Every minibatch draws fresh per-example dropout masks. The validation
    loss is computed without dropout or penalty after each epoch; training
    stops after `patience` epochs without improvement (or `max_epochs`) and
    the best-validation parameters are restored.

    Args:
        model: Model to train in place.
        train_series: Training part of the (standardised) series.
        validation_series: Validation part.
        cfg: Training hyperparameters.
        rng: Random generator; defaults to one seeded with cfg.seed.

    Returns:
        (model, TrainingLog)
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    L = cfg.teacher_forcing_length
    train_w = make_windows(train_series, cfg.lookback, cfg.stride, L)
    val_w = make_windows(validation_series, cfg.lookback, 1, L)
    if len(train_w) == 0 or len(val_w) == 0:
        raise ValueError("Training and validation splits must be nonempty")

    opt = OptimizerState(cfg.learning_rate, cfg.beta_1, cfg.beta_2, cfg.schedule_decay,
                         cfg.epsilon, cfg.l2)
    log = TrainingLog()
    best_params = model.copy_params()
    wait = 0
    n = len(train_w)

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            chunk = train_w.subset(idx)
            masks = sample_dropout_masks(model.dropout, rng, batch=len(idx))
            loss, grads = loss_and_gradients(
                model, model.features(chunk.encoder), model.features(chunk.decoder),
                model.targets(chunk.targets), masks, cfg.l2,
            )
            _check_finite(loss, f"loss at epoch {epoch}, batch starting {start}")
            grads, _ = clip_by_global_norm(grads, cfg.clip_norm)
            nadam_update(model.params, grads, opt)
            total += loss * len(idx)

        train_loss = total / n
        val_loss = batch_loss(model, val_w, cfg.batch_size)
        _check_finite(val_loss, f"validation loss at epoch {epoch}")
        log.epochs.append(EpochRecord(epoch, train_loss, val_loss))
        logger.info(f"Epoch {epoch}: train_loss={train_loss:.6f} val_loss={val_loss:.6f}")

        if val_loss < log.best_val_loss:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best_params = model.copy_params()
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                log.stopped_early = True
                logger.info(f"Early stopping at epoch {epoch}; restoring epoch {log.best_epoch}")
                break

    model.load_params(best_params)
    return model, log


@dataclass
class GridCell:
    """One trained combination of (n_u, p_drop, l2)."""
    index: int
    n_u: int
    p_drop: float
    l2: float
    model: Seq2SeqModel
    log: TrainingLog

    @property
    def val_loss(self) -> float:
        return self.log.best_val_loss


@dataclass
class GridResult:
    cells: List[GridCell]

    @property
    def best(self) -> GridCell:
        # first cell wins ties
        return min(self.cells, key=lambda c: (c.val_loss, c.index))

    def to_frame(self) -> pd.DataFrame:
        rows = [{
            "cell": c.index, "n_u": c.n_u, "p_drop": c.p_drop, "l2": c.l2,
            "val_loss": c.val_loss, "best_epoch": c.log.best_epoch, "epochs": len(c.log.epochs),
            "selected": c.index == self.best.index,
        } for c in self.cells]
        return pd.DataFrame(rows)


ModelBuilder = Callable[[int, float, np.random.Generator], Seq2SeqModel]


def grid_search(build_model: ModelBuilder, train_series, validation_series, base: TrainingConfig,
                hidden_units: Sequence[int], dropouts: Sequence[float], l2s: Sequence[float],
                workers: int = 1) -> GridResult:
    """
    Train every (n_u, p_drop, l2) combination and keep all cells.

    Each cell gets its own generators spawned from base.seed, so results do
    not depend on worker count or completion order.

    Args:
        build_model: Callable (n_u, p_drop, init_rng) -> fresh model.
        train_series: Training split.
        validation_series: Validation split.
        base: Shared hyperparameters; n_u, p_drop and l2 are replaced per cell.
        hidden_units: Grid of hidden sizes.
        dropouts: Grid of dropout rates.
        l2s: Grid of L2 coefficients.
        workers: Thread count.

    Returns:
        GridResult with cells in grid order; `best` has the minimum validation loss.
    """
    combos = list(product(hidden_units, dropouts, l2s))
    if not combos:
        raise ConfigError("Hyperparameter grid is empty")
    streams = np.random.SeedSequence(base.seed).spawn(len(combos))

    def run(i: int) -> GridCell:
        n_u, p_drop, l2 = combos[i]
        init_seq, train_seq = streams[i].spawn(2)
        cfg = TrainingConfig(**{**asdict(base), "n_u": int(n_u), "p_drop": float(p_drop), "l2": float(l2)})
        model = build_model(int(n_u), float(p_drop), np.random.default_rng(init_seq))
        logger.info(f"Grid cell {i + 1}/{len(combos)}: n_u={n_u} p_drop={p_drop} l2={l2}")
        model, log = train(model, train_series, validation_series, cfg, np.random.default_rng(train_seq))
        return GridCell(i, int(n_u), float(p_drop), float(l2), model, log)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run, range(len(combos))))
    else:
        cells = [run(i) for i in range(len(combos))]

    result = GridResult(cells)
    best = result.best
    logger.info(f"Selected n_u={best.n_u} p_drop={best.p_drop} l2={best.l2} "
                f"(val_loss={best.val_loss:.6f})")
    return result
