"""Dataset creation, ingestion and the forecast origin inside the test split."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from datagen.generators import generate
from datagen.preprocessing import DatasetSplit, TransformRecord, prepare_series, split_boundaries
from datagen.systems import get_system
from storage.artifacts import read_dataset, read_series_csv, write_dataset
from utils.errors import ArtifactError
from utils.logger import get_logger

logger = get_logger("experiments")

STAGES = ("data", "train", "forecast", "events", "evaluate")


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Independent generator per pipeline stage, all derived from one seed."""
    if stage not in STAGES:
        raise ValueError(f"Unknown stage '{stage}'")
    return np.random.default_rng(np.random.SeedSequence(int(seed)).spawn(len(STAGES))[STAGES.index(stage)])


@dataclass
class PreparedDataset:
    """A named series split into processed train/validation/test parts."""
    name: str
    split: DatasetSplit
    metadata: Dict = field(default_factory=dict)

    @property
    def history(self) -> np.ndarray:
        """Processed train and validation parts, the context preceding the test split."""
        return np.concatenate([self.split.train, self.split.validation])


def make_dataset(config, seed: int) -> Tuple[np.ndarray, Dict]:
    """
    Raw series and its metadata, from the user CSV when one is configured,
    otherwise from the named generator.
    """
    data = config.data
    if data.csv_path:
        values = read_series_csv(data.csv_path)
        meta = {"source": "csv", "csv_path": str(data.csv_path)}
        logger.info(f"Ingested {len(values)} samples from {data.csv_path}")
    else:
        spec = get_system(data.system, length=data.length)
        values = generate(spec, stage_rng(seed, "data"))
        meta = {"source": "generator", "system": spec.to_dict()}
        logger.info(f"Generated {len(values)} samples of '{spec.system_id}'")
    split = prepare_series(values, data.seasonal_period)
    meta.update({"seed": int(seed), **split.to_dict()})
    return values, meta


def write_generated(config, seed: int, path) -> Path:
    values, meta = make_dataset(config, seed)
    return write_dataset(path, values, meta)


def load_prepared(csv_path, seasonal_period: Optional[int] = None) -> PreparedDataset:
    """
    Read a dataset and split it. A sidecar transform record is reused as is;
    without one the preprocessing pipeline is fit afresh.
    """
    raw, meta = read_dataset(csv_path)
    name = Path(csv_path).stem
    if "transform" in meta and "boundaries" in meta:
        b1, b2 = (int(b) for b in meta["boundaries"])
        if (b1, b2) != split_boundaries(len(raw)):
            raise ArtifactError(f"Split boundaries in the sidecar of {csv_path} do not match its length")
        record = TransformRecord.from_dict(meta["transform"])
        split = DatasetSplit(record.apply(raw[:b1]), record.apply(raw[b1:b2], start=b1),
                             record.apply(raw[b2:], start=b2), record, (b1, b2), raw)
    else:
        split = prepare_series(raw, seasonal_period)
        meta = {**meta, **split.to_dict()}
    return PreparedDataset(name, split, meta)


def forecast_origin(ds: PreparedDataset, lookback: int, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seed window (last `lookback` samples before the test split) and the
    first `horizon` test samples as ground truth.
    """
    history = ds.history
    if len(history) < lookback:
        raise ValueError(f"Only {len(history)} samples precede the test split, lookback is {lookback}")
    if len(ds.split.test) < horizon:
        raise ValueError(f"Test split has {len(ds.split.test)} samples, horizon is {horizon}")
    return history[-lookback:], ds.split.test[:horizon]
