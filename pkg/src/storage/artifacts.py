"""
Dataset and forecast files.

A dataset is a two-column CSV (index, value) with a JSON sidecar of the same
stem. A forecast is a directory holding forecast.json (header), densities.csv,
quantiles.csv and, when available, truth.csv and trajectories.csv. Floats are
written with %.17g so files reload bit-exactly.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from baselines.trajectories import TrajectoryEnsemble
from core.distributions import CategoricalForecast, ForecastDistribution, GaussianForecast, MixtureForecast
from core.ordinal import BinPartition
from utils.errors import ArtifactError
from utils.logger import get_logger

logger = get_logger("storage")

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"
DEFAULT_QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)

FORECAST_HEADER = "forecast.json"
DENSITIES = "densities.csv"
QUANTILES = "quantiles.csv"
TRUTH = "truth.csv"
TRAJECTORIES = "trajectories.csv"
TIMING = "timing_density.csv"

PathLike = Union[str, Path]


def _write_json(path: Path, payload: Dict):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def _read_json(path: Path) -> Dict:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ArtifactError(f"Malformed JSON in {path}: {e}")


def _write_frame(frame: pd.DataFrame, path: Path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"Artifact file not found: {path}")
    return pd.read_csv(path, float_precision="round_trip")


def sidecar_path(csv_path: PathLike) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_dataset(csv_path: PathLike, values, metadata: Dict) -> Path:
    """Write index,value rows and the metadata sidecar; returns the CSV path."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values, dtype=np.float64)
    _write_frame(pd.DataFrame({"index": np.arange(len(values)), "value": values}), csv_path)
    _write_json(sidecar_path(csv_path), {"schema_version": SCHEMA_VERSION, **metadata})
    logger.info(f"Dataset written: {csv_path} ({len(values)} samples)")
    return csv_path


def read_series_csv(csv_path: PathLike) -> np.ndarray:
    """
    Load a univariate series. Two-column files use the second column; a
    single column is taken as the values.
    """
    frame = _read_frame(Path(csv_path))
    if frame.shape[1] == 0 or len(frame) == 0:
        raise ArtifactError(f"No data in {csv_path}")
    column = "value" if "value" in frame.columns else frame.columns[-1]
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ArtifactError(f"Non-numeric or missing values in column '{column}' of {csv_path}")
    return values


def read_dataset(csv_path: PathLike) -> Tuple[np.ndarray, Dict]:
    """Series and its metadata (empty when there is no sidecar)."""
    values = read_series_csv(csv_path)
    meta_path = sidecar_path(csv_path)
    metadata = _read_json(meta_path) if meta_path.exists() else {}
    if metadata and metadata.get("schema_version") != SCHEMA_VERSION:
        raise ArtifactError(f"Unsupported dataset schema {metadata.get('schema_version')!r} in {meta_path}")
    return values, metadata


@dataclass
class ForecastArtifact:
    """Everything needed to score and plot one forecast offline."""
    model: str
    dataset: str
    distribution: ForecastDistribution
    truth: Optional[np.ndarray] = None
    trajectories: Optional[TrajectoryEnsemble] = None
    quantile_levels: Sequence[float] = DEFAULT_QUANTILES
    seed: Optional[int] = None
    metadata: Dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.distribution.horizon

    def quantile_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"step": np.arange(1, self.horizon + 1)})
        for a in self.quantile_levels:
            frame[f"q{a:g}"] = self.distribution.quantile(a)
        return frame


def densities_frame(dist: ForecastDistribution) -> pd.DataFrame:
    """Per-step density rows: M probabilities, (mu, var) or K (w, mu, var) triples."""
    steps = np.arange(1, dist.horizon + 1)
    if isinstance(dist, CategoricalForecast):
        cols = {f"p{i}": dist.probs[:, i] for i in range(dist.probs.shape[1])}
    elif isinstance(dist, GaussianForecast):
        cols = {"mu": dist.mu, "var": dist.var}
    elif isinstance(dist, MixtureForecast):
        cols = {}
        for k in range(dist.weights.shape[1]):
            cols[f"w{k}"] = dist.weights[:, k]
            cols[f"mu{k}"] = dist.means[:, k]
            cols[f"var{k}"] = dist.variances[:, k]
    else:
        raise ArtifactError(f"Cannot serialise distribution of type {type(dist).__name__}")
    return pd.DataFrame({"step": steps, **cols})


def distribution_from_frame(kind: str, frame: pd.DataFrame, header: Dict) -> ForecastDistribution:
    try:
        if kind == "categorical":
            part = header["partition"]
            partition = BinPartition(part["lower_bound"], part["upper_bound"], part["bin_count"])
            cols = [f"p{i}" for i in range(partition.bin_count)]
            return CategoricalForecast(frame[cols].to_numpy(dtype=np.float64), partition)
        if kind == "gaussian":
            return GaussianForecast(frame["mu"].to_numpy(dtype=np.float64),
                                    frame["var"].to_numpy(dtype=np.float64))
        if kind == "gmm":
            K = int(header["components"])
            w, mu, var = ([f"{prefix}{k}" for k in range(K)] for prefix in ("w", "mu", "var"))
            return MixtureForecast(frame[w].to_numpy(dtype=np.float64),
                                   frame[mu].to_numpy(dtype=np.float64),
                                   frame[var].to_numpy(dtype=np.float64))
    except KeyError as e:
        raise ArtifactError(f"Density file is missing {e}")
    raise ArtifactError(f"Unknown distribution kind '{kind}'")


def write_forecast(folder: PathLike, artifact: ForecastArtifact) -> Path:
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    dist = artifact.distribution
    if artifact.truth is not None and len(artifact.truth) != dist.horizon:
        raise ArtifactError(f"Truth has {len(artifact.truth)} steps, forecast has {dist.horizon}")

    header = {
        "schema_version": SCHEMA_VERSION,
        "model": artifact.model,
        "dataset": artifact.dataset,
        "kind": dist.kind,
        "horizon": dist.horizon,
        "seed": artifact.seed,
        "quantile_levels": [float(a) for a in artifact.quantile_levels],
        "has_truth": artifact.truth is not None,
        "has_trajectories": artifact.trajectories is not None,
        "metadata": artifact.metadata,
    }
    if isinstance(dist, CategoricalForecast):
        p = dist.partition
        header["partition"] = {"lower_bound": p.lower_bound, "upper_bound": p.upper_bound,
                               "bin_count": p.bin_count}
    if isinstance(dist, MixtureForecast):
        header["components"] = int(dist.weights.shape[1])
    if artifact.trajectories is not None:
        header["trajectory_origin"] = artifact.trajectories.origin

    _write_json(folder / FORECAST_HEADER, header)
    _write_frame(densities_frame(dist), folder / DENSITIES)
    _write_frame(artifact.quantile_frame(), folder / QUANTILES)
    if artifact.truth is not None:
        _write_frame(pd.DataFrame({"step": np.arange(1, dist.horizon + 1),
                                   "value": np.asarray(artifact.truth, dtype=np.float64)}), folder / TRUTH)
    if artifact.trajectories is not None:
        _write_frame(artifact.trajectories.to_frame(), folder / TRAJECTORIES)
    logger.info(f"Forecast artifact written: {folder} ({artifact.model}, {dist.kind}, P_h={dist.horizon})")
    return folder


def read_forecast(folder: PathLike) -> ForecastArtifact:
    folder = Path(folder)
    header_path = folder / FORECAST_HEADER
    if not header_path.exists():
        raise FileNotFoundError(f"Forecast header not found: {header_path}")
    header = _read_json(header_path)
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ArtifactError(f"Unsupported forecast schema {header.get('schema_version')!r} in {header_path}")

    dist = distribution_from_frame(header["kind"], _read_frame(folder / DENSITIES), header)
    if dist.horizon != header["horizon"]:
        raise ArtifactError(f"{folder}: header horizon {header['horizon']} but {dist.horizon} density rows")

    truth = None
    if header.get("has_truth"):
        truth = _read_frame(folder / TRUTH)["value"].to_numpy(dtype=np.float64)
    trajectories = None
    if header.get("has_trajectories"):
        trajectories = TrajectoryEnsemble.from_frame(_read_frame(folder / TRAJECTORIES),
                                                     header.get("trajectory_origin", "model"))
    return ForecastArtifact(
        model=header["model"],
        dataset=header["dataset"],
        distribution=dist,
        truth=truth,
        trajectories=trajectories,
        quantile_levels=tuple(header.get("quantile_levels", DEFAULT_QUANTILES)),
        seed=header.get("seed"),
        metadata=header.get("metadata", {}),
    )


def list_forecasts(root: PathLike) -> List[Path]:
    """Forecast directories below root, in sorted order."""
    return sorted(p.parent for p in Path(root).rglob(FORECAST_HEADER))


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_frame(frame, path)
    return path


def read_table(path: PathLike) -> pd.DataFrame:
    return _read_frame(Path(path))


def write_json(payload: Dict, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(path, payload)
    return path
