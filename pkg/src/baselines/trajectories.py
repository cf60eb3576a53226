"""Sample-path ensembles and their per-step summaries."""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from core.distributions import GaussianForecast

ORIGINS = ("gp", "model", "sampled")


@dataclass
class TrajectoryEnsemble:
    """S sample paths over a horizon; rows are trajectories."""
    paths: np.ndarray
    origin: str = "model"

    def __post_init__(self):
        self.paths = np.atleast_2d(np.asarray(self.paths, dtype=np.float64))
        if self.paths.ndim != 2 or self.paths.shape[0] < 1:
            raise ValueError("Trajectory ensemble needs at least one path")
        if not np.all(np.isfinite(self.paths)):
            raise ValueError("Trajectory ensemble contains non-finite values")
        if self.origin not in ORIGINS:
            raise ValueError(f"Unknown ensemble origin '{self.origin}'")

    @property
    def n_samples(self) -> int:
        return self.paths.shape[0]

    @property
    def horizon(self) -> int:
        return self.paths.shape[1]

    def to_frame(self) -> pd.DataFrame:
        columns = [f"step_{k + 1}" for k in range(self.horizon)]
        return pd.DataFrame(self.paths, columns=columns)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, origin: str = "model") -> 'TrajectoryEnsemble':
        return cls(frame.to_numpy(dtype=np.float64), origin)


def correct_moments(ens: TrajectoryEnsemble) -> GaussianForecast:
    """
    Per-step mean and variance across trajectories, variance normalised by 1/S.

    A zero spread is reported as the smallest positive double so the result
    stays a valid Gaussian.
    """
    if ens.n_samples < 2:
        raise ValueError(f"Moment correction needs at least 2 trajectories, got {ens.n_samples}")
    x = ens.paths
    mu = x.mean(axis=0)
    var = ((x - mu) ** 2).mean(axis=0)
    return GaussianForecast(mu, np.maximum(var, np.finfo(np.float64).tiny))
