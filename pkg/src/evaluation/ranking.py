"""Rank aggregation of metric reports across datasets."""

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np
import pandas as pd

from evaluation.metrics import METRIC_NAMES, MetricsReport

GP_VARIANTS = ("gp-mc", "gp-gmm")
GP_MERGED = "gp"


def reports_to_frame(reports: Iterable[MetricsReport]) -> pd.DataFrame:
    """Long format: one row per (model, dataset, metric)."""
    rows = []
    for rep in reports:
        for metric, value in rep.metrics().items():
            rows.append({"model": rep.model, "dataset": rep.dataset, "metric": metric, "value": value})
    return pd.DataFrame(rows, columns=["model", "dataset", "metric", "value"])


def _as_frame(reports: Union[pd.DataFrame, Iterable[MetricsReport]]) -> pd.DataFrame:
    if isinstance(reports, pd.DataFrame):
        return reports.copy()
    return reports_to_frame(reports)


def merge_gp_variants(reports: Union[pd.DataFrame, Iterable[MetricsReport]]) -> pd.DataFrame:
    """
    Replace the two GP variants by one 'gp' model keeping, per dataset and
    metric, the better (lower) value. The merged model takes the position of
    the first variant in model order.
    """
    frame = _as_frame(reports)
    variants = frame["model"].isin(GP_VARIANTS)
    if not variants.any():
        return frame
    order = list(dict.fromkeys(frame["model"]))
    first = next(m for m in order if m in GP_VARIANTS)
    merged = (frame[variants].groupby(["dataset", "metric"], sort=False)["value"].min().reset_index())
    merged.insert(0, "model", GP_MERGED)
    new_order = [GP_MERGED if m == first else m for m in order if m == first or m not in GP_VARIANTS]
    out = pd.concat([frame[~variants], merged], ignore_index=True)
    out["model"] = pd.Categorical(out["model"], categories=new_order, ordered=True)
    out = out.sort_values("model", kind="stable").reset_index(drop=True)
    out["model"] = out["model"].astype(str)
    return out


@dataclass
class RankTables:
    """Per metric and model: best counts, mean rank (0 = best), mean worst-rank (0 = worst)."""
    best_count: pd.DataFrame
    mean_rank: pd.DataFrame
    mean_worst_rank: pd.DataFrame

    def to_dict(self) -> Dict:
        return {
            "best_count": self.best_count.to_dict(orient="index"),
            "mean_rank": self.mean_rank.to_dict(orient="index"),
            "mean_worst_rank": self.mean_worst_rank.to_dict(orient="index"),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def rank_tables(reports: Union[pd.DataFrame, Iterable[MetricsReport]], merge_gp: bool = True,
                metrics: Sequence[str] = METRIC_NAMES) -> RankTables:
    """
    Rank models on every (dataset, metric) cell and aggregate over datasets.

    Lower values rank better. Ties go to the model listed first (stable
    sort). With n models a rank r has worst-rank (n - 1) - r.

    Raises:
        ValueError: when any (model, dataset, metric) cell is missing,
            listing the gaps.
    """
    frame = merge_gp_variants(reports) if merge_gp else _as_frame(reports)
    if frame.empty:
        raise ValueError("No reports to rank")
    models: List[str] = list(dict.fromkeys(frame["model"]))
    datasets: List[str] = list(dict.fromkeys(frame["dataset"]))
    metrics = [m for m in metrics if m in set(frame["metric"])] or list(dict.fromkeys(frame["metric"]))

    table = frame.drop_duplicates(["model", "dataset", "metric"], keep="last").set_index(
        ["model", "dataset", "metric"])["value"]
    gaps = [f"{m}/{d}/{k}" for m in models for d in datasets for k in metrics if (m, d, k) not in table.index]
    if gaps:
        raise ValueError(f"Missing report cells: {', '.join(gaps)}")

    n = len(models)
    best = pd.DataFrame(0, index=metrics, columns=models, dtype=np.int64)
    rank_sum = pd.DataFrame(0.0, index=metrics, columns=models)
    for metric in metrics:
        for dataset in datasets:
            values = np.array([table[(m, dataset, metric)] for m in models], dtype=np.float64)
            values = np.where(np.isnan(values), np.inf, values)
            order = np.argsort(values, kind="stable")
            ranks = np.empty(n, dtype=np.int64)
            ranks[order] = np.arange(n)
            best.loc[metric, models[order[0]]] += 1
            rank_sum.loc[metric] += ranks
    mean_rank = rank_sum / len(datasets)
    return RankTables(best, mean_rank, (n - 1) - mean_rank)
