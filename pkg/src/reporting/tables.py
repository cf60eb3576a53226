"""Tabular summaries: timing-NLL table with a best-count row."""

from typing import Dict, Mapping

import numpy as np
import pandas as pd

BEST_ROW = "# BEST"


def timing_table(results: Mapping[str, Mapping[str, float]]) -> pd.DataFrame:
    """
    Rows are datasets, columns are models, values are timing NLLs (lower is
    better). A final '# BEST' row counts, per model, the datasets it wins;
    ties go to the model listed first.

    Args:
        results: dataset -> {model -> timing NLL}
    """
    frame = pd.DataFrame.from_dict({d: dict(v) for d, v in results.items()}, orient="index")
    if frame.empty:
        raise ValueError("No timing results to tabulate")
    frame.index.name = "dataset"
    values = frame.to_numpy(dtype=np.float64)
    values = np.where(np.isnan(values), np.inf, values)
    winners = np.argmin(values, axis=1)
    best = np.bincount(winners, minlength=frame.shape[1])
    out = pd.concat([frame, pd.DataFrame([best], columns=frame.columns, index=[BEST_ROW])])
    out.index.name = "dataset"
    return out


def best_models(table: pd.DataFrame) -> Dict[str, str]:
    """Winning model per dataset row of a timing table."""
    body = table.drop(index=BEST_ROW, errors="ignore")
    return {d: body.columns[int(np.argmin(np.where(np.isnan(row), np.inf, row)))]
            for d, row in zip(body.index, body.to_numpy(dtype=np.float64))}
